"""Orbit-level quantities: lambda1 along a_t x, cusp excursions, empirical masses."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DimensionUnsupported
from .geometry import SUP, FlowedLattice, FlowSpec, Lattice, log_abs
from .intervals import Interval, IntervalSet
from .parallel import chunks, ordered_map


@dataclass(frozen=True)
class PsiFamily:
    """Piecewise-linear cutoffs psi_i, i = 1..i_max, with thresholds 2^{-i}."""

    i_max: int = 8

    def __post_init__(self):
        if self.i_max < 1:
            raise ValueError("i_max must be >= 1")

    def eps(self, i: int) -> float:
        return 2.0 ** (-i)

    def psi(self, i: int, lam):
        hi, lo = self.eps(i), self.eps(i + 1)
        return np.clip((np.asarray(lam, dtype=float) - lo) / (hi - lo), 0.0, 1.0)

    def values(self, lam) -> np.ndarray:
        """Array of shape (..., i_max) with psi_1..psi_imax evaluated at lam."""
        lam = np.asarray(lam, dtype=float)
        return np.stack([self.psi(i, lam) for i in range(1, self.i_max + 1)], axis=-1)


def _series_chunk(flow, x, times, norm):
    if not times:
        return []
    tracker = FlowedLattice(x, flow, times[0])
    out = []
    for t in times:
        if t != tracker.t:
            tracker = tracker.advance(t)
        out.append(float(tracker.shortest(norm)[0]))
    return out


def lambda1_series(flow: FlowSpec, x: Lattice, t_grid: Sequence[float], norm: str = SUP,
                   threads: int | None = 1, chunk: int = 256) -> list[tuple[float, float]]:
    """``[(t, lambda1(a_t x))]``; each chunk is walked with a warm-started reduction."""
    times = [float(t) for t in t_grid]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("t_grid must be increasing")
    parts = ordered_map(lambda ab: _series_chunk(flow, x, times[ab[0]:ab[1]], norm),
                        chunks(len(times), chunk), threads)
    values = [v for part in parts for v in part]
    return list(zip(times, values))


def arange_grid(t0: float, t1: float, step: float) -> list[float]:
    n = int(math.floor((t1 - t0) / step + 1e-9))
    return [t0 + k * step for k in range(n + 1)]


# --------------------------------------------------------------------------
# Excursions


@dataclass(frozen=True)
class Dip:
    start: float
    end: float
    vectors: tuple[tuple, ...]


@dataclass(frozen=True)
class ExcursionList:
    threshold: float
    t_max: float
    intervals: IntervalSet
    dips: tuple[Dip, ...] = field(default=())

    def to_json(self) -> list[dict]:
        return [{"s": iv.lo, "t": iv.hi} for iv in self.intervals]


def _window(flow: FlowSpec, v: Sequence, log_theta: float) -> Interval:
    """Open set of t where ``|a_t v|_sup < theta``."""
    lo, hi = -math.inf, math.inf
    for c, comp in zip(flow.c, v):
        lv = log_abs(comp)
        if lv == -math.inf:
            continue
        bound = (log_theta - lv) / c
        if c > 0:
            hi = min(hi, bound)
        else:
            lo = max(lo, bound)
    return Interval(lo, hi)


def _canonical(v: Sequence) -> tuple:
    v = tuple(v)
    for a in v:
        if a != 0:
            return v if a > 0 else tuple(-b for b in v)
    return v


def _is_multiple(v: tuple, pool) -> bool:
    """True when ``v = m u`` for some ``u`` in pool and integer ``m >= 2``;
    such windows sit inside the window of ``u``."""
    j = next(i for i, a in enumerate(v) if a != 0)
    for u in pool:
        if u is v or u[j] == 0:
            continue
        m = v[j] / u[j]
        r = round(m)
        if r >= 2 and all(math.isclose(a, r * b, rel_tol=1e-12, abs_tol=0) if isinstance(a, float)
                          else a == r * b for a, b in zip(v, u)):
            return True
    return False


def excursions(flow: FlowSpec, x: Lattice, threshold: float = 0.1, t_max: float = 20.0,
               step: float = 0.5) -> ExcursionList:
    """Exact ``E = {t in [0, t_max] : lambda1(a_t x) >= threshold}`` (sup norm).

    Every vector whose sub-threshold window meets ``[tau - h, tau + h]`` has
    ``|a_tau v| < threshold e^{c_max h}``, so collecting the lattice vectors in
    that box at sample times ``tau`` spaced ``2h`` apart finds all of them.
    """
    if flow.d != 2 or x.d != 2:
        raise DimensionUnsupported("excursions are computed for d = 2")
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    h = step / 2
    cmax = max(abs(c) for c in flow.c)
    radius = threshold * math.exp(cmax * h) * (1 + 1e-9)
    log_theta = math.log(threshold)
    n = max(1, int(math.ceil(t_max / step)))
    taus = [min(t_max, h + k * step) for k in range(n)]
    found: dict[tuple, Interval] = {}
    tracker = FlowedLattice(x, flow, taus[0])
    for tau in taus:
        if tau != tracker.t:
            tracker = tracker.advance(tau)
        for v in tracker.points_in_box([0.0, 0.0], [radius, radius]):
            if not any(v):
                continue
            key = _canonical(v)
            if key not in found:
                found[key] = _window(flow, key, log_theta)
    found = {v: w for v, w in found.items() if not _is_multiple(v, found)}
    windows = sorted(((w, v) for v, w in found.items() if not w.is_empty()),
                     key=lambda p: (p[0].lo, p[0].hi))
    below = IntervalSet([w for w, _ in windows]).restrict(0.0, t_max, True, True)
    good = below.complement(0.0, t_max, True, True)
    dips = []
    for iv in below:
        vecs = tuple(v for w, v in windows if w.lo < iv.hi and w.hi > iv.lo)
        dips.append(Dip(iv.lo, iv.hi, vecs))
    return ExcursionList(threshold, t_max, good, tuple(dips))


# --------------------------------------------------------------------------
# Empirical measures and heaviness


@dataclass(frozen=True)
class EmpiricalMeasureReport:
    T: int
    masses: tuple[float, ...]
    min_lambda1: float


def _psi_sums(flow, x, start, T, psi, threads):
    series = lambda1_series(flow, x, [float(k) for k in range(start, start + T)], threads=threads)
    lam = np.array([v for _, v in series])
    return psi.values(lam), lam


def empirical_measure(flow: FlowSpec, x: Lattice, T: int, psi: PsiFamily | None = None,
                      start: int = 0, threads: int | None = 1) -> EmpiricalMeasureReport:
    """Masses ``(1/T) sum_{k<T} psi_i(a^k x)`` for the time-one map ``a = a_1``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    psi = psi or PsiFamily()
    vals, lam = _psi_sums(flow, x, start, T, psi, threads)
    masses = tuple(math.fsum(vals[:, i]) / T for i in range(psi.i_max))
    return EmpiricalMeasureReport(T, masses, float(lam.min()))


@dataclass(frozen=True)
class HeavinessReport:
    rows: tuple[EmpiricalMeasureReport, ...]
    eta: tuple[float, ...]
    verdict: str

    def csv_rows(self) -> list[tuple[int, int, float]]:
        return [(r.T, i + 1, m) for r in self.rows for i, m in enumerate(r.masses)]


CONSISTENT = "consistent_with_H"
ESCAPE = "escape_observed"


def heaviness_profile(flow: FlowSpec, x: Lattice, T_list: Sequence[int], eta: Sequence[float],
                      threads: int | None = 1) -> HeavinessReport:
    """Finite-T witness report.  The verdict only says whether some T in the list
    puts mass at least ``1 - eta_i`` on every ``psi_i``; it proves nothing about
    the limit T -> infinity."""
    eta = tuple(float(e) for e in eta)
    if not eta:
        raise ValueError("eta must be nonempty")
    if any(e < 0 for e in eta) or any(b > a for a, b in zip(eta, eta[1:])):
        raise ValueError("eta must be nonnegative and nonincreasing")
    T_list = sorted({int(T) for T in T_list})
    if not T_list:
        return HeavinessReport((), eta, ESCAPE)
    if T_list[0] < 1:
        raise ValueError("every T must be >= 1")
    psi = PsiFamily(len(eta))
    vals, lam = _psi_sums(flow, x, 0, T_list[-1], psi, threads)
    rows = []
    for T in T_list:
        masses = tuple(math.fsum(vals[:T, i]) / T for i in range(psi.i_max))
        rows.append(EmpiricalMeasureReport(T, masses, float(lam[:T].min())))
    ok = any(all(m >= 1 - e for m, e in zip(r.masses, eta)) for r in rows)
    return HeavinessReport(tuple(rows), eta, CONSISTENT if ok else ESCAPE)


def cf_heaviness(a_seq: Sequence[int], eps: float, N: int) -> float:
    """``(1/N) sum_{k<=N} max(log(eps a_k), 0)``."""
    if not 1 <= N <= len(a_seq):
        raise ValueError("need 1 <= N <= len(a_seq)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    return math.fsum(max(math.log(eps * a), 0.0) for a in a_seq[:N]) / N
