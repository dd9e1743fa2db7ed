"""Lattices from continued fractions with dips, their bad-offset Cantor sets and checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .contfrac import convergents
from .dimension import DimensionEstimate, fit_slope
from .errors import (BudgetExceeded, EmptyIntersection, InsufficientDepth, NoDip,
                     ScaleOutOfRange)
from .geometry import (MP, BoxRegion, FlowedLattice, FlowSpec, Lattice, hit_times, log_abs,
                       x_v)
from .parallel import ordered_map

FLOW = FlowSpec((1, -1))
THRESHOLD = Fraction(1, 10)


# --------------------------------------------------------------------------
# Continued fraction lattices


def parse_n_seq(spec, count: int) -> list[int]:
    """Partial quotients from ``"geometric:B"`` (B^i), ``"ones"``, ``"linear"`` (i) or a list."""
    if isinstance(spec, str):
        kind, _, arg = spec.partition(":")
        if kind == "geometric":
            base = int(arg or 10)
            if base < 1:
                raise ValueError("geometric base must be >= 1")
            return [base ** i for i in range(1, count + 1)]
        if kind == "ones":
            return [1] * count
        if kind == "linear":
            return list(range(1, count + 1))
        raise ValueError(f"unknown n-seq {spec!r}")
    seq = [int(n) for n in spec]
    if any(n < 1 for n in seq):
        raise ValueError("partial quotients must be >= 1")
    return seq


@dataclass(frozen=True)
class CFLattice:
    quotients: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]
    alpha: Fraction
    depth: int

    @property
    def q(self) -> tuple[int, ...]:
        return tuple(q for _, q in self.convergents)

    @property
    def lattice(self) -> Lattice:
        return x_v(self.alpha)

    def vector(self, i: int) -> tuple[Fraction, Fraction]:
        """``(q_i alpha - p_i, q_i)``, the lattice point governing dip i."""
        p, q = self.convergents[i - 1]
        return (q * self.alpha - p, Fraction(q))


def build_cf_lattice(n_seq, depth: int) -> CFLattice:
    """``x = [[1, alpha], [0, 1]] Z^2`` with alpha cut after ``depth + 2`` quotients."""
    if depth < 1:
        raise InsufficientDepth("depth must be >= 1 (depth 0 gives alpha = 0)")
    seq = parse_n_seq(n_seq, depth + 2) if isinstance(n_seq, str) else parse_n_seq(n_seq, 0)
    if len(seq) < depth:
        raise InsufficientDepth(f"{len(seq)} quotients < depth {depth}")
    seq = seq[:depth + 2]
    conv = convergents(seq)
    p, q = conv[-1]
    return CFLattice(tuple(seq), tuple(conv), Fraction(p, q), depth)


@dataclass(frozen=True)
class ExcursionDatum:
    i: int
    t: float
    s_next: float
    v: tuple[Fraction, Fraction]
    ell: Fraction

    @property
    def scale(self) -> Fraction:
        """``e^{-t_i}``, exact because ``e^{-t_i} |v_2| = 1/10``."""
        return THRESHOLD / abs(self.v[1])

    @property
    def period(self) -> Fraction:
        return self.scale * self.ell

    @property
    def radius(self) -> Fraction:
        return 2 * self.scale

    def to_dict(self) -> dict:
        return {"i": self.i, "t": self.t, "s_next": self.s_next,
                "v": [str(self.v[0]), str(self.v[1])], "ell": float(self.ell)}


def _completion(p: int, q: int) -> tuple[int, int]:
    """Integers ``(m, n)`` with ``-p n - q m = 1``."""
    g, a, b = _egcd(p, q)
    if abs(g) != 1:
        raise ValueError("convergent is not primitive")
    # a p + b q = g
    return (-b * g, -a * g)


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        k, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - k * x1
        y0, y1 = y1, y0 - k * y1
    return a, x0, y0


def axis_spacing(cf: CFLattice, i: int) -> Fraction:
    """Spacing of the intersections of the lines ``R a_t v + a_t x`` with the axis at t_i.

    With w completing v to a basis, the intercept of ``a_t(m v + n w)`` is n
    times that of ``a_t w``, namely ``e^{t}(w_1 - w_2 v_1 / v_2)``.
    """
    p, q = cf.convergents[i - 1]
    v1, v2 = cf.vector(i)
    m, n = _completion(p, q)
    w1, w2 = m + n * cf.alpha, Fraction(n)
    e_t = abs(v2) / THRESHOLD
    return abs(e_t * (w1 - w2 * v1 / v2))


def excursion_data(cf: CFLattice, depth: int | None = None) -> list[ExcursionDatum]:
    """Dips of ``lambda1(a_t x)`` below 1/10, one per convergent ``i = 1..depth``."""
    depth = cf.depth if depth is None else depth
    if depth > len(cf.convergents) - 1:
        raise InsufficientDepth("truncation too short for the requested depth")
    out = []
    log10 = math.log(10)
    for i in range(1, depth + 1):
        v1, v2 = cf.vector(i)
        if v1 == 0:
            raise InsufficientDepth(f"convergent {i} is the truncation itself")
        if abs(v1 * v2) > Fraction(1, 100):
            raise NoDip(f"q_{i}|q_{i} alpha - p_{i}| = {float(abs(v1 * v2)):.4g} > 1/100")
        t = log10 + log_abs(v2)
        s_next = -(log10 + log_abs(v1))
        out.append(ExcursionDatum(i, t, s_next, (v1, v2), axis_spacing(cf, i)))
    return out


def excursion_diagnostics(data: Sequence[ExcursionDatum]) -> dict:
    """``C = max (t_i - s_i)`` with ``s_1 = 0``, and the sequence ``t_i / i``."""
    gaps = [data[0].t] + [b.t - a.s_next for a, b in zip(data, data[1:])]
    return {"C": max(gaps), "gaps": gaps, "t_over_i": [d.t / d.i for d in data]}


# --------------------------------------------------------------------------
# Cantor approximation


@dataclass(frozen=True)
class CantorApprox:
    """``cap_{i<=n} B_i`` inside [0, 1], kept implicit.

    ``B_i`` is the union of the open intervals ``(k g_i + r_i, (k+1) g_i - r_i)``.
    A level-i interval contains as children the level-(i+1) intervals lying
    inside it; these form an arithmetic progression, so nothing needs to be
    listed to walk the tree.  Each child gets an equal share of its parent's
    weight.
    """

    periods: tuple[Fraction, ...]
    radii: tuple[Fraction, ...]

    @property
    def depth(self) -> int:
        return len(self.periods)

    def length(self, i: int) -> Fraction:
        return self.periods[i - 1] - 2 * self.radii[i - 1]

    def children(self, a: Fraction, b: Fraction, i: int) -> tuple[int, int]:
        """Index range ``k_lo..k_hi`` of level-i intervals inside [a, b]."""
        g, r = self.periods[i - 1], self.radii[i - 1]
        return math.ceil((a - r) / g), math.floor((b + r) / g) - 1

    def child(self, k: int, i: int) -> tuple[Fraction, Fraction]:
        g, r = self.periods[i - 1], self.radii[i - 1]
        return k * g + r, (k + 1) * g - r

    def expected_children(self, i: int) -> float:
        """Mean child count of a level-(i-1) interval (exact count differs by < 1)."""
        if i == 1:
            lo, hi = self.children(Fraction(0), Fraction(1), 1)
            return float(hi - lo + 1)
        return float((self.length(i - 1) - self.length(i)) / self.periods[i - 1])

    def expected_total(self, i: int) -> float:
        return float(np.prod([self.expected_children(j) for j in range(1, i + 1)]))

    def intervals(self, level: int | None = None, limit: int = 10 ** 6) -> list[tuple[Fraction, Fraction, Fraction]]:
        """All ``(a, b, weight)`` at a level, in order; BudgetExceeded past ``limit``."""
        level = self.depth if level is None else level
        if self.expected_total(level) > limit:
            raise BudgetExceeded(f"about {self.expected_total(level):.3g} intervals at level {level}")
        cur = [(Fraction(0), Fraction(1), Fraction(1))]
        for i in range(1, level + 1):
            nxt = []
            for a, b, w in cur:
                lo, hi = self.children(a, b, i)
                n = hi - lo + 1
                for k in range(lo, hi + 1):
                    nxt.append((*self.child(k, i), w / n))
            if not nxt:
                raise EmptyIntersection(f"level {i} removes every interval")
            cur = nxt
        return cur

    def mass(self, lo, hi) -> Fraction:
        """Exact ``mu([lo, hi])`` for the depth-n measure (uniform on level-n intervals)."""
        lo, hi = Fraction(lo), Fraction(hi)

        def walk(a, b, w, i):
            if hi <= a or lo >= b:
                return Fraction(0)
            if lo <= a and b <= hi:
                return w
            if i > self.depth:
                return w * (min(b, hi) - max(a, lo)) / (b - a)
            k_lo, k_hi = self.children(a, b, i)
            n = k_hi - k_lo + 1
            if n <= 0:
                return Fraction(0)
            cw = w / n
            # children fully inside [lo, hi] are counted in one step
            g, r = self.periods[i - 1], self.radii[i - 1]
            in_lo = max(k_lo, math.ceil((lo - r) / g))
            in_hi = min(k_hi, math.floor((hi + r) / g) - 1)
            total = Fraction(0)
            edge = set()
            if in_lo <= in_hi:
                total += cw * (in_hi - in_lo + 1)
                edge.update(k for k in (in_lo - 1, in_hi + 1) if k_lo <= k <= k_hi)
            else:
                start = max(k_lo, math.floor((lo - r) / g) - 1)
                edge.update(k for k in range(start, start + 4) if k_lo <= k <= k_hi)
            for k in sorted(edge):
                total += walk(*self.child(k, i), cw, i + 1)
            return total

        return walk(Fraction(0), Fraction(1), Fraction(1), 1)

    def sample_points(self, m: int) -> list[Fraction]:
        """Stratified points: the j-th descends by the digits of ``(j + 1/2)/m``."""
        out = []
        for j in range(m):
            u = Fraction(2 * j + 1, 2 * m)
            a, b = Fraction(0), Fraction(1)
            for i in range(1, self.depth + 1):
                k_lo, k_hi = self.children(a, b, i)
                n = k_hi - k_lo + 1
                idx = min(n - 1, math.floor(u * n))
                u = u * n - idx
                a, b = self.child(k_lo + idx, i)
            out.append((a + b) / 2)
        return out

    def to_dict(self, limit: int = 2000) -> dict:
        levels = []
        for i in range(1, self.depth + 1):
            row = {"level": i, "period": str(self.periods[i - 1]), "radius": str(self.radii[i - 1]),
                   "length": float(self.length(i)), "expected_children": self.expected_children(i),
                   "expected_total": self.expected_total(i)}
            if self.expected_total(i) <= limit:
                row["intervals"] = [[float(a), float(b), float(w)] for a, b, w in self.intervals(i)]
            levels.append(row)
        return {"depth": self.depth, "levels": levels}


def bad_interval_sets(cf: CFLattice, depth: int | None = None) -> CantorApprox:
    data = excursion_data(cf, depth)
    for d in data:
        if d.ell <= 4:
            raise EmptyIntersection(f"spacing {float(d.ell)} <= 4 at i={d.i}")
    approx = CantorApprox(tuple(d.period for d in data), tuple(d.radius for d in data))
    for i in range(1, approx.depth + 1):
        parent = Fraction(1) if i == 1 else approx.length(i - 1)
        # a parent of length >= 2 g_i always holds a whole child
        if parent < 2 * approx.periods[i - 1]:
            approx.intervals(i)
    return approx


# --------------------------------------------------------------------------
# Claim: grids over gamma in B_i stay 1-far from the origin during dip i


def b_samples(datum: ExcursionDatum, m: int) -> list[Fraction]:
    """Stratified points of ``B_i`` in [0, 1]: interval by ``(j+1/2)/m``, position by a
    deterministic permutation of the same strata."""
    g, r = datum.period, datum.radius
    n_int = math.floor((1 + r) / g) - math.ceil(r / g)  # intervals inside [0, 1]
    k0 = math.ceil(r / g)
    out = []
    for j in range(m):
        k = k0 + min(n_int - 1, (2 * j + 1) * n_int // (2 * m))
        f = Fraction(2 * ((j * 7919) % m) + 1, 2 * m)
        out.append(k * g + r + f * (g - 2 * r))
    return out


def t_samples(datum: ExcursionDatum, m: int) -> list[float]:
    if m == 1:
        return [datum.t]
    return [datum.t + (datum.s_next - datum.t) * k / (m - 1) for k in range(m)]


def _claim_at_t(args):
    x, t, gammas = args
    fl = FlowedLattice(x, FLOW, t)
    return [fl.closest((g, 0))[0] for g in gammas]


def verify_claim_cla(cf: CFLattice, i: int, gamma_samples: int = 100, t_samples_n: int = 20,
                     threads: int = 1) -> dict:
    """Exact ``sigma(a_t(x + (gamma, 0)))`` on a stratified (gamma, t) grid of dip i."""
    datum = excursion_data(cf, i)[i - 1]
    gammas = b_samples(datum, gamma_samples)
    ts = t_samples(datum, t_samples_n)
    x = cf.lattice
    rows = ordered_map(_claim_at_t, [(x, t, gammas) for t in ts], threads)
    vals = [v for row in rows for v in row]
    low = min(vals)
    return {"i": i, "pass": bool(low >= 1), "min_sigma": float(low), "samples": len(vals),
            "t_range": [datum.t, datum.s_next]}


def sharpness_witness(cf: CFLattice, i: int) -> dict:
    """``gamma = 0`` lies outside every B_i; at ``t_i`` the grid is x itself.

    Its shortest vector is the origin (sigma = 0), and the shortest nonzero
    vector has norm exactly the threshold, governed by v_i."""
    datum = excursion_data(cf, i)[i - 1]
    fl = FlowedLattice(cf.lattice, FLOW, datum.t)
    sig = fl.closest((0, 0))[0]
    lam, vec = fl.shortest()
    return {"i": i, "t": datum.t, "sigma": float(sig), "lambda1": float(lam),
            "vector": [str(vec[0]), str(vec[1])]}


# --------------------------------------------------------------------------
# Mass distribution and dimension


def scale_range(approx: CantorApprox) -> tuple[float, float]:
    """Scales resolved by the approximation: from the finest to the coarsest spacing."""
    return float(approx.periods[-1]), float(approx.periods[0])


def mass_distribution_check(approx: CantorApprox, eps: float, r_list: Sequence[float],
                            centers: int = 64, burn_in: float | None = None) -> dict:
    """``max mu(B(x, r)) / r^{1-eps}`` over stratified centers of the approximation.

    The pass verdict uses scales ``r <= burn_in`` (default: the first dip scale
    ``g_1 / 10 = e^{-t_1}``); larger resolved scales are reported too.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    lo, hi = scale_range(approx)
    for r in r_list:
        if not lo * (1 - 1e-12) <= r <= hi * (1 + 1e-12):
            raise ScaleOutOfRange(f"r={r} outside the resolved range [{lo:.3g}, {hi:.3g}]")
    if burn_in is None:
        burn_in = float(approx.periods[0] / 10)
    xs = approx.sample_points(centers)
    rows = []
    for r in r_list:
        rf = Fraction(r)
        masses = [approx.mass(x - rf, x + rf) for x in xs]
        top = max(masses)
        rows.append({"r": float(r), "max_mass": float(top), "max_ratio": float(top) / r ** (1 - eps)})
    judged = [row["max_ratio"] for row in rows if row["r"] <= burn_in * (1 + 1e-12)]
    max_ratio = max(judged) if judged else max(row["max_ratio"] for row in rows)
    return {"max_ratio": max_ratio, "pass": bool(max_ratio <= 1), "burn_in": burn_in, "rows": rows}


def covering_estimate(approx: CantorApprox, delta: float) -> float:
    """Expected number of delta-boxes meeting the depth-n set.

    Take the deepest level j whose gaps ``2 r_j`` are at least delta: boxes
    from distinct level-j intervals are then distinct, while inside a level-j
    interval the finer gaps are shorter than delta and the interval is covered
    as a whole.  The count is ``T_j * max(1, L_j / delta)``."""
    j = 0
    for i in range(1, approx.depth + 1):
        if 2 * approx.radii[i - 1] >= delta:
            j = i
    if j == 0:
        return max(1.0, 1.0 / delta)
    return approx.expected_total(j) * max(1.0, float(approx.length(j)) / delta)


def dim_lower_estimate(approx: CantorApprox, per_decade: int = 4,
                       scales: Sequence[float] | None = None) -> DimensionEstimate:
    """Box-count slope of the depth-n set between ``e^{-t_n}`` and ``e^{-t_1}``."""
    if scales is None:
        top = float(approx.periods[0]) / 10
        bottom = float(approx.periods[-1]) / 10
        if approx.depth == 1:
            bottom = top / 10
        n = max(4, int(round(math.log10(top / bottom) * per_decade)) + 1)
        scales = list(np.geomspace(top, bottom, n))
    counts = [covering_estimate(approx, d) for d in scales]
    d = np.asarray(scales, dtype=float)
    c = np.asarray(counts, dtype=float)
    x, y = np.log(1 / d), np.log(c)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    if np.all(c == c[0]):
        return fit_slope(scales, [int(round(v)) for v in counts])
    return DimensionEstimate(tuple(float(v) for v in d), tuple(int(round(v)) for v in c),
                             float(slope), float(icpt), float(np.sqrt(np.mean(resid ** 2))),
                             (float(d.min()), float(d.max())))


# --------------------------------------------------------------------------
# Finite-horizon witness


def _hits_in_window(fl, region, base, t0: float, t1: float, rho: float) -> int:
    """Grid points of ``x + base`` whose hit times meet ``(t0, t1]``.

    A hit at a time in ``[u, u + 1]`` needs ``|p_1| < rho e^{-u}`` and
    ``|p_2| < rho e^{u+1}``; each unit slice is searched at the time where that
    box is a square, so every slice costs O(1) candidates."""
    found = set()
    u = t0
    while u < t1:
        w = min(u + 1.0, t1)
        mid = (u + w) / 2
        half = [rho * math.exp(mid - u), rho * math.exp(w - mid)]
        found.update(fl.advance(mid).points_in_box([0.0, 0.0], half, base=base))
        u = w
    return sum(1 for p in found
               if hit_times(FLOW, [float(p[0]), float(p[1])], region).restrict(t0, t1, False, True))


def spike_witness(cf: CFLattice, approx: CantorApprox, gamma_samples: int = 16,
                  s_samples: int = 5, gammas: Sequence | None = None) -> dict:
    """Grids ``x + (gamma, s)``, gamma in the Cantor approximation and s in [-1, 1],
    checked against the spike of ``O = B_sup(0, e^{-C}/2)`` on ``(tau_0, t_n]``.

    Before ``tau_0 = C + log 2`` finitely many hits are allowed (the trivial
    part).  Afterwards the dip claim gives ``sigma >= e^{-C}``, and the stable
    shift ``e^{-t}|s| < e^{-C}/2`` cannot bring a point into O.
    """
    data = excursion_data(cf)
    C = excursion_diagnostics(data)["C"]
    rho = 0.5 * math.exp(-C)
    region = BoxRegion.ball(rho)
    tau0 = C + math.log(2)
    t_max = data[-1].t
    fl = FlowedLattice(cf.lattice, FLOW, 0.0)
    if gammas is None:
        gammas = approx.sample_points(gamma_samples)
    ss = [Fraction(2 * k, s_samples - 1) - 1 for k in range(s_samples)] if s_samples > 1 else [Fraction(0)]
    early = late = 0
    for g in gammas:
        for s in ss:
            base = (Fraction(g), s)
            early += _hits_in_window(fl, region, base, 0.0, tau0, rho)
            late += _hits_in_window(fl, region, base, tau0, t_max, rho)
    return {"C": C, "radius": rho, "tau0": tau0, "t_max": t_max, "grids": len(gammas) * len(ss),
            "early_hits": early, "late_hits": late, "pass": late == 0}
