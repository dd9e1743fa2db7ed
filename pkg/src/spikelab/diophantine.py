"""Finite truncations of badly approximable targets, lines and affine subspaces."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded
from .geometry import BoxRegion, FlowSpec, Grid, grid_spike_points
from .intervals import Interval, IntervalSet
from .parallel import chunks, ordered_map

SCAN_BUDGET_BITS = 24
TUBE_BUDGET = 5e8


def dist_to_int(x):
    """Distance to the nearest integer, elementwise."""
    x = np.asarray(x, dtype=float)
    return np.abs(x - np.rint(x))


@dataclass(frozen=True)
class BadTestConfig:
    """Truncated test ``min_{1<=k<=K} score(k) >= eps``.

    Without weights the score is ``k^{1/n} <kv - w>`` with ``<.>`` the sup
    distance to Z^n.  With weights ``(i_1..i_n)`` every coordinate must stay
    large on its own, so the score is ``min_l k^{i_l} <k v_l - w_l>``.
    """

    v: tuple[float, ...]
    eps: float
    K: int
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        v = tuple(float(a) for a in np.atleast_1d(self.v))
        object.__setattr__(self, "v", v)
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if int(self.K) < 1:
            raise ValueError("K must be >= 1")
        object.__setattr__(self, "K", int(self.K))
        if self.weights is not None:
            wts = tuple(float(a) for a in self.weights)
            if len(wts) != len(v):
                raise ValueError("weights and v differ in length")
            if any(not 0 < a < 1 for a in wts) and len(wts) > 1:
                raise ValueError("weights must lie in (0, 1)")
            if abs(math.fsum(wts) - 1) > 1e-12:
                raise ValueError("weights must sum to 1")
            object.__setattr__(self, "weights", wts)

    @property
    def n(self) -> int:
        return len(self.v)


def _scores(cfg: BadTestConfig, w: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Scores for targets ``w`` (shape (m, n)) at times ``k`` (shape (K,)) -> (m, K)."""
    v = np.asarray(cfg.v)
    kf = k.astype(float)
    frac = dist_to_int(kf[None, :, None] * v[None, None, :] - w[:, None, :])
    if cfg.weights is None:
        return kf[None, :] ** (1.0 / cfg.n) * frac.max(axis=2)
    wts = np.asarray(cfg.weights)
    return (kf[None, :, None] ** wts[None, None, :] * frac).min(axis=2)


def bad_target_test(cfg: BadTestConfig, w: Sequence[float]) -> dict:
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.shape != (cfg.n,):
        raise ValueError("target dimension mismatch")
    k = np.arange(1, cfg.K + 1)
    s = _scores(cfg, w[None, :], k)[0]
    i = int(np.argmin(s))
    return {"verdict": bool(s[i] >= cfg.eps), "min_value": float(s[i]), "argmin_k": int(k[i])}


# --------------------------------------------------------------------------
# Survivor scans


@dataclass
class ScanResult:
    R: int
    n: int
    bitmap: np.ndarray
    box_counts: list[tuple[int, float, int]]
    survivor_fraction: float
    corner_counts: dict[int, int] = field(default_factory=dict)

    def counts_for_fit(self) -> tuple[np.ndarray, np.ndarray]:
        deltas = np.array([d for _, d, _ in self.box_counts])
        counts = np.array([c for _, _, c in self.box_counts])
        return deltas, counts


def _survives(cfg: BadTestConfig, targets: np.ndarray, k_block: int = 512) -> np.ndarray:
    """Boolean survivor flags for an (m, n) array of targets; drops dead targets early."""
    alive = np.ones(len(targets), dtype=bool)
    idx = np.arange(len(targets))
    for a in range(1, cfg.K + 1, k_block):
        if not idx.size:
            break
        k = np.arange(a, min(a + k_block, cfg.K + 1))
        ok = _scores(cfg, targets[idx], k).min(axis=1) >= cfg.eps
        alive[idx[~ok]] = False
        idx = idx[ok]
    return alive


def box_counts(bitmap: np.ndarray) -> list[tuple[int, float, int]]:
    """``(r, 2^{-r}, #occupied dyadic boxes of side 2^{-r})`` for r = 0..R."""
    n = bitmap.ndim
    R = int(round(math.log2(bitmap.shape[0]))) if bitmap.size > 1 else 0
    out = []
    for r in range(R + 1):
        m = 2 ** (R - r)
        shape = []
        for _ in range(n):
            shape += [2 ** r, m]
        occ = bitmap.reshape(shape).any(axis=tuple(range(1, 2 * n, 2)))
        out.append((r, 2.0 ** -r, int(occ.sum())))
    return out


def bad_set_scan(cfg: BadTestConfig, R: int, threads: int | None = 1,
                 budget_bits: int = SCAN_BUDGET_BITS, chunk: int = 4096) -> ScanResult:
    """Test the center of every cell of the 2^{-R} grid on [0,1)^n."""
    n = cfg.n
    if R < 0:
        raise ValueError("R must be >= 0")
    if n * R > budget_bits:
        raise BudgetExceeded(f"n*R = {n * R} exceeds budget of {budget_bits} bits")
    side = 2 ** R
    total = side ** n

    def run(ab):
        lin = np.arange(ab[0], ab[1])
        digits = np.stack(np.unravel_index(lin, (side,) * n), axis=1)
        return _survives(cfg, (digits + 0.5) / side)

    parts = ordered_map(run, chunks(total, chunk), threads)
    bitmap = np.concatenate(parts).reshape((side,) * n)
    counts = box_counts(bitmap)
    corners = {}
    for r in (0, 1):
        if r > R:
            continue
        corners[r] = _corner_count(cfg, r)
    return ScanResult(R, n, bitmap, counts, float(bitmap.sum()) / total, corners)


def _corner_count(cfg: BadTestConfig, r: int) -> int:
    """Boxes of side 2^{-r} with at least one surviving corner."""
    n, side = cfg.n, 2 ** r
    pts = np.array(list(itertools.product(range(side + 1), repeat=n)), dtype=float) / side
    ok = _survives(cfg, pts).reshape((side + 1,) * n)
    count = 0
    for box in itertools.product(range(side), repeat=n):
        if any(ok[tuple(b + o for b, o in zip(box, off))]
               for off in itertools.product((0, 1), repeat=n)):
            count += 1
    return count


# --------------------------------------------------------------------------
# Spike correspondence and avoidance sets


def standard_flow_for(n: int) -> FlowSpec:
    return FlowSpec(tuple([1.0] * n + [-float(n)]))


def spike_correspondence(v: Sequence[float], w: Sequence[float], s: float, eps: float,
                         K: int) -> dict:
    """Compare the truncated Bad test with the spike points of ``x_v - w_s``.

    Layer k of the grid is ``{(m + kv - w, k - s)}``.  A point lies in the
    positive spike of ``O = {(u, s') : 0 < s' < 1, |u| < eps/2}`` when
    ``0 < k - s < 1`` and ``|u| < eps/2``, or ``k - s >= 1`` and
    ``(k - s)^{1/n} |u| < eps/2`` (sup norm).  If w passes the truncated test
    no layer in 1..K can hold such a point, since ``k/(k - s) <= 2``.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    n = len(v)
    if not 0 <= s <= 1:
        raise ValueError("s must lie in [0, 1]")
    cfg = BadTestConfig(tuple(v), eps, K)
    bad = bad_target_test(cfg, w)["verdict"]
    k = np.arange(1, K + 1, dtype=float)
    height = k - s
    rho = np.where(height >= 1, (eps / 2) / np.maximum(height, 1) ** (1.0 / n), eps / 2)
    rho = np.where(height > 0, rho, 0.0)
    x = k[:, None] * v[None, :] - w[None, :]
    # integers m with |m + x| < rho, per coordinate
    lo = np.floor(-x - rho[:, None]) + 1
    hi = np.ceil(-x + rho[:, None]) - 1
    per = np.clip(hi - lo + 1, 0, None)
    count = int(per.prod(axis=1).sum())
    return {"bad_proxy": bool(bad), "spike_count": count, "consistent": (not bad) or count == 0}


def avoid_test(flow: FlowSpec, y: Grid, region: BoxRegion, r: float, t_max: float,
               budget: float = 1e8) -> bool:
    """True iff no grid point of y visits ``O`` at any time in ``[r, t_max]``."""
    if not 0 <= r < t_max:
        raise ValueError("need 0 <= r < t_max")
    window = IntervalSet([Interval(r, t_max, True, True)])
    for _, hits in grid_spike_points(flow, y, region, t_max, budget):
        if hits.intersection(window):
            return False
    return True


# --------------------------------------------------------------------------
# Affine subspaces


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    """``offset + span(rows of basis)``; basis is orthonormalized on construction
    and the offset replaced by its component orthogonal to the linear part."""

    basis: np.ndarray
    offset: np.ndarray

    def __init__(self, basis, offset=None):
        b = np.atleast_2d(np.asarray(basis, dtype=float))
        ell, d = b.shape
        if not 1 <= ell < d:
            raise ValueError("need 1 <= ell < d")
        q, rr = np.linalg.qr(b.T)
        if np.min(np.abs(np.diag(rr))) < 1e-12:
            raise ValueError("basis vectors are dependent")
        off = np.zeros(d) if offset is None else np.asarray(offset, dtype=float)
        if off.shape != (d,):
            raise ValueError("offset dimension mismatch")
        u = q.T
        off = off - u.T @ (u @ off)
        object.__setattr__(self, "basis", u)
        object.__setattr__(self, "offset", off)

    @property
    def ell(self) -> int:
        return self.basis.shape[0]

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    @property
    def exponent(self) -> float:
        return self.ell / (self.d - self.ell)

    def linear_part(self) -> "AffineSubspace":
        return AffineSubspace(self.basis)

    def distance(self, k) -> np.ndarray:
        """Euclidean distance of the rows of ``k`` to the subspace."""
        k = np.atleast_2d(np.asarray(k, dtype=float)) - self.offset
        proj = (k @ self.basis.T) @ self.basis
        return np.linalg.norm(k - proj, axis=1)


def target_line(v: float, w: float) -> AffineSubspace:
    """The line ``{(x, v x - w)}`` in R^2.

    For k > 0 and integer m the point ``(k, m)`` is at distance
    ``|kv - w - m| / sqrt(1 + v^2)`` from it, so with m nearest to ``kv - w``
    the line score ``|(k, m)| d((k, m), L)`` equals
    ``k <kv - w> * |(k, m)| / (k sqrt(1 + v^2))``, and the last factor tends to 1.
    """
    return AffineSubspace([[1.0, v]], [0.0, -w])


def _tube_points(W: AffineSubspace, shells: list[tuple[float, float, float]],
                 budget: float = TUBE_BUDGET) -> np.ndarray:
    """Integer k with ``lo <= |k| < hi`` and ``d(k, W) <= tau`` for each (lo, hi, tau).

    W is a graph over the coordinates J maximizing ``|det U_J|``; in a tube
    of radius tau the other coordinates lie within ``(1 + |U_J^{-1}|) tau`` of
    their value on W above ``k_J``.
    """
    u = W.basis.T  # d x ell
    d, ell = u.shape
    J = max(itertools.combinations(range(d), ell), key=lambda js: abs(np.linalg.det(u[list(js)])))
    J = list(J)
    Jc = [i for i in range(d) if i not in J]
    uj_inv = np.linalg.inv(u[J])
    M = u[Jc] @ uj_inv
    C = 1.0 + np.linalg.norm(uj_inv, 2)
    o = W.offset
    total = 0.0
    for lo, hi, tau in shells:
        total += (2 * math.floor(hi) + 1) ** ell * (2 * C * tau + 2) ** (d - ell)
    if total > budget:
        raise BudgetExceeded(f"tube enumeration needs ~{total:.3g} candidates")
    found = []
    for lo, hi, tau in shells:
        N = int(math.floor(hi))
        width = C * tau * (1 + 1e-9) + 1e-9
        axes = np.ogrid[tuple(slice(-N, N + 1) for _ in range(ell))]
        inside = sum(g.astype(float) ** 2 for g in axes) < hi * hi
        centers = [o[c] + sum(M[r, t] * (axes[t] - o[J[t]]) for t in range(ell))
                   for r, c in enumerate(Jc)]
        lows = [np.ceil(cen - width).astype(np.int64) for cen in centers]
        span = max(int(np.max(np.floor(cen + width).astype(np.int64) - low)) + 1
                   for cen, low in zip(centers, lows))
        for offs in itertools.product(range(max(span, 1)), repeat=d - ell):
            near = inside.copy()
            for cen, low, off in zip(centers, lows, offs):
                near &= np.abs(low + off - cen) <= width
            idx = np.nonzero(near)
            if not idx[0].size:
                continue
            k = np.empty((idx[0].size, d), dtype=np.int64)
            for t in range(ell):
                k[:, J[t]] = idx[t] - N
            for low, off, c in zip(lows, offs, Jc):
                k[:, c] = low[idx] + off
            nn = np.sqrt(np.einsum("ij,ij->i", k, k).astype(float))
            keep = (nn >= lo) & (nn < hi) & (W.distance(k) <= tau)
            if keep.any():
                found.append(k[keep])
    if not found:
        return np.zeros((0, d), dtype=np.int64)
    pts = np.unique(np.vstack(found), axis=0)
    return pts


def _dyadic_shells(bound: float, tau_at) -> list[tuple[float, float, float]]:
    """Shells ``[2^j, 2^{j+1})`` capped at ``bound``, with the tube radius
    ``tau_at(lower edge)`` (the radius is decreasing in |k|)."""
    shells, lo = [], 1.0
    while lo <= bound:
        hi = min(2 * lo, math.nextafter(bound, math.inf))
        shells.append((lo, hi, tau_at(lo)))
        lo *= 2
    return shells


def minkowski_solutions(W0: AffineSubspace, norm_bound: float,
                        budget: float = TUBE_BUDGET) -> np.ndarray:
    """All nonzero integer k with ``|k| <= norm_bound`` and
    ``d(k, W0) <= 2^d |k|^{-ell/(d-ell)}``, sorted by norm then lexicographically."""
    if np.any(np.abs(W0.offset) > 1e-12):
        raise ValueError("W0 must be a linear subspace")
    if W0.d > 4:
        raise ValueError("d <= 4 supported")
    d, e = W0.d, W0.exponent
    if norm_bound < 1:
        return np.zeros((0, d), dtype=np.int64)
    pts = _tube_points(W0, _dyadic_shells(norm_bound, lambda r: 2.0 ** d * r ** -e), budget)
    nn = np.sqrt(np.einsum("ij,ij->i", pts, pts).astype(float))
    ok = W0.distance(pts) <= 2.0 ** d * nn ** -e
    pts, nn = pts[ok], nn[ok]
    order = np.lexsort(tuple(pts[:, ::-1].T) + (nn,))
    return pts[order]


def subspace_scores(W: AffineSubspace, k) -> np.ndarray:
    k = np.atleast_2d(k)
    nn = np.sqrt(np.einsum("ij,ij->i", k, k).astype(float))
    return nn ** W.exponent * W.distance(k)


def bad_subspace_test(W: AffineSubspace, eps: float, norm_bound: float,
                      budget: float = TUBE_BUDGET) -> dict:
    """``min_{0 < |k| <= bound} |k|^{ell/(d-ell)} d(k, W) >= eps``, computed exactly.

    A seed value S0 comes from all k with |k| <= min(3, bound); any better k
    must lie in the tube ``d(k, W) <= S0 |k|^{-ell/(d-ell)}``.
    """
    if W.d > 4:
        raise ValueError("d <= 4 supported")
    if norm_bound < 1:
        raise ValueError("norm_bound must be >= 1")
    d, e = W.d, W.exponent
    small = min(3.0, norm_bound)
    m = int(math.floor(small))
    cand = np.array([c for c in itertools.product(range(-m, m + 1), repeat=d)
                     if 0 < sum(x * x for x in c) <= small * small], dtype=np.int64)
    sc = subspace_scores(W, cand)
    i = int(np.argmin(sc))
    best, arg = float(sc[i]), cand[i]
    if best > 0 and norm_bound > small:
        pts = _tube_points(W, _dyadic_shells(norm_bound, lambda r: best * r ** -e), budget)
        if len(pts):
            nn = np.sqrt(np.einsum("ij,ij->i", pts, pts).astype(float))
            pts = pts[(nn <= norm_bound) & (nn > 0)]
            if len(pts):
                sc = subspace_scores(W, pts)
                j = int(np.argmin(sc))
                if sc[j] < best:
                    best, arg = float(sc[j]), pts[j]
    return {"verdict": bool(best >= eps), "min_value": best, "argmin": tuple(int(a) for a in arg)}
