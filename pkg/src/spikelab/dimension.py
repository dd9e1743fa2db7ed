"""Box counting, separated sets and dimension fits in Euclidean and quasi metrics."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, DegenerateFit
from .geometry import MP, FlowedLattice, FlowSpec, Grid, log_abs

EUCLIDEAN = "euclidean"
QUASI = "quasi"


# --------------------------------------------------------------------------
# Quasi-metric


class QuasiMetric:
    """``|u|_a = max_{j in J+} |u_j|^{1/c_j}`` on the expanding coordinates."""

    def __init__(self, flow: FlowSpec):
        self.flow = flow
        self.c = np.array([flow.c[j] for j in flow.j_plus])
        # (a + b)^p <= 2^{p-1}(a^p + b^p) for p >= 1, and <= a^p + b^p for p < 1
        self.constant = float(max(max(1.0, 2.0 ** (1.0 / c - 1.0)) for c in self.c))

    @property
    def dim(self) -> int:
        return len(self.c)

    @property
    def h_a(self) -> float:
        return float(self.c.sum())

    def norm(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return np.max(np.abs(u) ** (1.0 / self.c), axis=-1)

    def dist(self, u, v) -> np.ndarray:
        return self.norm(np.asarray(u, dtype=float) - np.asarray(v, dtype=float))

    def log_dist(self, u: Sequence[float], v: Sequence[float], t: float = 0.0) -> float:
        """``log d_a(a_t u, a_t v)`` with the flow applied in multiprecision."""
        best = -math.inf
        tt = MP.mpf(t)
        for c, a, b in zip(self.c, u, v):
            f = MP.exp(MP.mpf(float(c)) * tt)
            diff = MP.mpf(a) * f - MP.mpf(b) * f
            if diff:
                best = max(best, float(MP.log(abs(diff))) / float(c))
        return best

    def box_sides(self, delta: float) -> np.ndarray:
        """A d_a-ball of radius delta is a box with sides ``2 delta^{c_j}``."""
        return delta ** self.c


# --------------------------------------------------------------------------
# Separated sets


def _metric_arrays(points, metric: str, quasi: QuasiMetric | None):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if metric == QUASI and quasi is None:
        raise ValueError("quasi metric needs a QuasiMetric")
    return pts


def _pair_dist(a: np.ndarray, b: np.ndarray, metric: str, quasi) -> np.ndarray:
    if metric == EUCLIDEAN:
        return np.linalg.norm(a - b, axis=-1)
    return quasi.dist(a, b)


SEP_TOL = 1e-9


def separated_count(points, delta: float, metric: str = EUCLIDEAN,
                    quasi: QuasiMetric | None = None, exact: bool = False,
                    node_budget: int = 2_000_000) -> int:
    """Size of a delta-separated subset (pairwise distance >= delta).

    The default is greedy in input order, which gives a maximal separated set
    and so a lower bound for the maximum.  ``exact=True`` runs branch and bound
    (intended for at most ~2000 points of moderate overlap).  Distances within
    ``SEP_TOL`` relative of delta count as separated, so that evenly spaced
    floats are not split by rounding.
    """
    pts = _metric_arrays(points, metric, quasi)
    if len(pts) == 0:
        return 0
    thr = delta * (1 - SEP_TOL)
    if exact:
        return _exact_separated(pts, thr, metric, quasi, node_budget)
    n, dim = pts.shape
    side = np.full(dim, delta) if metric == EUCLIDEAN else quasi.box_sides(delta)
    cells: dict[tuple, list[int]] = {}
    chosen: list[int] = []
    offsets = np.array(np.meshgrid(*[[-1, 0, 1]] * dim, indexing="ij")).reshape(dim, -1).T
    keys = np.floor(pts / side).astype(np.int64)
    for i in range(n):
        key = keys[i]
        close = False
        for off in offsets:
            for j in cells.get(tuple(key + off), ()):
                if _pair_dist(pts[i], pts[j], metric, quasi) < thr:
                    close = True
                    break
            if close:
                break
        if not close:
            chosen.append(i)
            cells.setdefault(tuple(key), []).append(i)
    return len(chosen)


def _exact_separated(pts, thr, metric, quasi, node_budget) -> int:
    n = len(pts)
    conflict = [0] * n
    for i in range(n):
        d = _pair_dist(pts[i][None, :], pts, metric, quasi)
        mask = 0
        for j in np.nonzero(d < thr)[0]:
            if j != i:
                mask |= 1 << int(j)
        conflict[i] = mask
    best = [0]
    nodes = [0]

    def search(cand: int, size: int):
        nodes[0] += 1
        if nodes[0] > node_budget:
            raise BudgetExceeded("branch and bound node budget exhausted")
        if cand == 0:
            best[0] = max(best[0], size)
            return
        if size + _clique_cover(cand, conflict) <= best[0]:
            return
        i = (cand & -cand).bit_length() - 1
        search(cand & ~(1 << i) & ~conflict[i], size + 1)
        search(cand & ~(1 << i), size)

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * n + 200))
    try:
        search((1 << n) - 1, 0)
    finally:
        sys.setrecursionlimit(limit)
    return best[0]


def _clique_cover(cand: int, conflict: list[int]) -> int:
    """Greedy partition of the candidates into pairwise-conflicting groups.

    A separated set takes at most one point per group, so the group count
    bounds what the candidates can still contribute."""
    groups = 0
    while cand:
        i = (cand & -cand).bit_length() - 1
        members = 1 << i
        common = conflict[i] & cand
        while common:
            j = (common & -common).bit_length() - 1
            members |= 1 << j
            common &= conflict[j]
        cand &= ~members
        groups += 1
    return groups


# --------------------------------------------------------------------------
# Box counting and fits


@dataclass(frozen=True)
class ProductSet:
    """Product of 1-D sets, each a list of closed intervals ``(a, b)``."""

    factors: tuple[tuple[tuple[float, float], ...], ...]

    def __init__(self, factors):
        object.__setattr__(self, "factors",
                           tuple(tuple((float(a), float(b)) for a, b in f) for f in factors))

    @property
    def dim(self) -> int:
        return len(self.factors)


def cantor_intervals(level: int, lo: float = 0.0, hi: float = 1.0) -> list[tuple[float, float]]:
    """Intervals of the level-n middle-thirds construction on [lo, hi]."""
    ivs = [(lo, hi)]
    for _ in range(level):
        nxt = []
        for a, b in ivs:
            third = (b - a) / 3
            nxt += [(a, a + third), (b - third, b)]
        ivs = nxt
    return ivs


def _interval_box_count(intervals, side: float) -> int:
    """Boxes ``[k s, (k+1) s)`` meeting the union of the closed intervals.

    Endpoints within 1e-9 of a box edge are snapped so that a touching
    endpoint does not open a new box."""
    ranges = []
    for a, b in intervals:
        lo = math.floor(a / side + 1e-9)
        hi = math.ceil(b / side - 1e-9) - 1
        ranges.append((lo, max(hi, lo)))
    ranges.sort()
    total, cur_lo, cur_hi = 0, None, None
    for lo, hi in ranges:
        if cur_hi is not None and lo <= cur_hi:
            cur_hi = max(cur_hi, hi)
            continue
        if cur_hi is not None:
            total += cur_hi - cur_lo + 1
        cur_lo, cur_hi = lo, hi
    if cur_hi is not None:
        total += cur_hi - cur_lo + 1
    return total


def box_count(data, delta: float, metric: str = EUCLIDEAN, quasi: QuasiMetric | None = None) -> int:
    """Grid boxes of side delta (Euclidean) or sides ``delta^{c_j}`` (quasi) meeting the set.

    ``data`` is a ProductSet, an (m, n) point array, or a boolean bitmap over
    the cells of [0,1)^n (each cell represented by its center).
    """
    if isinstance(data, ProductSet):
        dim = data.dim
    else:
        arr = np.asarray(data)
        dim = arr.ndim if arr.dtype == bool else arr.shape[1]
    if metric == QUASI:
        if quasi is None or quasi.dim != dim:
            raise ValueError("quasi metric of matching dimension required")
        sides = quasi.box_sides(delta)
    else:
        sides = np.full(dim, float(delta))
    if isinstance(data, ProductSet):
        out = 1
        for f, s in zip(data.factors, sides):
            out *= _interval_box_count(f, float(s))
        return out
    arr = np.asarray(data)
    if arr.dtype == bool:
        side_cells = arr.shape[0]
        idx = np.argwhere(arr)
        pts = (idx + 0.5) / side_cells
    else:
        pts = arr.astype(float)
    if not len(pts):
        return 0
    keys = np.floor(pts / sides).astype(np.int64)
    return int(len(np.unique(keys, axis=0)))


@dataclass(frozen=True)
class DimensionEstimate:
    deltas: tuple[float, ...]
    counts: tuple[int, ...]
    slope: float
    intercept: float
    residual_rms: float
    scale_range: tuple[float, float]
    note: str = "slope of log N vs log(1/delta); a finite-range proxy for the lower box dimension"

    def rows(self) -> list[tuple[float, int]]:
        return list(zip(self.deltas, self.counts))

    def to_dict(self) -> dict:
        return {"deltas": list(self.deltas), "counts": list(self.counts), "slope": self.slope,
                "intercept": self.intercept, "residual_rms": self.residual_rms,
                "scale_range": list(self.scale_range), "note": self.note}


def fit_slope(deltas: Sequence[float], counts: Sequence[int], min_scales: int = 4) -> DimensionEstimate:
    """Ordinary least squares of log N against log(1/delta)."""
    d = np.asarray(deltas, dtype=float)
    n = np.asarray(counts, dtype=float)
    if len(d) < min_scales:
        raise ValueError(f"need at least {min_scales} scales")
    if np.any(n <= 0):
        raise DegenerateFit("counts must be positive")
    if np.all(n == n[0]):
        raise DegenerateFit("all counts are equal")
    x, y = np.log(1 / d), np.log(n)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + icpt)
    order = np.argsort(d)[::-1]
    return DimensionEstimate(tuple(float(v) for v in d[order]), tuple(int(v) for v in n[order]),
                             float(slope), float(icpt), float(np.sqrt(np.mean(resid ** 2))),
                             (float(d.min()), float(d.max())))


def dim_estimate(data, deltas: Sequence[float], metric: str = EUCLIDEAN,
                 quasi: QuasiMetric | None = None) -> DimensionEstimate:
    counts = [box_count(data, float(dl), metric, quasi) for dl in deltas]
    return fit_slope(deltas, counts)


def dyadic(lo_exp: int, hi_exp: int, base: float = 2.0) -> list[float]:
    """``[base^-lo_exp, ..., base^-hi_exp]``."""
    return [base ** -k for k in range(lo_exp, hi_exp + 1)]


# --------------------------------------------------------------------------
# Covering counts along an orbit


def _cover_count(intervals: list[tuple[float, float]], length: float) -> int:
    """Fewest closed intervals of the given length covering a union of intervals
    (greedy from the left is optimal in one dimension)."""
    count, reach = 0, -math.inf
    for a, b in sorted(intervals):
        if b <= reach:
            continue
        start = max(a, reach)
        # this piece needs ceil((b - start)/length) new intervals (at least one)
        if start > reach or count == 0:
            k = max(1, math.ceil((b - start) / length - 1e-12))
            count += k
            reach = start + k * length
        else:
            k = math.ceil((b - reach) / length - 1e-12)
            count += k
            reach += k * length
    return count


def _merge(intervals):
    out = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


@dataclass
class CoveringReport:
    count: int
    bound: int
    I_size: int
    C: int
    I: tuple[int, ...]
    r_y: float
    counts_by_T: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"count": self.count, "bound": self.bound, "I_size": self.I_size, "C": self.C,
                "I": list(self.I), "r_y": self.r_y, "counts_by_T": self.counts_by_T}


COVER_GROWTH = 3  # smallest integer e^D with e^D >= e: a ball of radius delta needs 3 of radius delta/e


def covering_count_experiment(flow: FlowSpec, y: Grid, threshold: float, r: float, T: int,
                              max_T: int = 25, max_pieces: int = 200_000) -> CoveringReport:
    """Covering numbers of ``E_{y,T}`` inside the injective unstable leaf of y.

    P_inf is ``{lambda1 < threshold}``, I the integer times ``1..T`` where the
    orbit of x is in it, and the leaf is ``{y + (g, 0) : |g| < r_y}`` with
    ``r_y = lambda1(x)/2`` (sup norm).  ``E_{y,T}`` is computed exactly as a
    union of g-intervals: at a time t outside I, g survives iff some lattice
    vector v has ``|(e^t(g - v_1), -e^{-t} v_2)|_2 <= r``.  The count is the
    fewest d_a-balls (intervals of length ``2 r e^{-T}``) covering it.
    """
    if flow.d != 2 or tuple(flow.c) != (1.0, -1.0):
        raise ValueError("covering experiment uses c = (1, -1)")
    if T < 0:
        raise ValueError("T must be >= 0")
    if T > max_T:
        raise BudgetExceeded(f"T = {T} exceeds the budget {max_T}")
    if not 0 < r < threshold / 12:
        raise ValueError("need r < threshold/12: a d_a-ball of radius 3r must be narrower "
                         "than the injectivity radius threshold/2 off P_inf")
    x = y.lattice
    tracker = FlowedLattice(x, flow, 0.0)
    lam0 = float(tracker.shortest()[0])
    if lam0 < threshold:
        raise ValueError("y lies in P_inf")
    r_y = lam0 / 2
    C = math.ceil(r_y / r - 1e-12)
    pieces = [(-r_y, r_y)]
    I = []
    counts = []
    for t in range(1, T + 1):
        tracker = tracker.advance(float(t))
        if float(tracker.shortest()[0]) < threshold:
            I.append(t)
        else:
            et = math.exp(t)
            new = []
            for a, b in pieces:
                mid, half = (a + b) / 2, (b - a) / 2
                for v in tracker.points_in_box([et * mid, 0.0], [et * half + r, r]):
                    v1, v2 = float(v[0]), float(v[1])
                    h2 = r * r - (v2 / et) ** 2
                    if h2 < 0:
                        continue
                    h = math.sqrt(h2) / et
                    lo, hi = max(a, v1 - h), min(b, v1 + h)
                    if lo <= hi:
                        new.append((lo, hi))
            pieces = _merge(new)
            if len(pieces) > max_pieces:
                raise BudgetExceeded("too many surviving intervals")
        counts.append(_cover_count(pieces, 2 * r * math.exp(-t)) if pieces else 0)
    count = counts[-1] if counts else C
    bound = C * COVER_GROWTH ** len(I)
    return CoveringReport(count, bound, len(I), C, tuple(I), r_y, counts)
