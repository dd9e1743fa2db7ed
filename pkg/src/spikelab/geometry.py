"""Lattices, grids, diagonal flows and the short/close vector machinery.

Two scalar kinds are supported.  ``float`` lattices hold float64 entries;
``rational`` lattices hold :class:`fractions.Fraction` entries and give exact
answers for unflowed norms.  Flowed quantities (``a_t x`` for large ``t``) are
evaluated through :class:`FlowedLattice`, which keeps the exact basis and
applies the factors ``e^{c_j t}`` in an arbitrary-exponent multiprecision
context, so nothing overflows and no cancellation happens in the scaled
coordinates.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .errors import (DimensionUnsupported, EnumerationTooLarge, FlowOverflow,
                     NotUnimodular, SingularBasis)
from .intervals import Interval, IntervalSet

SUP = "sup"
EUCLIDEAN = "euclidean"
NORMS = (SUP, EUCLIDEAN)

# Private context: its precision is fixed at import and never mutated.
MP = mpmath.MPContext()
MP.dps = 40

MAX_EXACT_DIM = 4
_CANDIDATE_BUDGET = 2_000_000


def check_norm(norm: str) -> str:
    if norm not in NORMS:
        raise ValueError(f"unknown norm {norm!r}; expected one of {NORMS}")
    return norm


def log_abs(x) -> float:
    """log|x| computed without overflow for big rationals; -inf for 0."""
    if x == 0:
        return -math.inf
    if isinstance(x, Fraction):
        return math.log(abs(x.numerator)) - math.log(x.denominator)
    if isinstance(x, int):
        return math.log(abs(x))
    if isinstance(x, mpmath.mpf) or type(x).__name__ == "mpf":
        return float(MP.log(abs(x)))
    return math.log(abs(x))


def to_mp(x):
    if isinstance(x, Fraction):
        return MP.mpf(x.numerator) / x.denominator
    return MP.mpf(x)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


# --------------------------------------------------------------------------
# Flow


@dataclass(frozen=True)
class FlowSpec:
    """Exponents of the diagonal flow ``a_t = diag(e^{c_1 t}, ..., e^{c_d t})``."""

    c: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(v) for v in self.c)
        object.__setattr__(self, "c", c)
        if len(c) < 2:
            raise ValueError("flow dimension must be at least 2")
        if any(v == 0 for v in c):
            raise ValueError("every exponent must be nonzero")
        if abs(math.fsum(c)) > 1e-12:
            raise ValueError(f"exponents must sum to 0, got {math.fsum(c)!r}")

    @property
    def d(self) -> int:
        return len(self.c)

    @property
    def j_plus(self) -> tuple[int, ...]:
        return tuple(j for j, v in enumerate(self.c) if v > 0)

    @property
    def h_a(self) -> float:
        return math.fsum(self.c[j] for j in self.j_plus)

    @property
    def is_normalized(self) -> bool:
        return abs(max(self.c) - 1.0) <= 1e-12

    def normalized(self) -> "FlowSpec":
        """Time-rescaled copy with ``max c_j = 1``."""
        m = max(self.c)
        return FlowSpec(tuple(v / m for v in self.c))

    def factors(self, t: float) -> np.ndarray:
        for v in self.c:
            if abs(v * t) > 700:
                raise FlowOverflow(f"|c_j t| = {abs(v * t):.4g} > 700; use FlowedLattice")
        return np.exp(np.asarray(self.c) * t)

    def mp_factors(self, t: float) -> list:
        tt = MP.mpf(t)
        return [MP.exp(MP.mpf(v) * tt) for v in self.c]

    def to_dict(self) -> dict:
        return {"c": list(self.c)}


def standard_flow(d: int = 2) -> FlowSpec:
    """``diag(e^t, ..., e^t, e^{-(d-1)t})``."""
    return FlowSpec(tuple([1.0] * (d - 1) + [-(d - 1.0)]))


# --------------------------------------------------------------------------
# Lattices, grids, regions


def _det_fraction(m: list[list[Fraction]]) -> Fraction:
    a = [row[:] for row in m]
    n = len(a)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f:
                for k in range(col, n):
                    a[r][k] -= f * a[col][k]
    return det


def _solve_fraction(m: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(m)
    a = [list(m[i]) + [b[i]] for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col] / a[col][col]
                for k in range(col, n + 1):
                    a[r][k] -= f * a[col][k]
    return [a[i][n] / a[i][i] for i in range(n)]


def _inverse_fraction(m: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(m)
    cols = [_solve_fraction(m, [Fraction(int(i == j)) for i in range(n)]) for j in range(n)]
    return [[cols[j][i] for j in range(n)] for i in range(n)]


@dataclass(frozen=True, eq=False)
class Lattice:
    """Unimodular lattice spanned by the *columns* of ``basis``."""

    basis: tuple[tuple, ...]
    kind: str = "float"

    def __post_init__(self):
        if self.kind not in ("float", "rational"):
            raise ValueError("kind must be 'float' or 'rational'")
        rows = [list(r) for r in self.basis]
        d = len(rows)
        if d < 2 or any(len(r) != d for r in rows):
            raise ValueError("basis must be a square matrix of size >= 2")
        if self.kind == "rational":
            rows = [[_as_fraction(v) for v in r] for r in rows]
            det = _det_fraction(rows)
            if abs(det) != 1:
                raise NotUnimodular(f"|det| = {det} != 1")
        else:
            rows = [[float(v) for v in r] for r in rows]
            det = float(np.linalg.det(np.array(rows)))
            if not abs(abs(det) - 1.0) <= 1e-9:
                raise NotUnimodular(f"|det| = {abs(det)!r} != 1")
        object.__setattr__(self, "basis", tuple(tuple(r) for r in rows))

    @property
    def d(self) -> int:
        return len(self.basis)

    @property
    def columns(self) -> list[tuple]:
        return [tuple(self.basis[i][j] for i in range(self.d)) for j in range(self.d)]

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence], kind: str = "float") -> "Lattice":
        d = len(cols)
        return cls(tuple(tuple(cols[j][i] for j in range(d)) for i in range(d)), kind)

    def as_float(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.basis])

    def point(self, coeffs: Sequence[int]) -> tuple:
        return tuple(sum((self.basis[i][j] * int(coeffs[j]) for j in range(self.d)),
                         start=self.basis[i][0] * 0) for i in range(self.d))

    def __eq__(self, other):
        return isinstance(other, Lattice) and self.kind == other.kind and self.basis == other.basis

    def __hash__(self):
        return hash((self.kind, self.basis))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "basis": [[_dec(v) for v in r] for r in self.basis]}

    @classmethod
    def from_dict(cls, data: dict) -> "Lattice":
        kind = data.get("kind", "float")
        conv = Fraction if kind == "rational" else float
        return cls(tuple(tuple(conv(v) for v in r) for r in data["basis"]), kind)


def _dec(v) -> str:
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    return repr(float(v))


def standard_lattice(d: int = 2, kind: str = "rational") -> Lattice:
    return Lattice(tuple(tuple(int(i == j) for j in range(d)) for i in range(d)), kind)


def x_v(v: Sequence, kind: str | None = None) -> Lattice:
    """The lattice ``[[I_n, v], [0, 1]] Z^{n+1}``."""
    v = list(v) if isinstance(v, (list, tuple, np.ndarray)) else [v]
    if kind is None:
        kind = "rational" if all(isinstance(a, (Fraction, int)) for a in v) else "float"
    n = len(v)
    rows = []
    for i in range(n + 1):
        row = [int(i == j) for j in range(n)]
        row.append(v[i] if i < n else 1)
        rows.append(tuple(row))
    return Lattice(tuple(rows), kind)


@dataclass(frozen=True, eq=False)
class Grid:
    """The coset ``lattice + offset`` with the offset reduced mod the lattice."""

    lattice: Lattice
    offset: tuple

    def __post_init__(self):
        x = self.lattice
        if len(self.offset) != x.d:
            raise ValueError("offset dimension mismatch")
        if x.kind == "rational":
            w = [_as_fraction(v) for v in self.offset]
            coeffs = _solve_fraction([list(r) for r in x.basis], w)
            frac = [c - math.floor(c) for c in coeffs]
            red = tuple(sum((x.basis[i][j] * frac[j] for j in range(x.d)), Fraction(0))
                        for i in range(x.d))
        else:
            b = x.as_float()
            w = np.array([float(v) for v in self.offset])
            coeffs = np.linalg.solve(b, w)
            frac = coeffs - np.floor(coeffs)
            frac[frac >= 1.0] = 0.0
            red = tuple(float(v) for v in b @ frac)
        object.__setattr__(self, "offset", red)

    @property
    def d(self) -> int:
        return self.lattice.d

    def point(self, coeffs: Sequence[int]) -> tuple:
        p = self.lattice.point(coeffs)
        return tuple(p[i] + self.offset[i] for i in range(self.d))

    def to_dict(self) -> dict:
        return {"lattice": self.lattice.to_dict(), "offset": [_dec(v) for v in self.offset]}

    @classmethod
    def from_dict(cls, data: dict) -> "Grid":
        lat = Lattice.from_dict(data["lattice"])
        conv = Fraction if lat.kind == "rational" else float
        return cls(lat, tuple(conv(v) for v in data["offset"]))


@dataclass(frozen=True)
class BoxRegion:
    """Finite union of open axis-aligned boxes; ``boxes[b][j] = (l_j, u_j)``."""

    boxes: tuple[tuple[tuple[float, float], ...], ...]

    def __post_init__(self):
        boxes = tuple(tuple((float(l), float(u)) for l, u in box) for box in self.boxes)
        if not boxes:
            raise ValueError("region needs at least one box")
        d = len(boxes[0])
        for box in boxes:
            if len(box) != d:
                raise ValueError("boxes of mixed dimension")
            for l, u in box:
                if not (math.isfinite(l) and math.isfinite(u) and l < u):
                    raise ValueError(f"invalid side ({l}, {u})")
        object.__setattr__(self, "boxes", boxes)

    @property
    def d(self) -> int:
        return len(self.boxes[0])

    @classmethod
    def ball(cls, radius: float, d: int = 2, center: Sequence[float] | None = None) -> "BoxRegion":
        """Open sup-norm ball."""
        center = [0.0] * d if center is None else list(center)
        return cls((tuple((c - radius, c + radius) for c in center),))

    def contains(self, p: Sequence[float]) -> bool:
        return any(all(l < float(p[j]) < u for j, (l, u) in enumerate(box)) for box in self.boxes)

    def extent(self) -> list[float]:
        """Per-coordinate ``max |endpoint|`` over all boxes."""
        return [max(max(abs(box[j][0]), abs(box[j][1])) for box in self.boxes)
                for j in range(self.d)]

    def to_dict(self) -> dict:
        return {"boxes": [[[l, u] for l, u in box] for box in self.boxes]}

    @classmethod
    def from_dict(cls, data: dict) -> "BoxRegion":
        return cls(tuple(tuple(tuple(s) for s in box) for box in data["boxes"]))


@dataclass(frozen=True)
class LayeredPoint:
    point: tuple
    layer: int
    coeffs: tuple[int, ...]


def dumps(obj) -> str:
    """JSON with decimal-string scalars for Lattice, Grid and BoxRegion."""
    return json.dumps(obj.to_dict(), sort_keys=True)


# --------------------------------------------------------------------------
# Reduction and enumeration in (possibly scaled) coordinates


def _int_det(m: list[list[int]]) -> int:
    """Bareiss fraction-free determinant of an integer matrix."""
    a = [row[:] for row in m]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _int_adj(m: list[list[int]]) -> list[list[int]]:
    n = len(m)
    if n == 1:
        return [[1]]
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[m[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
            adj[j][i] = (-1) ** (i + j) * _int_det(minor)
    return adj


def _common_denominator(values: Iterable) -> int:
    return math.lcm(*(_as_fraction(v).denominator for v in values))


class FlowedLattice:
    """The lattice ``a_t x`` (or ``x`` itself when ``flow`` is None).

    Basis vectors are stored as exact integers over one common denominator
    (float entries convert exactly), so integer row operations never lose
    precision.  Only the flow factors ``e^{c_j t}`` are multiprecision.
    All vectors returned are exact unflowed lattice (or grid) vectors.
    """

    def __init__(self, x: Lattice, flow: FlowSpec | None = None, t: float = 0.0,
                 _cols: list[list[int]] | None = None, _den: int | None = None):
        if flow is not None and flow.d != x.d:
            raise ValueError("flow and lattice dimensions differ")
        self.lattice = x
        self.flow = flow
        self.t = float(t)
        self.exact = x.kind == "rational"
        self.scale = None if flow is None or self.t == 0.0 else flow.mp_factors(self.t)
        if _cols is None:
            cols = x.columns
            den = _common_denominator(v for c in cols for v in c)
            _cols = [[int(_as_fraction(v) * den) for v in c] for c in cols]
            _den = den
        self.den = _den
        self.cols = self._reduce([list(c) for c in _cols])
        mat = [[c[i] for c in self.cols] for i in range(len(self.cols))]
        self._det = _int_det(mat)
        if self._det == 0:
            raise SingularBasis("basis is singular")
        self._adj = _int_adj(mat)

    @property
    def d(self) -> int:
        return len(self.cols)

    def advance(self, t: float) -> "FlowedLattice":
        """Same lattice at another time, warm-started from this reduced basis."""
        return FlowedLattice(self.lattice, self.flow, t, _cols=self.cols, _den=self.den)

    # integer vectors in units of 1/den -----------------------------------
    def _emb(self, v: Sequence[int]) -> list:
        if self.scale is None:
            return list(v)
        return [MP.mpf(a) * s for a, s in zip(v, self.scale)]

    @staticmethod
    def _key(e: Sequence, norm: str):
        if norm == SUP:
            return max(abs(a) for a in e)
        return sum(a * a for a in e)

    def _value(self, key, norm: str, den: int):
        if self.scale is None:
            if norm == SUP:
                return Fraction(key, den) if self.exact else key / den
            return math.sqrt(key) / den
        return key / den if norm == SUP else MP.sqrt(key) / den

    def _out(self, v: Sequence[int], den: int) -> tuple:
        if self.exact:
            return tuple(Fraction(a, den) for a in v)
        return tuple(a / den for a in v)

    def _reduce(self, cols: list[list[int]]) -> list[list[int]]:
        d = len(cols)
        embs = [self._emb(c) for c in cols]
        sq = [self._key(e, EUCLIDEAN) for e in embs]
        for _ in range(100_000):
            order = sorted(range(d), key=lambda i: sq[i])
            cols = [cols[i] for i in order]
            embs = [embs[i] for i in order]
            sq = [sq[i] for i in order]
            changed = False
            for i in range(1, d):
                for j in range(d):
                    if i == j:
                        continue
                    if sq[j] == 0:
                        raise SingularBasis("zero basis vector")
                    dot = sum(a * b for a, b in zip(embs[i], embs[j]))
                    if self.scale is None:
                        r = round(Fraction(dot, sq[j]))
                    else:
                        r = int(MP.nint(dot / sq[j]))
                    if r == 0:
                        continue
                    cand = [a - r * b for a, b in zip(cols[i], cols[j])]
                    ce = self._emb(cand)
                    cs = self._key(ce, EUCLIDEAN)
                    if cs < sq[i]:
                        cols[i], embs[i], sq[i] = cand, ce, cs
                        changed = True
            if not changed:
                break
        return cols

    def _coefficient_box(self, center: Sequence, half: Sequence, norm: str, scale_by: int = 1):
        """Integer coefficient ranges certified to contain every vector ``B k`` whose
        scaled image lies within ``half`` of ``center`` (all in units of
        1/(den*scale_by))."""
        d = self.d
        binv = []
        for i in range(d):
            row = []
            for j in range(d):
                v = MP.mpf(self._adj[i][j]) / (self._det * scale_by)
                if self.scale is not None:
                    v = v / self.scale[j]
                row.append(v)
            binv.append(row)
        c0, lo, hi = [], [], []
        for row in binv:
            c = MP.fsum(r * MP.mpf(x) for r, x in zip(row, center))
            if norm == SUP:
                rad = MP.fsum(abs(r) * MP.mpf(h) for r, h in zip(row, half))
            else:
                rad = MP.sqrt(MP.fsum(r * r for r in row)) * MP.mpf(max(half))
            rad = rad * (1 + MP.mpf(1e-9)) + MP.mpf(1e-9)
            c0.append(c)
            lo.append(int(MP.ceil(c - rad)))
            hi.append(int(MP.floor(c + rad)))
        return c0, lo, hi

    def _lines(self, lo, hi):
        """Split a coefficient box into lines along its widest axis.

        Returns ``(axis, rest, prefixes)``; each prefix fixes the other axes and
        the widest coefficient is then solved for in closed form."""
        sizes = [max(b - a + 1, 0) for a, b in zip(lo, hi)]
        axis = max(range(self.d), key=lambda i: sizes[i])
        rest = [i for i in range(self.d) if i != axis]
        count = math.prod(sizes[i] for i in rest) if min(sizes) > 0 else 0
        if count > _CANDIDATE_BUDGET:
            raise EnumerationTooLarge(f"{count} candidate coefficient lines")
        prefixes = itertools.product(*[range(lo[i], hi[i] + 1) for i in rest]) if count else iter(())
        return axis, rest, prefixes

    def _line_min(self, p, E, lo: int, hi: int, norm: str, skip_zero: bool):
        """``(key, c)`` minimizing ``key(p + c E)`` over integers c in [lo, hi].

        The key is convex in c, so a binary search on its forward difference
        finds the smallest minimizer.  With ``skip_zero`` p is the origin and
        c = 0 is excluded."""
        if lo > hi:
            return None

        def f(c):
            return self._key([a + c * b for a, b in zip(p, E)], norm)

        if skip_zero:
            for c in (1, -1):
                if lo <= c <= hi:
                    return f(c), c
            return None
        a, b = lo, hi
        while a < b:
            m = (a + b) // 2
            if f(m + 1) >= f(m):
                b = m
            else:
                a = m + 1
        return f(a), a

    def _search(self, lo, hi, cols, base, norm: str, best, skip_zero: bool):
        axis, rest, prefixes = self._lines(lo, hi)
        E = self._emb(cols[axis])
        for pre in prefixes:
            coeffs = [0] * self.d
            for i, c in zip(rest, pre):
                coeffs[i] = c
            v0 = self._combine(coeffs, cols, base=base)
            zero = skip_zero and not any(pre)
            hit = self._line_min(self._emb(v0), E, lo[axis], hi[axis], norm, zero)
            if hit is not None and hit[0] < best[0]:
                coeffs[axis] = hit[1]
                best = (hit[0], self._combine(coeffs, cols, base=base))
        return best

    def _combine(self, coeffs: Sequence[int], cols, base: Sequence[int] | None = None) -> list[int]:
        out = list(base) if base is not None else [0] * self.d
        for k, c in enumerate(coeffs):
            if c:
                col = cols[k]
                for i in range(self.d):
                    out[i] += c * col[i]
        return out

    def _check_dim(self):
        if self.d > MAX_EXACT_DIM:
            raise DimensionUnsupported(f"d={self.d} > {MAX_EXACT_DIM}")

    def shortest(self, norm: str = SUP):
        """``(value, vector)`` of a shortest nonzero vector of the flowed lattice."""
        check_norm(norm)
        self._check_dim()
        best = min(((self._key(self._emb(c), norm), c) for c in self.cols), key=lambda p: p[0])
        radius = best[0] if norm == SUP else MP.sqrt(best[0])
        _, lo, hi = self._coefficient_box([0] * self.d, [radius] * self.d, norm)
        best = self._search(lo, hi, self.cols, None, norm, best, skip_zero=True)
        return self._value(best[0], norm, self.den), self._out(best[1], self.den)

    def closest(self, offset: Sequence, norm: str = SUP):
        """``(value, point)`` minimizing ``|a_t p|`` over the grid ``x + offset``."""
        check_norm(norm)
        self._check_dim()
        den = math.lcm(self.den, _common_denominator(offset))
        f = den // self.den
        cols = [[a * f for a in c] for c in self.cols]
        off = [int(_as_fraction(v) * den) for v in offset]
        target = [-a for a in self._emb(off)]
        c0, _, _ = self._coefficient_box(target, [0] * self.d, norm, scale_by=f)
        babai = self._combine([int(MP.nint(c)) for c in c0], cols, base=off)
        best = (self._key(self._emb(babai), norm), babai)
        radius = best[0] if norm == SUP else MP.sqrt(best[0])
        _, lo, hi = self._coefficient_box(target, [radius] * self.d, norm, scale_by=f)
        best = self._search(lo, hi, cols, off, norm, best, skip_zero=False)
        return self._value(best[0], norm, den), self._out(best[1], den)

    def points_in_box(self, center: Sequence[float], half: Sequence[float],
                      base: Sequence | None = None) -> list[tuple]:
        """Exact vectors ``v`` (lattice, or ``base`` + lattice) whose flowed image
        satisfies ``|(a_t v)_j - center_j| <= half_j`` for every j."""
        self._check_dim()
        den = self.den if base is None else math.lcm(self.den, _common_denominator(base))
        f = den // self.den
        cols = [[a * f for a in c] for c in self.cols]
        off = [0] * self.d if base is None else [int(_as_fraction(v) * den) for v in base]
        ctr = [MP.mpf(c) * den for c in center]
        hlf = [MP.mpf(h) * den for h in half]
        shift = [c - e for c, e in zip(ctr, self._emb(off))]
        _, lo, hi = self._coefficient_box(shift, hlf, SUP, scale_by=f)
        axis, rest, prefixes = self._lines(lo, hi)
        E = self._emb(cols[axis])
        out = []
        for pre in prefixes:
            coeffs = [0] * self.d
            for i, c in zip(rest, pre):
                coeffs[i] = c
            p = self._emb(self._combine(coeffs, cols, base=off))
            c_lo, c_hi = lo[axis], hi[axis]
            for j in range(self.d):
                if E[j] == 0:
                    if abs(p[j] - ctr[j]) > hlf[j]:
                        c_lo, c_hi = 1, 0
                    continue
                u = (ctr[j] - hlf[j] - p[j]) / E[j]
                w = (ctr[j] + hlf[j] - p[j]) / E[j]
                if u > w:
                    u, w = w, u
                c_lo = max(c_lo, int(MP.floor(u)) - 1)
                c_hi = min(c_hi, int(MP.ceil(w)) + 1)
            for c in range(c_lo, c_hi + 1):
                coeffs[axis] = c
                v = self._combine(coeffs, cols, base=off)
                e = self._emb(v)
                if all(abs(e[j] - ctr[j]) <= hlf[j] for j in range(self.d)):
                    out.append(self._out(v, den))
        return out

# --------------------------------------------------------------------------
# Public operations


def gauss_reduce(basis: Sequence[Sequence]) -> tuple[tuple, tuple]:
    """Lagrange-Gauss reduction of a 2x2 basis (columns are basis vectors).

    Returns the reduced basis as a row-major matrix of the same scalar type.
    """
    rows = [list(r) for r in basis]
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ValueError("gauss_reduce expects a 2x2 matrix")
    exact = all(isinstance(v, (Fraction, int)) for r in rows for v in r)
    conv = _as_fraction if exact else float
    b1 = [conv(rows[0][0]), conv(rows[1][0])]
    b2 = [conv(rows[0][1]), conv(rows[1][1])]
    det = b1[0] * b2[1] - b1[1] * b2[0]
    if det == 0 or (not exact and abs(det) < 1e-14):
        raise SingularBasis(f"|det| = {abs(det)!r}")

    def sq(v):
        return v[0] * v[0] + v[1] * v[1]

    if sq(b1) > sq(b2):
        b1, b2 = b2, b1
    for _ in range(10_000):
        mu = (b1[0] * b2[0] + b1[1] * b2[1]) / sq(b1)
        r = round(mu) if isinstance(mu, Fraction) else int(round(mu))
        if r:
            b2 = [b2[0] - r * b1[0], b2[1] - r * b1[1]]
        if sq(b2) >= sq(b1):
            break
        b1, b2 = b2, b1
    return ((b1[0], b2[0]), (b1[1], b2[1]))


def lambda1(x: Lattice, norm: str = SUP):
    """Length of a shortest nonzero vector (Fraction for rational kind, sup norm)."""
    return FlowedLattice(x).shortest(norm)[0]


def lambda1_vector(x: Lattice, norm: str = SUP) -> tuple:
    return FlowedLattice(x).shortest(norm)[1]


def sigma(y: Grid, norm: str = SUP):
    """Length of a shortest vector of the grid ``y``."""
    return FlowedLattice(y.lattice).closest(y.offset, norm)[0]


def sigma_vector(y: Grid, norm: str = SUP) -> tuple:
    return FlowedLattice(y.lattice).closest(y.offset, norm)[1]


def lambda1_at(flow: FlowSpec, x: Lattice, t: float, norm: str = SUP) -> float:
    """``lambda1(a_t x)`` evaluated in the log domain (no overflow for any t)."""
    return float(FlowedLattice(x, flow, t).shortest(norm)[0])


def log_lambda1_at(flow: FlowSpec, x: Lattice, t: float, norm: str = SUP) -> float:
    """``log lambda1(a_t x)``; finite even when the value underflows float64."""
    return log_abs(FlowedLattice(x, flow, t).shortest(norm)[0])


def sigma_at(flow: FlowSpec, y: Grid, t: float, norm: str = SUP) -> float:
    return float(FlowedLattice(y.lattice, flow, t).closest(y.offset, norm)[0])


def apply_flow(flow: FlowSpec, t: float, obj):
    """Apply ``a_t`` to a Lattice, Grid or point.

    Rational lattices flowed by ``t != 0`` come back as float-kind lattices;
    use :class:`FlowedLattice` for exact large-``t`` work.
    """
    if t == 0:
        return obj
    f = flow.factors(t)
    if isinstance(obj, Lattice):
        if obj.d != flow.d:
            raise ValueError("dimension mismatch")
        b = obj.as_float() * f[:, None]
        return Lattice(tuple(tuple(r) for r in b), "float")
    if isinstance(obj, Grid):
        lat = apply_flow(flow, t, obj.lattice)
        off = np.array([float(v) for v in obj.offset]) * f
        return Grid(lat, tuple(off))
    p = np.asarray(obj, dtype=float)
    if p.shape[-1] != flow.d:
        raise ValueError("dimension mismatch")
    return p * f


def _coordinate_times(c: float, p: float, l: float, u: float) -> Interval | None:
    """Times ``t`` (any sign) with ``l < e^{c t} p < u``; None when empty."""
    if p == 0:
        return Interval(-math.inf, math.inf) if l < 0 < u else None
    a, b = sorted((l / p, u / p))
    # need a < e^{ct} < b
    if b <= 0:
        return None
    lo_s = math.log(a) if a > 0 else -math.inf
    hi_s = math.log(b)
    if c > 0:
        return Interval(lo_s / c, hi_s / c)
    return Interval(hi_s / c, lo_s / c if a > 0 else math.inf)


def hit_times(flow: FlowSpec, p: Sequence[float], region: BoxRegion) -> IntervalSet:
    """The open set ``{t > 0 : a_t p in O}`` in closed form."""
    p = [float(v) for v in p]
    if len(p) != flow.d or region.d != flow.d:
        raise ValueError("dimension mismatch")
    pieces = []
    for box in region.boxes:
        iv = Interval(0.0, math.inf)
        for j, (l, u) in enumerate(box):
            cj = _coordinate_times(flow.c[j], p[j], l, u)
            if cj is None:
                iv = None
                break
            iv = iv.intersect(cj)
            if iv.is_empty():
                iv = None
                break
        if iv is not None:
            pieces.append(iv)
    return IntervalSet(pieces)


def spike_box(flow: FlowSpec, region: BoxRegion, t_max: float) -> np.ndarray:
    """Per-coordinate radius of a box containing every ``a_t^{-1} O``, ``0 < t <= t_max``."""
    ext = np.array(region.extent())
    return ext * np.maximum(1.0, np.exp(-np.asarray(flow.c) * t_max))


def _grid_float(y: Grid) -> tuple[np.ndarray, np.ndarray]:
    return y.lattice.as_float(), np.array([float(v) for v in y.offset])


def enumerate_grid_box(y: Grid, radius: Sequence[float], budget: float = 1e8):
    """All grid points ``p`` with ``|p_j| < radius_j``; returns (points, coeffs)."""
    b, w = _grid_float(y)
    radius = np.asarray(radius, dtype=float)
    binv = np.linalg.inv(b)
    c0 = binv @ (-w)
    rad = np.abs(binv) @ radius * (1 + 1e-9) + 1e-9
    lo = np.ceil(c0 - rad).astype(np.int64)
    hi = np.floor(c0 + rad).astype(np.int64)
    sizes = np.maximum(hi - lo + 1, 0)
    total = float(np.prod(sizes.astype(float)))
    if total > budget:
        raise EnumerationTooLarge(f"certified coefficient box has {total:.3g} cells > {budget:.3g}")
    d = y.d
    pts_out, co_out = [], []
    if total == 0:
        return np.zeros((0, d)), np.zeros((0, d), dtype=np.int64)
    last = np.arange(lo[-1], hi[-1] + 1)
    for head in itertools.product(*[range(int(a), int(h) + 1) for a, h in zip(lo[:-1], hi[:-1])]):
        coeffs = np.empty((len(last), d), dtype=np.int64)
        coeffs[:, :-1] = head
        coeffs[:, -1] = last
        pts = coeffs @ b.T + w
        keep = np.all(np.abs(pts) < radius, axis=1)
        if keep.any():
            pts_out.append(pts[keep])
            co_out.append(coeffs[keep])
    if not pts_out:
        return np.zeros((0, d)), np.zeros((0, d), dtype=np.int64)
    return np.vstack(pts_out), np.vstack(co_out)


def grid_spike_points(flow: FlowSpec, y: Grid, region: BoxRegion, t_max: float,
                      budget: float = 1e8) -> list[tuple[LayeredPoint, IntervalSet]]:
    """Every grid point entering ``O`` at some ``t in (0, t_max]``, with its hit times."""
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    radius = spike_box(flow, region, t_max)
    pts, coeffs = enumerate_grid_box(y, radius, budget)
    out = []
    for p, c in zip(pts, coeffs):
        hits = hit_times(flow, p, region).restrict(0.0, t_max, False, True)
        if hits:
            out.append((LayeredPoint(tuple(float(v) for v in p), int(c[-1]),
                                     tuple(int(v) for v in c)), hits))
    return out
