"""Finite unions of real intervals with explicit endpoint closedness."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        if self.lo == self.hi:
            return not (self.lo_closed and self.hi_closed)
        return False

    def contains(self, x) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.lo_closed:
            return False
        if x == self.hi and not self.hi_closed:
            return False
        return True

    @property
    def length(self):
        return max(self.hi - self.lo, 0)

    def intersect(self, other: "Interval") -> "Interval":
        if self.lo > other.lo:
            lo, lo_closed = self.lo, self.lo_closed
        elif self.lo < other.lo:
            lo, lo_closed = other.lo, other.lo_closed
        else:
            lo, lo_closed = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hi_closed = self.hi, self.hi_closed
        elif self.hi > other.hi:
            hi, hi_closed = other.hi, other.hi_closed
        else:
            hi, hi_closed = self.hi, self.hi_closed and other.hi_closed
        return Interval(lo, hi, lo_closed, hi_closed)

    def to_dict(self) -> dict:
        return {"lo": _enc(self.lo), "hi": _enc(self.hi),
                "lo_closed": self.lo_closed, "hi_closed": self.hi_closed}


def _enc(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def open_interval(lo, hi) -> Interval:
    return Interval(lo, hi, False, False)


def closed_interval(lo, hi) -> Interval:
    return Interval(lo, hi, math.isfinite(lo), math.isfinite(hi))


class IntervalSet:
    """Sorted, disjoint, normalized union of intervals (immutable)."""

    __slots__ = ("_items",)

    def __init__(self, intervals: Iterable[Interval] = ()):
        items = sorted((iv for iv in intervals if not iv.is_empty()),
                       key=lambda iv: (iv.lo, not iv.lo_closed))
        merged: list[Interval] = []
        for iv in items:
            if merged:
                last = merged[-1]
                touching = iv.lo < last.hi or (
                    iv.lo == last.hi and (last.hi_closed or iv.lo_closed))
                if touching:
                    if iv.hi > last.hi:
                        hi, hi_closed = iv.hi, iv.hi_closed
                    elif iv.hi < last.hi:
                        hi, hi_closed = last.hi, last.hi_closed
                    else:
                        hi, hi_closed = last.hi, last.hi_closed or iv.hi_closed
                    merged[-1] = Interval(last.lo, hi, last.lo_closed, hi_closed)
                    continue
            merged.append(iv)
        self._items = tuple(merged)

    @property
    def intervals(self) -> tuple[Interval, ...]:
        return self._items

    def __iter__(self) -> Iterator[Interval]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalSet) and self._items == other._items

    def __repr__(self) -> str:
        parts = []
        for iv in self._items:
            parts.append(f"{'[' if iv.lo_closed else '('}{iv.lo}, {iv.hi}{']' if iv.hi_closed else ')'}")
        return "IntervalSet(" + " U ".join(parts) + ")"

    def is_empty(self) -> bool:
        return not self._items

    def contains(self, x) -> bool:
        return any(iv.contains(x) for iv in self._items)

    def measure(self):
        return sum((iv.length for iv in self._items), 0)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self._items + other._items)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        a, b = self._items, other._items
        i = j = 0
        while i < len(a) and j < len(b):
            iv = a[i].intersect(b[j])
            if not iv.is_empty():
                out.append(iv)
            if a[i].hi < b[j].hi or (a[i].hi == b[j].hi and not a[i].hi_closed):
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    def restrict(self, lo, hi, lo_closed=True, hi_closed=True) -> "IntervalSet":
        return self.intersection(IntervalSet([Interval(lo, hi, lo_closed, hi_closed)]))

    def complement(self, lo, hi, lo_closed=True, hi_closed=True) -> "IntervalSet":
        """Complement of the set inside the window (lo, hi) with given closedness."""
        out = []
        cur, cur_closed = lo, lo_closed
        for iv in self.restrict(lo, hi, lo_closed, hi_closed):
            out.append(Interval(cur, iv.lo, cur_closed, not iv.lo_closed))
            cur, cur_closed = iv.hi, not iv.hi_closed
        out.append(Interval(cur, hi, cur_closed, hi_closed))
        return IntervalSet(out)

    def to_list(self) -> list[dict]:
        return [iv.to_dict() for iv in self._items]
