"""Finite unions of real intervals with exact Lebesgue measure.

Endpoints may be infinite. Open/closed flags are kept for bookkeeping but
never affect the measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = False

    @property
    def length(self) -> float:
        return max(self.hi - self.lo, 0.0)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def contains(self, x: float) -> bool:
        above = x > self.lo or (self.lo_closed and x == self.lo)
        below = x < self.hi or (self.hi_closed and x == self.hi)
        return above and below


class IntervalSet:
    """Sorted, pairwise disjoint intervals.

    Adjacent or overlapping input intervals are merged on construction.
    """

    def __init__(self, intervals: Iterable[Interval] = ()):
        items = sorted((iv for iv in intervals if iv.hi > iv.lo), key=lambda iv: (iv.lo, iv.hi))
        merged: list[Interval] = []
        for iv in items:
            if merged and iv.lo <= merged[-1].hi:
                last = merged[-1]
                if iv.hi > last.hi:
                    merged[-1] = Interval(last.lo, iv.hi, last.lo_closed, iv.hi_closed)
                elif iv.hi == last.hi and iv.hi_closed:
                    merged[-1] = Interval(last.lo, last.hi, last.lo_closed, True)
            else:
                merged.append(iv)
        self.intervals: tuple[Interval, ...] = tuple(merged)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> "IntervalSet":
        return cls(Interval(float(a), float(b)) for a, b in pairs)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __repr__(self):
        body = ", ".join(f"[{iv.lo:g}, {iv.hi:g})" for iv in self.intervals)
        return f"IntervalSet({body})"

    def __eq__(self, other):
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return [(i.lo, i.hi) for i in self] == [(i.lo, i.hi) for i in other]

    @property
    def measure(self) -> float:
        return math.fsum(iv.length for iv in self.intervals)

    def contains(self, x: float) -> bool:
        return any(iv.contains(x) for iv in self.intervals)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        a, b = self.intervals, other.intervals
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i].lo, b[j].lo)
            hi = min(a[i].hi, b[j].hi)
            if hi > lo:
                lo_c = a[i].lo_closed if a[i].lo >= b[j].lo else b[j].lo_closed
                hi_c = a[i].hi_closed if a[i].hi <= b[j].hi else b[j].hi_closed
                out.append(Interval(lo, hi, lo_c, hi_c))
            if a[i].hi < b[j].hi:
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def clip(self, lo: float, hi: float) -> "IntervalSet":
        return self.intersect(IntervalSet([Interval(lo, hi)]))

    def map_increasing(self, f: Callable[[float], float]) -> "IntervalSet":
        """Image under a strictly increasing continuous map."""
        return IntervalSet(
            Interval(f(iv.lo), f(iv.hi), iv.lo_closed, iv.hi_closed) for iv in self.intervals
        )
