"""Subsets of the real line used to bucket real roots.

A :class:`Region` is a sorted union of disjoint intervals.  Endpoints may be
infinite; each endpoint carries its own closedness so that point masses at
0 and at +-1 (which occur for lattice-valued coefficients) are attributed
unambiguously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidSpec

INF = math.inf


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    closed_lo: bool = True
    closed_hi: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidSpec(f"interval needs lo < hi, got ({self.lo}, {self.hi})")

    def contains(self, p):
        if self.lo < p < self.hi:
            return True
        if p == self.lo:
            return self.closed_lo and math.isfinite(p)
        if p == self.hi:
            return self.closed_hi and math.isfinite(p)
        return False

    def overlaps(self, other):
        return self.lo < other.hi and other.lo < self.hi


@dataclass(frozen=True)
class Region:
    intervals: tuple
    tag: str | None = None

    def __post_init__(self):
        ivs = tuple(sorted(self.intervals, key=lambda iv: (iv.lo, iv.hi)))
        for a, b in zip(ivs, ivs[1:]):
            if a.hi > b.lo or (a.hi == b.lo and a.closed_hi and b.closed_lo):
                raise InvalidSpec("region intervals must be pairwise disjoint")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def of(cls, *pairs, tag=None):
        """Region from (lo, hi) pairs, half-open [lo, hi)."""
        return cls(tuple(Interval(float(lo), float(hi)) for lo, hi in pairs), tag=tag)

    def contains(self, p):
        return any(iv.contains(p) for iv in self.intervals)

    def breakpoints(self):
        out = set()
        for iv in self.intervals:
            out.add(iv.lo)
            out.add(iv.hi)
        return sorted(p for p in out if math.isfinite(p))

    @property
    def name(self):
        if self.tag:
            return self.tag
        return "U".join(f"[{iv.lo:g},{iv.hi:g})" for iv in self.intervals)


FULL_LINE = Region((Interval(-INF, INF, False, False),), tag="FullLine")
POS_AXIS = Region((Interval(0.0, INF, False, False),), tag="PosAxis")
NEG_AXIS = Region((Interval(-INF, 0.0, False, False),), tag="NegAxis")
