"""Core/exterior decomposition of the real line and domination diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidSpec
from ..region import INF, Interval, Region


@dataclass(frozen=True)
class RegionScheme:
    """Core annuli +-[1 - a, 1 - b) and their reciprocals.

    ``a = exp(-(ln n)^(d/4))`` and ``b = B/n``.  The four regions
    ``Bulk``, ``CoreIn``, ``NearUnit`` and ``CoreOut`` partition the line.
    """

    n: int
    a_n: float
    b_n: float
    B: float = 20.0
    d: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.b_n < self.a_n < 1.0):
            raise InvalidSpec(f"region scheme needs 0 <= b_n < a_n < 1 (n={self.n}, a_n={self.a_n:.4g}, "
                              f"b_n={self.b_n:.4g})")
        if not self.B > 0:
            raise InvalidSpec("B must be positive")

    @classmethod
    def build(cls, n, B=20.0, d=1.0):
        a = math.exp(-math.log(n) ** (d / 4.0)) if n > 1 else 1.0
        return cls(n=int(n), a_n=a, b_n=B / n, B=B, d=d)

    @staticmethod
    def is_valid(n, B=20.0, d=1.0):
        try:
            RegionScheme.build(n, B, d)
        except InvalidSpec:
            return False
        return True

    @property
    def core_in(self):
        lo, hi = 1.0 - self.a_n, 1.0 - self.b_n
        return Region((Interval(-hi, -lo, False, True), Interval(lo, hi, True, False)), tag="CoreIn")

    @property
    def core_out(self):
        lo, hi = 1.0 / (1.0 - self.b_n), 1.0 / (1.0 - self.a_n)
        return Region((Interval(-hi, -lo, True, False), Interval(lo, hi, False, True)), tag="CoreOut")

    @property
    def core(self):
        return Region(self.core_in.intervals + self.core_out.intervals, tag="Core")

    @property
    def near_unit(self):
        lo, hi = 1.0 - self.b_n, 1.0 / (1.0 - self.b_n)
        return Region((Interval(-hi, -lo, True, True), Interval(lo, hi, True, True)), tag="NearUnit")

    @property
    def bulk(self):
        lo, hi = 1.0 - self.a_n, 1.0 / (1.0 - self.a_n)
        return Region((Interval(-INF, -hi, False, False), Interval(-lo, lo, False, False),
                       Interval(hi, INF, False, False)), tag="Bulk")

    def region_list(self):
        return [self.bulk, self.core_in, self.near_unit, self.core_out]

    def to_dict(self):
        return {"n": self.n, "a_n": self.a_n, "b_n": self.b_n, "B": self.B, "d": self.d}


def domination_margin(ctx, x, i=0):
    """|M^(i)(x)| / sqrt(Var R^(i)(x)) for derivative order i in {0, 1, 2}.

    For |x| > 1 pass the reciprocal context and w = 1/x.
    """
    if i not in (0, 1, 2):
        raise InvalidSpec("derivative order must be 0, 1 or 2")
    x = float(x)
    j = np.arange(ctx.n + 1, dtype=float)
    fall = np.ones_like(j)
    for k in range(i):
        fall = fall * (j - k)
    keep = j >= i
    pw = np.where(keep, x ** np.maximum(j - i, 0), 0.0)
    var = math.fsum(ctx.v2 * (fall * pw) ** 2)
    mean = math.fsum(ctx.m * fall * pw)
    if var <= 0:
        return math.inf if mean else 0.0
    return abs(mean) / math.sqrt(var)


def dominance_factor(x, n, C=1.0):
    """C |log(1 - |x| + 1/n)|^(1/2), the factor a dominating mean must exceed."""
    return C * math.sqrt(abs(math.log(1.0 - abs(x) + 1.0 / n)))


def dominated_factor(x, n, C=1.0, theta=0.5):
    """C (1 - |x| + 1/n)^theta, the factor a dominated mean stays below."""
    return C * (1.0 - abs(x) + 1.0 / n) ** theta
