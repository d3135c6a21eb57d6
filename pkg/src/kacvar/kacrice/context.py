"""Variance and mean evaluators of a coefficient profile."""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .. import _backend


def _pts(x):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=float)))


def _poly_and_derivs(c, x, order):
    """Values of sum c_j x^j and its first ``order`` derivatives (order <= 2)."""
    x = _pts(x)
    val, der = _backend.horner(c, x)
    out = [val, der]
    if order >= 2:
        dc = c[1:] * np.arange(1, len(c)) if len(c) > 1 else np.zeros(1)
        _, d2 = _backend.horner(dc, x)
        out.append(d2)
    return out[: order + 1]


class KernelContext:
    """Immutable evaluator bundle for one profile.

    ``k(u) = sum v_j^2 u^j`` is the variance function, so ``k(x^2)`` is the
    variance of P(x); ``M(x) = sum m_j x^j`` is the mean.  ``star`` is the
    context of the reciprocal polynomial ``x^n P(1/x)`` used on ``|x| > 1``.
    """

    def __init__(self, profile):
        self.profile = profile
        self.n = int(profile.n)
        self.v2 = np.array(profile.v, dtype=float) ** 2
        self.m = np.array(profile.m, dtype=float)
        self.centered = not np.any(self.m)

    @cached_property
    def star(self):
        return KernelContext(self.profile.reversed())

    # variance function and derivatives in u
    def k(self, u):
        return _poly_and_derivs(self.v2, u, 0)[0]

    def dk(self, u):
        return _poly_and_derivs(self.v2, u, 1)[1]

    def d2k(self, u):
        return _poly_and_derivs(self.v2, u, 2)[2]

    def k_all(self, u):
        return _poly_and_derivs(self.v2, u, 2)

    # mean and derivatives in x
    def M(self, x):
        return _poly_and_derivs(self.m, x, 0)[0]

    def M_all(self, x):
        return _poly_and_derivs(self.m, x, 2)

    def point_sums(self, x):
        """Columns [Var P, Cov(P, P'), Var P', M, M', M''] at each x."""
        return _backend.point_sums(self.v2, self.m, _pts(x))

    def gram_same(self, x, y):
        return _backend.gram_same(self.v2, self.m, _pts(x), _pts(y), not self.centered)

    def gram_cross(self, x, w):
        return _backend.gram_cross(self.v2, self.m, _pts(x), _pts(w), not self.centered)

    def mean_normalized(self, x):
        """m(x) = M/sqrt(k(x^2)) and its derivative m'(x)."""
        s = self.point_sums(x)
        A, B = s[:, 0], s[:, 1]
        M, dM = s[:, 3], s[:, 4]
        sq = np.sqrt(A)
        return M / sq, dM / sq - M * B / (A * sq)
