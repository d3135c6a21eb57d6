"""Correlation and regression quantities of a pair of evaluation points.

Two routes give the same numbers:

* :func:`pair_stats_literal` builds the normalized kernel r and its
  partial derivatives from k, k', k'' and plugs them into the regression
  formulas term by term.
* :func:`regress_same` / :func:`regress_cross` (vectorized, used by the
  integrators) condition (P(x), P[x, y]) on zero with a Cholesky factor of
  the Gram matrix of Newton divided-difference coordinates.  This keeps
  1 - r^2 and 1 - delta^2 accurate as y -> x, where the literal formulas
  lose all digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DiagonalPair, InvalidSpec, NumericalDegeneracy


@dataclass(frozen=True)
class PairStats:
    x: float
    y: float
    r: float
    r10: float
    r01: float
    r11xy: float
    r11xx: float
    r11yy: float
    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    delta: float
    nu1: float
    nu2: float
    E: float
    one_minus_r2: float = math.nan
    one_minus_delta2: float = math.nan
    meta: dict = field(default_factory=dict, compare=False)

    def swapped(self):
        return PairStats(self.y, self.x, self.r, self.r01, self.r10, self.r11xy, self.r11yy,
                         self.r11xx, self.mu2, self.mu1, self.sigma2, self.sigma1, self.delta,
                         self.nu2, self.nu1, self.E, self.one_minus_r2, self.one_minus_delta2,
                         dict(self.meta))


@dataclass
class Regression:
    """Vectorized regression output; all fields are arrays over pairs."""
    mu1: np.ndarray
    mu2: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    delta: np.ndarray
    q: np.ndarray  # 1 - delta^2
    logE: np.ndarray
    omr2: np.ndarray  # 1 - r^2
    r: np.ndarray

    def take(self, idx):
        return Regression(*(getattr(self, f)[idx] for f in self.__dataclass_fields__))


_IDX = {(0, 0): 0, (0, 1): 1, (0, 2): 2, (0, 3): 3, (1, 1): 4, (1, 2): 5, (1, 3): 6,
        (2, 2): 7, (2, 3): 8, (3, 3): 9}


def _condition(g):
    """Condition coordinates 2, 3 on coordinates 0, 1 of a Gaussian vector.

    ``g`` is the (N, 15) Gram/mean layout.  Returns conditional means
    (m2, m3), covariance (S22, S23, S33), det of the 0/1 block, and the
    Mahalanobis norm of the 0/1 mean.
    """
    G = lambda a, b: g[:, _IDX[(a, b)]]
    with np.errstate(all="ignore"):
        l00 = np.sqrt(G(0, 0))
        l10 = G(0, 1) / l00
        l11sq = G(1, 1) - l10 * l10
        l11 = np.sqrt(np.maximum(l11sq, 0.0))
        b20 = G(0, 2) / l00
        b21 = (G(1, 2) - b20 * l10) / l11
        b30 = G(0, 3) / l00
        b31 = (G(1, 3) - b30 * l10) / l11
        S22 = G(2, 2) - b20 * b20 - b21 * b21
        S23 = G(2, 3) - b20 * b30 - b21 * b31
        S33 = G(3, 3) - b30 * b30 - b31 * b31
        z0 = g[:, 10] / l00
        z1 = (g[:, 11] - l10 * z0) / l11
        m2 = g[:, 12] - (b20 * z0 + b21 * z1)
        m3 = g[:, 13] - (b30 * z0 + b31 * z1)
    detL = (l00 * l11) ** 2
    return m2, m3, S22, S23, S33, detL, z0 * z0 + z1 * z1, l11sq


def _finish(mD1, mD2, C11, C12, C22, q, sx, sy, omr2, maha, r):
    with np.errstate(all="ignore"):
        s1 = np.sqrt(np.maximum(C11, 0.0) / sx)
        s2 = np.sqrt(np.maximum(C22, 0.0) / sy)
        delta = np.clip(C12 / np.sqrt(C11 * C22), -1.0, 1.0)
        mu1 = mD1 / np.sqrt(sx)
        mu2 = mD2 / np.sqrt(sy)
    q = np.clip(q, 0.0, 1.0)
    return Regression(mu1, mu2, s1, s2, delta, q, -0.5 * maha, omr2, r)


def regress_same(ctx, x, y):
    """Regression of (G'(x), G'(y)) on G(x) = G(y) = 0 for one process."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    g = ctx.gram_same(x, y)
    h = y - x
    m2, m3, S22, S23, S33, detL, maha, _ = _condition(g)
    sx, sy = g[:, 0], g[:, 14]
    # on the event P(x) = P[x,y] = 0: P'(x) = -h Y2, P'(y) = h (Y2 + h Y3)
    C11 = h * h * S22
    C12 = -h * h * (S22 + h * S23)
    C22 = h * h * (S22 + 2.0 * h * S23 + h * h * S33)
    mD1 = -h * m2
    mD2 = h * (m2 + h * m3)
    detS = S22 * S33 - S23 * S23
    with np.errstate(all="ignore"):
        q = h * h * detS / (S22 * (S22 + 2.0 * h * S23 + h * h * S33))
        omr2 = h * h * detL / (sx * sy)
        r = g[:, 1] * h / np.sqrt(sx * sy) + g[:, 0] / np.sqrt(sx * sy)
    q = np.where(np.isfinite(q), q, 0.0)
    return _finish(mD1, mD2, C11, C12, C22, q, sx, sy, omr2, maha, r)


def regress_cross(ctx, x, w):
    """Regression for the pair (G(x), G*(w)): P at x and the reciprocal polynomial at w."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    g = ctx.gram_cross(x, w)
    m2, m3, S22, S23, S33, detL, maha, _ = _condition(g)
    sx, sy = g[:, 0], g[:, 4]
    with np.errstate(all="ignore"):
        q = (S22 * S33 - S23 * S23) / (S22 * S33)
        omr2 = detL / (sx * sy)
        r = g[:, 1] / np.sqrt(sx * sy)
    return _finish(m2, m3, S22, S23, S33, q, sx, sy, omr2, maha, r)


# ---------------------------------------------------------------- literal route

def kernel_partials(ctx, x, y):
    """r and its partial derivatives r10, r01, r11(x,y), r11(x,x), r11(y,y)."""
    A, A1, A2 = (float(v[0]) for v in ctx.k_all(x * y))
    B, B1, B2 = (float(v[0]) for v in ctx.k_all(x * x))
    C, C1, C2 = (float(v[0]) for v in ctx.k_all(y * y))
    Ax, Ay = y * A1, x * A1
    Axy = A1 + x * y * A2
    Bx, Cy = 2.0 * x * B1, 2.0 * y * C1
    sB, sC = math.sqrt(B), math.sqrt(C)
    r = A / (sB * sC)
    r10 = Ax / (sB * sC) - A * Bx / (2.0 * B * sB * sC)
    r01 = Ay / (sB * sC) - A * Cy / (2.0 * C * sC * sB)
    r11xy = (Axy / (sB * sC) - Ax * Cy / (2.0 * sB * C * sC) - Ay * Bx / (2.0 * B * sB * sC)
             + A * Bx * Cy / (4.0 * B * sB * C * sC))
    ax = B * (B1 + x * x * B2) - (x * B1) ** 2
    ay = C * (C1 + y * y * C2) - (y * C1) ** 2
    return r, r10, r01, r11xy, ax / (B * B), ay / (C * C)


def pair_stats_literal(ctx, x, y):
    """Regression quantities from the kernel partials, formula by formula."""
    r, r10, r01, r11xy, r11xx, r11yy = kernel_partials(ctx, x, y)
    (mx,), (dmx,) = ctx.mean_normalized(x)
    (my,), (dmy,) = ctx.mean_normalized(y)
    omr2 = 1.0 - r * r
    mu1 = dmx + r * r10 / omr2 * mx - r10 / omr2 * my
    mu2 = dmy + r * r01 / omr2 * my - r01 / omr2 * mx
    s1sq = r11xx - r10 * r10 / omr2
    s2sq = r11yy - r01 * r01 / omr2
    for val, nm in ((s1sq, "sigma1^2"), (s2sq, "sigma2^2")):
        if not val > 0:
            raise NumericalDegeneracy(f"{nm} = {val!r} not positive", residual=val, where=(x, y))
    s1, s2 = math.sqrt(s1sq), math.sqrt(s2sq)
    delta = (r11xy + r * r10 * r01 / omr2) / (s1 * s2)
    E = math.exp(-(mx * mx - 2.0 * r * mx * my + my * my) / (2.0 * omr2))
    return PairStats(x, y, r, r10, r01, r11xy, r11xx, r11yy, mu1, mu2, s1, s2, delta,
                     mu1 / s1, mu2 / s2, E, omr2, 1.0 - delta * delta, {"route": "literal"})


def _check_pair(x, y, outer=1.0):
    if x == y:
        raise DiagonalPair(f"pair statistics need x != y (got {x!r})")
    if not (abs(x) < outer and abs(y) < outer):
        raise InvalidSpec("pair points must lie in (-1, 1); route exterior points through cross_kernel")


def pair_stats(ctx, x, y):
    """PairStats of (x, y), both in (-1, 1).

    Kernel partials come from the literal route; the regression block
    (mu, sigma, delta, E, 1 - r^2, 1 - delta^2) from the stable route.
    """
    x, y = float(x), float(y)
    _check_pair(x, y)
    r, r10, r01, r11xy, r11xx, r11yy = kernel_partials(ctx, x, y)
    reg = regress_same(ctx, x, y)
    return _to_stats(x, y, reg, (r, r10, r01, r11xy, r11xx, r11yy), "divided-difference")


def _to_stats(x, y, reg, partials, route):
    s1, s2 = float(reg.s1[0]), float(reg.s2[0])
    for val, nm in ((s1, "sigma1"), (s2, "sigma2")):
        if not val > 0:
            raise NumericalDegeneracy(f"{nm} vanished after conditioning", residual=val, where=(x, y))
    mu1, mu2 = float(reg.mu1[0]), float(reg.mu2[0])
    return PairStats(x, y, *partials, mu1, mu2, s1, s2, float(reg.delta[0]), mu1 / s1, mu2 / s2,
                     math.exp(float(reg.logE[0])), float(reg.omr2[0]), float(reg.q[0]),
                     {"route": route})


def cross_kernel(ctx, x, w):
    """PairStats of (G(x), G*(w)) for the pair (x, y = 1/w), computed in w.

    Every sum involves only powers of |x|, |w| < 1.  The kernel partials are
    those of the normalized cross covariance
    r(x, w) = sum v_j^2 x^j w^(n-j) / sqrt(k(x^2) k*(w^2)).
    """
    x, w = float(x), float(w)
    if not (abs(x) < 1.0 and 0.0 < abs(w) < 1.0):
        raise InvalidSpec("cross_kernel needs |x| < 1 and 0 < |w| < 1")
    reg = regress_cross(ctx, x, w)
    partials = cross_partials(ctx, x, w)
    return _to_stats(x, w, reg, partials, "cross")


def cross_partials(ctx, x, w):
    """Normalized cross kernel and its partials in (x, w)."""
    n = ctx.n
    j = np.arange(n + 1)
    v2 = ctx.v2
    xp = x ** j
    wp = w ** (n - j)
    dxp = np.where(j > 0, j * x ** np.maximum(j - 1, 0), 0.0)
    dwp = np.where(j < n, (n - j) * w ** np.maximum(n - j - 1, 0), 0.0)
    A = math.fsum(v2 * xp * wp)
    Ax = math.fsum(v2 * dxp * wp)
    Aw = math.fsum(v2 * xp * dwp)
    Axw = math.fsum(v2 * dxp * dwp)
    B, B1, B2 = (float(v[0]) for v in ctx.k_all(x * x))
    C, C1, C2 = (float(v[0]) for v in ctx.star.k_all(w * w))
    Bx, Cw = 2.0 * x * B1, 2.0 * w * C1
    sB, sC = math.sqrt(B), math.sqrt(C)
    r = A / (sB * sC)
    r10 = Ax / (sB * sC) - A * Bx / (2.0 * B * sB * sC)
    r01 = Aw / (sB * sC) - A * Cw / (2.0 * C * sC * sB)
    r11 = (Axw / (sB * sC) - Ax * Cw / (2.0 * sB * C * sC) - Aw * Bx / (2.0 * B * sB * sC)
           + A * Bx * Cw / (4.0 * B * sB * C * sC))
    ax = B * (B1 + x * x * B2) - (x * B1) ** 2
    aw = C * (C1 + w * w * C2) - (w * C1) ** 2
    return r, r10, r01, r11, ax / (B * B), aw / (C * C)


def pseudo_hyperbolic(x, y):
    """Pseudo-hyperbolic distance rho = |x - y|/|1 - x y| and alpha = 1 - rho^2."""
    rho = abs(x - y) / abs(1.0 - x * y)
    # 1 - rho^2 = (1 - x^2)(1 - y^2)/(1 - x y)^2 without cancellation
    alpha = (1.0 - x * x) * (1.0 - y * y) / (1.0 - x * y) ** 2
    # rounding can overshoot the exact bound alpha <= 1 (equality at x = y)
    return rho, min(alpha, 1.0)
