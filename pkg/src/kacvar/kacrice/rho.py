"""One- and two-point correlation functions of the real roots.

The two-point function of the normalized process is

    rho2 = E / (pi^2 sqrt(1 - r^2)) * (rho21 + ... + rho25)

with the five terms built from the conditional law of (G'(x), G'(y)).
Two evaluators of the inner integrals are provided:

* ``"gl"``: every term as a Gauss-Legendre sum on [0, 1] (tensor rule for
  the double integral), error by order doubling.  The base order doubles
  for each factor 2 by which |nu| exceeds 20.
* ``"panel"``: Gauss-Kronrod panels graded at the scales sqrt(1-delta^2)/|nu|
  and 1/|nu| where the integrands turn over.  The Gaussian t-integral of
  rho23 and the inner s-integral of rho25 are done in closed form.  This is
  the evaluator of choice near the diagonal, where 1 - delta^2 -> 0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, ndtr

from ..errors import DiagonalBand, NumericalDegeneracy, QuadratureWarning
from .gk import gauss_legendre01, panel_rule
from .pairs import _check_pair, regress_cross, regress_same

SQRT_HALF_PI = math.sqrt(0.5 * math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)
# below this 1 - delta^2 the conditional law is treated as degenerate
Q_DEGENERATE = 1e-13


@dataclass(frozen=True)
class InnerQuad:
    method: str = "gl"
    order: int = 40
    tol: float = 1e-10
    geometric: int = 16


@dataclass
class Rho2Result:
    value: float
    terms: tuple
    error: float
    warning: str | None = None


# ------------------------------------------------------------------ rho1

def rho1_terms(ctx, x):
    """(rho11, rho12, r11) arrays at points x."""
    s = ctx.point_sums(x)
    A, B, C, M, dM = s[:, 0], s[:, 1], s[:, 2], s[:, 3], s[:, 4]
    with np.errstate(all="ignore"):
        r11 = (A * C - B * B) / (A * A)
        sq = np.sqrt(A)
        m = M / sq
        dm = dM / sq - M * B / (A * sq)
        rho11 = np.sqrt(r11) / math.pi * np.exp(-0.5 * (m * m + dm * dm / r11))
        rho12 = dm * np.exp(-0.5 * m * m) * erf(dm / np.sqrt(2.0 * r11)) / SQRT_2PI
    return rho11, rho12, r11


def rho1_array(ctx, x):
    r11_, r12_, _ = rho1_terms(ctx, x)
    return np.maximum(r11_ + r12_, 0.0)


def rho1(ctx, x):
    """Density of real roots at x (|x| <= 1; use ``ctx.star`` for w = 1/x)."""
    r11_, r12_, r11 = rho1_terms(ctx, float(x))
    if not r11[0] > 0:
        raise NumericalDegeneracy(f"r11(x,x) = {r11[0]!r} not positive", residual=float(r11[0]), where=x)
    return max(float(r11_[0] + r12_[0]), 0.0)


# ------------------------------------------------------------------ rho2 sums

def _abs_quadratic_mean(mu, s, c0, c1, c2):
    """E|c0 + c1 X + c2 X^2| for X ~ N(mu, s^2), vectorized."""
    mu, s, c0, c1, c2 = np.broadcast_arrays(*(np.asarray(a, float) for a in (mu, s, c0, c1, c2)))
    out = np.empty(mu.shape)
    for i in np.ndindex(mu.shape):
        coef = (c0[i], c1[i], c2[i])
        roots = np.roots([coef[2], coef[1], coef[0]]) if (coef[2] or coef[1]) else np.array([])
        roots = np.sort(roots[np.isreal(roots)].real)
        cuts = np.concatenate([[-np.inf], roots, [np.inf]])
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            part = _poly_moment(mu[i], s[i], coef, hi) - _poly_moment(mu[i], s[i], coef, lo)
            mid = _finite_mid(lo, hi)
            sign = np.sign(coef[0] + coef[1] * mid + coef[2] * mid * mid)
            total += sign * part
        out[i] = total
    return out


def _finite_mid(lo, hi):
    if np.isinf(lo) and np.isinf(hi):
        return 0.0
    if np.isinf(lo):
        return hi - 1.0
    if np.isinf(hi):
        return lo + 1.0
    return 0.5 * (lo + hi)


def _poly_moment(mu, s, coef, r):
    """E[c0 + c1 X + c2 X^2 ; X < r]."""
    if r == -np.inf:
        return 0.0
    if r == np.inf:
        return coef[0] + coef[1] * mu + coef[2] * (mu * mu + s * s)
    z = (r - mu) / s
    Phi = ndtr(z)
    phi = math.exp(-0.5 * z * z) / SQRT_2PI
    m0 = Phi
    m1 = mu * Phi - s * phi
    m2 = (mu * mu + s * s) * Phi - s * phi * (mu + r)
    return coef[0] * m0 + coef[1] * m1 + coef[2] * m2


def degenerate_sum(reg):
    """Sum of the five terms when 1 - delta^2 = 0: (pi/2) E|X1 X2| with X2 affine in X1."""
    d = np.sign(reg.delta)
    b = d * reg.s2 / np.where(reg.s1 > 0, reg.s1, 1.0)
    a = reg.mu2 - b * reg.mu1
    return 0.5 * math.pi * _abs_quadratic_mean(reg.mu1, reg.s1, 0.0, a, b)


def _sum_gl(reg, order):
    """Five terms by Gauss-Legendre of the given order (vectorized over pairs)."""
    t, w = gauss_legendre01(order)
    s1, s2, mu1, mu2, d, q = reg.s1, reg.s2, reg.mu1, reg.mu2, reg.delta, reg.q
    with np.errstate(all="ignore"):
        nu1 = np.where(s1 > 0, mu1 / s1, 0.0)
        nu2 = np.where(s2 > 0, mu2 / s2, 0.0)
        sq = np.sqrt(q)
        asin = np.arctan2(d, sq)
        T1 = s1 * s2 * (sq + d * asin)
        T2 = mu1 * mu2 * asin
        T3 = np.zeros_like(T1)
        T4 = np.zeros_like(T1)
        tt = t[None, :]
        for nu in (nu1, nu2):
            nu_ = nu[:, None]
            g = np.exp(-nu_ ** 2 * tt ** 2 / 2.0)
            T3 += s1 * s2 * sq * ((1 - tt) * nu_ ** 2 * np.exp(-nu_ ** 2 * tt ** 2 / (2 * q[:, None]))) @ w
            T3 += SQRT_HALF_PI * s1 * s2 * np.abs(d) * nu ** 2 * (
                (1 - tt) * np.abs(nu_ * tt) * g * erf(np.abs(d[:, None] * nu_ * tt) / np.sqrt(2 * q[:, None]))) @ w
            T4 += SQRT_HALF_PI * mu1 * mu2 * (
                (tt - 1) * nu_ * g * erf(d[:, None] * nu_ * tt / np.sqrt(2 * q[:, None]))) @ w
        ts = t[None, :, None]
        ss = t[None, None, :]
        expo = (nu1[:, None, None] ** 2 * ts ** 2 - 2 * (d * nu1 * nu2)[:, None, None] * ts * ss
                + nu2[:, None, None] ** 2 * ss ** 2) / (2 * q[:, None, None])
        dbl = np.einsum("ptk,t,k->p", (1 - ts) * (1 - ss) * np.exp(-expo), w, w)
        T5 = np.abs(mu1 * mu2 * nu1 * nu2) / sq * dbl
    return np.stack([T1, T2, T3, T4, T5], axis=-1)


def _gl_orders(reg, order, nu_max=20.0, cap=8):
    """Base order, doubled per factor 2 by which the largest |nu| exceeds nu_max."""
    with np.errstate(all="ignore"):
        nu = np.maximum(np.abs(reg.mu1 / reg.s1), np.abs(reg.mu2 / reg.s2))
    nu = np.where(np.isfinite(nu), nu, 0.0)
    k = np.ceil(np.log2(np.maximum(nu / nu_max, 1.0)))
    return order * (2 ** np.minimum(k, cap)).astype(int)


def _geometric_breaks(w, T, K):
    """Sorted breakpoints 0, w/8 ... T (geometric), or uniform if w/8 >= T."""
    lo = np.minimum(w / 8.0, T)
    i = np.arange(K + 1) / K
    with np.errstate(all="ignore"):
        ratio = np.where(lo < T, T / np.where(lo > 0, lo, 1.0), 1.0)
        geo = lo[:, None] * ratio[:, None] ** i[None, :]
    uni = T[:, None] * i[None, :]
    pts = np.where((lo < T)[:, None] & (lo > 0)[:, None], geo, uni)
    return np.concatenate([np.zeros((len(T), 1)), pts], axis=1)


def _sum_panel(reg, K):
    """Five terms on graded GK15 panels; returns (terms (N,5), err (N,))."""
    s1, s2, mu1, mu2, d, q = reg.s1, reg.s2, reg.mu1, reg.mu2, reg.delta, reg.q
    N = len(s1)
    with np.errstate(all="ignore"):
        nu1 = np.where(s1 > 0, mu1 / s1, 0.0)
        nu2 = np.where(s2 > 0, mu2 / s2, 0.0)
        sq = np.sqrt(q)
        asin = np.arctan2(d, sq)
        T1 = s1 * s2 * (sq + d * asin)
        T2 = mu1 * mu2 * asin
        T3 = np.zeros(N)
        T4 = np.zeros(N)
        T5 = np.zeros(N)
        err = np.zeros(N)
        ad = np.abs(d)
        sgn = np.sign(d)
        for nu in (nu1, nu2):
            an = np.abs(nu)
            # closed form of int_0^1 (1 - t) nu^2 exp(-nu^2 t^2 / (2 q)) dt
            z = an / np.sqrt(2.0 * q)
            A = an * np.sqrt(0.5 * math.pi * q) * erf(z) + q * np.expm1(-z * z)
            A = np.where(an > 0, A, 0.0)
            T3 += s1 * s2 * sq * A
            act = (an > 0) & (ad > 0)
            if not np.any(act):
                continue
            T = np.minimum(1.0, 9.0 / np.where(an > 0, an, 1.0))
            w = sq / np.where(act, ad * an, 1.0)
            bk = _geometric_breaks(np.where(act, w, np.inf), T, K)
            tn, wk, wg = panel_rule(bk)
            kk = (ad * an)[:, None, None] / np.sqrt(2.0 * q)[:, None, None]
            f = (1.0 - tn) * np.exp(-0.5 * (an[:, None, None] * tn) ** 2) * erf(kk * tn)
            F0k = (f * wk).sum(axis=(1, 2))
            F0g = (f * wg).sum(axis=(1, 2))
            F1k = (f * tn * wk).sum(axis=(1, 2))
            F1g = (f * tn * wg).sum(axis=(1, 2))
            cB = SQRT_HALF_PI * s1 * s2 * ad * nu * nu * an
            cC = SQRT_HALF_PI * mu1 * mu2 * an * sgn
            T3 += np.where(act, cB * F1k, 0.0)
            T4 -= np.where(act, cC * F0k, 0.0)
            err += np.where(act, np.abs(cB * (F1k - F1g)) + np.abs(cC * (F0k - F0g)), 0.0)
        act = (np.abs(nu1) > 0) & (np.abs(nu2) > 0)
        if np.any(act):
            idx = np.nonzero(act)[0]
            v5, e5 = _rho25_panel(nu1[idx], nu2[idx], d[idx], q[idx], K)
            c5 = np.abs(mu1 * mu2 * nu1 * nu2)[idx] / sq[idx]
            T5[idx] = c5 * v5
            err[idx] += c5 * e5
    return np.stack([T1, T2, T3, T4, T5], axis=-1), err


def _inner_s(s0, ss):
    """int_0^1 (1 - s) exp(-(s - s0)^2 / (2 ss^2)) ds in closed form."""
    z0 = -s0 / ss
    z1 = (1.0 - s0) / ss
    dPhi = np.where(z0 > 0, ndtr(-z0) - ndtr(-z1), ndtr(z1) - ndtr(z0))
    return ss * ((1.0 - s0) * SQRT_2PI * dPhi - ss * (np.exp(-0.5 * z0 * z0) - np.exp(-0.5 * z1 * z1)))


def _rho25_panel(nu1, nu2, d, q, K):
    n = len(nu1)
    an1 = np.abs(nu1)
    sq = np.sqrt(q)
    T = np.minimum(1.0, 9.0 / an1)
    ad = np.abs(d)
    with np.errstate(all="ignore"):
        w = np.where(ad > 0, sq / (ad * an1), np.inf)
        tstar = np.where(ad > 0, nu2 / (d * nu1), -1.0)
    base = _geometric_breaks(w, T, K)
    # a second graded cluster around t* where the s-window leaves [0, 1]
    inside = (tstar > 0) & (tstar < T) & np.isfinite(w)
    i = np.arange(1, K + 1) / K
    lo = np.minimum(w / 8.0, T)
    with np.errstate(all="ignore"):
        offs = lo[:, None] * (T / np.where(lo > 0, lo, 1.0))[:, None] ** i[None, :]
    around = np.concatenate([tstar[:, None] - offs, tstar[:, None], tstar[:, None] + offs], axis=1)
    around = np.where(inside[:, None], np.clip(around, 0.0, T[:, None]), T[:, None])
    bk = np.sort(np.concatenate([base, around], axis=1), axis=1)
    tn, wk, wg = panel_rule(bk)
    s0 = (d * nu1 / nu2)[:, None, None] * tn
    ss = (sq / np.abs(nu2))[:, None, None]
    wide = ss[:, 0, 0] > 1e3
    inner = _inner_s(s0, ss)
    if np.any(wide):
        # window much wider than [0, 1]: direct Gauss-Legendre in s
        sg, wgl = gauss_legendre01(20)
        sw = s0[wide][..., None]
        inner_w = ((1.0 - sg) * np.exp(-0.5 * ((sg - sw) / ss[wide][..., None]) ** 2)) @ wgl
        inner[wide] = inner_w
    f = (1.0 - tn) * np.exp(-0.5 * (an1[:, None, None] * tn) ** 2) * inner
    vk = (f * wk).sum(axis=(1, 2))
    vg = (f * wg).sum(axis=(1, 2))
    return vk, np.abs(vk - vg)


def rho2_from_regression(reg, method="panel", order=40, K=16):
    """rho2 and an absolute error estimate for each pair of a Regression."""
    N = len(reg.s1)
    val = np.zeros(N)
    err = np.zeros(N)
    terms = np.zeros((N, 5))
    with np.errstate(all="ignore"):
        pref = np.exp(reg.logE) / (math.pi ** 2 * np.sqrt(reg.omr2))
    live = (reg.s1 > 0) & (reg.s2 > 0) & (pref > 0) & np.isfinite(pref)
    degen = live & (reg.q < Q_DEGENERATE)
    reg_ok = live & ~degen
    if np.any(reg_ok):
        idx = np.nonzero(reg_ok)[0]
        sub = reg.take(idx)
        if method == "gl":
            orders = _gl_orders(sub, order)
            for o in np.unique(orders):
                sel = np.nonzero(orders == o)[0]
                part = sub.take(sel)
                t_lo = _sum_gl(part, int(o))
                t_hi = _sum_gl(part, 2 * int(o))
                terms[idx[sel]] = t_hi
                err[idx[sel]] = np.abs(t_hi.sum(-1) - t_lo.sum(-1)) * pref[idx[sel]]
        elif method == "panel":
            tt, ee = _sum_panel(sub, K)
            terms[idx] = tt
            err[idx] = ee * pref[idx]
        else:
            raise ValueError(f"unknown inner quadrature method {method!r}")
    if np.any(degen):
        idx = np.nonzero(degen)[0]
        terms[idx, 0] = degenerate_sum(reg.take(idx))
    val = np.where(live, pref * terms.sum(-1), 0.0)
    return np.maximum(val, 0.0), err, terms * np.where(live, pref, 0.0)[:, None]


def rho2_array(ctx, x, y, method="panel", K=16):
    """Vectorized rho2 for same-process pairs (internal: never raises)."""
    reg = regress_same(ctx, x, y)
    return rho2_from_regression(reg, method=method, K=K)[0]


def rho2_cross_array(ctx, x, w, method="panel", K=16):
    """Vectorized rho2 of (P at x, reciprocal polynomial at w)."""
    reg = regress_cross(ctx, x, w)
    return rho2_from_regression(reg, method=method, K=K)[0]


def rho2(ctx, x, y, quad: InnerQuad | None = None, detail=False):
    """Two-point correlation function at x != y in (-1, 1)."""
    quad = quad or InnerQuad()
    x, y = float(x), float(y)
    _check_pair(x, y)
    reg = regress_same(ctx, x, y)
    if abs(reg.delta[0]) >= 1.0 - 1e-12 or reg.q[0] < 2e-12:
        raise DiagonalBand(f"|delta| = {abs(reg.delta[0])!r} too close to 1 at ({x}, {y})")
    val, err, terms = rho2_from_regression(reg, method=quad.method, order=quad.order, K=quad.geometric)
    msg = None
    if err[0] > quad.tol * max(1.0, abs(val[0])):
        msg = f"inner quadrature error {err[0]:.3g} above tolerance {quad.tol:.3g}"
        warnings.warn(msg, QuadratureWarning, stacklevel=2)
    res = Rho2Result(float(val[0]), tuple(float(t) for t in terms[0]), float(err[0]), msg)
    return res if detail else res.value


# ------------------------------------------------------------------ oracle

def abs_product_mean(mu1, mu2, s1, s2, delta):
    """E|X1 X2| for a bivariate normal, by 1-D adaptive quadrature over X1."""
    from scipy import integrate

    sq = math.sqrt(1.0 - delta * delta)

    def g(x):
        m = mu2 + delta * s2 * (x - mu1) / s1
        s = s2 * sq
        e = s * math.sqrt(2.0 / math.pi) * math.exp(-m * m / (2 * s * s)) + m * math.erf(m / (s * math.sqrt(2)))
        return abs(x) * e * math.exp(-(x - mu1) ** 2 / (2 * s1 * s1)) / (s1 * SQRT_2PI)

    lo, hi = mu1 - 40 * s1, mu1 + 40 * s1
    pts = [p for p in (0.0,) if lo < p < hi]
    return integrate.quad(g, lo, hi, points=pts or None, epsabs=1e-14, epsrel=1e-13, limit=500)[0]
