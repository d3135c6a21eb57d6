"""Asymptotic variance constants.

``kappa(tau)`` evaluates

    kappa_tau = (1/pi) * [ (2 tau + 1)/pi * int_0^inf f_tau(sech^2 v) dv + sqrt(2 tau + 1)/2 ]

with f_tau built from the correlation ``delta_tau(u)`` and weight
``sigma_tau(u)`` of the stationary limit process.  Near u = 1 both are 0/0
forms and are evaluated from their power series in eps = 1 - u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import InvalidSpec, NumericalDegeneracy, QuadratureFailure

# ln n coefficient of Var N for the non-centred Kac polynomial is 2 * KAPPA0
KAPPA0 = (1.0 - 2.0 / math.pi) / math.pi
SERIES_EPS = 1e-4
_SERIES_TERMS = 10


@dataclass(frozen=True)
class KappaResult:
    tau: float
    kappa: float
    quadrature_error: float
    truncation_v: float


def tau_of(ell, L):
    """Growth order of the ell-th derivative of the hyperbolic ensemble."""
    return ell + (L - 1.0) / 2.0


def _check_tau(tau):
    if not tau > -0.5:
        raise InvalidSpec(f"tau must exceed -1/2, got {tau!r}")


def _binom_signed(a, K):
    """b_k = binom(a, k) (-1)^k for k = 0..K, the series of (1 - eps)^a."""
    b = np.empty(K + 1)
    b[0] = 1.0
    for k in range(1, K + 1):
        b[k] = -b[k - 1] * (a - k + 1) / k
    return b


def _series_parts(a, eps):
    """(delta, sigma) from their power series at small eps."""
    K = _SERIES_TERMS + 3
    b = _binom_signed(a, K)
    k = np.arange(2, K + 1)
    # D/eps^2, N/eps^2 and (1 - u^a)/eps as polynomials in eps
    d_c = -b[2:] - a * b[1:-1]
    n_c = -b[2:] + b[1:-1]
    o_c = -b[1:]
    eps = np.asarray(eps, dtype=float)
    pw_d = eps[..., None] ** (k - 2)
    D = pw_d @ d_c
    N = pw_d @ n_c
    O = (eps[..., None] ** np.arange(0, K)) @ o_c
    u_half = np.exp(0.5 * a * np.log1p(-eps))
    delta = u_half * N / D
    sigma = np.sqrt(eps) * D / O ** 1.5
    return delta, sigma


def _direct_parts(a, u, eps):
    with np.errstate(divide="ignore", invalid="ignore"):
        # log u from whichever of u, 1 - u is the accurate one
        la = a * np.where(u < 0.5, np.log(u), np.log1p(-eps))
        ua = np.exp(la)
        om = -np.expm1(la)  # 1 - u^a without cancellation
        D = om - a * ua * eps
        N = u * om - a * eps
        delta = np.exp(0.5 * la) * N / D
        sigma = D / om ** 1.5
    return delta, sigma


def delta_sigma(tau, u, eps=None):
    """Delta_tau(u) and Sigma_tau(u); ``eps`` may pass 1 - u accurately."""
    _check_tau(tau)
    a = 2.0 * tau + 1.0
    u = np.asarray(u, dtype=float)
    eps = 1.0 - u if eps is None else np.asarray(eps, dtype=float)
    near = eps < SERIES_EPS
    dd, sd = _direct_parts(a, np.where(near, 0.5, u), np.where(near, 0.5, eps))
    ds, ss = _series_parts(a, np.where(near, eps, 0.0))
    delta = np.where(near, ds, dd)
    sigma = np.where(near, ss, sd)
    # u -> 0: both limits are exact
    zero = u == 0
    delta = np.where(zero, 0.0, delta)
    sigma = np.where(zero, 1.0, sigma)
    return delta, sigma


def _f_from_parts(delta, sigma):
    if np.any(np.abs(delta) > 1.0 + 1e-12):
        bad = float(np.max(np.abs(delta)))
        raise NumericalDegeneracy(f"|Delta| = {bad!r} exceeds 1", residual=bad - 1.0)
    d = np.clip(delta, -1.0, 1.0)
    return (np.sqrt(1.0 - d * d) + d * np.arcsin(d)) * sigma - 1.0


def f_tau(tau, u, eps=None):
    """f_tau(u) = (sqrt(1 - Delta^2) + Delta arcsin Delta) Sigma - 1 for u in (0, 1]."""
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0) | (u_arr > 1)):
        raise InvalidSpec("f_tau needs u in (0, 1]")
    out = _f_from_parts(*delta_sigma(tau, u_arr, eps))
    return float(out) if np.ndim(u) == 0 else out


def integrand_v(tau, v):
    """f_tau(sech^2 v), with 1 - u = tanh^2 v computed directly."""
    v = np.asarray(v, dtype=float)
    u = 1.0 / np.cosh(v) ** 2
    eps = np.tanh(v) ** 2
    out = _f_from_parts(*delta_sigma(tau, u, eps))
    out = np.where(v == 0, -1.0, out)
    return float(out) if out.ndim == 0 else out


def _truncation(tau, tol=1e-14):
    """First v (on a unit-step scan past 1) with |f| below tol at two consecutive points."""
    v = 1.0
    hits = 0
    while v < 2000.0:
        if abs(integrand_v(tau, v)) < tol:
            hits += 1
            if hits == 2:
                return v
        else:
            hits = 0
        v += 1.0
    raise QuadratureFailure(f"integrand did not decay below {tol} for tau={tau}")


@lru_cache(maxsize=256)
def kappa(tau, tol=1e-10):
    """kappa_tau by adaptive quadrature on [0, 1] and [1, V]."""
    tau = float(tau)
    _check_tau(tau)
    a = 2.0 * tau + 1.0
    V = _truncation(tau)
    f = lambda v: integrand_v(tau, v)
    i1, e1 = integrate.quad(f, 0.0, 1.0, epsabs=tol / 100, epsrel=1e-12, limit=200)
    i2, e2 = integrate.quad(f, 1.0, V, epsabs=tol / 100, epsrel=1e-12, limit=200)
    # the tail decays like exp(-2 a v); bound it by its value at V
    tail = abs(integrand_v(tau, V)) / (2.0 * a)
    err = (e1 + e2 + tail) * a / math.pi ** 2
    if err > tol:
        raise QuadratureFailure(f"kappa({tau}) error estimate {err:.3g} above {tol:.3g}")
    val = (a / math.pi * (i1 + i2) + math.sqrt(a) / 2.0) / math.pi
    return KappaResult(tau=tau, kappa=val, quadrature_error=err, truncation_v=V)


def slope(tau, centered=False, half_line=False):
    """Leading coefficient c in Var N ~ c ln n.

    Non-centred: kappa_tau + (1/pi)(1 - 2/pi).  Centred full line: twice
    that; centred half line: the non-centred value.
    """
    base = kappa(tau).kappa + KAPPA0
    if centered and not half_line:
        return 2.0 * base
    return base


def kappa_report(tau):
    res = kappa(tau)
    return {"tau": res.tau, "kappa": res.kappa, "slope_centered": slope(tau, True),
            "slope_noncentered": slope(tau, False), "quad_error": res.quadrature_error}
