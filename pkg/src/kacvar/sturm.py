"""Exact real-root counting with Sturm sequences over the integers.

Binary floating-point coefficients are exact dyadic rationals, so scaling by
a common power of two yields an integer polynomial with the same roots.
The chain is built from primitive pseudo-remainders with the sign fixed so
that every member is a positive multiple of the classical Sturm remainder.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import InvalidInterval, ZeroPolynomial

try:  # big-integer arithmetic is the bottleneck; gmpy2 is optional
    from gmpy2 import mpz as _int
except ImportError:  # pragma: no cover
    _int = int


def integer_coefficients(coeffs):
    """Integer polynomial (ascending) proportional to the float coefficients."""
    fracs = [Fraction(float(c)) for c in coeffs]
    den = 1
    for f in fracs:
        den = den * f.denominator // math.gcd(den, f.denominator)
    ints = [int(f * den) for f in fracs]
    while ints and ints[-1] == 0:
        ints.pop()
    if not ints:
        raise ZeroPolynomial("all coefficients are zero")
    return _primitive(ints)


def _primitive(p):
    g = 0
    for c in p:
        g = math.gcd(g, c)
    return [c // g for c in p] if g > 1 else list(p)


def _deriv(p):
    return [j * p[j] for j in range(1, len(p))]


def _prem(a, b):
    """Pseudo-remainder of ascending integer polynomials.

    Returns ``(r, k)`` with ``r = lb**k * rem(a, b)``, ``lb`` the leading
    coefficient of b and ``k`` the number of multiplications performed.
    """
    a = list(a)
    db = len(b) - 1
    lb = b[-1]
    k = 0
    while a and len(a) - 1 >= db:
        la = a[-1]
        shift = len(a) - 1 - db
        a = [c * lb for c in a]
        k += 1
        for i in range(db + 1):
            a[shift + i] -= la * b[i]
        a.pop()
        while a and a[-1] == 0:
            a.pop()
    return a, k


def _exact_div(a, b):
    """Quotient of integer polynomials when b divides a exactly over Q."""
    a = [Fraction(int(c)) for c in a]
    b = [int(c) for c in b]
    q = [Fraction(0)] * (len(a) - len(b) + 1)
    for k in range(len(q) - 1, -1, -1):
        q[k] = a[k + len(b) - 1] / b[-1]
        for i in range(len(b)):
            a[k + i] -= q[k] * b[i]
    den = 1
    for f in q:
        den = den * f.denominator // math.gcd(den, f.denominator)
    return _primitive([int(f * den) for f in q])


def _chain(p):
    chain = [p, _primitive(_deriv(p))]
    while len(chain[-1]) > 1:
        a, b = chain[-2], chain[-1]
        r, k = _prem(a, b)
        if not r:
            break
        # r = lb**k rem(a, b); the chain needs a positive multiple of -rem
        sgn = -1 if (b[-1] < 0 and k % 2 == 1) else 1
        r = [-sgn * c for c in r]
        g = 0
        for c in r:
            g = math.gcd(g, c)
        chain.append([c // g for c in r])
    return chain


def sturm_chain(p):
    """Sturm chain of the square-free part of the integer polynomial p."""
    p = [_int(c) for c in p]
    if len(p) < 2:
        return [p]
    chain = _chain(p)
    if len(chain[-1]) > 1:
        # last member is gcd(p, p'): reduce to the square-free part and restart
        q = _exact_div(p, chain[-1])
        if len(q) < 2:
            return [q]
        chain = _chain([_int(c) for c in q])
    return chain


def _sign_at(p, x):
    """Sign of p at a rational x, or at +-inf."""
    lead = (p[-1] > 0) - (p[-1] < 0)
    if x == math.inf:
        return lead
    if x == -math.inf:
        return lead if (len(p) - 1) % 2 == 0 else -lead
    f = Fraction(x)
    num, den = f.numerator, f.denominator
    d = len(p) - 1
    # homogenized Horner: den**d * p(num/den) = sum p_j num**j den**(d-j)
    acc = p[d]
    dpow = 1
    for j in range(d - 1, -1, -1):
        dpow *= den
        acc = acc * num + p[j] * dpow
    return (acc > 0) - (acc < 0)


def _variations(chain, x):
    signs = [s for s in (_sign_at(p, x) for p in chain) if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_roots_sturm(sample, interval=(-math.inf, math.inf)):
    """Number of distinct real roots in (lo, hi].

    ``sample`` is a PolynomialSample or a coefficient sequence (ascending).
    """
    coeffs = getattr(sample, "coeffs", sample)
    lo, hi = interval
    if not lo < hi:
        raise InvalidInterval(f"empty interval ({lo}, {hi}]")
    p = integer_coefficients(coeffs)
    if len(p) == 1:
        return 0
    chain = sturm_chain(p)
    return _variations(chain, lo) - _variations(chain, hi)


class SturmCounter:
    """Reusable chain for counting one polynomial on many intervals."""

    def __init__(self, coeffs):
        p = integer_coefficients(coeffs)
        self.degree = len(p) - 1
        self.chain = sturm_chain(p) if self.degree > 0 else [p]
        self._cache = {}

    def variations(self, x):
        if x not in self._cache:
            self._cache[x] = _variations(self.chain, x) if self.degree > 0 else 0
        return self._cache[x]

    def count(self, lo, hi):
        """Distinct roots in (lo, hi]."""
        return self.variations(lo) - self.variations(hi)

    def is_root(self, x):
        return _sign_at(self.chain[0], x) == 0
