import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kacvar.errors import InvalidInterval, ZeroPolynomial
from kacvar.sturm import SturmCounter, count_roots_sturm, integer_coefficients, sturm_chain

P = np.polynomial.polynomial


def test_integer_coefficients_exact():
    p = integer_coefficients([0.5, -0.25, 3.0])
    assert p == [2, -1, 12]
    assert Fraction(p[0], p[2]) == Fraction(0.5) / Fraction(3.0)


def test_multiplicity_reduced():
    c = P.polyfromroots([1, 1, 1, -2, -2, 0.5])
    assert count_roots_sturm(c) == 3
    assert count_roots_sturm(c, (0.9, 1.0)) == 1
    assert count_roots_sturm(c, (1.0, 2.0)) == 0  # half-open (lo, hi]


def test_endpoints_half_open():
    c = P.polyfromroots([-1.0, 1.0])
    assert count_roots_sturm(c, (-1.0, 1.0)) == 1
    sc = SturmCounter(c)
    assert sc.is_root(1.0) and not sc.is_root(0.0)
    assert sc.count(-2.0, 2.0) == 2


def test_errors():
    with pytest.raises(ZeroPolynomial):
        count_roots_sturm([0.0, 0.0])
    with pytest.raises(InvalidInterval):
        count_roots_sturm([1.0, 1.0], (1.0, 1.0))


def test_constants_have_no_roots():
    assert count_roots_sturm([3.0]) == 0
    assert SturmCounter([3.0]).count(-1, 1) == 0


def test_chain_last_member_constant():
    chain = sturm_chain(integer_coefficients(P.polyfromroots([0.25, 0.5, 0.75, 0.75])))
    assert len(chain[-1]) == 1


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(-40, 40), min_size=1, max_size=9),
       st.lists(st.integers(1, 9), min_size=0, max_size=3))
def test_integer_roots_with_multiplicity(roots, quad):
    # integer roots plus irreducible quadratics x^2 + q: exact distinct count
    c = P.polyfromroots([float(r) for r in roots])
    for q in quad:
        c = P.polymul(c, [float(q), 0.0, 1.0])
    assert count_roots_sturm(c) == len(set(roots))
    lo, hi = -10.5, 10.5
    assert count_roots_sturm(c, (lo, hi)) == len({r for r in roots if lo < r <= hi})


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 40))
def test_matches_eigenvalue_roots_for_separated_spectra(seed, n):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(n + 1)
    r = P.polyroots(c)
    real = np.sort(r[np.abs(r.imag) < 1e-9].real)
    # only assert where the eigenvalue solver is unambiguous
    sep = np.min(np.abs(r.imag[np.abs(r.imag) >= 1e-9]), initial=1.0)
    if len(real) > 1:
        sep = min(sep, np.min(np.diff(real)))
    if sep < 1e-4:
        return
    assert count_roots_sturm(c) == len(real)
