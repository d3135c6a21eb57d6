"""The compiled kernels and their numpy twin must agree."""

import numpy as np
import pytest

from kacvar import _backend, _core_py
from kacvar.roots import GridCounter
from kacvar.region import FULL_LINE, POS_AXIS, Region

core = pytest.importorskip("kacvar._core")


def test_compiled_backend_selected():
    assert _backend.NAME in ("cython", "numpy")
    assert core.NAME != _core_py.NAME


@pytest.mark.parametrize("n", [3, 40, 500])
def test_horner_agree(n, rng):
    c = rng.standard_normal(n + 1)
    xs = np.concatenate([rng.uniform(-1.0, 1.0, 200), [0.95, -0.999999]])
    v1, d1 = core.horner(c, xs, 0.9)
    v2, d2 = _core_py.horner(c, xs, 0.9)
    np.testing.assert_allclose(v1, v2, rtol=1e-12, atol=1e-12 * np.sqrt(n))
    np.testing.assert_allclose(d1, d2, rtol=1e-11, atol=1e-11 * n)


@pytest.mark.parametrize("fn", ["gram_same", "gram_cross"])
def test_gram_agree(fn, rng):
    n = 60
    v2 = rng.uniform(0.5, 2.0, n + 1)
    m = rng.standard_normal(n + 1)
    x = rng.uniform(-0.99, 0.99, 50)
    y = rng.uniform(-0.99, 0.99, 50)
    a = getattr(core, fn)(v2, m, x, y, True)
    b = getattr(_core_py, fn)(v2, m, x, y, True)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-10)


def test_point_sums_agree(rng):
    v2 = rng.uniform(0.5, 2.0, 31)
    m = rng.standard_normal(31)
    x = rng.uniform(-1, 1, 40)
    np.testing.assert_allclose(core.point_sums(v2, m, x), _core_py.point_sums(v2, m, x), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("n,mu", [(5, 0.0), (64, 2.0), (300, 2.0)])
def test_count_cells_agree(n, mu, rng):
    C = mu + rng.standard_normal((40, n + 1))
    gc = GridCounter(n, [FULL_LINE, POS_AXIS, Region.of((-0.9, -0.5))])
    args = (np.ascontiguousarray(C), gc.nodes_p, gc.scale_p, gc.nodes_s, gc.scale_s, 30, 1e-3, 0.9)
    c1, s1, _ = core.count_cells(*args)
    c2, s2, _ = _core_py.count_cells(*args)
    ok = (s1 == 0) & (s2 == 0)
    np.testing.assert_array_equal(c1.sum(1)[ok], c2.sum(1)[ok])
    np.testing.assert_array_equal((c1 @ gc.member)[ok], (c2 @ gc.member)[ok])
