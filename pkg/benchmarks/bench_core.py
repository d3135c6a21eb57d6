"""Compiled kernels against their numpy twins.

Run ``python benchmarks/bench_core.py`` after building the extension.  Each
kernel is timed on both backends with identical inputs, the outputs are
checked for agreement, and the speed-up is printed.
"""

import argparse
import timeit

import numpy as np

from kacvar import _core_py
from kacvar.ensemble import EnsembleSpec, build_profile, sample_batch
from kacvar.region import FULL_LINE
from kacvar.roots import GridCounter

try:
    from kacvar import _core
except ImportError:  # pragma: no cover
    _core = None


def cases(n, trials, pairs):
    prof = build_profile(EnsembleSpec(degree=n, mu=2.0))
    C = sample_batch(prof, "gaussian", 1, 0, trials)
    gc = GridCounter(n, [FULL_LINE])
    rng = np.random.default_rng(0)
    xs = rng.uniform(-0.999, 0.999, pairs)
    ys = rng.uniform(-0.999, 0.999, pairs)
    v2, m = np.asarray(prof.v ** 2, float), np.asarray(prof.m, float)
    return {
        "count_cells": lambda b: b.count_cells(C, gc.nodes_p, gc.scale_p, gc.nodes_s, gc.scale_s),
        "horner": lambda b: b.horner(C[0], xs),
        "gram_same": lambda b: b.gram_same(v2, m, xs, ys),
        "gram_cross": lambda b: b.gram_cross(v2, m, xs, ys),
        "point_sums": lambda b: b.point_sums(v2, m, xs),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-11, atol=1e-300)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=500, help="polynomial degree")
    p.add_argument("--trials", type=int, default=256, help="polynomials per count_cells batch")
    p.add_argument("--pairs", type=int, default=2000, help="points for the kernel sums")
    p.add_argument("--repeat", type=int, default=3)
    a = p.parse_args(argv)
    if _core is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    print(f"n={a.n} trials={a.trials} pairs={a.pairs} (best of {a.repeat})")
    print(f"{'kernel':<12} {'numpy [s]':>11} {'cython [s]':>11} {'speed-up':>9}  agree")
    for name, fn in cases(a.n, a.trials, a.pairs).items():
        t_py = min(timeit.repeat(lambda: fn(_core_py), number=1, repeat=a.repeat))
        t_cy = min(timeit.repeat(lambda: fn(_core), number=1, repeat=a.repeat))
        agree = _same(fn(_core_py), fn(_core))
        print(f"{name:<12} {t_py:11.4f} {t_cy:11.4f} {t_py / t_cy:9.1f}  {agree}")


if __name__ == "__main__":
    main()
