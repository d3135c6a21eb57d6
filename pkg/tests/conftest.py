"""Shared fixtures: expensive Monte Carlo runs are computed once per session."""

import time

import numpy as np
import pytest

from kacvar.ensemble import EnsembleSpec
from kacvar.mc import ExperimentConfig, run_experiment
from kacvar.region import Region

# fixed before any statistical run; results are reported whatever they show
SEED = 20260601
BIG = 10 ** 6
SWEEP = (250, 500, 1000, 2000)

BIN_NEG_HALF = Region.of((-0.55, -0.45), tag="bin_-0.5")
PAIR_A = Region.of((0.2, 0.4), tag="A")
PAIR_B = Region.of((0.6, 0.8), tag="B")

_cache = {}
build_seconds = {}
# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def mc_table(key, cfg):
    if key not in _cache:
        t0 = time.perf_counter()
        _cache[key] = run_experiment(cfg)
        build_seconds[key] = time.perf_counter() - t0
    return _cache[key]


def big_run(n, mu, extra=(), pairs=()):
    cfg = ExperimentConfig(ensemble=EnsembleSpec(degree=n, mu=mu), degrees=(n,), trials=BIG, seed=SEED,
                           chunk=8192, extra_regions=tuple(extra), pair_products=tuple(pairs))
    return mc_table(("big", n, mu), cfg)


def sweep(mu, dist="gaussian", kind="kac", L=1.0, keep=False):
    spec = EnsembleSpec(kind=kind, degree=SWEEP[0], mu=mu, dist=dist, L=L)
    cfg = ExperimentConfig(ensemble=spec, degrees=SWEEP, trials=1500, seed=SEED, keep_counts=keep)
    return mc_table(("sweep", mu, dist, kind, L), cfg)


@pytest.fixture(scope="session")
def mc20_mu0():
    return big_run(20, 0.0)


@pytest.fixture(scope="session")
def mc20_mu2():
    return big_run(20, 2.0, extra=(BIN_NEG_HALF,))


@pytest.fixture(scope="session")
def mc10_mu2():
    return big_run(10, 2.0, extra=(PAIR_A, PAIR_B), pairs=((0, 1),))


@pytest.fixture(scope="session")
def sweep_centered_gauss():
    return sweep(0.0)


@pytest.fixture(scope="session")
def sweep_centered_rade():
    return sweep(0.0, dist="rademacher")


@pytest.fixture(scope="session")
def sweep_mu2():
    return sweep(2.0, keep=True)


@pytest.fixture(scope="session")
def sweep_hyper_mu2():
    return sweep(2.0, kind="hyperbolic", L=2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
