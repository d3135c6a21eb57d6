"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (printed in the terminal summary and
with ``-s``) before asserting, so a failing criterion still reports the
measured value against its tolerance.
"""

import math
import time

import mpmath as mp
import numpy as np
import pytest

from conftest import ACCEPTANCE, SEED, _cache, build_seconds
from kacvar.constants import KAPPA0, kappa, slope
from kacvar.ensemble import EnsembleSpec, build_profile, sample_batch
from kacvar.kacrice import KernelContext, RegionScheme, cross_kernel, pair_stats, rho1, rho2, variance_count
from kacvar.kacrice.pairs import kernel_partials
from kacvar.kacrice.rho import rho1_terms
from kacvar.mc import slope_regression
from kacvar.region import FULL_LINE, NEG_AXIS, POS_AXIS
from kacvar.roots import GridCounter, count_roots_sturm

pytestmark = pytest.mark.slow

CENTERED_KAC_SLOPE = 4.0 / math.pi * (1.0 - 2.0 / math.pi)


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def ctx_of(n, mu=0.0, kind="kac", L=1.0):
    return KernelContext(build_profile(EnsembleSpec(kind=kind, degree=n, mu=mu, L=L)))


def rel(a, b):
    return abs(a - b) / abs(b)


def fixture_seconds(*keys):
    return sum(build_seconds.get(k, 0.0) for k in keys)


def test_criterion_01_kappa0():
    kappa.cache_clear()
    t0 = time.perf_counter()
    val = kappa(0.0).kappa
    dt = time.perf_counter() - t0
    err = abs(val - (1.0 - 2.0 / math.pi) / math.pi)
    record(1, err <= 1e-8 and dt < 1.0, f"kappa(0)={val:.15f} |err|={err:.2e} (tol 1e-8) time={dt:.3f}s (< 1 s)")


def test_criterion_02_slope_halving():
    bad = [t for t in (0.0, 0.5, 1.0, 2.0, 3.0) if slope(t, centered=True) != 2.0 * slope(t, centered=False)]
    record(2, not bad, f"slope(tau, centered) == 2 slope(tau) exactly for tau in {{0,0.5,1,2,3}}; failures={bad}")


def _centered_rho1_closed(n, x):
    r11 = 1.0 / (1.0 - x * x) ** 2 - ((n + 1) * x ** n / (1.0 - x ** (2 * n + 2))) ** 2
    return math.sqrt(r11) / math.pi


def test_criterion_03_centered_reduction():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst1 = worst2 = 0.0
    for n in (5, 50, 500):
        ctx = ctx_of(n)
        for x in rng.uniform(-0.95, 0.95, 1000):
            got = rho1(ctx, x)
            assert rho1_terms(ctx, x)[1] == 0.0
            worst1 = max(worst1, rel(got, _centered_rho1_closed(n, x)))
        xs = rng.uniform(-0.98, 0.98, (1000, 2))
        for x, y in xs:
            if abs(x - y) < 1e-3:
                continue
            s = pair_stats(ctx, x, y)
            d = s.delta
            want = (s.sigma1 * s.sigma2 * (math.sqrt(1 - d * d) + d * math.asin(d))
                    / (math.pi ** 2 * math.sqrt(s.one_minus_r2)))
            worst2 = max(worst2, rel(rho2(ctx, x, y), want))
    dt = time.perf_counter() - t0
    ok = worst1 <= 1e-12 and worst2 <= 1e-12 and dt < 10.0
    record(3, ok, f"max rel err rho1={worst1:.2e} rho2={worst2:.2e} (tol 1e-12), n in {{5,50,500}}, "
                  f"time={dt:.2f}s (< 10 s)")


def _mp_r(v2, x, y):
    k = lambda u: mp.fsum(mp.mpf(float(c)) * u ** j for j, c in enumerate(v2))
    return k(x * y) / mp.sqrt(k(x * x) * k(y * y))


def test_criterion_04_kernel_derivatives():
    rng = np.random.default_rng(SEED + 4)
    t0 = time.perf_counter()
    worst = 0.0
    with mp.workdps(50):
        h = mp.mpf("1e-15")
        for kind, L in (("kac", 1.0), ("hyperbolic", 2.0)):
            ctx = ctx_of(20, 2.0, kind, L)
            for x, y in rng.uniform(-0.95, 0.95, (100, 2)):
                got = kernel_partials(ctx, x, y)
                X, Y = mp.mpf(float(x)), mp.mpf(float(y))
                r = lambda a, b: _mp_r(ctx.v2, a, b)
                fd10 = (r(X + h, Y) - r(X - h, Y)) / (2 * h)
                fd01 = (r(X, Y + h) - r(X, Y - h)) / (2 * h)
                fd11 = (r(X + h, Y + h) - r(X + h, Y - h) - r(X - h, Y + h) + r(X - h, Y - h)) / (4 * h * h)
                for g, w in zip(got[1:4], (fd10, fd01, fd11)):
                    worst = max(worst, abs(g - float(w)) / abs(float(w)))
    dt = time.perf_counter() - t0
    record(4, worst <= 1e-6 and dt < 10.0,
           f"max rel err of r10, r01, r11 vs central differences={worst:.2e} (tol 1e-6), 100 pairs x "
           f"{{Kac, Hyperbolic L=2}}, time={dt:.2f}s (< 10 s)")


def test_criterion_05_analytic_vs_mc(mc20_mu0, mc20_mu2):
    t0 = time.perf_counter()
    parts, ok = [], True
    for mu, tab in ((0.0, mc20_mu0), (2.0, mc20_mu2)):
        row = tab.rows[0]
        ex = tab.extras[20]
        res = variance_count(ctx_of(20, mu), FULL_LINE)
        zm = abs(res.expected - row["mean_total"]) / ex["mean_total_se"]
        zv = abs(res.total - row["var_total"]) / ex["var_total_se"]
        ok &= zm <= 3 and zv <= 4
        parts.append(f"mu={mu:g}: E {res.expected:.5f} vs {row['mean_total']:.5f} ({zm:.2f} SE), "
                     f"Var {res.total:.5f} vs {row['var_total']:.5f} ({zv:.2f} SE)")
    dt = time.perf_counter() - t0 + fixture_seconds(("big", 20, 0.0), ("big", 20, 2.0))
    ok &= dt < 300
    record(5, ok, "; ".join(parts) + f"; T={row['trials']}, time={dt:.0f}s (< 300 s)")


def test_criterion_06_degree_one():
    t0 = time.perf_counter()
    worst = 0.0
    for mu in (0.0, 2.0):
        res = variance_count(ctx_of(1, mu), FULL_LINE)
        worst = max(worst, abs(res.expected - 1.0), abs(res.total))
    dt = time.perf_counter() - t0
    record(6, worst <= 1e-6 and dt < 1.0, f"max |E-1|, |Var| over mu in {{0,2}}={worst:.2e} (tol 1e-6), "
                                          f"time={dt:.3f}s (< 1 s)")


def test_criterion_07_centered_slope(sweep_centered_gauss, sweep_centered_rade):
    parts, ok = [], True
    for name, tab, key in (("gaussian", sweep_centered_gauss, ("sweep", 0.0, "gaussian", "kac", 1.0)),
                           ("rademacher", sweep_centered_rade, ("sweep", 0.0, "rademacher", "kac", 1.0))):
        s, _, se = slope_regression(tab)
        dt = fixture_seconds(key)
        ok &= rel(s, CENTERED_KAC_SLOPE) <= 0.25 and dt < 900
        parts.append(f"{name} slope={s:.4f}+-{se:.4f} (rel dev {rel(s, CENTERED_KAC_SLOPE):.1%}, {dt:.0f}s)")
    record(7, ok, "; ".join(parts) + f"; target {CENTERED_KAC_SLOPE:.5f} within 25%")


def test_criterion_08_noncentered_slope(sweep_mu2, sweep_centered_gauss):
    s, _, se = slope_regression(sweep_mu2)
    sc = slope_regression(sweep_centered_gauss)[0]
    target = 2.0 * KAPPA0
    ratio = s / sc
    dt = fixture_seconds(("sweep", 2.0, "gaussian", "kac", 1.0))
    ok = rel(s, target) <= 0.25 and 0.4 <= ratio <= 0.6 and dt < 900
    record(8, ok, f"slope={s:.4f}+-{se:.4f} vs {target:.5f} (rel dev {rel(s, target):.1%}, tol 25%); "
                  f"ratio to centered={ratio:.3f} (in [0.4, 0.6]); {dt:.0f}s")


def test_criterion_09_positive_axis(sweep_mu2):
    row = sweep_mu2.row(2000)
    ok = row["mean_pos"] < 0.5 and row["var_pos"] < 0.5
    record(9, ok, f"n=2000 mu=2: mean PosAxis={row['mean_pos']:.4f} (< 0.5), var={row['var_pos']:.4f} (< 0.5)")


def test_criterion_10_clt(sweep_mu2):
    row = sweep_mu2.row(2000)
    ok = row["ks_stat"] <= 0.10 and abs(row["skewness"]) <= 0.35
    record(10, ok, f"n=2000 mu=2: lattice-midpoint KS={row['ks_stat']:.4f} (<= 0.10), "
                   f"skewness={row['skewness']:.4f} (|.| <= 0.35)")


def test_criterion_11_grid_vs_sturm():
    rng = np.random.default_rng(SEED + 11)
    t0 = time.perf_counter()
    agree = escal = total = 0
    for mu in (0.0, 2.0):
        for n in rng.integers(1, 65, size=100):
            n = int(n)
            C = sample_batch(build_profile(EnsembleSpec(degree=n, mu=mu)), "gaussian",
                             int(rng.integers(1 << 62)), 0, 1)[0]
            res = GridCounter(n, [FULL_LINE, POS_AXIS, NEG_AXIS]).count_one(C)
            want = [count_roots_sturm(C), count_roots_sturm(C, (0.0, math.inf)),
                    count_roots_sturm(C, (-math.inf, 0.0)) - int(C[0] == 0)]
            agree += int(list(res["counts"]) == want and res["total"] == want[0])
            escal += int(res["escalated"])
            total += 1
    dt = time.perf_counter() - t0
    ok = agree == total and escal / total <= 0.01 and dt < 300
    record(11, ok, f"{agree}/{total} agree with Sturm, escalation rate {escal / total:.1%} (<= 1%), "
                   f"time={dt:.1f}s (< 300 s)")


def test_criterion_12_parity(mc20_mu0, mc20_mu2, mc10_mu2, sweep_centered_gauss, sweep_centered_rade,
                             sweep_mu2, sweep_hyper_mu2):
    viol = runs = rows = 0
    for tab in _cache.values():
        runs += 1
        rows += len(tab.rows)
        viol += sum(int(r["parity_violations"]) for r in tab.rows) + int(tab.failed)
    record(12, viol == 0 and runs >= 7, f"{viol} parity violations across {runs} MC runs ({rows} degree rows)")


def test_criterion_13_cross_region():
    n = 2000
    t0 = time.perf_counter()
    ctx = ctx_of(n, 2.0)
    sc = RegionScheme.build(n)
    x = 1.0 - sc.b_n
    rmax = max(abs(cross_kernel(ctx, sx * x, sw * x).r) for sx in (1, -1) for sw in (1, -1))
    res = variance_count(ctx, sc.core, sc)
    cov = res.groups["cross"]
    frac = abs(cov) / res.total
    dt = time.perf_counter() - t0
    ok = rmax <= math.exp(-sc.B / 2) and frac <= 0.05 and dt < 300
    record(13, ok, f"|r| at core boundary={rmax:.2e} (<= e^-10={math.exp(-10):.2e}); "
                   f"|Cov(CoreIn, CoreOut)|/Var={frac:.2e} (<= 0.05), Var(Core)={res.total:.4f}; time={dt:.1f}s")


def test_criterion_14_hyperbolic(sweep_hyper_mu2):
    s, _, se = slope_regression(sweep_hyper_mu2)
    target = slope(0.5)
    dt = fixture_seconds(("sweep", 2.0, "gaussian", "hyperbolic", 2.0))
    ok = rel(s, target) <= 0.30 and dt < 1200
    record(14, ok, f"hyperbolic L=2 mu=2 slope={s:.4f}+-{se:.4f} vs slope(0.5)={target:.5f} "
                   f"(rel dev {rel(s, target):.1%}, tol 30%); {dt:.0f}s")
