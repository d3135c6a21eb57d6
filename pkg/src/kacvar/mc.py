"""Monte Carlo experiments on real-root counts.

Each degree draws its trials from a counter-based stream keyed by
(seed, degree), in fixed-size chunks.  Chunks are counted in parallel and
reduced in chunk order with exact integer sums, so a table depends only on
its configuration and never on the thread schedule.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from ._io import dumps17, fmt17
from .ensemble import EnsembleSpec, build_profile, sample_batch
from .errors import (CalibrationError, DegenerateDistribution, InsufficientData, InsufficientTrials,
                     InvalidInterval, InvalidSpec)
from .kacrice.scheme import RegionScheme
from .region import NEG_AXIS, POS_AXIS, Interval, Region
from .roots import GridCounter, GridParams

COLUMNS = ("n", "trials", "mean_total", "var_total", "mean_pos", "var_pos", "mean_neg", "var_neg",
           "mean_core_in", "mean_core_out", "cov_pos_neg", "ks_stat", "skewness", "parity_violations",
           "escalations", "seed")
INT_COLUMNS = {"n", "trials", "parity_violations", "escalations", "seed"}


@dataclass(frozen=True)
class ExperimentConfig:
    ensemble: EnsembleSpec
    degrees: tuple
    trials: int
    seed: int = 0
    B: float = 20.0
    d: float = 1.0
    bins: object = "fd"
    threads: int = 1
    chunk: int = 2048
    escalation_budget: float = 0.01
    grid: GridParams = GridParams()
    extra_regions: tuple = ()
    pair_products: tuple = ()
    keep_counts: bool = False

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(n) for n in self.degrees))
        if self.trials < 2:
            raise InsufficientTrials(f"need at least 2 trials, got {self.trials}")
        if not self.degrees:
            raise InvalidSpec("empty degree list")
        if any(b <= a for a, b in zip(self.degrees, self.degrees[1:])):
            raise InvalidSpec("degrees must be strictly increasing")
        if self.degrees[0] < 1:
            raise InvalidSpec("degrees must be positive")
        if not (0 <= self.seed < 2 ** 64):
            raise InvalidSpec("seed must be a 64-bit unsigned integer")
        if self.threads < 1 or self.chunk < 1:
            raise InvalidSpec("threads and chunk must be positive")
        for i, j in self.pair_products:
            if not (0 <= i < len(self.extra_regions) and 0 <= j < len(self.extra_regions)):
                raise InvalidSpec("pair_products index outside extra_regions")


@dataclass
class ExperimentTable:
    rows: list
    config: ExperimentConfig | None = None
    failed: bool = False
    histograms: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)

    def row(self, n):
        for r in self.rows:
            if r["n"] == n:
                return r
        raise KeyError(n)

    def column(self, name):
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([str(int(r[c])) if c in INT_COLUMNS else fmt17(r[c]) for c in COLUMNS])
        return buf.getvalue()

    def to_json(self, **extra):
        doc = {"failed": self.failed, "rows": [{c: r[c] for c in COLUMNS} for r in self.rows]}
        doc.update(extra)
        return dumps17(doc)

    def histogram_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("n", "bin_lo", "bin_hi", "count"))
        for n, (edges, cnt) in self.histograms.items():
            for lo, hi, c in zip(edges[:-1], edges[1:], cnt):
                w.writerow((n, fmt17(lo), fmt17(hi), int(c)))
        return buf.getvalue()

    @classmethod
    def from_rows(cls, rows):
        return cls(rows=[dict(r) for r in rows])


# ---------------------------------------------------------------- statistics

def _exact_moments(x):
    """(sum, sum of squares) as Python integers."""
    x = np.asarray(x, dtype=np.int64)
    return int(x.sum()), int((x * x).sum())


def sample_mean_var(x):
    """Unbiased mean and variance of integer data from exact integer sums."""
    T = len(x)
    s, s2 = _exact_moments(x)
    return s / T, (T * s2 - s * s) / (T * (T - 1))


def sample_cov(x, y):
    T = len(x)
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    sx, sy, sxy = int(x.sum()), int(y.sum()), int((x * y).sum())
    return (T * sxy - sx * sy) / (T * (T - 1))


def variance_stderr(x):
    """Large-sample standard error of the unbiased sample variance."""
    x = np.asarray(x, dtype=float)
    T = len(x)
    c = x - x.mean()
    m2 = (c * c).mean()
    m4 = (c ** 4).mean()
    return math.sqrt(max(m4 - (T - 3) / (T - 1) * m2 * m2, 0.0) / T)


def skewness(x):
    """Sample skewness g1 = m3 / m2^(3/2)."""
    x = np.asarray(x, dtype=float)
    c = x - x.mean()
    m2 = (c * c).mean()
    if m2 == 0:
        return math.nan
    return float((c ** 3).mean() / m2 ** 1.5)


def ks_distance(counts, n):
    """KS distance of standardized counts from N(0, 1) at parity-lattice midpoints.

    Counts lie on the lattice {k = n mod 2} of gap 2; the empirical CDF is
    compared with the normal CDF halfway between lattice points.
    """
    x = np.asarray(counts, dtype=np.int64)
    if len(x) < 100:
        raise InsufficientData(f"ks_distance needs at least 100 counts, got {len(x)}")
    mean, var = sample_mean_var(x)
    if var <= 0:
        raise DegenerateDistribution("all counts are equal")
    sd = math.sqrt(var)
    par = n % 2
    lo = int(x.min()) - 1
    if (lo - par) % 2 == 0:
        lo -= 1
    hi = int(x.max()) + 1
    mids = np.arange(lo, hi + 2, 2)
    emp = np.searchsorted(np.sort(x), mids, side="right") / len(x)
    return float(np.max(np.abs(emp - ndtr((mids - mean) / sd))))


def lattice_histogram(counts, bins="fd"):
    """Histogram of standardized counts with edges on lattice midpoints.

    ``bins="fd"`` takes the Freedman-Diaconis width, widened to a whole
    number of lattice gaps; an integer asks for about that many bins.
    """
    x = np.asarray(counts, dtype=float)
    mean = x.mean()
    sd = x.std(ddof=1)
    if sd == 0:
        edges = np.array([x[0] - 1.0, x[0] + 1.0])
        return (edges - mean), np.array([len(x)])
    lo, hi = x.min() - 1.0, x.max() + 1.0
    if bins == "fd":
        q75, q25 = np.percentile(x, [75, 25])
        width = 2.0 * (q75 - q25) / len(x) ** (1.0 / 3.0)
    else:
        width = (hi - lo) / max(int(bins), 1)
    k = max(1, int(math.ceil(width / 2.0)))
    edges = np.arange(lo, hi + 2.0 * k, 2.0 * k)
    cnt, _ = np.histogram(x, edges)
    return (edges - mean) / sd, cnt


def slope_regression(table, column="var_total"):
    """OLS fit of a column against ln n: (slope, intercept, stderr of slope)."""
    rows = table.rows if hasattr(table, "rows") else table
    ns = np.array([r["n"] for r in rows], dtype=float)
    ys = np.array([r[column] for r in rows], dtype=float)
    ok = np.isfinite(ys)
    ns, ys = ns[ok], ys[ok]
    if len(ns) < 3 or ns.max() < 4 * ns.min():
        raise InsufficientData("slope regression needs >= 3 degrees spanning a factor of 4")
    x = np.log(ns)
    xm, ym = x.mean(), ys.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (ys - ym)).sum() / sxx)
    icpt = float(ym - slope * xm)
    resid = ys - (icpt + slope * x)
    se = math.sqrt(float((resid ** 2).sum()) / (len(x) - 2) / sxx)
    return slope, icpt, se


def wilson_interval(k, T, z=1.959963984540054):
    """Wilson score interval for k successes out of T."""
    p = k / T
    den = 1.0 + z * z / T
    c = (p + z * z / (2 * T)) / den
    h = z * math.sqrt(p * (1 - p) / T + z * z / (4 * T * T)) / den
    lo = 0.0 if k == 0 else max(0.0, c - h)
    hi = 1.0 if k == T else min(1.0, c + h)
    return lo, hi


# ---------------------------------------------------------------- runner

def _regions_for(n, cfg):
    regs = [POS_AXIS, NEG_AXIS]
    scheme = RegionScheme.build(n, cfg.B, cfg.d) if RegionScheme.is_valid(n, cfg.B, cfg.d) else None
    if scheme is not None:
        regs += [scheme.core_in, scheme.core_out]
    return regs + list(cfg.extra_regions), scheme


def _count_degree(cfg, n):
    spec = cfg.ensemble.with_degree(n)
    profile = build_profile(spec)
    regions, scheme = _regions_for(n, cfg)
    counter = GridCounter(profile.n, regions, cfg.grid, profile.v ** 2)
    starts = list(range(0, cfg.trials, cfg.chunk))

    def work(s):
        T = min(cfg.chunk, cfg.trials - s)
        C = sample_batch(profile, spec.dist, cfg.seed, s, T, degree=n)
        return counter.count_batch(C)

    if cfg.threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            parts = list(ex.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    cat = lambda k: np.concatenate([p[k] for p in parts])
    return profile, regions, scheme, cat("counts"), cat("total"), cat("parity_ok"), cat("escalated")


def run_experiment(cfg: ExperimentConfig) -> ExperimentTable:
    rows, hists, extras, kept = [], {}, {}, {}
    failed = False
    nbase = 2
    for n in cfg.degrees:
        profile, regions, scheme, counts, total, parity_ok, escalated = _count_degree(cfg, n)
        T = cfg.trials
        n_esc = int(escalated.sum())
        if n_esc > cfg.escalation_budget * T:
            raise CalibrationError(f"n={n}: {n_esc} of {T} trials needed exact escalation "
                                   f"(budget {cfg.escalation_budget:.2%})")
        viol = int((~parity_ok).sum())
        failed |= viol > 0
        pos, neg = counts[:, 0], counts[:, 1]
        mt, vt = sample_mean_var(total)
        mp, vp = sample_mean_var(pos)
        mn, vn = sample_mean_var(neg)
        if scheme is not None:
            mci = sample_mean_var(counts[:, 2])[0]
            mco = sample_mean_var(counts[:, 3])[0]
        else:
            mci = mco = math.nan
        try:
            ks = ks_distance(total, profile.n)
        except (DegenerateDistribution, InsufficientData):
            ks = math.nan
        rows.append({"n": n, "trials": T, "mean_total": mt, "var_total": vt, "mean_pos": mp, "var_pos": vp,
                     "mean_neg": mn, "var_neg": vn, "mean_core_in": mci, "mean_core_out": mco,
                     "cov_pos_neg": sample_cov(pos, neg), "ks_stat": ks, "skewness": skewness(total),
                     "parity_violations": viol, "escalations": n_esc, "seed": cfg.seed})
        hists[n] = lattice_histogram(total, cfg.bins)
        ex = {"roots_at_zero": int((total - pos - neg).sum()),
              "var_total_se": variance_stderr(total), "mean_total_se": math.sqrt(vt / T)}
        base = nbase + (2 if scheme is not None else 0)
        regs = {}
        for i, reg in enumerate(cfg.extra_regions):
            c = counts[:, base + i]
            m, v = sample_mean_var(c)
            regs[reg.name] = {"mean": m, "var": v, "mean_se": math.sqrt(v / T), "var_se": variance_stderr(c)}
        ex["regions"] = regs
        prods = {}
        for i, j in cfg.pair_products:
            c = counts[:, base + i].astype(np.int64) * counts[:, base + j].astype(np.int64)
            m, v = sample_mean_var(c)
            prods[f"{cfg.extra_regions[i].name}*{cfg.extra_regions[j].name}"] = {"mean": m, "se": math.sqrt(v / T)}
        ex["products"] = prods
        extras[n] = ex
        if cfg.keep_counts:
            kept[n] = {"total": total, "regions": {r.name: counts[:, k] for k, r in enumerate(regions)}}
    return ExperimentTable(rows=rows, config=cfg, failed=failed, histograms=hists, extras=extras, counts=kept)


# ---------------------------------------------------------------- tail diagnostic

@dataclass(frozen=True)
class TailEstimate:
    probability: float
    ci_low: float
    ci_high: float
    k: int
    trials: int
    delta: float
    reference: float


def tail_interval(n, delta, B=20.0, side=1):
    """[a, b) in [1 - B/n, 1) with log((1 - a)/(1 - b)) = delta.

    ``side=-1`` returns the mirror image (-b, -a) on the negative axis.
    """
    a = 1.0 - B / n
    b = 1.0 - (B / n) * math.exp(-delta)
    return (a, b) if side > 0 else (-b, -a)


def tail_probability(cfg: ExperimentConfig, interval, k, beta=1.0):
    """P(N(I) >= k) at the first configured degree, with a Wilson interval.

    ``reference`` is (beta delta)^(2k/3) with delta the log ratio of the
    distances of the two endpoints to the unit point, a qualitative
    comparison curve only.  The interval may lie on either half axis.
    """
    a, b = interval
    if not a < b:
        raise InvalidInterval(f"empty interval [{a}, {b})")
    if k < 2:
        raise InvalidSpec("tail order k must be at least 2")
    n = cfg.degrees[0]
    near, far = max(abs(a), abs(b)), min(abs(a), abs(b))
    delta = math.log((1.0 - far) / (1.0 - near)) if near < 1.0 else math.inf
    ref = (beta * delta) ** (2.0 * k / 3.0)
    if k > n:
        return TailEstimate(0.0, 0.0, 0.0, k, cfg.trials, delta, ref)
    reg = Region((Interval(a, b),), tag="tail")
    sub = ExperimentConfig(ensemble=cfg.ensemble, degrees=(n,), trials=cfg.trials, seed=cfg.seed, B=cfg.B,
                           d=cfg.d, threads=cfg.threads, chunk=cfg.chunk,
                           escalation_budget=cfg.escalation_budget, grid=cfg.grid, extra_regions=(reg,),
                           keep_counts=True)
    tab = run_experiment(sub)
    c = tab.counts[n]["regions"]["tail"]
    hits = int((c >= k).sum())
    lo, hi = wilson_interval(hits, cfg.trials)
    return TailEstimate(hits / cfg.trials, lo, hi, k, cfg.trials, delta, ref)
