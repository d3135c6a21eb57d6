"""Command line front-end: ``kacvar <subcommand> [flags]``.

Flag values come from, in order of precedence, the command line, a
``--config`` file of ``key = value`` lines, and the built-in defaults.
Every run writes ``manifest.json`` into ``--out``; the manifest hash covers
the subcommand, the fully resolved configuration and the tool version.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import math
import os
import sys

import numpy as np

from . import __version__
from ._io import dumps17
from .constants import KAPPA0, kappa_report, tau_of
from .ensemble import EnsembleSpec, build_profile
from .errors import InvalidSpec, KacvarError, SchemaError, SpecMismatch, UnsupportedDistribution
from .kacrice.context import KernelContext
from .kacrice.integrate import VarianceSettings, expected_count, variance_count, variance_json
from .kacrice.quad import QuadParams
from .kacrice.scheme import RegionScheme, domination_margin, dominance_factor, dominated_factor
from .mc import COLUMNS, ExperimentConfig, ExperimentTable, run_experiment
from .region import FULL_LINE, NEG_AXIS, POS_AXIS, Interval, Region
from . import svg

MAX_SWEEP_DEGREE = 2000


# ---------------------------------------------------------------- parsing helpers

def parse_degrees(text):
    """Degree list from ``log:lo:hi:k``, ``range:lo:hi[:step]``, ``all`` or ``a,b,c``."""
    text = str(text).strip()
    if text == "all":
        return list(range(2, MAX_SWEEP_DEGREE + 1))
    if text.startswith("log:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise InvalidSpec(f"degrees: expected log:lo:hi:count, got {text!r}")
        lo, hi, k = int(parts[1]), int(parts[2]), int(parts[3])
        if not (1 <= lo < hi and k >= 2):
            raise InvalidSpec(f"degrees: bad log sweep {text!r}")
        raw = np.rint(np.exp(np.linspace(math.log(lo), math.log(hi), k))).astype(int)
        out = []
        for v in raw:
            out.append(int(max(v, out[-1] + 1)) if out else int(v))
        return out
    if text.startswith("range:"):
        parts = [int(p) for p in text.split(":")[1:]]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(parts[0], parts[1] + 1, step))
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise InvalidSpec(f"degrees: cannot parse {text!r}") from exc


def parse_region(text, n):
    """Named region or ``lo:hi`` half-open interval."""
    names = {"full": FULL_LINE, "pos": POS_AXIS, "neg": NEG_AXIS}
    if text in names:
        return names[text]
    if text in ("core", "core_in", "core_out", "bulk", "near_unit"):
        scheme = RegionScheme.build(n)
        return getattr(scheme, text)
    if ":" in text:
        lo, hi = (float(p) for p in text.split(":"))
        return Region((Interval(lo, hi),), tag=f"[{lo:g},{hi:g})")
    raise InvalidSpec(f"region: unknown region {text!r}")


def _read_table(path):
    try:
        with open(path) as fh:
            return [float(v) for v in fh.read().replace(",", " ").split()]
    except OSError as exc:
        raise InvalidSpec(f"cannot read table {path!r}: {exc}") from exc


def spec_from_args(a, degree=None):
    return EnsembleSpec(kind=a.ensemble, degree=int(degree if degree is not None else a.n), ell=a.ell,
                        mu=a.mu, dist=a.dist, L=a.L, tau=a.tau,
                        v_table=tuple(_read_table(a.v_table)) if a.v_table else None,
                        m_table=tuple(_read_table(a.m_table)) if a.m_table else None)


# ---------------------------------------------------------------- argument parser

def _add_global(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(7), help="64-bit seed")
    p.add_argument("--threads", type=int, default=d(1))
    p.add_argument("--out", default=d("out"), help="output directory")
    p.add_argument("--config", default=d(None), help="key=value defaults file")


def _add_ensemble(p):
    p.add_argument("--ensemble", choices=("kac", "hyperbolic", "generalized"), default="kac")
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--dist", choices=("gaussian", "rademacher", "uniform"), default="gaussian")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--v-table", dest="v_table", default=None)
    p.add_argument("--m-table", dest="m_table", default=None)


def build_parser():
    p = argparse.ArgumentParser(prog="kacvar", description="Real-root statistics of random polynomials")
    p.add_argument("--version", action="version", version=__version__)
    _add_global(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="Monte Carlo degree sweep")
    _add_global(s, suppress=True)
    _add_ensemble(s)
    s.add_argument("--degrees", default="log:2:2000:25")
    s.add_argument("--trials", type=int, default=1500)
    s.add_argument("--bins", default="fd")
    s.add_argument("--chunk", type=int, default=2048)
    s.add_argument("--svg", action="store_true", help="also write the three figures")

    a = sub.add_parser("analytic", help="Kac-Rice expected count and variance")
    _add_global(a, suppress=True)
    _add_ensemble(a)
    a.add_argument("--n", type=int, default=20)
    a.add_argument("--region", action="append", default=None)
    a.add_argument("--no-variance", dest="variance", action="store_false")
    a.add_argument("--eps-diag", dest="eps_diag", type=float, default=1e-4)
    a.add_argument("--tol", type=float, default=1e-6)

    k = sub.add_parser("kappa", help="asymptotic variance constants")
    _add_global(k, suppress=True)
    k.add_argument("--tau", type=float, action="append", default=None)
    k.add_argument("--ell", type=int, default=None)
    k.add_argument("--L", type=float, default=1.0)

    c = sub.add_parser("compare", help="non-centered vs centered comparison")
    _add_global(c, suppress=True)
    _add_ensemble(c)
    c.add_argument("--mu-ref", dest="mu_ref", type=float, default=0.0)
    c.add_argument("--spec-a", dest="spec_a", default=None, help="key=value,... overrides for spec A")
    c.add_argument("--spec-b", dest="spec_b", default=None, help="key=value,... overrides for spec B")
    c.add_argument("--n", type=int, default=2000)
    c.add_argument("--trials", type=int, default=1500)

    f = sub.add_parser("figures", help="SVG figures from a simulate table")
    _add_global(f, suppress=True)
    f.add_argument("--table", required=True)
    f.add_argument("--hist", default=None)
    return p


def _parse_config(path):
    out = {}
    try:
        with open(path) as fh:
            for ln, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise InvalidSpec(f"config {path}:{ln}: expected key = value")
                key, val = (t.strip() for t in line.split("=", 1))
                out[key.replace("-", "_")] = val
    except OSError as exc:
        raise InvalidSpec(f"cannot read config {path!r}: {exc}") from exc
    return out


def _apply_config(parser, argv, cfg):
    """Re-parse with config values installed as subparser defaults."""
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    ns0 = parser.parse_args(argv)
    sp = sub_action.choices[ns0.command]
    known = {a.dest: a for a in sp._actions}
    known.update({a.dest: a for a in parser._actions})
    conv = {}
    for key, raw in cfg.items():
        if key not in known or key in ("help", "command", "config"):
            raise InvalidSpec(f"config: unknown key {key!r} for {ns0.command}")
        act = known[key]
        if isinstance(act, argparse._StoreFalseAction) or isinstance(act, argparse._StoreTrueAction):
            val = raw.lower() in ("1", "true", "yes", "on")
        else:
            try:
                val = act.type(raw) if act.type else raw
            except (TypeError, ValueError) as exc:
                raise InvalidSpec(f"config: {key}: cannot parse {raw!r}") from exc
            if act.choices and val not in act.choices:
                raise InvalidSpec(f"config: {key}: {val!r} not in {sorted(act.choices)}")
            if isinstance(act, argparse._AppendAction):
                val = [val]
        conv[key] = val
    sp.set_defaults(**conv)
    parser.set_defaults(**{k: v for k, v in conv.items() if k in ("seed", "threads", "out")})
    return parser.parse_args(argv)


def parse_args(argv):
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.config:
        ns = _apply_config(parser, argv, _parse_config(ns.config))
    return ns


# ---------------------------------------------------------------- manifest

def resolved_config(ns):
    return {k: v for k, v in sorted(vars(ns).items()) if k not in ("config",)}


def manifest_hash(command, config):
    # the output directory is where the run lands, not what it computes
    config = {k: v for k, v in config.items() if k != "out"}
    text = dumps17({"command": command, "config": config, "version": __version__}, indent=0)
    return hashlib.sha256(text.encode()).hexdigest()


class Run:
    def __init__(self, ns):
        self.ns = ns
        self.config = resolved_config(ns)
        self.hash = manifest_hash(ns.command, self.config)
        self.started = _dt.datetime.now(_dt.timezone.utc).isoformat()
        self.outputs = {}
        os.makedirs(ns.out, exist_ok=True)

    def write(self, name, text):
        path = os.path.join(self.ns.out, name)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        self.outputs[name] = hashlib.sha256(text.encode()).hexdigest()
        return path

    def finish(self):
        man = {"subcommand": self.ns.command, "config": self.config, "version": __version__,
               "seed": self.ns.seed, "hash": self.hash, "started": self.started,
               "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(), "outputs": self.outputs}
        path = os.path.join(self.ns.out, "manifest.json")
        with open(path, "w") as fh:
            fh.write(dumps17(man))
        return man


# ---------------------------------------------------------------- figures

def figure_svgs(rows, hist_rows=None, meta=None):
    """The three standard figures from table rows (and histogram sidecar rows)."""
    if not rows:
        raise SchemaError("table has no rows")
    need = ("n", "var_total")
    for c in need:
        if c not in rows[0]:
            raise SchemaError(f"table lacks column {c!r}")
    n = np.array([float(r["n"]) for r in rows])
    var = np.array([float(r["var_total"]) for r in rows])
    with np.errstate(divide="ignore", invalid="ignore"):
        norm = np.where(n > 1, var / np.log(n), np.nan)
    out = {
        "variance.svg": svg.line_plot(n, [var], "n", "var_total", "Sample variance of the root count",
                                           labels=["var_total"], meta=meta),
        "normalized_variance.svg": svg.line_plot(n, [norm], "n", "var_total / ln n", "Variance normalized by ln n",
                                             labels=["var_total/ln n"], hlines=[(2.0 * KAPPA0, "2 kappa_0")],
                                             meta=meta),
    }
    if hist_rows:
        top = max(int(float(r["n"])) for r in hist_rows)
        sel = [r for r in hist_rows if int(float(r["n"])) == top]
        edges = [float(sel[0]["bin_lo"])] + [float(r["bin_hi"]) for r in sel]
        counts = [int(r["count"]) for r in sel]
        out["histogram.svg"] = svg.histogram_plot(edges, counts, f"standardized root count (n={top})",
                                                       title="Standardized root count", meta=meta)
    return out


def _read_csv(path, required):
    try:
        with open(path, newline="") as fh:
            rd = csv.DictReader(fh)
            rows = list(rd)
            header = rd.fieldnames or []
    except OSError as exc:
        raise SchemaError(f"cannot read {path!r}: {exc}") from exc
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


# ---------------------------------------------------------------- subcommands

def cmd_simulate(ns):
    run = Run(ns)
    degrees = parse_degrees(ns.degrees)
    bins = ns.bins if ns.bins == "fd" else int(ns.bins)
    cfg = ExperimentConfig(ensemble=spec_from_args(ns, degree=degrees[0]), degrees=tuple(degrees),
                           trials=ns.trials, seed=ns.seed, bins=bins, threads=ns.threads, chunk=ns.chunk)
    table = run_experiment(cfg)
    run.write("simulate.csv", table.to_csv())
    run.write("simulate.json", table.to_json(manifest_hash=run.hash))
    run.write("histograms.csv", table.histogram_csv())
    if ns.svg:
        hist_rows = list(csv.DictReader(table.histogram_csv().splitlines()))
        for name, text in figure_svgs(table.rows, hist_rows, meta=f"manifest {run.hash}").items():
            run.write(name, text)
    run.finish()
    print(f"wrote {len(table.rows)} rows to {os.path.join(ns.out, 'simulate.csv')}")
    if table.failed:
        print("parity violations detected: run marked failed", file=sys.stderr)
        return 3
    return 0


def cmd_analytic(ns):
    if ns.dist != "gaussian":
        raise UnsupportedDistribution(f"the analytic engine needs Gaussian coefficients, got {ns.dist!r}")
    run = Run(ns)
    ctx = KernelContext(build_profile(spec_from_args(ns)))
    regions = ns.region or ["full"]
    results = []
    st = VarianceSettings(eps_diag=ns.eps_diag, abs_tol=ns.tol, rel_tol=ns.tol)
    scheme = RegionScheme.build(ctx.n) if RegionScheme.is_valid(ctx.n) else None
    for name in regions:
        reg = parse_region(name, ctx.n)
        if ns.variance:
            res = variance_count(ctx, reg, scheme, st)
            rec = variance_json(ctx, reg, res)
        else:
            e, err, parts = expected_count(ctx, reg, QuadParams(abs_tol=1e-8), detail=True)
            prof = ctx.profile
            rec = {"n": prof.n, "mu": prof.mu, "kind": prof.kind, "region": reg.name, "expected": e,
                   "variance": None, "blocks": {f"rho1:{k}": v for k, v in parts.items()}, "quad_error": err,
                   "settings": {"abs_tol": 1e-8}}
        results.append(rec)
    doc = {"manifest_hash": run.hash, "results": results}
    text = dumps17(doc)
    run.write("analytic.json", text)
    run.finish()
    sys.stdout.write(dumps17(results[0] if len(results) == 1 else results))
    return 0


def cmd_kappa(ns):
    run = Run(ns)
    taus = list(ns.tau or [])
    if ns.ell is not None:
        taus.append(tau_of(ns.ell, ns.L))
    if not taus:
        taus = [0.0]
    reps = [kappa_report(t) for t in taus]
    out = reps[0] if len(reps) == 1 else reps
    run.write("kappa.json", dumps17({"manifest_hash": run.hash, "results": reps}))
    run.finish()
    sys.stdout.write(dumps17(out))
    return 0


_SPEC_FIELDS = {"kind": str, "degree": int, "ell": int, "mu": float, "dist": str, "L": float, "tau": float}


def _spec_override(base, text):
    if not text:
        return base
    kw = {}
    for item in text.split(","):
        if "=" not in item:
            raise InvalidSpec(f"spec override {item!r}: expected key=value")
        k, v = (t.strip() for t in item.split("=", 1))
        if k not in _SPEC_FIELDS:
            raise InvalidSpec(f"spec override: unknown field {k!r}")
        kw[k] = _SPEC_FIELDS[k](v)
    from dataclasses import replace
    return replace(base, **kw)


def compare_specs(a, b):
    """Check that two specs differ only in the mean and that one is centered."""
    from dataclasses import fields
    diff = [f.name for f in fields(a) if f.name != "mu" and getattr(a, f.name) != getattr(b, f.name)]
    if diff:
        raise SpecMismatch(f"specs differ in {diff}; only mu may differ")
    if a.mu != b.mu and a.mu != 0 and b.mu != 0:
        raise SpecMismatch("one of the compared specs must be centered (mu = 0)")


def _margin_regime(ctx, region_tag, n, C_dom=1.0, C_sub=4.0, theta=0.5, samples=200):
    """Classify a half axis by domination margins at graded sample points.

    The margin is divided by each factor function; the axis is suppressed
    when the smallest ratio against the log factor is at least ``C_dom`` and
    centered-equivalent when the largest ratio against the power factor stays
    below ``C_sub``.
    """
    t = 1.0 + 1.0 / n - np.exp(-np.linspace(-math.log1p(1.0 / n) + 1e-9, math.log(n) - 1e-9, samples))
    t = t[(t > 0) & (t < 1)]
    sign = 1.0 if region_tag == "PosAxis" else -1.0
    m_all = np.array([domination_margin(c, sign * x, 0) for c in (ctx, ctx.star) for x in t])
    t_all = np.concatenate([t, t])
    c_dom = float(np.min(m_all / np.array([dominance_factor(x, n) for x in t_all])))
    c_sub = float(np.max(m_all / np.array([dominated_factor(x, n, 1.0, theta) for x in t_all])))
    if c_dom >= C_dom:
        regime = "suppressed"
    elif c_sub <= C_sub:
        regime = "centered-equivalent"
    else:
        regime = "mixed"
    return regime, float(np.median(m_all)), c_dom, c_sub


def cmd_compare(ns):
    run = Run(ns)
    base = spec_from_args(ns, degree=ns.n)
    spec_a = _spec_override(base, ns.spec_a)
    spec_b = _spec_override(base.with_mu(ns.mu_ref), ns.spec_b)
    compare_specs(spec_a, spec_b)
    report = compare_report(spec_a, spec_b, ns.trials, ns.seed, ns.threads)
    report["manifest_hash"] = run.hash
    run.write("compare.json", dumps17(report))
    run.finish()
    sys.stdout.write(dumps17(report))
    return 0


def compare_report(spec_a, spec_b, trials, seed, threads=1):
    n = spec_a.degree
    tabs = []
    for sp in (spec_a, spec_b):
        cfg = ExperimentConfig(ensemble=sp, degrees=(n,), trials=trials, seed=seed, threads=threads)
        tabs.append(run_experiment(cfg).rows[0])
    ctx = KernelContext(build_profile(spec_a))
    out = {"n": n, "mu_a": spec_a.mu, "mu_b": spec_b.mu, "trials": trials, "seed": seed, "regions": {}}
    for tag, col in (("FullLine", "var_total"), ("PosAxis", "var_pos"), ("NegAxis", "var_neg")):
        va, vb = tabs[0][col], tabs[1][col]
        rec = {"var_a": va, "var_b": vb, "ratio": va / vb if vb else math.nan}
        if tag != "FullLine":
            regime, med, fdom, fsub = _margin_regime(ctx, tag, ctx.n)
            rec.update({"regime": regime, "median_margin": med, "min_dominance_ratio": fdom,
                        "max_dominated_ratio": fsub})
        out["regions"][tag] = rec
    return out


def cmd_figures(ns):
    run = Run(ns)
    rows = _read_csv(ns.table, ("n", "var_total"))
    hist = _read_csv(ns.hist, ("n", "bin_lo", "bin_hi", "count")) if ns.hist else None
    for name, text in figure_svgs(rows, hist, meta=f"manifest {run.hash}").items():
        run.write(name, text)
    run.finish()
    print(f"wrote {len(run.outputs)} figures to {ns.out}")
    return 0


COMMANDS = {"simulate": cmd_simulate, "analytic": cmd_analytic, "kappa": cmd_kappa,
            "compare": cmd_compare, "figures": cmd_figures}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = parse_args(argv)
        return COMMANDS[ns.command](ns)
    except KacvarError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
