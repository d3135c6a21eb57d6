"""Expected root counts and variances by integrating the correlation functions.

Each region is split into *segments*: magnitude ranges [p, q] within [0, 1]
for one sign, either of x itself ("in") or of the reciprocal coordinate
w = 1/x ("out").  Integration uses the graded variable z with
t = 1 + 1/n - exp(-z), which spreads the near-unit scale 1 - |t| ~ 1/n
evenly.  Diagonal blocks use (z, d), where y has graded coordinate z - d,
and cut out the band of pseudo-hyperbolic width < eps_diag around y = x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidSpec
from .quad import QuadParams, adaptive_1d, adaptive_2d
from .rho import rho1_array, rho2_from_regression
from .pairs import regress_cross, regress_same

# 1 - r^2 below this in the cross block: the pair is numerically on the diagonal
CROSS_COLLAPSE = 1e-10


@dataclass(frozen=True)
class Segment:
    kind: str  # "in" or "out"
    sign: int  # +1 or -1
    p: float  # magnitude range [p, q] in [0, 1]
    q: float

    @property
    def name(self):
        s = "+" if self.sign > 0 else "-"
        return f"{self.kind}{s}[{self.p:.6g},{self.q:.6g}]"


def region_segments(region):
    """Split a Region into in/out magnitude segments, merging adjacent ones."""
    segs = []
    for iv in region.intervals:
        lo, hi = iv.lo, iv.hi
        # inside [-1, 1]
        a, b = max(lo, 0.0), min(hi, 1.0)
        if a < b:
            segs.append(Segment("in", 1, a, b))
        a, b = max(-hi, 0.0), min(-lo, 1.0)
        if a < b:
            segs.append(Segment("in", -1, a, b))
        # outside: w = 1/x
        if hi > 1.0:
            a = 0.0 if math.isinf(hi) else 1.0 / hi
            b = 1.0 / max(lo, 1.0)
            if a < b:
                segs.append(Segment("out", 1, a, b))
        if lo < -1.0:
            a = 0.0 if math.isinf(lo) else 1.0 / (-lo)
            b = 1.0 / max(-hi, 1.0)
            if a < b:
                segs.append(Segment("out", -1, a, b))
    segs.sort(key=lambda s: (s.kind, s.sign, s.p))
    merged = []
    for s in segs:
        if merged and merged[-1].kind == s.kind and merged[-1].sign == s.sign and merged[-1].q >= s.p:
            m = merged[-1]
            merged[-1] = Segment(s.kind, s.sign, m.p, max(m.q, s.q))
        else:
            merged.append(s)
    return merged


class _Graded:
    """t = 1 + c - exp(-z) on [0, 1], c = 1/n."""

    def __init__(self, n):
        self.c = 1.0 / n

    def z(self, t):
        return -math.log(1.0 + self.c - t)

    def t(self, z):
        return 1.0 + self.c - np.exp(-z)

    def breaks(self, p, q, step=1.0):
        za, zb = self.z(p), self.z(q)
        k = max(1, int(math.ceil((zb - za) / step)))
        return np.linspace(za, zb, k + 1)


@dataclass(frozen=True)
class VarianceSettings:
    eps_diag: float = 1e-4
    abs_tol: float = 1e-6
    rel_tol: float = 1e-6
    max_cells: int = 6000
    inner_panels: int = 16
    centered_formula: bool = False


@dataclass
class VarianceResult:
    total: float
    expected: float
    blocks: dict
    quad_error: float
    groups: dict = field(default_factory=dict)
    settings: dict = field(default_factory=dict)


def _ctx_of(ctx, kind):
    return ctx if kind == "in" else ctx.star


def expected_count(ctx, region, params: QuadParams | None = None, detail=False):
    """E N(region) = sum over segments of the integral of the root density."""
    params = params or QuadParams(abs_tol=1e-8)
    g = _Graded(ctx.n)
    total, err = 0.0, 0.0
    parts = {}
    segs = region_segments(region)
    tol_each = QuadParams(abs_tol=params.abs_tol / max(1, len(segs)), rel_tol=params.rel_tol,
                          max_cells=params.max_cells, batch=params.batch)
    for s in segs:
        c = _ctx_of(ctx, s.kind)
        f = lambda z, c=c, s=s: rho1_array(c, s.sign * g.t(z)) * np.exp(-z)
        res = adaptive_1d(f, g.z(s.p), g.z(s.q), tol_each, breaks=g.breaks(s.p, s.q))
        parts[s.name] = res.value
        total += res.value
        err += res.error
    if detail:
        return total, err, parts
    return total


def _rho2_same(ctx, x, y, st):
    reg = regress_same(ctx, x, y)
    if st.centered_formula:
        return _centered_rho2(reg)
    return rho2_from_regression(reg, method="panel", K=st.inner_panels)[0]


def _centered_rho2(reg):
    with np.errstate(all="ignore"):
        sq = np.sqrt(reg.q)
        val = reg.s1 * reg.s2 * (sq + reg.delta * np.arctan2(reg.delta, sq)) / (math.pi ** 2 * np.sqrt(reg.omr2))
    return np.where(np.isfinite(val), val, 0.0)


def _rho2_cross(ctx, x, w, st):
    reg = regress_cross(ctx, x, w)
    val = _centered_rho2(reg) if st.centered_formula else rho2_from_regression(reg, "panel", K=st.inner_panels)[0]
    return np.where(reg.omr2 < CROSS_COLLAPSE, 0.0, val)


def _band_edge(t, eps):
    """Magnitude y < t at pseudo-hyperbolic distance eps from t (same sign)."""
    return (t - eps) / (1.0 - eps * t)


def _diag_block(ctx, seg, g, st, qp):
    """2 * integral over {y < x in seg, rho(x, y) >= eps} of rho2 - rho1 rho1, plus band term."""
    c = _ctx_of(ctx, seg.kind)
    sg = seg.sign
    zp = g.z(seg.p)
    eps = st.eps_diag

    def lower_d(z):
        tx = g.t(z)
        ye = np.maximum(_band_edge(tx, eps), seg.p)
        return z + np.log(1.0 + g.c - ye), tx

    def F(z, s):
        d_lo, tx = lower_d(z)
        d_hi = z - zp
        span = np.maximum(d_hi - d_lo, 0.0)
        d = d_lo + s * span
        ty = g.t(z - d)
        x, y = sg * tx, sg * ty
        ok = span > 0
        out = np.zeros_like(z)
        if np.any(ok):
            xs, ys = x[ok], y[ok]
            val = _rho2_same(c, xs, ys, st) - rho1_array(c, xs) * rho1_array(c, ys)
            jac = np.exp(-z[ok]) * np.exp(-(z[ok] - d[ok])) * span[ok]
            out[ok] = val * jac
        return out

    zb = g.breaks(seg.p, seg.q)
    res = adaptive_2d(F, zb, np.linspace(0.0, 1.0, 5), qp)

    def band(z):
        tx = g.t(z)
        ye = np.maximum(_band_edge(tx, eps), seg.p)
        width = tx - ye
        ok = width > 0
        out = np.zeros_like(z)
        if np.any(ok):
            xs, ys = sg * tx[ok], sg * ye[ok]
            val = _rho2_same(c, xs, ys, st) - rho1_array(c, xs) * rho1_array(c, ys)
            out[ok] = val * width[ok] * np.exp(-z[ok])
        return out

    bres = adaptive_1d(band, zb[0], zb[-1], QuadParams(abs_tol=qp.abs_tol * 1e-2, rel_tol=1e-8), breaks=zb)
    return 2.0 * res.value, 2.0 * bres.value, 2.0 * (res.error + bres.error)


def _rect_block(ctx, s1, s2, g, st, qp):
    """Integral over seg1 x seg2 of rho2 - rho1 rho1 (no symmetry factor)."""
    same = s1.kind == s2.kind

    def F(z1, z2):
        t1, t2 = g.t(z1), g.t(z2)
        a, b = s1.sign * t1, s2.sign * t2
        if same:
            c = _ctx_of(ctx, s1.kind)
            val = _rho2_same(c, a, b, st) - rho1_array(c, a) * rho1_array(c, b)
        else:
            # order as (inner x, outer w)
            if s1.kind == "in":
                x, w = a, b
            else:
                x, w = b, a
            val = _rho2_cross(ctx, x, w, st) - rho1_array(ctx, x) * rho1_array(ctx.star, w)
        return val * np.exp(-z1) * np.exp(-z2)

    res = adaptive_2d(F, g.breaks(s1.p, s1.q), g.breaks(s2.p, s2.q), qp)
    return res.value, res.error


def variance_count(ctx, region, scheme=None, settings: VarianceSettings | None = None):
    """Var N(region) = integral of (rho2 - rho1 rho1) over region^2 + E N(region).

    The result carries every block, and the group sums ``inner`` (pairs
    inside [-1, 1]), ``outer`` (pairs outside) and ``cross`` (one of each,
    without the factor 2): total = inner + outer + 2 cross + expected.
    """
    st = settings or VarianceSettings()
    g = _Graded(ctx.n)
    segs = region_segments(region)
    nblocks = len(segs) * (len(segs) + 1) // 2
    qp = QuadParams(abs_tol=st.abs_tol / max(1, nblocks), rel_tol=st.rel_tol, max_cells=st.max_cells)
    blocks = {}
    groups = {"inner": 0.0, "outer": 0.0, "cross": 0.0, "band": 0.0}
    err = 0.0
    for i, s in enumerate(segs):
        v, b, e = _diag_block(ctx, s, g, st, qp)
        blocks[f"diag:{s.name}"] = v
        blocks[f"band:{s.name}"] = b
        groups["inner" if s.kind == "in" else "outer"] += v + b
        groups["band"] += b
        err += e
        for s2 in segs[i + 1:]:
            v, e = _rect_block(ctx, s, s2, g, st, qp)
            blocks[f"pair:{s.name}x{s2.name}"] = 2.0 * v
            err += 2.0 * e
            if s.kind == s2.kind:
                groups["inner" if s.kind == "in" else "outer"] += 2.0 * v
            else:
                groups["cross"] += v
    mean, merr, parts = expected_count(ctx, region, QuadParams(abs_tol=1e-9), detail=True)
    for k, v in parts.items():
        blocks[f"rho1:{k}"] = v
    total = groups["inner"] + groups["outer"] + 2.0 * groups["cross"] + mean
    groups["expected"] = mean
    sett = {"eps_diag": st.eps_diag, "abs_tol": st.abs_tol, "rel_tol": st.rel_tol,
            "inner_panels": st.inner_panels, "centered_formula": st.centered_formula}
    if scheme is not None:
        sett["scheme"] = scheme.to_dict()
    return VarianceResult(total=max(total, 0.0) if total > -st.abs_tol else total, expected=mean,
                          blocks=blocks, quad_error=err + merr, groups=groups, settings=sett)


def variance_json(ctx, region, res: VarianceResult):
    prof = ctx.profile
    return {"n": int(prof.n), "mu": float(prof.mu), "kind": prof.kind, "region": region.name,
            "expected": res.expected, "variance": res.total, "blocks": res.blocks,
            "groups": res.groups, "quad_error": res.quad_error, "settings": res.settings}
