"""Real-root counting for sampled polynomials.

The fast path evaluates P and its reversed polynomial on a fixed node set in
[-1, 1] and counts roots cell by cell: a sign change gives an odd count, the
cubic Hermite interpolant through the end values and slopes gives a second
opinion, and cells where the two disagree are bisected.  Roots with |x| > 1
are counted as roots of the reversed polynomial in (-1, 1).

Node placement: x = 1 + 1/n - exp(-u) on each half-axis with u uniform at K
points per unit, so the spacing shrinks like 1 - |x| + 1/n and stays finite at
|x| = 1.

Exact roots at 0 and at +-1, which lattice-valued coefficients produce with
positive probability, are removed exactly before counting and added back with
their multiplicity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _backend
from .errors import EvalOverflow, UnresolvedSignChange, ZeroPolynomial
from .region import FULL_LINE, NEG_AXIS, POS_AXIS
from .sturm import SturmCounter

# above this degree an unresolved cell is first retried on a finer grid
STURM_DIRECT_MAX_DEGREE = 256


@dataclass(frozen=True)
class GridParams:
    K: float = 40.0
    max_depth: int = 30
    small: float = 1e-3
    comp_threshold: float = 0.9


@dataclass
class RootCountRecord:
    total: int
    per_region: dict
    method: str = "grid"
    refinement_depth: int = 0
    degree: int = 0
    parity_ok: bool = True


def eval_poly(sample, x, comp_threshold=0.9):
    """Horner value of the sample at x (scalar or array).

    A compensated Horner scheme is used where |x| > comp_threshold.
    """
    coeffs = np.ascontiguousarray(getattr(sample, "coeffs", sample), dtype=float)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(xs)):
        raise EvalOverflow(float(xs[~np.isfinite(xs)][0]), "evaluation point is not finite")
    with np.errstate(over="ignore", invalid="ignore"):
        val, _ = _backend.horner(coeffs, np.ascontiguousarray(xs), comp_threshold)
    bad = ~np.isfinite(val)
    if np.any(bad):
        raise EvalOverflow(float(xs[bad][0]))
    return float(val[0]) if np.ndim(x) == 0 else val


def unit_nodes(n, K=40.0):
    """Nodes on [0, 1], uniform in u with x = 1 + 1/n - exp(-u)."""
    c = 1.0 / n
    u0, u1 = -math.log1p(c), math.log(n)
    steps = max(2, int(math.ceil(K * (u1 - u0))))
    u = np.linspace(u0, u1, steps + 1)
    x = 1.0 + c - np.exp(-u)
    x[0], x[-1] = 0.0, 1.0
    return np.unique(np.clip(x, 0.0, 1.0))


def symmetric_nodes(n, K=40.0, extra=()):
    half = unit_nodes(n, K)
    nodes = np.concatenate([-half[::-1], half, np.asarray(list(extra), dtype=float)])
    nodes = nodes[(nodes >= -1.0) & (nodes <= 1.0)]
    return np.unique(nodes)


class GridCounter:
    """Cell-based counter for a fixed degree and a fixed list of regions."""

    def __init__(self, n, regions, params=GridParams(), v2=None):
        self.n = int(n)
        self.params = params
        self.regions = list(regions)
        inner, outer = set(), set()
        for reg in self.regions:
            for p in reg.breakpoints():
                if -1.0 < p < 1.0:
                    inner.add(p)
                elif abs(p) > 1.0:
                    outer.add(1.0 / p)
        self.nodes_p = symmetric_nodes(self.n, params.K, inner)
        self.nodes_s = symmetric_nodes(self.n, params.K, outer)
        if v2 is None:
            v2 = np.ones(self.n + 1)
        self.v2 = np.asarray(v2, dtype=float)
        self.scale_p = self._scale(self.v2, self.nodes_p)
        self.scale_s = self._scale(self.v2[::-1].copy(), self.nodes_s)
        mid_p = 0.5 * (self.nodes_p[1:] + self.nodes_p[:-1])
        mid_s = 0.5 * (self.nodes_s[1:] + self.nodes_s[:-1])
        x_s = 1.0 / mid_s
        kp, ks = len(mid_p), len(mid_s)
        self.member = np.zeros((kp + ks, len(self.regions)), dtype=np.int64)
        for r, reg in enumerate(self.regions):
            self.member[:kp, r] = [reg.contains(x) for x in mid_p]
            self.member[kp:, r] = [reg.contains(x) for x in x_s]
        self.special_member = {
            p: np.array([reg.contains(p) for reg in self.regions], dtype=np.int64) for p in (0.0, 1.0, -1.0)
        }

    @staticmethod
    def _scale(v2, nodes):
        out = np.empty(len(nodes))
        u = nodes * nodes
        acc = np.zeros(len(nodes))
        for w in v2[::-1]:
            acc = acc * u + w
        out[:] = np.sqrt(acc)
        return out

    # -- fast path -------------------------------------------------------
    def _kernel(self, C, params=None):
        p = params or self.params
        return _backend.count_cells(np.ascontiguousarray(C, dtype=float), self.nodes_p, self.scale_p,
                                    self.nodes_s, self.scale_s, p.max_depth, p.small, p.comp_threshold)

    def count_batch(self, C):
        """Region counts for each row of C.

        Returns a dict with ``counts`` (T, R), ``total`` (T,), ``parity_ok``
        (T,), ``escalated`` (T,), ``depth`` (T,).
        """
        C = np.ascontiguousarray(C, dtype=float)
        T = C.shape[0]
        special = self._special_rows(C)
        cells, status, depth = self._kernel(C)
        counts = cells.astype(np.int64) @ self.member
        total = cells.sum(axis=1).astype(np.int64)
        escalated = np.zeros(T, dtype=bool)
        degree_eff = np.full(T, self.n, dtype=np.int64)
        redo = np.nonzero(special | (status != 0))[0]
        for t in redo:
            rec = self._count_row_slow(C[t])
            counts[t] = rec["counts"]
            total[t] = rec["total"]
            escalated[t] = rec["escalated"]
            depth[t] = max(depth[t], rec["depth"])
            degree_eff[t] = rec["degree"]
        parity_ok = (total % 2) == (degree_eff % 2)
        return {"counts": counts, "total": total, "parity_ok": parity_ok, "escalated": escalated,
                "depth": depth}

    @staticmethod
    def _special_rows(C):
        mag = np.abs(C).sum(axis=1)
        s_plus = C.sum(axis=1)
        alt = np.where(np.arange(C.shape[1]) % 2 == 0, 1.0, -1.0)
        s_minus = C @ alt
        near = (np.abs(s_plus) <= 1e-9 * mag) | (np.abs(s_minus) <= 1e-9 * mag)
        return (C[:, 0] == 0) | (C[:, -1] == 0) | near

    # -- slow path ---------------------------------------------------------
    def _count_row_slow(self, row):
        red = reduce_polynomial(row)
        R = len(self.regions)
        specials = np.zeros(R, dtype=np.int64)
        for p, mult in ((0.0, red.at_zero), (1.0, red.at_plus1), (-1.0, red.at_minus1)):
            specials += mult * self.special_member[p]
        n_special = red.at_zero + red.at_plus1 + red.at_minus1
        q = red.coeffs
        escalated = False
        depth = 0
        if q is not None and len(q) > 1:
            cells, status, dep = self._kernel(q[None, :])
            depth = int(dep[0])
            if status[0] == 0:
                counts = cells[0].astype(np.int64) @ self.member + specials
                return {"counts": counts, "total": int(cells[0].sum()) + n_special, "escalated": False,
                        "depth": depth, "degree": red.degree}
            if len(row) - 1 > STURM_DIRECT_MAX_DEGREE:
                fine = GridParams(K=4 * self.params.K, max_depth=2 * self.params.max_depth,
                                  small=self.params.small, comp_threshold=self.params.comp_threshold)
                sub = GridCounter(self.n, self.regions, fine, self.v2)
                cells, status, dep = sub._kernel(q[None, :])
                depth = max(depth, int(dep[0]))
                escalated = True
                if status[0] == 0:
                    counts = cells[0].astype(np.int64) @ sub.member + specials
                    return {"counts": counts, "total": int(cells[0].sum()) + n_special, "escalated": True,
                            "depth": depth, "degree": red.degree}
        elif q is not None:
            # nonzero constant after deflation
            return {"counts": specials, "total": n_special, "escalated": False, "depth": 0, "degree": red.degree}
        # exact oracle on the original polynomial
        sc = SturmCounter(row)
        counts = np.array([_sturm_region(sc, reg) for reg in self.regions], dtype=np.int64)
        return {"counts": counts, "total": sc.count(-math.inf, math.inf), "escalated": True,
                "depth": depth, "degree": red.degree}

    def count_one(self, coeffs):
        res = self.count_batch(np.asarray(coeffs, dtype=float)[None, :])
        return {k: v[0] for k, v in res.items()}


def _sturm_region(sc, region):
    total = 0
    for iv in region.intervals:
        total += sc.count(iv.lo, iv.hi)
        # Sturm counts (lo, hi]; fix the endpoints to the interval's closedness
        if math.isfinite(iv.hi) and not iv.closed_hi and sc.is_root(iv.hi):
            total -= 1
        if math.isfinite(iv.lo) and iv.closed_lo and sc.is_root(iv.lo):
            total += 1
    return total


@dataclass
class Reduced:
    coeffs: np.ndarray | None  # None when exact deflation left the float grid
    degree: int
    at_zero: int = 0
    at_plus1: int = 0
    at_minus1: int = 0


def _deflate(fr, root):
    """Synthetic division of the Fraction polynomial by (x - root)."""
    d = len(fr) - 1
    q = [Fraction(0)] * d
    acc = Fraction(0)
    for k in range(d, 0, -1):
        acc = fr[k] + root * acc
        q[k - 1] = acc
    return q


def _value_at_unit(vals, root):
    """Exact P(root) for root = +-1 (fsum is exact for floats)."""
    terms = [v if (root == 1 or j % 2 == 0) else -v for j, v in enumerate(vals)]
    return math.fsum(terms) if isinstance(vals[0], float) else sum(terms)


def reduce_polynomial(coeffs):
    """Strip exact roots at 0 and +-1 and zero leading coefficients."""
    c = [float(v) for v in coeffs]
    while c and c[-1] == 0.0:
        c.pop()
    if not c:
        raise ZeroPolynomial("all coefficients are zero")
    degree = len(c) - 1
    k0 = 0
    while c[k0] == 0.0:
        k0 += 1
    vals = c[k0:]
    mult = {1: 0, -1: 0}
    for root in (1, -1):
        while len(vals) > 1 and _value_at_unit(vals, root) == 0:
            if isinstance(vals[0], float):
                vals = [Fraction(v) for v in vals]
            vals = _deflate(vals, root)
            mult[root] += 1
    if isinstance(vals[0], float):
        out = np.array(vals)
    else:
        floats = [float(v) for v in vals]
        out = np.array(floats) if all(Fraction(f) == v for f, v in zip(floats, vals)) else None
    return Reduced(coeffs=out, degree=degree, at_zero=k0, at_plus1=mult[1], at_minus1=mult[-1])


_COUNTERS = {}


def _counter(n, regions, params, v2=None):
    key = (n, tuple(regions), params, None if v2 is None else np.asarray(v2).tobytes())
    if key not in _COUNTERS:
        if len(_COUNTERS) > 64:
            _COUNTERS.clear()
        _COUNTERS[key] = GridCounter(n, regions, params, v2)
    return _COUNTERS[key]


def count_roots_grid(sample, region=FULL_LINE, params=GridParams(), v2=None):
    """Count real roots of the sample in ``region`` on the adaptive grid.

    Raises UnresolvedSignChange when a cell stays ambiguous at max depth.
    """
    coeffs = np.asarray(getattr(sample, "coeffs", sample), dtype=float)
    n = len(coeffs) - 1
    if not np.any(coeffs):
        raise ZeroPolynomial("all coefficients are zero")
    if n == 0:
        return RootCountRecord(total=0, per_region={region.name: 0}, degree=0)
    gc = _counter(n, [region], params, v2)
    special = gc._special_rows(coeffs[None, :])[0]
    if special:
        red = reduce_polynomial(coeffs)
        n_special = red.at_zero + red.at_plus1 + red.at_minus1
        if red.coeffs is None:
            raise UnresolvedSignChange("exact deflation at +-1 is not representable in floating point")
        specials = sum(m * gc.special_member[p] for p, m in
                       ((0.0, red.at_zero), (1.0, red.at_plus1), (-1.0, red.at_minus1)))
        if len(red.coeffs) == 1:
            return RootCountRecord(total=n_special, per_region={region.name: int(specials[0])}, degree=red.degree)
        cells, status, depth = gc._kernel(red.coeffs[None, :])
        deg_eff = red.degree
    else:
        cells, status, depth = gc._kernel(coeffs[None, :])
        n_special, specials, deg_eff = 0, np.zeros(1, dtype=np.int64), n
    if status[0]:
        raise UnresolvedSignChange(f"cell still ambiguous after {params.max_depth} bisections")
    total = int(cells[0].sum()) + n_special
    inside = int(cells[0].astype(np.int64) @ gc.member[:, 0] + specials[0])
    return RootCountRecord(total=total, per_region={region.name: inside}, method="grid",
                           refinement_depth=int(depth[0]), degree=deg_eff,
                           parity_ok=(total % 2) == (deg_eff % 2))


def count_roots_sturm(sample, interval=(-math.inf, math.inf)):
    """Distinct real roots in (lo, hi] by an exact Sturm chain."""
    from .sturm import count_roots_sturm as _exact

    return _exact(sample, interval)


def scheme_regions(scheme):
    """Canonical region list: FullLine, PosAxis, NegAxis and the scheme's regions."""
    regs = [FULL_LINE, POS_AXIS, NEG_AXIS]
    if scheme is not None:
        regs += [r for r in scheme.region_list() if r.tag not in ("FullLine", "PosAxis", "NegAxis")]
    return regs


def classify_counts(sample, scheme, params=GridParams(), v2=None, escalate=True):
    """Per-region counts for FullLine, the half axes and the scheme's regions."""
    coeffs = np.asarray(getattr(sample, "coeffs", sample), dtype=float)
    n = len(coeffs) - 1
    regions = scheme_regions(scheme)
    gc = _counter(n, regions, params, v2)
    if not escalate:
        for reg in regions:
            count_roots_grid(coeffs, reg, params, v2)  # raises when unresolved
    res = gc.count_one(coeffs)
    per = {reg.name: int(c) for reg, c in zip(regions, res["counts"])}
    return RootCountRecord(total=int(res["total"]), per_region=per,
                           method="sturm" if res["escalated"] else "grid",
                           refinement_depth=int(res["depth"]), degree=n, parity_ok=bool(res["parity_ok"]))
