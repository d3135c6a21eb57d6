"""Globally adaptive Gauss-Kronrod quadrature in one and two dimensions.

Integrands are vectorized: they receive flat coordinate arrays and return
values of the same shape, so each refinement sweep is one batched call.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from ..errors import QuadratureFailure
from .gk import NODES, WG, WK


@dataclass(frozen=True)
class QuadParams:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-10
    max_cells: int = 4000
    batch: int = 16
    init_pieces: int = 4


@dataclass
class QuadResult:
    value: float
    error: float
    cells: int
    evaluations: int


def _scaled_error(diff, resasc):
    """QUADPACK-style error scaling of the Kronrod-Gauss difference."""
    diff = np.abs(diff)
    with np.errstate(all="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * diff / resasc) ** 1.5)
    return np.where(resasc > 0, scaled, diff)


def _rules_1d(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    k = (fx * WK).sum(axis=1) * h
    g = (fx * WG).sum(axis=1) * h
    mean = k / np.where(h != 0, 2.0 * h, 1.0)
    resasc = (np.abs(fx - mean[:, None]) * WK).sum(axis=1) * np.abs(h)
    return k, _scaled_error(k - g, resasc)


def adaptive_1d(f, lo, hi, params: QuadParams | None = None, breaks=None):
    """Integral of f over [lo, hi] with global adaptive GK15."""
    p = params or QuadParams()
    edges = np.linspace(lo, hi, p.init_pieces + 1) if breaks is None else np.asarray(breaks, float)
    a, b = edges[:-1], edges[1:]
    vals, errs = _rules_1d(f, a, b)
    heap = [(-e, i) for i, e in enumerate(errs)]
    cells = {i: (a[i], b[i], vals[i], errs[i]) for i in range(len(a))}
    heapq.heapify(heap)
    nid = len(a)
    nev = 15 * len(a)
    while True:
        total = math.fsum(c[2] for c in cells.values())
        err = math.fsum(c[3] for c in cells.values())
        if err <= max(p.abs_tol, p.rel_tol * abs(total)):
            return QuadResult(total, err, len(cells), nev)
        if len(cells) >= p.max_cells:
            raise QuadratureFailure(f"1-D quadrature error {err:.3g} above tolerance after {len(cells)} cells")
        take = [heapq.heappop(heap)[1] for _ in range(min(p.batch, len(heap)))]
        na, nb = [], []
        for i in take:
            ca, cb, _, _ = cells.pop(i)
            m = 0.5 * (ca + cb)
            na += [ca, m]
            nb += [m, cb]
        na, nb = np.array(na), np.array(nb)
        v, e = _rules_1d(f, na, nb)
        nev += 15 * len(na)
        for j in range(len(na)):
            cells[nid] = (na[j], nb[j], v[j], e[j])
            heapq.heappush(heap, (-e[j], nid))
            nid += 1


def _rules_2d(f, ax, bx, ay, by):
    cx, hx = 0.5 * (ax + bx), 0.5 * (bx - ax)
    cy, hy = 0.5 * (ay + by), 0.5 * (by - ay)
    X = cx[:, None, None] + hx[:, None, None] * NODES[None, :, None]
    Y = cy[:, None, None] + hy[:, None, None] * NODES[None, None, :]
    X, Y = np.broadcast_arrays(X, Y)
    F = np.asarray(f(X.ravel(), Y.ravel()), dtype=float).reshape(X.shape)
    area = hx * hy
    kk = np.einsum("cij,i,j->c", F, WK, WK) * area
    gk = np.einsum("cij,i,j->c", F, WG, WK) * area
    kg = np.einsum("cij,i,j->c", F, WK, WG) * area
    mean = kk / np.where(area != 0, 4.0 * area, 1.0)
    resasc = np.einsum("cij,i,j->c", np.abs(F - mean[:, None, None]), WK, WK) * np.abs(area)
    ex = _scaled_error(kk - gk, resasc)
    ey = _scaled_error(kk - kg, resasc)
    return kk, ex, ey


def adaptive_2d(f, xbreaks, ybreaks, params: QuadParams | None = None):
    """Integral of f(x, y) over the rectangle tiled by the break grids.

    Cells are bisected along the direction with the larger error estimate.
    """
    p = params or QuadParams()
    xb = np.asarray(xbreaks, float)
    yb = np.asarray(ybreaks, float)
    AX, AY = np.meshgrid(xb[:-1], yb[:-1], indexing="ij")
    BX, BY = np.meshgrid(xb[1:], yb[1:], indexing="ij")
    ax, bx, ay, by = (v.ravel() for v in (AX, BX, AY, BY))
    v, ex, ey = _rules_2d(f, ax, bx, ay, by)
    cells = {}
    heap = []
    for i in range(len(ax)):
        cells[i] = (ax[i], bx[i], ay[i], by[i], v[i], ex[i], ey[i])
        heap.append((-(ex[i] + ey[i]), i))
    heapq.heapify(heap)
    nid = len(ax)
    nev = 225 * len(ax)
    while True:
        total = math.fsum(c[4] for c in cells.values())
        err = math.fsum(c[5] + c[6] for c in cells.values())
        if err <= max(p.abs_tol, p.rel_tol * abs(total)):
            return QuadResult(total, err, len(cells), nev)
        if len(cells) >= p.max_cells:
            raise QuadratureFailure(f"2-D quadrature error {err:.3g} above tolerance after {len(cells)} cells")
        take = [heapq.heappop(heap)[1] for _ in range(min(p.batch, len(heap)))]
        nax, nbx, nay, nby = [], [], [], []
        for i in take:
            cax, cbx, cay, cby, _, cex, cey = cells.pop(i)
            if cex >= cey:
                m = 0.5 * (cax + cbx)
                nax += [cax, m]; nbx += [m, cbx]; nay += [cay, cay]; nby += [cby, cby]
            else:
                m = 0.5 * (cay + cby)
                nax += [cax, cax]; nbx += [cbx, cbx]; nay += [cay, m]; nby += [m, cby]
        arrs = [np.array(t) for t in (nax, nbx, nay, nby)]
        v, ex, ey = _rules_2d(f, *arrs)
        nev += 225 * len(arrs[0])
        for j in range(len(arrs[0])):
            cells[nid] = (arrs[0][j], arrs[1][j], arrs[2][j], arrs[3][j], v[j], ex[j], ey[j])
            heapq.heappush(heap, (-(ex[j] + ey[j]), nid))
            nid += 1
