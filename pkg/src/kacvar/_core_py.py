"""Pure numpy twin of the compiled kernels in ``_core.pyx``.

Same signatures, same outputs up to floating-point summation order.  Loops
run over the coefficient index and are vectorized over nodes/pairs/trials.
"""

import numpy as np

NAME = "numpy"

_SPLIT = 134217729.0  # 2**27 + 1


def _two_prod(a, b):
    p = a * b
    t = _SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _horner_rows(C, x, comp):
    """Value and derivative of each row polynomial at broadcast points x.

    C has shape (T, n+1), x shape (T, K) or (K,); returns arrays (T, K).
    """
    T, n1 = C.shape
    x = np.broadcast_to(x, (T,) + np.shape(x)[-1:]).astype(float)
    s = np.repeat(C[:, -1:], x.shape[1], axis=1).astype(float)
    d = np.zeros_like(s)
    e = np.zeros_like(s)
    comp = np.broadcast_to(comp, x.shape)
    for i in range(n1 - 2, -1, -1):
        ci = C[:, i:i + 1]
        d = d * x + s
        p, pe = _two_prod(s, x)
        t = p + ci
        z = t - p
        se = (p - (t - z)) + (ci - z)
        e = np.where(comp, e * x + (pe + se), 0.0)
        s = np.where(comp, t, s * x + ci)
    return s + e, d


def _eval_nodes(C, x, comp_thr):
    comp = np.abs(x) > comp_thr
    val, der = _horner_rows(C, x, comp)
    if np.any(val == 0.0):
        bump = np.nextafter(x, np.inf)
        v2, d2 = _horner_rows(C, bump, np.abs(bump) > comp_thr)
        zero = val == 0.0
        val = np.where(zero, v2, val)
        der = np.where(zero, d2, der)
    return val, der


def _hermite_count(pa, pb, ma, mb):
    """Vectorized root count of the cubic Hermite interpolant on (0, 1]."""
    a1 = ma
    a2 = 3.0 * (pb - pa) - 2.0 * ma - mb
    a3 = 2.0 * (pa - pb) + ma + mb
    q2, q1, q0 = 3.0 * a3, 2.0 * a2, a1
    with np.errstate(all="ignore"):
        disc = q1 * q1 - 4.0 * q2 * q0
        sq = np.sqrt(np.where(disc > 0, disc, 0.0))
        tmp = np.where(q1 >= 0, -0.5 * (q1 + sq), -0.5 * (q1 - sq))
        quad = (q2 != 0) & (disc > 0)
        r1 = np.where(quad, tmp / q2, np.where(q1 != 0, -q0 / q1, np.nan))
        r2 = np.where(quad, np.where(tmp != 0, q0 / tmp, r1), np.nan)
    lo = np.fmin(r1, r2)
    hi = np.fmax(r1, r2)
    hi = np.where(hi == lo, np.nan, hi)
    inside_lo = (lo > 0) & (lo < 1)
    inside_hi = (hi > 0) & (hi < 1)

    def cubic(s):
        return pa + s * (a1 + s * (a2 + s * a3))

    vlo = np.where(inside_lo, cubic(np.where(inside_lo, lo, 0.0)), pa)
    vhi = np.where(inside_hi, cubic(np.where(inside_hi, hi, 0.0)), vlo)
    pos = lambda v: v > 0
    cnt = (pos(pa) != pos(vlo)).astype(int) + (pos(vlo) != pos(vhi)).astype(int) + (pos(vhi) != pos(pb)).astype(int)
    bad = (inside_lo & (vlo == 0)) | (inside_hi & (vhi == 0))
    return np.where(bad, -1, cnt)


def _cell_scalar(c, comp_thr, a, pa, da, b, pb, db, force, depth, max_depth, maxd):
    sc = int((pa > 0) != (pb > 0))
    h = b - a
    hc = int(_hermite_count(np.array(pa), np.array(pb), np.array(da * h), np.array(db * h)))
    if hc == sc and not force:
        return sc
    if depth >= max_depth:
        return -1
    mid = 0.5 * (a + b)
    if not (a < mid < b):
        return -1
    v, d = _eval_nodes(c[None, :], np.array([mid]), comp_thr)
    pm, dm = float(v[0, 0]), float(d[0, 0])
    maxd[0] = max(maxd[0], depth + 1)
    left = _cell_scalar(c, comp_thr, a, pa, da, mid, pm, dm, False, depth + 1, max_depth, maxd)
    if left < 0:
        return -1
    right = _cell_scalar(c, comp_thr, mid, pm, dm, b, pb, db, False, depth + 1, max_depth, maxd)
    if right < 0:
        return -1
    return left + right


def _count_side(C, nodes, scale, comp_thr, small, max_depth):
    T = C.shape[0]
    val, der = _eval_nodes(C, nodes, comp_thr)
    h = np.diff(nodes)
    pa, pb = val[:, :-1], val[:, 1:]
    da, db = der[:, :-1], der[:, 1:]
    sc = ((pa > 0) != (pb > 0)).astype(np.int32)
    hc = _hermite_count(pa, pb, da * h, db * h)
    small_v = np.abs(val) < small * scale
    force = small_v[:, :-1] | small_v[:, 1:]
    cells = sc.copy()
    status = np.zeros(T, dtype=np.int32)
    depth = np.zeros(T, dtype=np.int32)
    todo = np.argwhere((hc != sc) | force)
    for t, i in todo:
        if status[t]:
            continue
        maxd = [int(depth[t])]
        r = _cell_scalar(C[t], comp_thr, nodes[i], val[t, i], der[t, i], nodes[i + 1],
                         val[t, i + 1], der[t, i + 1], bool(force[t, i]), 0, max_depth, maxd)
        depth[t] = maxd[0]
        if r < 0:
            status[t] = 1
        else:
            cells[t, i] = r
    return cells, status, depth


def count_cells(C, nodes_p, scale_p, nodes_s, scale_s, max_depth=30, small=1e-3, comp_thr=0.9):
    C = np.ascontiguousarray(C, dtype=float)
    T = C.shape[0]
    kp, ks = len(nodes_p), len(nodes_s)
    if T == 0:
        return (np.zeros((0, kp + ks - 2), dtype=np.int32), np.zeros(0, dtype=np.int32),
                np.zeros(0, dtype=np.int32))
    cp, stp, dp = _count_side(C, np.asarray(nodes_p, float), np.asarray(scale_p, float), comp_thr, small, max_depth)
    cs, sts, ds = _count_side(C[:, ::-1].copy(), np.asarray(nodes_s, float), np.asarray(scale_s, float),
                              comp_thr, small, max_depth)
    cells = np.concatenate([cp, cs], axis=1).astype(np.int32)
    status = (stp | sts).astype(np.int32)
    return cells, status, np.maximum(dp, ds).astype(np.int32)


def horner(c, xs, comp_thr=0.9):
    c = np.asarray(c, dtype=float)
    xs = np.asarray(xs, dtype=float)
    val, der = _horner_rows(c[None, :], xs, np.abs(xs) > comp_thr)
    return val[0], der[0]


def gram_same(v2, m, xs, ys, with_mean=True):
    v2 = np.asarray(v2, float)
    m = np.asarray(m, float)
    x = np.asarray(xs, float)
    y = np.asarray(ys, float)
    N = len(x)
    out = np.zeros((N, 15))
    xp = np.ones(N)
    yp2 = np.ones(N)
    e1 = np.zeros(N)
    e2 = np.zeros(N)
    e3 = np.zeros(N)
    pairs = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]
    for j in range(len(v2)):
        if j > 0:
            e3 = e2 + y * e3
            e2 = e1 + x * e2
            e1 = xp + y * e1
            xp = xp * x
            yp2 = yp2 * y * y
        cols = (xp, e1, e2, e3)
        w = v2[j]
        for k, (a, b) in enumerate(pairs):
            out[:, k] += w * cols[a] * cols[b]
        if with_mean:
            for a in range(4):
                out[:, 10 + a] += m[j] * cols[a]
        out[:, 14] += w * yp2
    return out


def gram_cross(v2, m, xs, ws, with_mean=True):
    v2 = np.asarray(v2, float)
    m = np.asarray(m, float)
    x = np.asarray(xs, float)
    w = np.asarray(ws, float)
    n = len(v2) - 1
    N = len(x)
    wpow = np.ones((n + 1, N))
    for j in range(1, n + 1):
        wpow[j] = wpow[j - 1] * w
    out = np.zeros((N, 15))
    pairs = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]
    xp = np.ones(N)
    xpm = np.zeros(N)
    for j in range(n + 1):
        if j > 0:
            xpm = xp
            xp = xp * x
        e3 = (n - j) * wpow[n - j - 1] if j < n else np.zeros(N)
        cols = (xp, wpow[n - j], j * xpm, e3)
        for k, (a, b) in enumerate(pairs):
            out[:, k] += v2[j] * cols[a] * cols[b]
        if with_mean:
            for a in range(4):
                out[:, 10 + a] += m[j] * cols[a]
    out[:, 14] = out[:, 4]
    return out


def point_sums(v2, m, xs):
    v2 = np.asarray(v2, float)
    m = np.asarray(m, float)
    x = np.asarray(xs, float)
    N = len(x)
    out = np.zeros((N, 6))
    xp = np.ones(N)
    xpm = np.zeros(N)
    xpmm = np.zeros(N)
    for j in range(len(v2)):
        if j > 0:
            xpmm = xpm
            xpm = xp
            xp = xp * x
        out[:, 0] += v2[j] * xp * xp
        out[:, 1] += v2[j] * j * xp * xpm
        out[:, 2] += v2[j] * j * j * xpm * xpm
        out[:, 3] += m[j] * xp
        out[:, 4] += m[j] * j * xpm
        out[:, 5] += m[j] * j * (j - 1) * xpmm
    return out
