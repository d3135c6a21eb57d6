# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: batched grid root counting and pair Gram sums.

The pure numpy twin lives in ``_core_py``; both expose the same functions
with the same argument conventions and are selected in ``_backend``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fma, fabs, sqrt, nextafter, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

NAME = "cython"


cdef inline void _horner(const double* c, Py_ssize_t n, Py_ssize_t step, double x, bint comp,
                         double* val, double* der) noexcept nogil:
    # coefficients c[0], c[step], ..., c[n*step] ascending; value and derivative
    cdef double s = c[n * step]
    cdef double d = 0.0
    cdef double e = 0.0
    cdef double p, pe, t, z, ci
    cdef Py_ssize_t i
    if comp:
        for i in range(n - 1, -1, -1):
            ci = c[i * step]
            d = fma(d, x, s)
            p = s * x
            pe = fma(s, x, -p)
            t = p + ci
            z = t - p
            e = fma(e, x, pe + ((p - (t - z)) + (ci - z)))
            s = t
        val[0] = s + e
    else:
        for i in range(n - 1, -1, -1):
            d = fma(d, x, s)
            s = fma(s, x, c[i * step])
        val[0] = s
    der[0] = d


cdef inline void _eval_node(const double* c, Py_ssize_t n, Py_ssize_t step, double x, double comp_thr,
                            double* val, double* der) noexcept nogil:
    _horner(c, n, step, x, fabs(x) > comp_thr, val, der)
    if val[0] == 0.0:
        # exact zero at a node: shift the node by one ulp for sign bookkeeping
        _horner(c, n, step, nextafter(x, INFINITY), fabs(x) > comp_thr, val, der)

cdef enum:
    BLK = 8


cdef void _eval_block(const double* c, Py_ssize_t n, Py_ssize_t step, const double* xs, Py_ssize_t k,
                      double comp_thr, double* vals, double* ders) noexcept nogil:
    # Horner on BLK nodes at once: independent chains interleave in the pipeline
    cdef double x[BLK]
    cdef double s[BLK]
    cdef double d[BLK]
    cdef double e[BLK]
    cdef double p, pe, t, z, ci
    cdef Py_ssize_t b, i, j, m
    cdef bint comp
    b = 0
    while b < k:
        m = k - b if k - b < BLK else BLK
        comp = 0
        for j in range(BLK):
            x[j] = xs[b + j] if j < m else 0.0
            if j < m and fabs(x[j]) > comp_thr:
                comp = 1
            s[j] = c[n * step]
            d[j] = 0.0
            e[j] = 0.0
        if comp:
            for i in range(n - 1, -1, -1):
                ci = c[i * step]
                for j in range(BLK):
                    d[j] = fma(d[j], x[j], s[j])
                    p = s[j] * x[j]
                    pe = fma(s[j], x[j], -p)
                    t = p + ci
                    z = t - p
                    e[j] = fma(e[j], x[j], pe + ((p - (t - z)) + (ci - z)))
                    s[j] = t
            for j in range(m):
                vals[b + j] = s[j] + e[j]
                ders[b + j] = d[j]
        else:
            for i in range(n - 1, -1, -1):
                ci = c[i * step]
                for j in range(BLK):
                    d[j] = fma(d[j], x[j], s[j])
                    s[j] = fma(s[j], x[j], ci)
            for j in range(m):
                vals[b + j] = s[j]
                ders[b + j] = d[j]
        b += BLK
    for j in range(k):
        if vals[j] == 0.0:
            _eval_node(c, n, step, xs[j], comp_thr, &vals[j], &ders[j])


cdef inline int _sgn_change(double a, double b) noexcept nogil:
    return 1 if (a > 0.0) != (b > 0.0) else 0


cdef int _hermite_count(double pa, double pb, double ma, double mb) noexcept nogil:
    """Real roots in (0, 1] of the cubic Hermite interpolant; -1 if a value vanishes."""
    cdef double a1 = ma
    cdef double a2 = 3.0 * (pb - pa) - 2.0 * ma - mb
    cdef double a3 = 2.0 * (pa - pb) + ma + mb
    cdef double q2 = 3.0 * a3, q1 = 2.0 * a2, q0 = a1
    cdef double crit[2]
    cdef int nc = 0
    cdef double disc, sq, r1, r2, tmp, s, v, prev
    cdef int i, cnt
    if q2 != 0.0:
        disc = q1 * q1 - 4.0 * q2 * q0
        if disc > 0.0:
            sq = sqrt(disc)
            if q1 >= 0.0:
                tmp = -0.5 * (q1 + sq)
            else:
                tmp = -0.5 * (q1 - sq)
            r1 = tmp / q2
            r2 = q0 / tmp if tmp != 0.0 else r1
            if r1 > r2:
                r1, r2 = r2, r1
            if 0.0 < r1 < 1.0:
                crit[nc] = r1
                nc += 1
            if 0.0 < r2 < 1.0 and r2 != r1:
                crit[nc] = r2
                nc += 1
    elif q1 != 0.0:
        r1 = -q0 / q1
        if 0.0 < r1 < 1.0:
            crit[0] = r1
            nc = 1
    cnt = 0
    prev = pa
    for i in range(nc):
        s = crit[i]
        v = pa + s * (a1 + s * (a2 + s * a3))
        if v == 0.0:
            return -1
        cnt += _sgn_change(prev, v)
        prev = v
    cnt += _sgn_change(prev, pb)
    return cnt


cdef int _cell(const double* c, Py_ssize_t n, Py_ssize_t step, double comp_thr,
               double a, double pa, double da, double b, double pb, double db,
               bint force, int depth, int max_depth, int* maxd) noexcept nogil:
    cdef int sc = _sgn_change(pa, pb)
    cdef double h = b - a
    cdef int hc = _hermite_count(pa, pb, da * h, db * h)
    cdef double mid, pm, dm
    cdef int left, right
    if hc == sc and not force:
        return sc
    if depth >= max_depth:
        return -1
    mid = 0.5 * (a + b)
    if not (a < mid < b):
        return -1
    _eval_node(c, n, step, mid, comp_thr, &pm, &dm)
    if depth + 1 > maxd[0]:
        maxd[0] = depth + 1
    left = _cell(c, n, step, comp_thr, a, pa, da, mid, pm, dm, 0, depth + 1, max_depth, maxd)
    if left < 0:
        return -1
    right = _cell(c, n, step, comp_thr, mid, pm, dm, b, pb, db, 0, depth + 1, max_depth, maxd)
    if right < 0:
        return -1
    return left + right


cdef int _count_side(const double* c, Py_ssize_t n, Py_ssize_t step, const double* nodes,
                     const double* scale, Py_ssize_t k, double comp_thr, double small, int max_depth,
                     int* cells, double* vals, double* ders, int* maxd) noexcept nogil:
    cdef Py_ssize_t i
    cdef bint force
    cdef int r
    _eval_block(c, n, step, nodes, k, comp_thr, vals, ders)
    for i in range(k - 1):
        force = fabs(vals[i]) < small * scale[i] or fabs(vals[i + 1]) < small * scale[i + 1]
        r = _cell(c, n, step, comp_thr, nodes[i], vals[i], ders[i], nodes[i + 1], vals[i + 1],
                  ders[i + 1], force, 0, max_depth, maxd)
        if r < 0:
            return -1
        cells[i] = r
    return 0


def count_cells(const double[:, ::1] C, const double[::1] nodes_p, const double[::1] scale_p,
                const double[::1] nodes_s, const double[::1] scale_s, int max_depth=30, double small=1e-3, double comp_thr=0.9):
    """Per-cell root counts for a batch of polynomials.

    Row ``C[t]`` holds ascending coefficients of P; cells of P use
    ``nodes_p`` in [-1, 1], cells of the reversed polynomial use ``nodes_s``.
    Returns ``(cells, status, depth)``; status 1 marks an unresolved cell.
    """
    cdef Py_ssize_t T = C.shape[0]
    cdef Py_ssize_t n = C.shape[1] - 1
    cdef Py_ssize_t kp = nodes_p.shape[0], ks = nodes_s.shape[0]
    cdef Py_ssize_t kmax = kp if kp > ks else ks
    cells_arr = np.zeros((T, (kp - 1) + (ks - 1)), dtype=np.int32)
    status_arr = np.zeros(T, dtype=np.int32)
    depth_arr = np.zeros(T, dtype=np.int32)
    cdef int[:, ::1] cells = cells_arr
    cdef int[::1] status = status_arr
    cdef int[::1] depth = depth_arr
    cdef Py_ssize_t t
    cdef int maxd, r
    cdef double* vals
    cdef double* ders
    if T == 0:
        return cells_arr, status_arr, depth_arr
    with nogil:
        vals = <double*> malloc(kmax * sizeof(double))
        ders = <double*> malloc(kmax * sizeof(double))
        for t in range(T):
            maxd = 0
            r = _count_side(&C[t, 0], n, 1, &nodes_p[0], &scale_p[0], kp, comp_thr, small,
                            max_depth, &cells[t, 0], vals, ders, &maxd)
            if r == 0:
                # reversed polynomial: walk the same row backwards
                r = _count_side(&C[t, n], n, -1, &nodes_s[0], &scale_s[0], ks, comp_thr, small,
                                max_depth, &cells[t, kp - 1], vals, ders, &maxd)
            status[t] = 0 if r == 0 else 1
            depth[t] = maxd
        free(vals)
        free(ders)
    return cells_arr, status_arr, depth_arr


def horner(const double[::1] c, const double[::1] xs, double comp_thr=0.9):
    """Values and derivatives of sum c_j x^j at each x."""
    cdef Py_ssize_t n = c.shape[0] - 1
    cdef Py_ssize_t N = xs.shape[0], i
    val_arr = np.empty(N)
    der_arr = np.empty(N)
    cdef double[::1] val = val_arr
    cdef double[::1] der = der_arr
    with nogil:
        for i in range(N):
            _horner(&c[0], n, 1, xs[i], fabs(xs[i]) > comp_thr, &val[i], &der[i])
    return val_arr, der_arr


cdef inline void _acc(double* s, double* comp, double t) noexcept nogil:
    # Neumaier compensated accumulation
    cdef double u = s[0] + t
    if fabs(s[0]) >= fabs(t):
        comp[0] += (s[0] - u) + t
    else:
        comp[0] += (t - u) + s[0]
    s[0] = u


def gram_same(const double[::1] v2, const double[::1] m, const double[::1] xs, const double[::1] ys,
              bint with_mean=True):
    """Gram and mean sums of the divided-difference columns at (x, y).

    Columns: x^j, h_{j-1}(x,y), h_{j-2}(x,x,y), h_{j-3}(x,x,y,y).  Output row:
    G00 G01 G02 G03 G11 G12 G13 G22 G23 G33, M0 M1 M2 M3, k(y^2).
    """
    cdef Py_ssize_t n = v2.shape[0] - 1
    cdef Py_ssize_t N = xs.shape[0], p, j, a
    out_arr = np.zeros((N, 15))
    cdef double[:, ::1] out = out_arr
    cdef double x, y, xp, yp2, e0, e1, e2, e3, w, mj
    cdef double s[15]
    cdef double cp[15]
    with nogil:
        for p in range(N):
            x = xs[p]
            y = ys[p]
            for a in range(15):
                s[a] = 0.0
                cp[a] = 0.0
            xp = 1.0
            yp2 = 1.0
            e1 = 0.0
            e2 = 0.0
            e3 = 0.0
            for j in range(n + 1):
                # e3 needs the previous e2, e2 the previous e1, e1 the previous power
                if j > 0:
                    e3 = e2 + y * e3
                    e2 = e1 + x * e2
                    e1 = xp + y * e1
                    xp = xp * x
                    yp2 = yp2 * y * y
                e0 = xp
                w = v2[j]
                _acc(&s[0], &cp[0], w * e0 * e0)
                _acc(&s[1], &cp[1], w * e0 * e1)
                _acc(&s[2], &cp[2], w * e0 * e2)
                _acc(&s[3], &cp[3], w * e0 * e3)
                _acc(&s[4], &cp[4], w * e1 * e1)
                _acc(&s[5], &cp[5], w * e1 * e2)
                _acc(&s[6], &cp[6], w * e1 * e3)
                _acc(&s[7], &cp[7], w * e2 * e2)
                _acc(&s[8], &cp[8], w * e2 * e3)
                _acc(&s[9], &cp[9], w * e3 * e3)
                if with_mean:
                    mj = m[j]
                    _acc(&s[10], &cp[10], mj * e0)
                    _acc(&s[11], &cp[11], mj * e1)
                    _acc(&s[12], &cp[12], mj * e2)
                    _acc(&s[13], &cp[13], mj * e3)
                _acc(&s[14], &cp[14], w * yp2)
            for a in range(15):
                out[p, a] = s[a] + cp[a]
    return out_arr


def gram_cross(const double[::1] v2, const double[::1] m, const double[::1] xs, const double[::1] ws,
               bint with_mean=True):
    """Gram and mean sums of (P(x), P*(w), P'(x), P*'(w)).

    Columns: x^j, w^(n-j), j x^(j-1), (n-j) w^(n-j-1).  Same output layout as
    :func:`gram_same`, the last entry is k*(w^2) = G11.
    """
    cdef Py_ssize_t n = v2.shape[0] - 1
    cdef Py_ssize_t N = xs.shape[0], p, j, a
    out_arr = np.zeros((N, 15))
    cdef double[:, ::1] out = out_arr
    cdef double x, wv, xp, xpm, e0, e1, e2, e3, wt, mj
    cdef double s[14]
    cdef double cp[14]
    cdef double* wpow = <double*> malloc((n + 2) * sizeof(double))
    with nogil:
        for p in range(N):
            x = xs[p]
            wv = ws[p]
            wpow[0] = 1.0
            for j in range(1, n + 1):
                wpow[j] = wpow[j - 1] * wv
            for a in range(14):
                s[a] = 0.0
                cp[a] = 0.0
            xp = 1.0
            xpm = 0.0
            for j in range(n + 1):
                if j > 0:
                    xpm = xp
                    xp = xp * x
                e0 = xp
                e1 = wpow[n - j]
                e2 = j * xpm
                e3 = (n - j) * wpow[n - j - 1] if j < n else 0.0
                wt = v2[j]
                _acc(&s[0], &cp[0], wt * e0 * e0)
                _acc(&s[1], &cp[1], wt * e0 * e1)
                _acc(&s[2], &cp[2], wt * e0 * e2)
                _acc(&s[3], &cp[3], wt * e0 * e3)
                _acc(&s[4], &cp[4], wt * e1 * e1)
                _acc(&s[5], &cp[5], wt * e1 * e2)
                _acc(&s[6], &cp[6], wt * e1 * e3)
                _acc(&s[7], &cp[7], wt * e2 * e2)
                _acc(&s[8], &cp[8], wt * e2 * e3)
                _acc(&s[9], &cp[9], wt * e3 * e3)
                if with_mean:
                    mj = m[j]
                    _acc(&s[10], &cp[10], mj * e0)
                    _acc(&s[11], &cp[11], mj * e1)
                    _acc(&s[12], &cp[12], mj * e2)
                    _acc(&s[13], &cp[13], mj * e3)
            for a in range(14):
                out[p, a] = s[a] + cp[a]
            out[p, 14] = out[p, 4]
    free(wpow)
    return out_arr


def point_sums(const double[::1] v2, const double[::1] m, const double[::1] xs):
    """One-point sums at each x.

    Row: sum v2 x^2j, sum v2 j x^(2j-1), sum v2 j^2 x^(2j-2), M(x), M'(x), M''(x).
    """
    cdef Py_ssize_t n = v2.shape[0] - 1
    cdef Py_ssize_t N = xs.shape[0], p, j, a
    out_arr = np.zeros((N, 6))
    cdef double[:, ::1] out = out_arr
    cdef double x, xp, xpm, xpmm, w, mj
    cdef double s[6]
    cdef double cp[6]
    with nogil:
        for p in range(N):
            x = xs[p]
            for a in range(6):
                s[a] = 0.0
                cp[a] = 0.0
            xp = 1.0
            xpm = 0.0
            xpmm = 0.0
            for j in range(n + 1):
                if j > 0:
                    xpmm = xpm
                    xpm = xp
                    xp = xp * x
                w = v2[j]
                mj = m[j]
                _acc(&s[0], &cp[0], w * xp * xp)
                _acc(&s[1], &cp[1], w * j * xp * xpm)
                _acc(&s[2], &cp[2], w * j * j * xpm * xpm)
                _acc(&s[3], &cp[3], mj * xp)
                _acc(&s[4], &cp[4], mj * j * xpm)
                _acc(&s[5], &cp[5], mj * j * (j - 1) * xpmm)
            for a in range(6):
                out[p, a] = s[a] + cp[a]
    return out_arr
