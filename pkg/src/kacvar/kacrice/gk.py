"""Gauss-Kronrod (7, 15) and Gauss-Legendre rules on [-1, 1]."""

from functools import lru_cache

import numpy as np

_XK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

# 15 nodes ascending, with Gauss weights (zero on the Kronrod-only nodes)
NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
WK = np.concatenate([_WK[:-1], _WK[::-1]])
WG = np.zeros(15)
WG[1:7:2] = _WG[:3]
WG[7] = _WG[3]
WG[9:14:2] = _WG[2::-1]


@lru_cache(maxsize=16)
def gauss_legendre01(order):
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def panel_rule(bk):
    """Nodes and K15/G7 weights on the panels between sorted breakpoints.

    ``bk`` has shape (..., P + 1); returns arrays of shape (..., P, 15).
    Zero-width panels carry zero weight.
    """
    a = bk[..., :-1, None]
    b = bk[..., 1:, None]
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    return c + h * NODES, h * WK, h * WG
