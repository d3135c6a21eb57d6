"""Kernel backend selection.

The compiled extension is used when it imports; setting the environment
variable ``KACVAR_PURE=1`` forces the numpy implementation.
"""

import os

from . import _core_py

if os.environ.get("KACVAR_PURE", "") not in ("", "0"):
    core = _core_py
else:
    try:
        from . import _core as core
    except ImportError:  # extension not built
        core = _core_py

NAME = core.NAME
count_cells = core.count_cells
horner = core.horner
gram_same = core.gram_same
gram_cross = core.gram_cross
point_sums = core.point_sums
