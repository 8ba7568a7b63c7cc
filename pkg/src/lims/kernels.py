"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
``LIMS_PURE_PYTHON`` environment variable is set to a non-empty value other
than ``0``, the pure-Python module is used. Both expose the same functions.
"""

import os

from . import _pykernels

if os.environ.get("LIMS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

edit_distance = _impl.edit_distance
edit_distance_many = _impl.edit_distance_many
cheb_predict = _impl.cheb_predict
search_first_geq = _impl.search_first_geq
search_last_occurrence = _impl.search_last_occurrence
locate_first_geq = _impl.locate_first_geq
locate_ranges = _impl.locate_ranges
locate_many = _impl.locate_many
binary_first_geq = _impl.binary_first_geq
binary_many = _impl.binary_many


def backends():
    """Return ``{name: module}`` for every importable backend."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
