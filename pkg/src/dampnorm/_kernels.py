"""Backend selection for the hot Lyapunov kernel.

The compiled extension is used when importable; set ``DAMPNORM_PURE=1`` to
force the NumPy implementation.
"""

import os

from . import _lyap_py

BACKEND = "python"
solve_quasi_triangular = _lyap_py.solve_quasi_triangular

if os.environ.get("DAMPNORM_PURE", "") != "1":
    try:
        from . import _lyap_ext
    except ImportError:  # extension not built
        _lyap_ext = None
    else:
        BACKEND = "compiled"
        solve_quasi_triangular = _lyap_ext.solve_quasi_triangular


def available_backends():
    """Map backend name to kernel function for every importable backend."""
    out = {"python": _lyap_py.solve_quasi_triangular}
    try:
        from . import _lyap_ext as ext
    except ImportError:
        return out
    out["compiled"] = ext.solve_quasi_triangular
    return out
