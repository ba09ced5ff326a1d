"""Backend selection for the hot loops.

The compiled extension ``reslab._kernels`` is used when it imports; otherwise
the numpy fallback in ``reslab._kernels_py`` is used.  Setting
``RESLAB_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("RESLAB_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

map_and_jacobian = _impl.map_and_jacobian
iterate_with_jacobian = _impl.iterate_with_jacobian
orbit = _impl.orbit
inverse_orbit = _impl.inverse_orbit

__all__ = ["BACKEND", "map_and_jacobian", "iterate_with_jacobian", "orbit", "inverse_orbit"]
