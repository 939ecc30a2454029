"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``POLEGRAD_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("POLEGRAD_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
cartpole_step = _impl.cartpole_step
ac_forward = _impl.ac_forward
ac_backward = _impl.ac_backward


def available_backends():
    out = {"python": _kernels_py}
    try:
        from . import _kernels

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
