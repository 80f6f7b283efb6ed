"""Backend selection for the optimizer hot loops.

The compiled ``_ckernels`` extension is used when it imports; otherwise, or
when the environment variable ``SWIPTSEE_PURE_PYTHON`` is set to a non-empty
value other than ``0``, the numpy implementations in ``_pykernels`` are used.
``BACKEND`` names the active choice.
"""
import os

from . import _pykernels

_force_py = os.environ.get("SWIPTSEE_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_py:
        raise ImportError("pure Python backend forced by SWIPTSEE_PURE_PYTHON")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

objective_grad = _impl.objective_grad
project = _impl.project
max_violation = _impl.max_violation
grid_search = _impl.grid_search


def get_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
