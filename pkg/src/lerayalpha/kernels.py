"""Backend selection for the per-step kernels.

The compiled extension is used when it was built and imports cleanly;
otherwise the numpy fallback is used.  Setting ``LERAYALPHA_PURE=1`` in the
environment forces the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("LERAYALPHA_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

advective_product = _impl.advective_product
weighted_square_sum = _impl.weighted_square_sum
project_truncate = _impl.project_truncate
rk4_combine = _impl.rk4_combine


def get_backend(name):
    """Return the kernel module for ``name`` ("python" or "cython")."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
