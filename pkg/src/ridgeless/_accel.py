"""Backend selection for the hot kernels.

The compiled extension is preferred; set ``RIDGELESS_PURE_PYTHON=1`` to force
the NumPy implementation.
"""
import os

if os.environ.get("RIDGELESS_PURE_PYTHON"):
    from . import _pycore as _impl
else:
    try:
        from . import _core as _impl
    except ImportError:
        from . import _pycore as _impl

BACKEND = "python" if _impl.__name__.endswith("_pycore") else "compiled"

fold_axis = _impl.fold_axis
fold_classes = _impl.fold_classes
kernel_matrix = _impl.kernel_matrix
