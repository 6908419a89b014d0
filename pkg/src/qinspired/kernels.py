"""Backend selection for the convolution hot kernels.

The compiled Cython module is used when it was built; otherwise the numpy
implementation is used. Set ``QINSPIRED_PURE_PYTHON=1`` to force the
fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("QINSPIRED_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

product_forward = _impl.product_forward
product_grad = _impl.product_grad


def backends():
    """Mapping of available backend names to their modules."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels

        found["cython"] = _kernels
    except ImportError:
        pass
    return found
