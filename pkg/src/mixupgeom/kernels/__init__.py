"""Scalar solver kernels with a compiled fast path.

The Cython extension ``_fast`` is preferred when it built successfully;
otherwise the pure-Python twin in ``pure`` is used. Set the environment
variable ``MIXUPGEOM_KERNELS=pure`` to force the fallback (used by the
benchmark to compare the two).
"""

import os

from . import pure as _pure

KernelSolveError = _pure.KernelSolveError

if os.environ.get("MIXUPGEOM_KERNELS", "") == "pure":
    _impl = _pure
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND
same_class_equation = _impl.same_class_equation
solve_same_class_k = _impl.solve_same_class_k
solve_diff_k = _impl.solve_diff_k
solve_two_class_inner = _impl.solve_two_class_inner


def backend_name() -> str:
    """Name of the active kernel backend ('fast' or 'pure')."""
    return BACKEND
