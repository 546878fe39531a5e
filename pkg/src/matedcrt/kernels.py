"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``MCRT_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy/pure-Python twins are used. ``BACKEND`` names the
active one.
"""
import os

from . import _fallback

_force_pure = os.environ.get("MCRT_PURE_PYTHON", "") not in ("", "0")

if _force_pure:
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

bridge_rejection = _impl.bridge_rejection
visible_pairs = _impl.visible_pairs
trace_faces = _impl.trace_faces
walk_batch = _impl.walk_batch
discrete_frechet = _impl.discrete_frechet
simplify_indices = _impl.simplify_indices


def implementations():
    """Both backends as a dict, for equivalence tests and benchmarks."""
    impls = {"python": _fallback}
    try:
        from . import _kernels
        impls["compiled"] = _kernels
    except ImportError:
        pass
    return impls
