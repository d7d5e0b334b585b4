"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``SYMPREP_BACKEND=python`` to force the fallback.
"""
import os

from . import _fallback

try:
    if os.environ.get("SYMPREP_BACKEND", "").lower() == "python":
        raise ImportError("fallback forced by environment")
    from . import _kernel as _impl
    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build
    _impl = _fallback
    BACKEND = "python"

apply_pair = _impl.apply_pair
apply_ops = _impl.apply_ops
pair_braket = _impl.pair_braket
adjoint_sweep = _impl.adjoint_sweep
