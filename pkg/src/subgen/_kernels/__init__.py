"""GF kernel dispatch: compiled extension if available, numpy fallback otherwise.

Set ``SUBGEN_PURE_GF=1`` in the environment to force the pure backend
(useful for benchmarking and for testing backend parity).
"""

import os

if os.environ.get("SUBGEN_PURE_GF"):
    from ._pygf import BACKEND, axpy, scale
else:
    try:
        from ._cygf import BACKEND, axpy, scale
    except ImportError:
        from ._pygf import BACKEND, axpy, scale

__all__ = ["BACKEND", "axpy", "scale"]
