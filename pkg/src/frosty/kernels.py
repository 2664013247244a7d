"""Hot string kernels, compiled when available.

Set ``FROSTY_PURE=1`` to force the pure-Python implementation.
"""
import os

from . import _kernels_py as pure

try:
    if os.environ.get("FROSTY_PURE"):
        raise ImportError("pure mode requested")
    from . import _kernels as compiled
except ImportError:
    compiled = None

impl = compiled if compiled is not None else pure
BACKEND = "cython" if compiled is not None else "python"

lcp = impl.lcp
kth_lcp = impl.kth_lcp
count_extending = impl.count_extending
bit_split = impl.bit_split
keep_bit = impl.keep_bit
majority_prefix = impl.majority_prefix

__all__ = ["BACKEND", "lcp", "kth_lcp", "count_extending", "bit_split",
           "keep_bit", "majority_prefix", "pure", "compiled"]
