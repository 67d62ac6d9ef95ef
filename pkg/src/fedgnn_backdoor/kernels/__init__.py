"""Sparse message-passing kernel with two interchangeable backends.

The single hot operation of the whole simulator is the CSR sparse-times-dense
product that propagates node features along edges; it runs millions of times
per experiment. A Cython extension provides the fast path and a vectorized
numpy implementation is the fallback. The backend is picked at import time
and can be forced with FEDGNN_BACKDOOR_KERNELS=numpy|compiled.
"""

import os

from . import _csr_np

_forced = os.environ.get("FEDGNN_BACKDOOR_KERNELS", "").strip().lower()

if _forced == "numpy":
    _backend = _csr_np
    BACKEND = "numpy"
else:
    try:
        from . import _csr_cy as _backend  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        _backend = _csr_np
        BACKEND = "numpy"

csr_matmul = _backend.csr_matmul
