"""Numpy fallback for the sparse message-passing kernel."""

from __future__ import annotations

import numpy as np


def csr_matmul(indptr, indices, weights, dense):
    """Multiply a CSR matrix by a dense matrix: out[i] = sum_k w[k] * dense[col[k]].

    indptr: int64 (n_rows+1,); indices: int64 (nnz,); weights: float64 (nnz,);
    dense: float64 C-contiguous (n_cols_of_csr, d). Returns float64 (n_rows, d).
    Rows must be stored in order (standard CSR); empty rows are allowed.
    """
    n_rows = indptr.shape[0] - 1
    out = np.zeros((n_rows, dense.shape[1]))
    if indices.shape[0] == 0:
        return out
    contrib = weights[:, None] * dense[indices]
    nonempty = indptr[:-1] < indptr[1:]
    # reduceat over the starts of nonempty rows: each segment runs to the next
    # nonempty start, which skips empty rows exactly.
    out[nonempty] = np.add.reduceat(contrib, indptr[:-1][nonempty], axis=0)
    return out
