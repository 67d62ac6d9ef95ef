# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled CSR sparse-times-dense kernel (hot path of every forward/backward)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def csr_matmul(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices,
               double[::1] weights, double[:, ::1] dense):
    """Same contract as the numpy fallback: out[i] = sum_k w[k] * dense[col[k]]."""
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t d = dense.shape[1]
    out_arr = np.zeros((n_rows, d))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, k, c, j
    cdef double w
    for i in range(n_rows):
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            w = weights[k]
            for c in range(d):
                out[i, c] += w * dense[j, c]
    return out_arr
