# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Fused kernels for linear combinations of sparse matrices.

The propagator's right-hand side is y = scale * (sum_k c_k B_k) x with real
coefficients c_k and real sparse blocks B_k; only the state x is complex.
The blocks are stored as concatenated CSR arrays (one indptr row per block,
shared index/data pools) and the kernel streams each block once,
accumulating into the complex output.  Complex arrays arrive viewed as
float64 with a trailing (real, imag) axis.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def real_stacked_matvec(const long long[:, ::1] indptr,
                        const long long[::1] indices,
                        const double[::1] data,
                        const double[::1] coeffs,
                        const double[:, ::1] x,
                        double[:, ::1] out,
                        double scale_r,
                        double scale_i):
    """out = (scale_r + i scale_i) * sum_k coeffs[k] * (B_k @ x)."""
    cdef Py_ssize_t n_rows = indptr.shape[1] - 1
    cdef Py_ssize_t n_blocks = indptr.shape[0]
    cdef Py_ssize_t i, jj, k, col
    cdef double c, d, acc_r, acc_i, tmp_r
    for i in range(n_rows):
        out[i, 0] = 0.0
        out[i, 1] = 0.0
    for k in range(n_blocks):
        c = coeffs[k]
        if c == 0.0:
            continue
        for i in range(n_rows):
            acc_r = 0.0
            acc_i = 0.0
            for jj in range(indptr[k, i], indptr[k, i + 1]):
                d = data[jj]
                col = indices[jj]
                acc_r += d * x[col, 0]
                acc_i += d * x[col, 1]
            out[i, 0] += c * acc_r
            out[i, 1] += c * acc_i
    if scale_r != 1.0 or scale_i != 0.0:
        for i in range(n_rows):
            tmp_r = out[i, 0]
            out[i, 0] = scale_r * tmp_r - scale_i * out[i, 1]
            out[i, 1] = scale_r * out[i, 1] + scale_i * tmp_r


def stacked_combine(const double[:, :, ::1] data,
                    const double[:, ::1] coeffs,
                    double[:, ::1] out):
    """out[jj] = sum_k coeffs[k] * data[jj, k] over the union pattern."""
    cdef Py_ssize_t nnz = data.shape[0]
    cdef Py_ssize_t n_coeff = coeffs.shape[0]
    cdef Py_ssize_t jj, k
    cdef double h_r, h_i
    for jj in range(nnz):
        h_r = 0.0
        h_i = 0.0
        for k in range(n_coeff):
            h_r += coeffs[k, 0] * data[jj, k, 0] - coeffs[k, 1] * data[jj, k, 1]
            h_i += coeffs[k, 0] * data[jj, k, 1] + coeffs[k, 1] * data[jj, k, 0]
        out[jj, 0] = h_r
        out[jj, 1] = h_i
