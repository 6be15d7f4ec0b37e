"""Hot numerical kernels with a compiled core and a pure numpy/scipy fallback.

The compiled extension is selected at import time; set the environment
variable ``USCHARVEST_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and by tests that compare the two paths).
"""

import os

import numpy as np
import scipy.sparse as sp

try:
    if os.environ.get("USCHARVEST_PURE_PYTHON"):
        raise ImportError("pure-python backend forced via environment")
    from . import _stacked_csr as _ext

    HAVE_EXTENSION = True
except ImportError:
    _ext = None
    HAVE_EXTENSION = False

BACKEND = "cython" if HAVE_EXTENSION else "python"


def _as_float_view(arr):
    return arr.view(np.float64).reshape(len(arr), 2)


class StackedCSR:
    """Linear combination H(c) = sum_k c_k B_k of fixed sparse blocks.

    ``matvec`` evaluates scale * H(c) @ x without building H(c); when all
    blocks are real (the physical Hamiltonian blocks are) the compiled
    kernel streams per-block CSR arrays, touching half the bytes of a
    complex representation.  ``combine`` materialises H(c) on the union
    sparsity pattern when an actual matrix is needed.
    """

    def __init__(self, blocks):
        blocks = [sp.csr_matrix(b, dtype=np.complex128) for b in blocks]
        if not blocks:
            raise ValueError("need at least one block")
        dim = blocks[0].shape[0]
        for b in blocks:
            if b.shape != (dim, dim):
                raise ValueError(f"block shape {b.shape} != {(dim, dim)}")
            b.sum_duplicates()
            b.sort_indices()

        pattern = None
        for b in blocks:
            ones = b.copy()
            ones.data = np.ones_like(ones.data, dtype=np.float64)
            pattern = ones if pattern is None else pattern + ones
        pattern.sort_indices()

        nnz = pattern.nnz
        self.dim = dim
        self.n_blocks = len(blocks)
        self.union_indptr = pattern.indptr.astype(np.int64)
        self.union_indices = pattern.indices.astype(np.int64)
        self.union_data = np.zeros((nnz, self.n_blocks), dtype=np.complex128)

        # Map each block's entries to positions in the union pattern.
        lookup = sp.csr_matrix(
            (np.arange(1, nnz + 1, dtype=np.int64), pattern.indices, pattern.indptr),
            shape=(dim, dim),
        )
        for k, b in enumerate(blocks):
            coo = b.tocoo()
            pos = np.asarray(lookup[coo.row, coo.col]).ravel() - 1
            if np.any(pos < 0):
                raise AssertionError("block entry missing from union pattern")
            self.union_data[pos, k] = coo.data
        self._union_view = self.union_data.view(np.float64).reshape(
            nnz, self.n_blocks, 2)

        # Template matrix reused by combine() and the fallback matvec.
        self._template = sp.csr_matrix(
            (np.zeros(nnz, dtype=np.complex128), pattern.indices.copy(),
             pattern.indptr.copy()),
            shape=(dim, dim),
        )

        self.real_blocks = all(np.max(np.abs(b.data.imag), initial=0.0) == 0.0
                               for b in blocks)
        if self.real_blocks:
            indptr = np.zeros((self.n_blocks, dim + 1), dtype=np.int64)
            indices = []
            data = []
            offset = 0
            for k, b in enumerate(blocks):
                indptr[k] = b.indptr.astype(np.int64) + offset
                indices.append(b.indices.astype(np.int64))
                data.append(np.ascontiguousarray(b.data.real))
                offset += b.nnz
            self._cat_indptr = indptr
            self._cat_indices = np.concatenate(indices) if indices else \
                np.zeros(0, dtype=np.int64)
            self._cat_data = np.concatenate(data) if data else \
                np.zeros(0, dtype=np.float64)
            # real blocks kept for the fallback path
            self._real_csr = [sp.csr_matrix(
                (np.ascontiguousarray(b.data.real), b.indices, b.indptr),
                shape=b.shape) for b in blocks]

    def matvec(self, coeffs, x, out=None, scale=1.0):
        """Evaluate scale * (sum_k coeffs[k] B_k) @ x (real coefficients)."""
        coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
        if out is None:
            out = np.empty(self.dim, dtype=np.complex128)
        scale = complex(scale)
        if not self.real_blocks:
            raise NotImplementedError("matvec requires real-valued blocks")
        if HAVE_EXTENSION:
            x = np.ascontiguousarray(x, dtype=np.complex128)
            _ext.real_stacked_matvec(self._cat_indptr, self._cat_indices,
                                     self._cat_data, coeffs,
                                     _as_float_view(x), _as_float_view(out),
                                     scale.real, scale.imag)
            return out
        acc = None
        for c, b in zip(coeffs, self._real_csr):
            if c == 0.0:
                continue
            term = b @ x
            acc = c * term if acc is None else acc + c * term
        if acc is None:
            acc = np.zeros(self.dim, dtype=np.complex128)
        if scale != 1.0:
            acc *= scale
        out[:] = acc
        return out

    def combine(self, coeffs):
        """Materialise sum_k coeffs[k] B_k as a fresh CSR matrix."""
        coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
        if HAVE_EXTENSION:
            data = np.empty(self.union_data.shape[0], dtype=np.complex128)
            _ext.stacked_combine(self._union_view,
                                 _as_float_view(coeffs),
                                 _as_float_view(data))
        else:
            data = self.union_data @ coeffs
        h = self._template.copy()
        h.data = data
        return h
