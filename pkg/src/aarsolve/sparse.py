"""Sparse CSR storage and the dense-vector kernels shared by every solver."""

from __future__ import annotations

import numpy as np
import scipy.sparse

__all__ = [
    "SparseMatrix",
    "csr_from_arrays",
    "csr_from_triplets",
    "dot",
    "norm2",
    "spmv",
]


def _value_dtype(values) -> np.dtype:
    """Promote any numeric input to float64 or complex128."""
    if np.iscomplexobj(values):
        return np.dtype(np.complex128)
    return np.dtype(np.float64)


class SparseMatrix:
    """Sparse matrix in canonical compressed-sparse-row form.

    Within each row the column indices are strictly increasing and explicit
    zeros are retained, so preconditioners that key off the stored pattern
    (ILU(0) in particular) see exactly what the caller built.  Instances are
    immutable by convention: no method mutates the index or value arrays.
    """

    def __init__(self, nrows, ncols, row_offsets, col_indices, values):
        nrows = int(nrows)
        ncols = int(ncols)
        row_offsets = np.ascontiguousarray(row_offsets, dtype=np.int64)
        col_indices = np.ascontiguousarray(col_indices, dtype=np.int64)
        values = np.ascontiguousarray(values, dtype=_value_dtype(values))
        if nrows < 0 or ncols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        if row_offsets.ndim != 1 or row_offsets.shape[0] != nrows + 1:
            raise ValueError(
                f"row_offsets must have length nrows+1 = {nrows + 1}, "
                f"got {row_offsets.shape}"
            )
        if row_offsets[0] != 0:
            raise ValueError("row_offsets[0] must be 0")
        nnz = int(row_offsets[-1])
        if col_indices.shape != (nnz,) or values.shape != (nnz,):
            raise ValueError(
                f"col_indices and values must have length row_offsets[-1] = {nnz}"
            )
        if nnz and (np.any(np.diff(row_offsets) < 0)):
            raise ValueError("row_offsets must be nondecreasing")
        if nnz and (col_indices.min() < 0 or col_indices.max() >= ncols):
            raise ValueError(f"column index out of range for {nrows}x{ncols} matrix")
        if nnz > 1:
            new_row = np.zeros(nnz, dtype=bool)
            starts = row_offsets[1:-1]
            starts = starts[starts < nnz]
            new_row[starts] = True
            if np.any(np.diff(col_indices)[~new_row[1:]] <= 0):
                raise ValueError("column indices must be strictly increasing within rows")
        self.nrows = nrows
        self.ncols = ncols
        self.row_offsets = row_offsets
        self.col_indices = col_indices
        self.values = values
        self._scipy = None

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return self.values.shape[0]

    @property
    def dtype(self) -> np.dtype:
        return self.values.dtype

    @property
    def is_complex(self) -> bool:
        return self.dtype.kind == "c"

    def to_scipy(self) -> scipy.sparse.csr_matrix:
        """Zero-copy scipy view of the same CSR arrays (cached)."""
        if self._scipy is None:
            self._scipy = scipy.sparse.csr_matrix(
                (self.values, self.col_indices, self.row_offsets),
                shape=self.shape,
                copy=False,
            )
        return self._scipy

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.ncols,):
            raise ValueError(
                f"dimension mismatch: matrix is {self.nrows}x{self.ncols}, "
                f"vector has shape {x.shape}"
            )
        return self.to_scipy() @ x

    def diagonal(self) -> np.ndarray:
        """Main-diagonal values; structurally absent entries read as 0."""
        if self.nrows != self.ncols:
            raise ValueError("diagonal requires a square matrix")
        return self.to_scipy().diagonal()

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def __repr__(self) -> str:
        field = "complex" if self.is_complex else "real"
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz}, {field})"


def csr_from_arrays(nrows, ncols, rows, cols, values) -> SparseMatrix:
    """Build a canonical CSR matrix from parallel coordinate arrays.

    Duplicate (row, col) pairs are summed and explicit zeros are retained.
    """
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    values = np.ascontiguousarray(values, dtype=_value_dtype(values))
    if not (rows.shape == cols.shape == values.shape) or rows.ndim != 1:
        raise ValueError("rows, cols, and values must be 1-D arrays of equal length")
    bad = (rows < 0) | (rows >= nrows) | (cols < 0) | (cols >= ncols)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise ValueError(
            f"triplet {k} = ({rows[k]}, {cols[k]}, {values[k]!r}) is out of range "
            f"for a {nrows}x{ncols} matrix"
        )
    coo = scipy.sparse.coo_matrix((values, (rows, cols)), shape=(int(nrows), int(ncols)))
    csr = coo.tocsr()
    csr.sort_indices()
    return SparseMatrix(nrows, ncols, csr.indptr, csr.indices, csr.data)


def csr_from_triplets(nrows, ncols, entries) -> SparseMatrix:
    """Build a canonical CSR matrix from an iterable of (row, col, value)."""
    entries = list(entries)
    if not entries:
        return csr_from_arrays(nrows, ncols, [], [], [])
    rows = [e[0] for e in entries]
    cols = [e[1] for e in entries]
    values = [e[2] for e in entries]
    return csr_from_arrays(nrows, ncols, rows, cols, values)


def spmv(A: SparseMatrix, x) -> np.ndarray:
    """y = A x with row-major, ascending-column accumulation."""
    return A.matvec(x)


def dot(u, v):
    """Conjugate-linear inner product conj(u)^T v."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return np.vdot(u, v)


def norm2(v) -> float:
    """Euclidean norm sqrt(real(dot(v, v)))."""
    v = np.asarray(v)
    if v.size == 0:
        return 0.0
    return float(np.sqrt(np.vdot(v, v).real))
