"""Jacobi, ILU(0), and block-Jacobi-ILU(0) preconditioners with a common apply contract."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .sparse import SparseMatrix, csr_from_arrays

__all__ = [
    "BlockJacobiILU0",
    "ILU0",
    "Identity",
    "Jacobi",
    "apply",
    "block_ranges",
    "build_block_jacobi_ilu0",
    "build_ilu0",
    "build_jacobi",
    "make_preconditioner",
]


class Identity:
    """No-op preconditioner; apply returns its input unchanged."""

    kind = "none"

    def apply(self, v: np.ndarray) -> np.ndarray:
        return v


class Jacobi:
    """Diagonal preconditioner: apply divides elementwise by diag(A)."""

    kind = "jacobi"

    def __init__(self, A: SparseMatrix):
        if A.nrows != A.ncols:
            raise ValueError("jacobi preconditioner requires a square matrix")
        d = A.diagonal()
        bad = ~np.isfinite(d) | (d == 0)
        if np.any(bad):
            row = int(np.flatnonzero(bad)[0])
            raise ValueError(
                f"jacobi preconditioner: zero, missing, or nonfinite diagonal at row {row}"
            )
        self.n = A.nrows
        self.diag = d

    def apply(self, v: np.ndarray) -> np.ndarray:
        return v / self.diag


class ILU0:
    """No-fill incomplete LU preconditioner on the stored sparsity pattern.

    The compact factor keeps L (unit lower, diagonal implicit) and U in the
    pattern of A; apply runs a forward then a backward triangular solve.
    """

    kind = "ilu0"

    def __init__(self, A: SparseMatrix):
        if A.nrows != A.ncols:
            raise ValueError("ilu0 preconditioner requires a square matrix")
        self.n = A.nrows
        self.row_offsets = A.row_offsets
        self.col_indices = A.col_indices
        data = A.values.copy()
        diag_pos = np.empty(self.n, dtype=np.int64)
        status, row = _kernels.ilu0_factor(
            self.n, self.row_offsets, self.col_indices, data, diag_pos
        )
        if status == _kernels.ILU_MISSING_DIAGONAL:
            raise ValueError(f"ilu0 preconditioner: missing structural diagonal at row {row}")
        if status == _kernels.ILU_ZERO_PIVOT:
            raise ValueError(f"ilu0 preconditioner: zero pivot at row {row}")
        self.data = data
        self.diag_pos = diag_pos

    def apply(self, v: np.ndarray) -> np.ndarray:
        y = np.array(v, dtype=np.result_type(self.data, v), copy=True)
        _kernels.solve_lower_unit(self.row_offsets, self.col_indices, self.data, self.diag_pos, y)
        _kernels.solve_upper(self.row_offsets, self.col_indices, self.data, self.diag_pos, y)
        return y

    def l_matrix(self) -> SparseMatrix:
        """Unit-lower factor L as an explicit CSR matrix (for verification)."""
        rows, cols, values = [], [], []
        for i in range(self.n):
            for jj in range(self.row_offsets[i], self.diag_pos[i]):
                rows.append(i)
                cols.append(int(self.col_indices[jj]))
                values.append(self.data[jj])
            rows.append(i)
            cols.append(i)
            values.append(1.0)
        return csr_from_arrays(self.n, self.n, rows, cols, np.asarray(values, dtype=self.data.dtype))

    def u_matrix(self) -> SparseMatrix:
        """Upper factor U as an explicit CSR matrix (for verification)."""
        rows, cols, values = [], [], []
        for i in range(self.n):
            for jj in range(self.diag_pos[i], self.row_offsets[i + 1]):
                rows.append(i)
                cols.append(int(self.col_indices[jj]))
                values.append(self.data[jj])
        return csr_from_arrays(self.n, self.n, rows, cols, np.asarray(values, dtype=self.data.dtype))


def block_ranges(n: int, nblocks: int) -> list[tuple[int, int]]:
    """Contiguous near-equal row ranges; remainder rows go to the leading blocks."""
    if not (1 <= nblocks <= n):
        raise ValueError(f"nblocks must be in [1, {n}], got {nblocks}")
    base, rem = divmod(n, nblocks)
    ranges = []
    start = 0
    for b in range(nblocks):
        size = base + (1 if b < rem else 0)
        ranges.append((start, start + size))
        start += size
    return ranges


class BlockJacobiILU0:
    """Block-diagonal preconditioner with an independent ILU(0) per block."""

    kind = "block-ilu0"

    def __init__(self, A: SparseMatrix, nblocks: int):
        if A.nrows != A.ncols:
            raise ValueError("block-jacobi preconditioner requires a square matrix")
        self.n = A.nrows
        self.nblocks = int(nblocks)
        self.ranges = block_ranges(self.n, self.nblocks)
        A_sp = A.to_scipy()
        self.blocks = []
        for b, (r0, r1) in enumerate(self.ranges):
            sub = A_sp[r0:r1, r0:r1].tocsr()
            sub.sort_indices()
            sub_matrix = SparseMatrix(r1 - r0, r1 - r0, sub.indptr, sub.indices, sub.data)
            try:
                self.blocks.append(ILU0(sub_matrix))
            except ValueError as exc:
                raise ValueError(f"block {b} (rows {r0}:{r1}): {exc}") from exc
        self.dtype = A.dtype

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        y = np.empty(self.n, dtype=np.result_type(self.dtype, v))
        for (r0, r1), block in zip(self.ranges, self.blocks):
            y[r0:r1] = block.apply(v[r0:r1])
        return y


def build_jacobi(A: SparseMatrix) -> Jacobi:
    return Jacobi(A)


def build_ilu0(A: SparseMatrix) -> ILU0:
    return ILU0(A)


def build_block_jacobi_ilu0(A: SparseMatrix, nblocks: int) -> BlockJacobiILU0:
    return BlockJacobiILU0(A, nblocks)


def apply(P, v: np.ndarray) -> np.ndarray:
    """Apply a preconditioner: returns M^{-1} v."""
    v = np.asarray(v)
    n = getattr(P, "n", None)
    if n is not None and v.shape != (n,):
        raise ValueError(f"dimension mismatch: preconditioner is {n}-dimensional, vector has shape {v.shape}")
    return P.apply(v)


def make_preconditioner(kind: str, A: SparseMatrix, nblocks: int | None = None):
    """Build a preconditioner by CLI name: none | jacobi | ilu0 | block-ilu0."""
    kind = kind.lower()
    if kind in ("none", "identity"):
        return Identity()
    if kind == "jacobi":
        return Jacobi(A)
    if kind == "ilu0":
        return ILU0(A)
    if kind == "block-ilu0":
        if nblocks is None:
            raise ValueError("block-ilu0 requires the number of blocks")
        return BlockJacobiILU0(A, nblocks)
    raise ValueError(f"unknown preconditioner kind {kind!r}")
