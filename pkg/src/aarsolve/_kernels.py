"""Numba kernels for ILU(0) factorization and the associated triangular solves."""

from __future__ import annotations

import numpy as np
from numba import njit

ILU_OK = 0
ILU_MISSING_DIAGONAL = 1
ILU_ZERO_PIVOT = 2


@njit(cache=True)
def ilu0_factor(n, row_offsets, col_indices, data, diag_pos):
    """No-fill IKJ incomplete LU on the stored pattern, in place on `data`.

    `diag_pos[i]` receives the position of the diagonal entry of row i.
    Returns (status, row): ILU_OK, or ILU_MISSING_DIAGONAL / ILU_ZERO_PIVOT
    with the offending row.
    """
    pos = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        start = row_offsets[i]
        end = row_offsets[i + 1]
        for jj in range(start, end):
            pos[col_indices[jj]] = jj
        dp = pos[i]
        if dp < 0:
            for jj in range(start, end):
                pos[col_indices[jj]] = -1
            return ILU_MISSING_DIAGONAL, i
        for jj in range(start, end):
            k = col_indices[jj]
            if k >= i:
                break
            mult = data[jj] / data[diag_pos[k]]
            data[jj] = mult
            for kk in range(diag_pos[k] + 1, row_offsets[k + 1]):
                p = pos[col_indices[kk]]
                if p >= 0:
                    data[p] = data[p] - mult * data[kk]
        if data[dp] == 0:
            for jj in range(start, end):
                pos[col_indices[jj]] = -1
            return ILU_ZERO_PIVOT, i
        diag_pos[i] = dp
        for jj in range(start, end):
            pos[col_indices[jj]] = -1
    return ILU_OK, -1


@njit(cache=True)
def solve_lower_unit(row_offsets, col_indices, data, diag_pos, y):
    """In-place forward solve with the unit-lower factor (entries left of the diagonal)."""
    n = y.shape[0]
    for i in range(n):
        s = y[i]
        for jj in range(row_offsets[i], diag_pos[i]):
            s = s - data[jj] * y[col_indices[jj]]
        y[i] = s


@njit(cache=True)
def solve_upper(row_offsets, col_indices, data, diag_pos, y):
    """In-place backward solve with the upper factor (diagonal and entries right of it)."""
    n = y.shape[0]
    for i in range(n - 1, -1, -1):
        s = y[i]
        for jj in range(diag_pos[i] + 1, row_offsets[i + 1]):
            s = s - data[jj] * y[col_indices[jj]]
        y[i] = s / data[diag_pos[i]]
