"""Matrix Market reading and writing for CSR matrices and dense vectors."""

from __future__ import annotations

import numpy as np

from .sparse import SparseMatrix, csr_from_arrays

__all__ = [
    "MatrixMarketError",
    "read_matrix_market",
    "read_vector",
    "write_matrix_market",
    "write_vector",
]

_FIELDS = {"real", "complex", "integer"}
_SYMMETRIES = {"general", "symmetric", "hermitian", "skew-symmetric"}


class MatrixMarketError(ValueError):
    """Malformed or unsupported Matrix Market content."""


def _parse_header(line: str, path) -> tuple[str, str, str]:
    tokens = line.strip().split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
        raise MatrixMarketError(f"{path}: line 1: not a Matrix Market header: {line.strip()!r}")
    obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"{path}: line 1: unsupported object {obj!r}")
    if field == "pattern":
        raise MatrixMarketError(f"{path}: line 1: pattern field is not supported")
    if field not in _FIELDS:
        raise MatrixMarketError(f"{path}: line 1: unsupported field {field!r}")
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(f"{path}: line 1: unsupported symmetry {symmetry!r}")
    return fmt, field, symmetry


def _data_lines(f):
    """Yield (line_number, line) skipping comments and blank lines."""
    for ln, line in enumerate(f, start=2):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        yield ln, stripped


def _parse_size(ln: int, line: str, path, expect_cols_one: bool = False) -> tuple[int, int, int | None]:
    tokens = line.split()
    try:
        dims = [int(t) for t in tokens]
    except ValueError:
        raise MatrixMarketError(f"{path}: line {ln}: malformed size line {line!r}") from None
    if len(dims) == 3:
        nrows, ncols, nnz = dims
    elif len(dims) == 2:
        nrows, ncols = dims
        nnz = None
    else:
        raise MatrixMarketError(f"{path}: line {ln}: malformed size line {line!r}")
    if nrows < 0 or ncols < 0 or (nnz is not None and nnz < 0):
        raise MatrixMarketError(f"{path}: line {ln}: negative dimension in size line")
    if expect_cols_one and ncols != 1:
        raise MatrixMarketError(f"{path}: line {ln}: expected an N x 1 vector, got {nrows} x {ncols}")
    return nrows, ncols, nnz


def _parse_value(tokens, field, ln, path):
    try:
        if field == "complex":
            return complex(float(tokens[0]), float(tokens[1]))
        return float(tokens[0])
    except (ValueError, IndexError):
        raise MatrixMarketError(f"{path}: line {ln}: malformed value {' '.join(tokens)!r}") from None


def read_matrix_market(path) -> SparseMatrix:
    """Read a coordinate-format Matrix Market file into canonical CSR.

    Symmetric, hermitian, and skew-symmetric files are expanded to full
    explicit storage; integer values are promoted to real.
    """
    with open(path, "r", encoding="ascii") as f:
        header = f.readline()
        if not header:
            raise MatrixMarketError(f"{path}: empty file")
        fmt, field, symmetry = _parse_header(header, path)
        if fmt != "coordinate":
            raise MatrixMarketError(
                f"{path}: line 1: {fmt!r} format is not supported for matrices "
                "(only coordinate)"
            )
        ntok = 4 if field == "complex" else 3
        lines = _data_lines(f)
        try:
            ln, line = next(lines)
        except StopIteration:
            raise MatrixMarketError(f"{path}: missing size line") from None
        nrows, ncols, nnz = _parse_size(ln, line, path)
        if nnz is None:
            raise MatrixMarketError(f"{path}: line {ln}: coordinate size line needs 3 numbers")
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        values = np.empty(nnz, dtype=np.complex128 if field == "complex" else np.float64)
        k = 0
        for ln, line in lines:
            if k >= nnz:
                raise MatrixMarketError(
                    f"{path}: line {ln}: more than the declared {nnz} entries"
                )
            tokens = line.split()
            if len(tokens) != ntok:
                raise MatrixMarketError(
                    f"{path}: line {ln}: expected {ntok} fields, got {len(tokens)}"
                )
            try:
                i = int(tokens[0])
                j = int(tokens[1])
            except ValueError:
                raise MatrixMarketError(f"{path}: line {ln}: malformed indices") from None
            if not (1 <= i <= nrows and 1 <= j <= ncols):
                raise MatrixMarketError(
                    f"{path}: line {ln}: index ({i}, {j}) outside {nrows} x {ncols}"
                )
            if symmetry != "general" and i < j:
                raise MatrixMarketError(
                    f"{path}: line {ln}: entry ({i}, {j}) above the diagonal in a "
                    f"{symmetry} file"
                )
            rows[k] = i - 1
            cols[k] = j - 1
            values[k] = _parse_value(tokens[2:], field, ln, path)
            k += 1
        if k != nnz:
            raise MatrixMarketError(f"{path}: declared {nnz} entries but found {k}")
    if symmetry != "general":
        off = rows != cols
        mirror = values[off]
        if symmetry == "hermitian":
            mirror = np.conj(mirror)
        elif symmetry == "skew-symmetric":
            mirror = -mirror
        rows, cols, values = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([values, mirror]),
        )
    return csr_from_arrays(nrows, ncols, rows, cols, values)


def _format_value(v, complex_field: bool) -> str:
    if complex_field:
        return f"{v.real:.16e} {v.imag:.16e}"
    return f"{v:.16e}"


def write_matrix_market(A: SparseMatrix, path) -> None:
    """Write canonical CSR as coordinate-format Matrix Market (17 significant digits)."""
    complex_field = A.is_complex
    field = "complex" if complex_field else "real"
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(f"%%MatrixMarket matrix coordinate {field} general\n")
        f.write(f"{A.nrows} {A.ncols} {A.nnz}\n")
        offsets = A.row_offsets
        cols = A.col_indices
        values = A.values
        for i in range(A.nrows):
            for jj in range(offsets[i], offsets[i + 1]):
                f.write(f"{i + 1} {cols[jj] + 1} {_format_value(values[jj], complex_field)}\n")


def read_vector(path) -> np.ndarray:
    """Read an N x 1 Matrix Market file (array or coordinate format) as a 1-D vector."""
    with open(path, "r", encoding="ascii") as f:
        header = f.readline()
        if not header:
            raise MatrixMarketError(f"{path}: empty file")
        fmt, field, symmetry = _parse_header(header, path)
        if symmetry != "general":
            raise MatrixMarketError(f"{path}: line 1: vectors must use general symmetry")
        lines = _data_lines(f)
        try:
            ln, line = next(lines)
        except StopIteration:
            raise MatrixMarketError(f"{path}: missing size line") from None
        nrows, _, nnz = _parse_size(ln, line, path, expect_cols_one=True)
        dtype = np.complex128 if field == "complex" else np.float64
        ntok_val = 2 if field == "complex" else 1
        if fmt == "array":
            v = np.empty(nrows, dtype=dtype)
            k = 0
            for ln, line in lines:
                if k >= nrows:
                    raise MatrixMarketError(f"{path}: line {ln}: more than {nrows} values")
                tokens = line.split()
                if len(tokens) != ntok_val:
                    raise MatrixMarketError(
                        f"{path}: line {ln}: expected {ntok_val} fields, got {len(tokens)}"
                    )
                v[k] = _parse_value(tokens, field, ln, path)
                k += 1
            if k != nrows:
                raise MatrixMarketError(f"{path}: declared {nrows} values but found {k}")
            return v
        if nnz is None:
            raise MatrixMarketError(f"{path}: line {ln}: coordinate size line needs 3 numbers")
        v = np.zeros(nrows, dtype=dtype)
        k = 0
        for ln, line in lines:
            if k >= nnz:
                raise MatrixMarketError(f"{path}: line {ln}: more than the declared {nnz} entries")
            tokens = line.split()
            if len(tokens) != ntok_val + 2:
                raise MatrixMarketError(
                    f"{path}: line {ln}: expected {ntok_val + 2} fields, got {len(tokens)}"
                )
            try:
                i = int(tokens[0])
                j = int(tokens[1])
            except ValueError:
                raise MatrixMarketError(f"{path}: line {ln}: malformed indices") from None
            if not (1 <= i <= nrows and j == 1):
                raise MatrixMarketError(f"{path}: line {ln}: index ({i}, {j}) outside {nrows} x 1")
            v[i - 1] += _parse_value(tokens[2:], field, ln, path)
            k += 1
        if k != nnz:
            raise MatrixMarketError(f"{path}: declared {nnz} entries but found {k}")
        return v


def write_vector(v, path) -> None:
    """Write a 1-D vector as an N x 1 array-format Matrix Market file."""
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError("write_vector expects a 1-D array")
    complex_field = np.iscomplexobj(v)
    field = "complex" if complex_field else "real"
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(f"%%MatrixMarket matrix array {field} general\n")
        f.write(f"{v.shape[0]} 1\n")
        for x in v:
            f.write(f"{_format_value(x, complex_field)}\n")
