"""Baseline sparse formats, Matrix Market I/O, and the dense oracle.

Dense vectors are plain 1-D float64 numpy arrays throughout the package;
there is no wrapper class. All values are stored as 64-bit floats and all
indices are 0-based internally (converted at the Matrix Market boundary).
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterator, TextIO

import numpy as np

from . import _kernels

__all__ = [
    "MatrixMarketError",
    "MatrixMarketHeader",
    "TripletMatrix",
    "CsrMatrix",
    "parse_matrix_market",
    "write_matrix_market",
    "load_mtx",
    "save_mtx",
    "expand_symmetric",
    "coo_to_csr",
    "csr_to_triplets",
    "csr_spmv",
    "dense_oracle_spmv",
    "to_dense",
]

_FIELDS = ("real", "integer", "pattern")
_SYMMETRIES = ("general", "symmetric")


class MatrixMarketError(ValueError):
    """Raised for malformed Matrix Market input."""


@dataclass(frozen=True)
class MatrixMarketHeader:
    """Parsed banner of a Matrix Market file."""

    object: str
    format: str
    field: str
    symmetry: str


@dataclass(frozen=True)
class TripletMatrix:
    """Coordinate-format sparse matrix with parallel entry arrays.

    Entries are canonical after construction through :func:`parse_matrix_market`
    (sorted by row then column, duplicates summed). Direct construction does
    not canonicalize; call :meth:`canonicalized` when needed.
    """

    rows: int
    cols: int
    row: np.ndarray
    col: np.ndarray
    val: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row", np.asarray(self.row, dtype=np.int64))
        object.__setattr__(self, "col", np.asarray(self.col, dtype=np.int64))
        object.__setattr__(self, "val", np.asarray(self.val, dtype=np.float64))
        if not (self.row.shape == self.col.shape == self.val.shape):
            raise ValueError("entry arrays must have equal length")
        if self.row.size:
            if self.row.min() < 0 or self.row.max() >= self.rows:
                raise ValueError("row index out of bounds")
            if self.col.min() < 0 or self.col.max() >= self.cols:
                raise ValueError("column index out of bounds")

    @property
    def nnz(self) -> int:
        return self.val.size

    def entries(self) -> Iterator[tuple[int, int, float]]:
        for r, c, v in zip(self.row, self.col, self.val):
            yield int(r), int(c), float(v)

    def canonicalized(self) -> "TripletMatrix":
        """Return an equivalent matrix sorted by (row, col) with duplicates summed."""
        if self.nnz == 0:
            return self
        order = np.lexsort((self.col, self.row))
        r, c, v = self.row[order], self.col[order], self.val[order]
        key = r * self.cols + c
        first = np.concatenate(([True], key[1:] != key[:-1]))
        starts = np.flatnonzero(first)
        summed = np.add.reduceat(v, starts)
        return TripletMatrix(self.rows, self.cols, r[starts], c[starts], summed)


@dataclass(frozen=True)
class CsrMatrix:
    """Compressed sparse row matrix.

    row_ptr has length rows+1 with row_ptr[0] = 0 and row_ptr[rows] = nnz;
    column indices are strictly increasing within each row.
    """

    rows: int
    cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_ptr", np.asarray(self.row_ptr, dtype=np.int64))
        object.__setattr__(self, "col_idx", np.asarray(self.col_idx, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    @property
    def nnz(self) -> int:
        return self.values.size


def parse_matrix_market(stream: TextIO | str) -> tuple[MatrixMarketHeader, TripletMatrix]:
    """Parse a coordinate Matrix Market file.

    Args:
        stream: open text file or the file's full text.

    Returns:
        The parsed header and the triplet matrix, canonicalized (0-based
        indices, sorted, duplicates summed). Pattern entries get value 1.0.
        Symmetric files are stored as-is; see :func:`expand_symmetric`.

    Raises:
        MatrixMarketError: malformed banner or size line, out-of-bounds
            entry index, or an entry count that disagrees with the header.
    """
    text = stream if isinstance(stream, str) else stream.read()
    lines = text.splitlines()
    if not lines:
        raise MatrixMarketError("empty input")

    banner = lines[0].split()
    if len(banner) != 5 or banner[0].lower() != "%%matrixmarket":
        raise MatrixMarketError(f"malformed banner: {lines[0]!r}")
    object_, format_, field, symmetry = (t.lower() for t in banner[1:])
    if object_ != "matrix":
        raise MatrixMarketError(f"unsupported object {object_!r}")
    if format_ != "coordinate":
        raise MatrixMarketError(f"unsupported format {format_!r}")
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field {field!r}")
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}")
    header = MatrixMarketHeader(object_, format_, field, symmetry)

    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixMarketError("missing size line")
    size_tokens = body[0].split()
    if len(size_tokens) != 3:
        raise MatrixMarketError(f"size line must have 3 integers: {body[0]!r}")
    try:
        rows, cols, declared_nnz = (int(t) for t in size_tokens)
    except ValueError as exc:
        raise MatrixMarketError(f"non-integer size line: {body[0]!r}") from exc
    if rows < 0 or cols < 0 or declared_nnz < 0:
        raise MatrixMarketError("negative dimension in size line")

    per_entry = 2 if field == "pattern" else 3
    tokens = " ".join(body[1:]).split()
    if len(tokens) != declared_nnz * per_entry:
        raise MatrixMarketError(
            f"declared {declared_nnz} entries but found "
            f"{len(tokens) / per_entry:g} entry lines"
        )
    flat = np.array(tokens, dtype=object).reshape(declared_nnz, per_entry)
    try:
        i = flat[:, 0].astype(np.int64)
        j = flat[:, 1].astype(np.int64)
    except ValueError as exc:
        raise MatrixMarketError(f"non-integer entry index: {exc}") from exc
    if field == "pattern":
        v = np.ones(declared_nnz, dtype=np.float64)
    else:
        try:
            v = flat[:, 2].astype(np.float64)
        except ValueError as exc:
            raise MatrixMarketError(f"bad entry value: {exc}") from exc
    if declared_nnz:
        if i.min() < 1 or i.max() > rows or j.min() < 1 or j.max() > cols:
            raise MatrixMarketError("entry index out of declared bounds")

    matrix = TripletMatrix(rows, cols, i - 1, j - 1, v).canonicalized()
    return header, matrix


def write_matrix_market(matrix: TripletMatrix) -> str:
    """Render a TripletMatrix as Matrix Market text.

    Values are printed with 17 significant digits so parse(write(m))
    reproduces m exactly. Symmetry is always written as general.
    """
    out = io.StringIO()
    out.write("%%MatrixMarket matrix coordinate real general\n")
    out.write(f"{matrix.rows} {matrix.cols} {matrix.nnz}\n")
    for r, c, v in zip(matrix.row, matrix.col, matrix.val):
        out.write("%d %d %.17g\n" % (r + 1, c + 1, v))
    return out.getvalue()


def load_mtx(path) -> tuple[MatrixMarketHeader, TripletMatrix]:
    with open(path, "r", encoding="ascii") as fh:
        return parse_matrix_market(fh)


def save_mtx(matrix: TripletMatrix, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(write_matrix_market(matrix))


def expand_symmetric(matrix: TripletMatrix) -> TripletMatrix:
    """Mirror off-diagonal entries of a triangular matrix.

    Output nnz = 2 * nnz_in - diag_count. Raises ValueError when the input
    already contains both (i, j) and (j, i) for some i != j, since the
    intended symmetry is then ambiguous.
    """
    if matrix.rows != matrix.cols:
        raise ValueError("symmetric expansion requires a square matrix")
    off = matrix.row != matrix.col
    key = matrix.row * matrix.cols + matrix.col
    mirror_key = matrix.col * matrix.cols + matrix.row
    if np.intersect1d(key[off], mirror_key[off]).size:
        raise ValueError("matrix holds both (i,j) and (j,i); symmetry ambiguous")
    row = np.concatenate((matrix.row, matrix.col[off]))
    col = np.concatenate((matrix.col, matrix.row[off]))
    val = np.concatenate((matrix.val, matrix.val[off]))
    return TripletMatrix(matrix.rows, matrix.cols, row, col, val).canonicalized()


def coo_to_csr(matrix: TripletMatrix) -> CsrMatrix:
    """Convert a canonical TripletMatrix to CSR.

    Raises ValueError if the input still contains duplicate coordinates.
    """
    order = np.lexsort((matrix.col, matrix.row))
    row = matrix.row[order]
    col = matrix.col[order]
    val = matrix.val[order]
    if row.size:
        dup = (row[1:] == row[:-1]) & (col[1:] == col[:-1])
        if dup.any():
            raise ValueError("duplicate (row, col) entries; canonicalize first")
    counts = np.bincount(row, minlength=matrix.rows)
    row_ptr = np.concatenate(([0], np.cumsum(counts)))
    return CsrMatrix(matrix.rows, matrix.cols, row_ptr, col, val)


def csr_to_triplets(csr: CsrMatrix) -> TripletMatrix:
    row = np.repeat(np.arange(csr.rows, dtype=np.int64), np.diff(csr.row_ptr))
    return TripletMatrix(csr.rows, csr.cols, row, csr.col_idx.copy(), csr.values.copy())


def csr_spmv(csr: CsrMatrix, x: np.ndarray) -> np.ndarray:
    """Reference CSR kernel: per row, accumulate left to right in storage order."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (csr.cols,):
        raise ValueError(f"vector length {x.shape} != cols {csr.cols}")
    out = np.zeros(csr.rows, dtype=np.float64)
    _kernels.csr_kernel(csr.row_ptr, csr.col_idx, csr.values, x, out)
    return out


def dense_oracle_spmv(matrix: TripletMatrix, x: np.ndarray) -> np.ndarray:
    """Brute-force oracle, independent of every kernel code path."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (matrix.cols,):
        raise ValueError(f"vector length {x.shape} != cols {matrix.cols}")
    y = np.zeros(matrix.rows, dtype=np.float64)
    np.add.at(y, matrix.row, matrix.val * x[matrix.col])
    return y


def to_dense(matrix: TripletMatrix) -> np.ndarray:
    dense = np.zeros((matrix.rows, matrix.cols), dtype=np.float64)
    np.add.at(dense, (matrix.row, matrix.col), matrix.val)
    return dense
