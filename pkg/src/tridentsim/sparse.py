"""Canonical CSR matrices and the sequential kernels built on them.

Everything here is pure: kernels never mutate their inputs and every
returned matrix is canonical (column indices strictly increasing within
each row). The semiring is fixed to (+, x) over float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError

INDEX_DTYPE = np.int64
VALUE_DTYPE = np.float64

# Upper bound on the number of intermediate products expanded at once by
# spgemm_local; keeps peak memory bounded for dense-ish operands.
_EXPANSION_CHUNK = 1 << 22


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Compressed sparse row matrix in canonical form."""

    nrows: int
    ncols: int
    rowptr: np.ndarray
    colind: np.ndarray
    values: np.ndarray
    _row_ids: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name, dtype in (("rowptr", INDEX_DTYPE), ("colind", INDEX_DTYPE), ("values", VALUE_DTYPE)):
            arr = np.ascontiguousarray(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "nrows", int(self.nrows))
        object.__setattr__(self, "ncols", int(self.ncols))

    # -- construction ------------------------------------------------------

    @classmethod
    def empty(cls, nrows: int, ncols: int) -> CsrMatrix:
        return cls(nrows, ncols, np.zeros(nrows + 1), np.zeros(0), np.zeros(0))

    @classmethod
    def identity(cls, n: int) -> CsrMatrix:
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))

    @classmethod
    def from_coo(cls, nrows: int, ncols: int, rows, cols, vals, *, sum_duplicates: bool = True) -> CsrMatrix:
        """Build a canonical matrix from coordinate triples.

        Duplicates are summed in input order. With ``sum_duplicates=False``
        duplicate coordinates raise instead.
        """
        rows = np.asarray(rows, dtype=INDEX_DTYPE).ravel()
        cols = np.asarray(cols, dtype=INDEX_DTYPE).ravel()
        vals = np.asarray(vals, dtype=VALUE_DTYPE).ravel()
        if not (len(rows) == len(cols) == len(vals)):
            raise DimensionError("coordinate arrays differ in length")
        if len(rows) and (rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= ncols):
            raise DimensionError(f"coordinate out of range for shape ({nrows}, {ncols})")
        keys = rows * max(ncols, 1) + cols
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        vals = vals[order]
        if len(keys):
            first = np.empty(len(keys), dtype=bool)
            first[0] = True
            np.not_equal(keys[1:], keys[:-1], out=first[1:])
            if not first.all():
                if not sum_duplicates:
                    raise DimensionError("duplicate coordinates")
                group = np.cumsum(first) - 1
                vals = np.bincount(group, weights=vals, minlength=int(group[-1]) + 1)
                keys = keys[first]
        out_rows = keys // max(ncols, 1)
        out_cols = keys - out_rows * max(ncols, 1)
        rowptr = np.zeros(nrows + 1, dtype=INDEX_DTYPE)
        np.cumsum(np.bincount(out_rows, minlength=nrows), out=rowptr[1:])
        return cls(nrows, ncols, rowptr, out_cols, vals)

    @classmethod
    def from_dense(cls, dense) -> CsrMatrix:
        dense = np.asarray(dense, dtype=VALUE_DTYPE)
        if dense.ndim != 2:
            raise DimensionError("expected a 2-D array")
        rows, cols = np.nonzero(dense)
        return cls.from_coo(dense.shape[0], dense.shape[1], rows, cols, dense[rows, cols])

    # -- inspection --------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return int(self.rowptr[-1])

    def row_ids(self) -> np.ndarray:
        """Row index of every stored entry (cached)."""
        if self._row_ids is None:
            ids = np.repeat(np.arange(self.nrows, dtype=INDEX_DTYPE), np.diff(self.rowptr))
            ids.setflags(write=False)
            object.__setattr__(self, "_row_ids", ids)
        return self._row_ids

    def row_lengths(self) -> np.ndarray:
        return np.diff(self.rowptr)

    def to_coo(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.row_ids(), self.colind, self.values

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=VALUE_DTYPE)
        out[self.row_ids(), self.colind] = self.values
        return out

    def to_scipy(self):
        import scipy.sparse as sp

        return sp.csr_matrix((self.values, self.colind, self.rowptr), shape=self.shape)

    def check(self) -> None:
        """Raise ValueError unless every CSR invariant holds."""
        rp, ci = self.rowptr, self.colind
        if len(rp) != self.nrows + 1 or rp[0] != 0:
            raise ValueError("rowptr must have nrows+1 entries starting at 0")
        if np.any(np.diff(rp) < 0):
            raise ValueError("rowptr must be non-decreasing")
        if rp[-1] != len(ci) or len(ci) != len(self.values):
            raise ValueError("rowptr[-1], len(colind) and len(values) disagree")
        if len(ci) and (ci.min() < 0 or ci.max() >= self.ncols):
            raise ValueError("column index out of range")
        if len(ci) > 1:
            same_row = self.row_ids()[1:] == self.row_ids()[:-1]
            if np.any(same_row & (ci[1:] <= ci[:-1])):
                raise ValueError("column indices not strictly increasing within a row")

    def equals(self, other: CsrMatrix) -> bool:
        """Bit-identical comparison of shape, pattern and values."""
        return (
            self.shape == other.shape
            and np.array_equal(self.rowptr, other.rowptr)
            and np.array_equal(self.colind, other.colind)
            and np.array_equal(self.values.view(np.uint64), other.values.view(np.uint64))
        )

    def same_pattern(self, other: CsrMatrix) -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.rowptr, other.rowptr)
            and np.array_equal(self.colind, other.colind)
        )

    # -- slicing -----------------------------------------------------------

    def row_block(self, r0: int, r1: int) -> CsrMatrix:
        """Rows [r0, r1) as a matrix with the same column space."""
        p0, p1 = self.rowptr[r0], self.rowptr[r1]
        return CsrMatrix(r1 - r0, self.ncols, self.rowptr[r0 : r1 + 1] - p0, self.colind[p0:p1], self.values[p0:p1])

    def submatrix(self, r0: int, r1: int, c0: int, c1: int) -> CsrMatrix:
        """Rows [r0, r1) x columns [c0, c1) with local indices."""
        block = self.row_block(r0, r1)
        if c0 == 0 and c1 == self.ncols:
            return block
        keep = (block.colind >= c0) & (block.colind < c1)
        rowptr = np.zeros(block.nrows + 1, dtype=INDEX_DTYPE)
        np.cumsum(np.bincount(block.row_ids()[keep], minlength=block.nrows), out=rowptr[1:])
        return CsrMatrix(block.nrows, c1 - c0, rowptr, block.colind[keep] - c0, block.values[keep])

    def select_rows(self, rows) -> CsrMatrix:
        """Stack the given rows (in the given order) into a new matrix."""
        rows = np.asarray(rows, dtype=INDEX_DTYPE)
        lens = self.rowptr[rows + 1] - self.rowptr[rows]
        rowptr = np.zeros(len(rows) + 1, dtype=INDEX_DTYPE)
        np.cumsum(lens, out=rowptr[1:])
        idx = _ranges(self.rowptr[rows], lens)
        return CsrMatrix(len(rows), self.ncols, rowptr, self.colind[idx], self.values[idx])

    def __repr__(self) -> str:
        return f"CsrMatrix(shape={self.shape}, nnz={self.nnz})"


def _ranges(starts: np.ndarray, lens: np.ndarray) -> np.ndarray:
    """Concatenate arange(s, s+l) for every (s, l) pair, vectorised."""
    total = int(lens.sum())
    if total == 0:
        return np.zeros(0, dtype=INDEX_DTYPE)
    offsets = np.cumsum(lens) - lens
    return np.repeat(starts - offsets, lens) + np.arange(total, dtype=INDEX_DTYPE)


def vstack(blocks: list[CsrMatrix]) -> CsrMatrix:
    """Vertical concatenation of row blocks sharing a column space."""
    if not blocks:
        raise DimensionError("vstack of zero blocks")
    ncols = blocks[0].ncols
    if any(b.ncols != ncols for b in blocks):
        raise DimensionError("vstack blocks have different column counts")
    rowptrs = [blocks[0].rowptr]
    offset = blocks[0].nnz
    for b in blocks[1:]:
        rowptrs.append(b.rowptr[1:] + offset)
        offset += b.nnz
    return CsrMatrix(
        sum(b.nrows for b in blocks),
        ncols,
        np.concatenate(rowptrs),
        np.concatenate([b.colind for b in blocks]),
        np.concatenate([b.values for b in blocks]),
    )


def _group_sum(keys: np.ndarray, vals: np.ndarray, nrows: int, ncols: int) -> CsrMatrix:
    # Stable sort keeps the generation order within each (row, col) group;
    # bincount then adds left to right, so each output value is the
    # sequential sum 0 + v0 + v1 + ... exactly like a scratch accumulator.
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    vals = vals[order]
    if len(keys) == 0:
        return CsrMatrix.empty(nrows, ncols)
    first = np.empty(len(keys), dtype=bool)
    first[0] = True
    np.not_equal(keys[1:], keys[:-1], out=first[1:])
    group = np.cumsum(first) - 1
    sums = np.bincount(group, weights=vals, minlength=int(group[-1]) + 1)
    ukeys = keys[first]
    rows = ukeys // ncols
    cols = ukeys - rows * ncols
    rowptr = np.zeros(nrows + 1, dtype=INDEX_DTYPE)
    np.cumsum(np.bincount(rows, minlength=nrows), out=rowptr[1:])
    return CsrMatrix(nrows, ncols, rowptr, cols, sums)


def spgemm_local(a: CsrMatrix, b: CsrMatrix) -> CsrMatrix:
    """Sequential Gustavson product ``a @ b``.

    Row i of the result accumulates ``a[i, k] * b[k, :]`` for k in
    ascending order, the same order a dense per-row scratch accumulator
    would use. Cancellation to 0.0 leaves the entry stored.
    """
    if a.ncols != b.nrows:
        raise DimensionError(f"inner dimensions differ: {a.shape} x {b.shape}")
    m, n = a.nrows, b.ncols
    if a.nnz == 0 or b.nnz == 0 or n == 0:
        return CsrMatrix.empty(m, n)

    b_lens = b.row_lengths()
    per_entry = b_lens[a.colind]
    per_row = np.bincount(a.row_ids(), weights=per_entry, minlength=m).astype(INDEX_DTYPE)
    pieces = []
    r0 = 0
    cum = np.concatenate(([0], np.cumsum(per_row)))
    while r0 < m:
        r1 = int(np.searchsorted(cum, cum[r0] + _EXPANSION_CHUNK, side="right")) - 1
        r1 = min(max(r1, r0 + 1), m)
        pieces.append(_expand_rows(a, b, b_lens, r0, r1))
        r0 = r1
    if len(pieces) == 1:
        return pieces[0]
    return vstack(pieces)


def _expand_rows(a: CsrMatrix, b: CsrMatrix, b_lens: np.ndarray, r0: int, r1: int) -> CsrMatrix:
    p0, p1 = a.rowptr[r0], a.rowptr[r1]
    ks = a.colind[p0:p1]
    lens = b_lens[ks]
    bidx = _ranges(b.rowptr[ks], lens)
    out_rows = np.repeat(a.row_ids()[p0:p1] - r0, lens)
    cols = b.colind[bidx]
    vals = np.repeat(a.values[p0:p1], lens) * b.values[bidx]
    return _group_sum(out_rows * b.ncols + cols, vals, r1 - r0, b.ncols)


def spgeam(a: CsrMatrix, b: CsrMatrix) -> CsrMatrix:
    """Elementwise sum; the pattern is the union of both patterns."""
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    if b.nnz == 0:
        return a
    if a.nnz == 0:
        return b
    n = a.ncols
    keys = np.concatenate((a.row_ids() * n + a.colind, b.row_ids() * n + b.colind))
    vals = np.concatenate((a.values, b.values))
    return _group_sum(keys, vals, a.nrows, n)


def scale(a: CsrMatrix, factor: float) -> CsrMatrix:
    return CsrMatrix(a.nrows, a.ncols, a.rowptr, a.colind, a.values * factor)


def transpose(a: CsrMatrix) -> CsrMatrix:
    return CsrMatrix.from_coo(a.ncols, a.nrows, a.colind, a.row_ids(), a.values)


def multiply_adds(a: CsrMatrix, b: CsrMatrix) -> int:
    """Number of scalar multiply-adds ``spgemm_local(a, b)`` performs."""
    if a.nnz == 0:
        return 0
    return int(b.row_lengths()[a.colind].sum())


# -- MCL building blocks ---------------------------------------------------


def column_normalize(a: CsrMatrix) -> CsrMatrix:
    """Scale every column to sum to one; zero-sum columns stay as they are."""
    sums = np.bincount(a.colind, weights=a.values, minlength=a.ncols)
    safe = np.where(sums != 0.0, sums, 1.0)
    return CsrMatrix(a.nrows, a.ncols, a.rowptr, a.colind, a.values / safe[a.colind])


def prune(a: CsrMatrix, threshold: float) -> CsrMatrix:
    """Drop stored entries whose value is strictly below ``threshold``."""
    if threshold < 0:
        raise ParameterError(f"prune threshold must be >= 0, got {threshold}")
    keep = a.values >= threshold
    if keep.all():
        return a
    rowptr = np.zeros(a.nrows + 1, dtype=INDEX_DTYPE)
    np.cumsum(np.bincount(a.row_ids()[keep], minlength=a.nrows), out=rowptr[1:])
    return CsrMatrix(a.nrows, a.ncols, rowptr, a.colind[keep], a.values[keep])


def elementwise_power(a: CsrMatrix, exponent: float) -> CsrMatrix:
    return CsrMatrix(a.nrows, a.ncols, a.rowptr, a.colind, np.power(a.values, exponent))
