"""Synthetic workloads and symmetric permutation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .sparse import INDEX_DTYPE, CsrMatrix


@dataclass(frozen=True, eq=False)
class Permutation:
    """Bijection i -> map[i] on [0, n)."""

    map: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.map, dtype=INDEX_DTYPE)
        n = len(arr)
        seen = np.zeros(n, dtype=bool)
        if n and (arr.min() < 0 or arr.max() >= n):
            raise ParameterError("permutation entries out of range")
        seen[arr] = True
        if not seen.all():
            raise ParameterError("map is not a bijection")
        arr.setflags(write=False)
        object.__setattr__(self, "map", arr)

    @property
    def n(self) -> int:
        return len(self.map)

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(np.arange(n))

    @classmethod
    def random(cls, n: int, seed: int) -> Permutation:
        return cls(np.random.default_rng(seed).permutation(n))

    def inverse(self) -> Permutation:
        inv = np.empty(self.n, dtype=INDEX_DTYPE)
        inv[self.map] = np.arange(self.n, dtype=INDEX_DTYPE)
        return Permutation(inv)


def permute_symmetric(a: CsrMatrix, p: Permutation) -> CsrMatrix:
    """Return B with ``B[p(i), p(j)] = a[i, j]``."""
    if a.nrows != a.ncols:
        raise DimensionError(f"permute_symmetric needs a square matrix, got {a.shape}")
    if p.n != a.nrows:
        raise DimensionError(f"permutation size {p.n} != matrix order {a.nrows}")
    rows, cols, vals = a.to_coo()
    return CsrMatrix.from_coo(a.nrows, a.ncols, p.map[rows], p.map[cols], vals, sum_duplicates=False)


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ParameterError("seed must be a 64-bit unsigned integer")
    return seed


def _uniform_values(rng: np.random.Generator, size: int) -> np.ndarray:
    # random() is in [0, 1); flip it to (0, 1]
    return 1.0 - rng.random(size)


def gen_erdos_renyi(n: int, density: float, seed: int, ncols: int | None = None) -> CsrMatrix:
    """Random matrix with every entry present independently with prob. ``density``.

    Row counts are drawn Binomial(ncols, density) and the columns of a row
    are a uniform subset of that size, which is the same distribution as
    independent per-entry coin flips.
    """
    if not 0 < density <= 1:
        raise ParameterError(f"density must be in (0, 1], got {density}")
    if n < 0:
        raise ParameterError("n must be non-negative")
    ncols = n if ncols is None else ncols
    rng = np.random.default_rng(_check_seed(seed))
    counts = rng.binomial(ncols, density, size=n) if density < 1 else np.full(n, ncols)
    cols = [np.sort(rng.choice(ncols, size=c, replace=False)) for c in counts.tolist()]
    rowptr = np.zeros(n + 1, dtype=INDEX_DTYPE)
    np.cumsum(counts, out=rowptr[1:])
    colind = np.concatenate(cols) if cols else np.zeros(0, dtype=INDEX_DTYPE)
    return CsrMatrix(n, ncols, rowptr, colind, _uniform_values(rng, int(rowptr[-1])))


def gen_banded(n: int, offsets=(-1, 0, 1), seed: int = 0, halfwidth: int | None = None) -> CsrMatrix:
    """Matrix whose nonzeros sit on the given diagonals.

    ``halfwidth`` is a shortcut for ``offsets = range(-h, h + 1)``.
    """
    if halfwidth is not None:
        offsets = range(-halfwidth, halfwidth + 1)
    rng = np.random.default_rng(_check_seed(seed))
    rows, cols = [], []
    for off in sorted(set(int(o) for o in offsets)):
        r = np.arange(max(0, -off), min(n, n - off))
        rows.append(r)
        cols.append(r + off)
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=INDEX_DTYPE)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=INDEX_DTYPE)
    return CsrMatrix.from_coo(n, n, rows, cols, _uniform_values(rng, len(rows)), sum_duplicates=False)


def gen_block_diagonal(n: int, nblocks: int, density: float, seed: int) -> CsrMatrix:
    """Independent random diagonal blocks; block sizes follow ceiling division."""
    from .partition import block_bounds

    rng = np.random.default_rng(_check_seed(seed))
    bounds = block_bounds(n, nblocks)
    rows, cols = [], []
    for b0, b1 in zip(bounds[:-1], bounds[1:]):
        size = b1 - b0
        mask = rng.random((size, size)) < density
        r, c = np.nonzero(mask)
        rows.append(r + b0)
        cols.append(c + b0)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    return CsrMatrix.from_coo(n, n, rows, cols, _uniform_values(rng, len(rows)))


def gen_arrowhead(n: int, width: int = 1, seed: int = 0) -> CsrMatrix:
    """Diagonal plus ``width`` dense leading rows and columns."""
    rng = np.random.default_rng(_check_seed(seed))
    dense = np.zeros((n, n), dtype=bool)
    np.fill_diagonal(dense, True)
    dense[:width, :] = True
    dense[:, :width] = True
    r, c = np.nonzero(dense)
    return CsrMatrix.from_coo(n, n, r, c, _uniform_values(rng, len(r)))


def gen_block_equal(grid, per_tile: int, rows_per_slice: int, seed: int) -> CsrMatrix:
    """Square matrix in which every trident tile holds exactly ``per_tile`` nonzeros.

    The order is ``q * lam * rows_per_slice`` so coarse tiles and their row
    slices divide evenly; positions inside each tile are random.
    """
    q, lam = grid.q, grid.lam
    n = q * lam * rows_per_slice
    cols_per_tile = n // q
    if per_tile > rows_per_slice * cols_per_tile:
        raise ParameterError("per_tile exceeds tile capacity")
    rng = np.random.default_rng(_check_seed(seed))
    rows, cols = [], []
    for i in range(q):
        for k in range(lam):
            r0 = i * lam * rows_per_slice + k * rows_per_slice
            for j in range(q):
                flat = rng.choice(rows_per_slice * cols_per_tile, size=per_tile, replace=False)
                rows.append(r0 + flat // cols_per_tile)
                cols.append(j * cols_per_tile + flat % cols_per_tile)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    return CsrMatrix.from_coo(n, n, rows, cols, _uniform_values(rng, len(rows)), sum_duplicates=False)


def gen_planted_graph(n: int, groups: int, p_in: float, p_out: float, seed: int) -> CsrMatrix:
    """Symmetric 0/1 adjacency with planted communities and self-loops."""
    rng = np.random.default_rng(_check_seed(seed))
    label = np.arange(n) * groups // max(n, 1)
    prob = np.where(label[:, None] == label[None, :], p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, k=1)
    adj = upper | upper.T
    np.fill_diagonal(adj, True)
    r, c = np.nonzero(adj)
    return CsrMatrix.from_coo(n, n, r, c, np.ones(len(r)))


def two_triangles() -> CsrMatrix:
    """Two disjoint 3-cliques on vertices {0,1,2} and {3,4,5}."""
    edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]
    rows = [u for u, v in edges] + [v for u, v in edges]
    cols = [v for u, v in edges] + [u for u, v in edges]
    return CsrMatrix.from_coo(6, 6, rows, cols, np.ones(len(rows)))
