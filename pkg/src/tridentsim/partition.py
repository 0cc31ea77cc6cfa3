"""Process grids, tile maps and load-imbalance metrics.

Three schemes are supported:

* ``trident``: q x q coarse tiles (one per node), each cut into ``lam``
  contiguous row slices (one per GPU of the node).
* ``grid2d``: a classic g x g tiling, one tile per rank.
* ``rows1d``: contiguous block rows, one per rank.

Tiles always hold local indices; the TileMap owns the translation back to
global coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridError, IncompleteTileSet
from .sparse import INDEX_DTYPE, CsrMatrix

SCHEMES = ("trident", "grid2d", "rows1d")


def block_bounds(dim: int, nblocks: int) -> np.ndarray:
    """Boundaries of ``nblocks`` contiguous blocks covering ``range(dim)``.

    The first ``dim % nblocks`` blocks get one extra element.
    """
    if nblocks < 1:
        raise GridError("number of blocks must be positive")
    base, extra = divmod(dim, nblocks)
    sizes = np.full(nblocks, base, dtype=INDEX_DTYPE)
    sizes[:extra] += 1
    bounds = np.zeros(nblocks + 1, dtype=INDEX_DTYPE)
    np.cumsum(sizes, out=bounds[1:])
    return bounds


def _isqrt_exact(x: int) -> int | None:
    r = math.isqrt(x)
    return r if r * r == x else None


# -- grids -----------------------------------------------------------------


@dataclass(frozen=True)
class TridentGrid:
    """q x q x lam process grid; node (i, j) hosts ranks (i, j, 0..lam-1)."""

    P: int
    lam: int
    q: int

    @property
    def nodes(self) -> int:
        return self.q * self.q

    def rank_of(self, i: int, j: int, k: int) -> int:
        return (i * self.q + j) * self.lam + k

    def coords(self, rank: int) -> tuple[int, int, int]:
        node, k = divmod(rank, self.lam)
        i, j = divmod(node, self.q)
        return i, j, k

    def node_of(self, rank: int) -> int:
        return rank // self.lam

    def node_ranks(self, node: int) -> list[int]:
        return list(range(node * self.lam, (node + 1) * self.lam))


@dataclass(frozen=True)
class Grid2D:
    """side x side process grid, ranks row-major, packed into nodes of ``lam``."""

    P: int
    side: int
    lam: int = 1

    @property
    def nodes(self) -> int:
        return -(-self.P // self.lam)

    def rank_of(self, i: int, j: int) -> int:
        return i * self.side + j

    def coords(self, rank: int) -> tuple[int, int]:
        return divmod(rank, self.side)

    def node_of(self, rank: int) -> int:
        return rank // self.lam


@dataclass(frozen=True)
class Grid1D:
    """P processes in a line, packed into nodes of ``lam``."""

    P: int
    lam: int = 1

    @property
    def nodes(self) -> int:
        return -(-self.P // self.lam)

    def node_of(self, rank: int) -> int:
        return rank // self.lam


def make_trident_grid(P: int, lam: int) -> TridentGrid:
    if P < 1 or lam < 1:
        raise GridError(f"P and lam must be positive (P={P}, lam={lam})")
    if P % lam:
        raise GridError(f"P={P} is not divisible by gpus-per-node {lam}")
    q = _isqrt_exact(P // lam)
    if q is None:
        raise GridError(f"P/lam = {P // lam} is not a perfect square")
    return TridentGrid(P, lam, q)


def make_grid2d(P: int, lam: int = 1) -> Grid2D:
    if P < 1 or lam < 1:
        raise GridError(f"P and lam must be positive (P={P}, lam={lam})")
    side = _isqrt_exact(P)
    if side is None:
        raise GridError(f"P={P} is not a perfect square")
    return Grid2D(P, side, lam)


def make_grid1d(P: int, lam: int = 1) -> Grid1D:
    if P < 1 or lam < 1:
        raise GridError(f"P and lam must be positive (P={P}, lam={lam})")
    return Grid1D(P, lam)


# -- tile maps -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TileMap:
    """Where every process's tile lives in the global index space.

    ``ranges[p] = (r0, r1, c0, c1)`` is the global rectangle of tile ``p``.
    ``row_bounds``/``col_bounds`` are the top-level block boundaries and
    ``slice_bounds[i]`` the row slices inside coarse row block ``i``
    (trident only).
    """

    scheme: str
    nrows: int
    ncols: int
    row_bounds: np.ndarray
    col_bounds: np.ndarray
    ranges: np.ndarray
    slice_bounds: tuple = ()

    @property
    def nprocs(self) -> int:
        return len(self.ranges)

    def tile_range(self, rank: int) -> tuple[int, int, int, int]:
        return tuple(int(x) for x in self.ranges[rank])

    def tile_shape(self, rank: int) -> tuple[int, int]:
        r0, r1, c0, c1 = self.tile_range(rank)
        return r1 - r0, c1 - c0

    def owner_of(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Rank owning each global (row, col) pair."""
        rows = np.asarray(rows, dtype=INDEX_DTYPE)
        cols = np.asarray(cols, dtype=INDEX_DTYPE)
        if self.scheme == "rows1d":
            return np.searchsorted(self.row_bounds, rows, side="right") - 1
        bi = np.searchsorted(self.row_bounds, rows, side="right") - 1
        bj = np.searchsorted(self.col_bounds, cols, side="right") - 1
        g = len(self.col_bounds) - 1
        if self.scheme == "grid2d":
            return bi * g + bj
        lam = len(self.slice_bounds[0]) - 1
        fine = np.concatenate([np.asarray(sb[:-1]) for sb in self.slice_bounds] + [[self.nrows]])
        # fine has q*lam+1 entries; empty slices share a start, so pick the last one
        f = np.searchsorted(fine, rows, side="right") - 1
        k = f % lam
        return (bi * g + bj) * lam + k

    def to_json(self) -> dict:
        out = {
            "scheme": self.scheme,
            "shape": [self.nrows, self.ncols],
            "row_bounds": self.row_bounds.tolist(),
            "col_bounds": self.col_bounds.tolist(),
        }
        if self.slice_bounds:
            out["slice_bounds"] = [list(map(int, sb)) for sb in self.slice_bounds]
        return out


def build_tilemap(nrows: int, ncols: int, grid, scheme: str) -> TileMap:
    if scheme not in SCHEMES:
        raise GridError(f"unknown scheme {scheme!r}")
    if scheme == "rows1d":
        rb = block_bounds(nrows, grid.P)
        ranges = np.array([(rb[p], rb[p + 1], 0, ncols) for p in range(grid.P)], dtype=INDEX_DTYPE).reshape(-1, 4)
        return TileMap(scheme, nrows, ncols, rb, np.array([0, ncols], dtype=INDEX_DTYPE), ranges)

    if scheme == "grid2d":
        if isinstance(grid, Grid2D):
            g = grid.side
        elif isinstance(grid, TridentGrid):
            g = grid.q
        else:
            raise GridError("grid2d scheme needs a square 2D or trident grid")
        rb, cb = block_bounds(nrows, g), block_bounds(ncols, g)
        ranges = np.array(
            [(rb[i], rb[i + 1], cb[j], cb[j + 1]) for i in range(g) for j in range(g)], dtype=INDEX_DTYPE
        ).reshape(-1, 4)
        return TileMap(scheme, nrows, ncols, rb, cb, ranges)

    if not isinstance(grid, TridentGrid):
        raise GridError("trident scheme needs a TridentGrid")
    q, lam = grid.q, grid.lam
    rb, cb = block_bounds(nrows, q), block_bounds(ncols, q)
    slices = tuple(block_bounds(int(rb[i + 1] - rb[i]), lam) + rb[i] for i in range(q))
    ranges = np.zeros((grid.P, 4), dtype=INDEX_DTYPE)
    for i in range(q):
        for j in range(q):
            for k in range(lam):
                ranges[grid.rank_of(i, j, k)] = (slices[i][k], slices[i][k + 1], cb[j], cb[j + 1])
    return TileMap(scheme, nrows, ncols, rb, cb, ranges, slices)


def split(m: CsrMatrix, tilemap: TileMap) -> list[CsrMatrix]:
    """Cut ``m`` into one local-index tile per process of ``tilemap``."""
    if (m.nrows, m.ncols) != (tilemap.nrows, tilemap.ncols):
        raise GridError(f"matrix shape {m.shape} does not match tile map {tilemap.nrows, tilemap.ncols}")
    rows, cols, vals = m.to_coo()
    owner = tilemap.owner_of(rows, cols)
    # stable sort keeps row-major, column-ascending order inside every tile
    order = np.argsort(owner, kind="stable")
    counts = np.bincount(owner, minlength=tilemap.nprocs)
    starts = np.concatenate(([0], np.cumsum(counts)))
    tiles = []
    for p in range(tilemap.nprocs):
        r0, r1, c0, c1 = tilemap.tile_range(p)
        idx = order[starts[p] : starts[p + 1]]
        lr = rows[idx] - r0
        rowptr = np.zeros(r1 - r0 + 1, dtype=INDEX_DTYPE)
        np.cumsum(np.bincount(lr, minlength=r1 - r0), out=rowptr[1:])
        tiles.append(CsrMatrix(r1 - r0, c1 - c0, rowptr, cols[idx] - c0, vals[idx]))
    return tiles


def partition(m: CsrMatrix, grid, scheme: str) -> tuple[TileMap, list[CsrMatrix]]:
    tilemap = build_tilemap(m.nrows, m.ncols, grid, scheme)
    return tilemap, split(m, tilemap)


def reassemble(tiles, tilemap: TileMap) -> CsrMatrix:
    """Inverse of :func:`split`."""
    tiles = list(tiles)
    if len(tiles) != tilemap.nprocs or any(t is None for t in tiles):
        missing = [p for p in range(tilemap.nprocs) if p >= len(tiles) or tiles[p] is None]
        raise IncompleteTileSet(f"missing tiles for ranks {missing}")
    rows, cols, vals = [], [], []
    for p, t in enumerate(tiles):
        r0, r1, c0, c1 = tilemap.tile_range(p)
        if t.shape != (r1 - r0, c1 - c0):
            raise IncompleteTileSet(f"tile {p} has shape {t.shape}, expected {(r1 - r0, c1 - c0)}")
        tr, tc, tv = t.to_coo()
        rows.append(tr + r0)
        cols.append(tc + c0)
        vals.append(tv)
    return CsrMatrix.from_coo(
        tilemap.nrows, tilemap.ncols, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals),
        sum_duplicates=False,
    )


@dataclass(frozen=True)
class ImbalanceReport:
    max_nnz: int
    avg_nnz: float
    ratio: float
    per_process: tuple[int, ...] = ()


def imbalance(m: CsrMatrix, grid, scheme: str) -> ImbalanceReport:
    """Max over average nonzeros per process under ``scheme``."""
    tilemap = build_tilemap(m.nrows, m.ncols, grid, scheme)
    rows, cols, _ = m.to_coo()
    counts = np.bincount(tilemap.owner_of(rows, cols), minlength=tilemap.nprocs)
    avg = m.nnz / tilemap.nprocs
    ratio = float(counts.max() / avg) if m.nnz else 1.0
    return ImbalanceReport(int(counts.max()), avg, ratio, tuple(int(c) for c in counts))
