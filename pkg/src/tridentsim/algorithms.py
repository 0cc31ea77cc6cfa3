"""Distributed SpGEMM drivers: trident, Sparse SUMMA and sparsity-aware 1D.

Every driver partitions its operands, runs one simulated process per rank
on a fresh :class:`~tridentsim.engine.Engine` and returns the reassembled
product together with the communication ledger and event timeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Engine, EventTimeline
from .errors import DimensionError, GridError
from .netmodel import CommLedger, TopologySpec
from .partition import (
    Grid1D,
    Grid2D,
    TileMap,
    TridentGrid,
    build_tilemap,
    make_grid1d,
    make_grid2d,
    make_trident_grid,
    reassemble,
    split,
)
from .sparse import CsrMatrix, multiply_adds, spgeam, spgemm_local

ALGORITHMS = ("trident", "summa", "oned")


@dataclass
class DistributedResult:
    algo: str
    c: CsrMatrix
    c_tiles: list[CsrMatrix]
    tilemap: TileMap
    ledger: CommLedger
    timeline: EventTimeline
    makespan: float
    rounds: int
    grid: object
    topology: TopologySpec


@dataclass(frozen=True)
class TridentSchedule:
    """Static-Cannon operand owners for every (process, round)."""

    grid: TridentGrid

    def inner_block(self, i: int, j: int, r: int) -> int:
        return (r + i + j) % self.grid.q

    def stagger(self, i: int, j: int) -> int:
        return (i + j) % self.grid.q

    def a_owner(self, rank: int, r: int) -> int:
        i, j, k = self.grid.coords(rank)
        return self.grid.rank_of(i, self.inner_block(i, j, r), k)

    def b_owner(self, rank: int, r: int) -> int:
        i, j, k = self.grid.coords(rank)
        return self.grid.rank_of(self.inner_block(i, j, r), j, k)


def _check_inner(a: CsrMatrix, b: CsrMatrix) -> None:
    if a.ncols != b.nrows:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")


def _topology_for(grid, topology: TopologySpec | None) -> TopologySpec:
    if topology is None:
        return TopologySpec.preset(grid.nodes, grid.lam)
    if topology.gpus_per_node != grid.lam:
        raise GridError(f"topology has {topology.gpus_per_node} GPUs per node, grid uses {grid.lam}")
    if topology.nodes != grid.nodes:
        raise GridError(f"topology has {topology.nodes} nodes, grid needs {grid.nodes}")
    return topology


def _local_flops(a: CsrMatrix, b: CsrMatrix, c_nnz: int, partial_nnz: int) -> int:
    # two flops per multiply-add plus one per entry touched by the merge
    return 2 * multiply_adds(a, b) + c_nnz + partial_nnz


def trident_spgemm(
    a: CsrMatrix,
    b: CsrMatrix,
    grid: TridentGrid,
    topology: TopologySpec | None = None,
    *,
    compute_delay: dict[int, float] | None = None,
) -> DistributedResult:
    """Hierarchy-aware product on a q x q x lam grid.

    Round r on process (i, j, k) fetches A_{i,s,k} and B_{s,j,k} with
    s = (r + i + j) mod q from their owners (paired k-th slice to k-th
    slice), rebuilds B_{s,j} with an intranode allgather and accumulates
    A_{i,s,k} @ B_{s,j} into the stationary C_{i,j,k}.
    """
    _check_inner(a, b)
    if not isinstance(grid, TridentGrid):
        raise GridError("trident_spgemm needs a TridentGrid")
    topology = _topology_for(grid, topology)
    m, k_dim, n = a.nrows, a.ncols, b.ncols
    q = grid.q
    tm_a = build_tilemap(m, k_dim, grid, "trident")
    tm_b = build_tilemap(k_dim, n, grid, "trident")
    tm_c = build_tilemap(m, n, grid, "trident")
    tiles_a, tiles_b = split(a, tm_a), split(b, tm_b)

    engine = Engine(grid, topology, compute_delay)
    schedule = TridentSchedule(grid)
    for rank in range(grid.P):
        engine.expose(rank, "A", tiles_a[rank])
        engine.expose(rank, "B", tiles_b[rank])
    c_tiles: list[CsrMatrix | None] = [None] * grid.P

    def body(rank):
        c = CsrMatrix.empty(*tm_c.tile_shape(rank))
        for r in range(q):
            fa = engine.request_tile(rank, schedule.a_owner(rank, r), "A", r)
            fb = engine.request_tile(rank, schedule.b_owner(rank, r), "B", r)
            a_t, b_t = yield [fa, fb]
            b_full = yield engine.allgather(rank, r, b_t)
            partial = spgemm_local(a_t, b_full)
            flops = _local_flops(a_t, b_full, c.nnz, partial.nnz)
            c = spgeam(c, partial)
            yield engine.compute(rank, flops, r)
        c_tiles[rank] = c

    for rank in range(grid.P):
        engine.spawn(rank, body(rank), grid.coords(rank))
    makespan = engine.run()
    return DistributedResult(
        "trident", reassemble(c_tiles, tm_c), c_tiles, tm_c, engine.ledger, engine.timeline, makespan, q, grid, topology
    )


def summa_spgemm(a: CsrMatrix, b: CsrMatrix, grid: Grid2D, topology: TopologySpec | None = None) -> DistributedResult:
    """Sparse SUMMA on a sqrt(P) x sqrt(P) grid.

    Stage r broadcasts A_{i,r} along process row i and B_{r,j} along
    process column j. A broadcast is a flat fan-out from the owner, one
    full tile per receiver, serialised on the owner's outgoing lane; the
    owner blocks until its fan-out is done.
    """
    _check_inner(a, b)
    if not isinstance(grid, Grid2D):
        raise GridError("summa_spgemm needs a Grid2D")
    topology = _topology_for(grid, topology)
    side = grid.side
    tm_a = build_tilemap(a.nrows, a.ncols, grid, "grid2d")
    tm_b = build_tilemap(b.nrows, b.ncols, grid, "grid2d")
    tm_c = build_tilemap(a.nrows, b.ncols, grid, "grid2d")
    tiles_a, tiles_b = split(a, tm_a), split(b, tm_b)

    engine = Engine(grid, topology)
    c_tiles: list[CsrMatrix | None] = [None] * grid.P

    def body(rank):
        i, j = grid.coords(rank)
        c = CsrMatrix.empty(*tm_c.tile_shape(rank))
        for r in range(side):
            waits = []
            if j == r:
                fa = engine.ready(tiles_a[rank])
                waits += [engine.send(rank, grid.rank_of(i, jj), ("A", r), tiles_a[rank], "A", r) for jj in range(side) if jj != j]
            else:
                fa = engine.expect(rank, ("A", r))
            if i == r:
                fb = engine.ready(tiles_b[rank])
                waits += [engine.send(rank, grid.rank_of(ii, j), ("B", r), tiles_b[rank], "B", r) for ii in range(side) if ii != i]
            else:
                fb = engine.expect(rank, ("B", r))
            got = yield [fa, fb, *waits]
            a_t, b_t = got[0], got[1]
            partial = spgemm_local(a_t, b_t)
            flops = _local_flops(a_t, b_t, c.nnz, partial.nnz)
            c = spgeam(c, partial)
            yield engine.compute(rank, flops, r)
        c_tiles[rank] = c

    for rank in range(grid.P):
        engine.spawn(rank, body(rank), grid.coords(rank))
    makespan = engine.run()
    return DistributedResult(
        "summa", reassemble(c_tiles, tm_c), c_tiles, tm_c, engine.ledger, engine.timeline, makespan, side, grid, topology
    )


def oned_spgemm(a: CsrMatrix, b: CsrMatrix, grid: Grid1D, topology: TopologySpec | None = None) -> DistributedResult:
    """Sparsity-aware row-wise product.

    Each process requests from every other owner exactly the B rows its A
    block references (one index request, one payload reply per owner),
    then multiplies locally.
    """
    _check_inner(a, b)
    if not isinstance(grid, Grid1D):
        raise GridError("oned_spgemm needs a Grid1D")
    topology = _topology_for(grid, topology)
    tm_a = build_tilemap(a.nrows, a.ncols, grid, "rows1d")
    tm_b = build_tilemap(b.nrows, b.ncols, grid, "rows1d")
    tm_c = build_tilemap(a.nrows, b.ncols, grid, "rows1d")
    tiles_a, tiles_b = split(a, tm_a), split(b, tm_b)
    b_bounds = tm_b.row_bounds

    engine = Engine(grid, topology)
    for rank in range(grid.P):
        engine.expose(rank, "B", tiles_b[rank])
    c_tiles: list[CsrMatrix | None] = [None] * grid.P

    def body(rank):
        a_p = tiles_a[rank]
        needed = np.unique(a_p.colind)
        owners = np.searchsorted(b_bounds, needed, side="right") - 1
        remote = [o for o in np.unique(owners).tolist() if o != rank]
        futures = [engine.request_tile(rank, o, "B", 0, selector=needed[owners == o] - b_bounds[o]) for o in remote]
        received = (yield futures) if futures else []

        own = tiles_b[rank]
        rows = [own.row_ids() + b_bounds[rank]]
        cols, vals = [own.colind], [own.values]
        for o, blk in zip(remote, received):
            global_rows = needed[owners == o]
            rows.append(global_rows[blk.row_ids()])
            cols.append(blk.colind)
            vals.append(blk.values)
        b_ext = CsrMatrix.from_coo(
            b.nrows, b.ncols, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), sum_duplicates=False
        )
        c = spgemm_local(a_p, b_ext)
        yield engine.compute(rank, _local_flops(a_p, b_ext, 0, c.nnz), 0)
        c_tiles[rank] = c

    for rank in range(grid.P):
        engine.spawn(rank, body(rank), (rank,))
    makespan = engine.run()
    return DistributedResult(
        "oned", reassemble(c_tiles, tm_c), c_tiles, tm_c, engine.ledger, engine.timeline, makespan, 1, grid, topology
    )


def make_grid(algo: str, P: int, lam: int):
    """Grid for ``algo`` with P ranks packed into nodes of ``lam``."""
    if algo == "trident":
        return make_trident_grid(P, lam)
    if algo == "summa":
        return make_grid2d(P, lam)
    if algo == "oned":
        return make_grid1d(P, lam)
    raise GridError(f"unknown algorithm {algo!r}")


def run_algorithm(algo: str, a: CsrMatrix, b: CsrMatrix, P: int, lam: int, topology: TopologySpec | None = None) -> DistributedResult:
    grid = make_grid(algo, P, lam)
    if topology is not None and (topology.nodes != grid.nodes or topology.gpus_per_node != lam):
        topology = topology.with_overrides(nodes=grid.nodes, gpus_per_node=lam)
    driver = {"trident": trident_spgemm, "summa": summa_spgemm, "oned": oned_spgemm}[algo]
    return driver(a, b, grid, topology)
