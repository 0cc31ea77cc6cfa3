"""Simulated hierarchy-aware distributed SpGEMM."""

from .algorithms import (
    ALGORITHMS,
    DistributedResult,
    TridentSchedule,
    make_grid,
    oned_spgemm,
    run_algorithm,
    summa_spgemm,
    trident_spgemm,
)
from .apps import MclParams, MclResult, make_restriction, mcl, permutation_study
from .engine import Engine, Event, EventTimeline, Future
from .errors import (
    DeadlockError,
    DimensionError,
    GridError,
    IncompleteTileSet,
    ParameterError,
    ParseError,
    RoutingError,
    ScheduleError,
    TridentSimError,
    UnsupportedFormat,
)
from .generators import Permutation, gen_erdos_renyi, permute_symmetric
from .mmio import read_matrix_market, write_matrix_market
from .netmodel import CommLedger, LinkClass, TopologySpec, classify, predict_trident_volume
from .partition import (
    Grid1D,
    Grid2D,
    TileMap,
    TridentGrid,
    build_tilemap,
    imbalance,
    make_grid1d,
    make_grid2d,
    make_trident_grid,
    partition,
    reassemble,
)
from .report import RunReport, build_report, checksum, verify_product
from .sparse import CsrMatrix, column_normalize, elementwise_power, prune, spgeam, spgemm_local

__version__ = "0.1.0"
