"""End-to-end experiments: Markov clustering, A*R, and the permutation study."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .algorithms import ALGORITHMS, run_algorithm
from .errors import DimensionError, ParameterError
from .generators import Permutation, permute_symmetric
from .netmodel import TopologySpec
from .report import RunReport, build_report, oracle_error
from .sparse import CsrMatrix, column_normalize, elementwise_power, prune, spgemm_local


@dataclass(frozen=True)
class MclParams:
    iterations: int = 10
    prune_threshold: float = 0.002
    inflation_exponent: float = 2.0

    def __post_init__(self):
        if self.iterations < 1:
            raise ParameterError("iterations must be >= 1")
        if self.prune_threshold < 0:
            raise ParameterError("prune_threshold must be >= 0")


@dataclass
class MclResult:
    labels: np.ndarray
    matrix: CsrMatrix
    reports: list[RunReport]
    nnz_history: list[tuple[int, int]]

    @property
    def clusters(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for v, c in enumerate(self.labels.tolist()):
            groups.setdefault(c, []).append(v)
        return [groups[c] for c in sorted(groups)]

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["vertex", "cluster"])
            writer.writerows(enumerate(self.labels.tolist()))


def extract_clusters(m: CsrMatrix) -> np.ndarray:
    """Weakly connected components of the pattern, labelled by first vertex."""
    _, raw = connected_components(m.to_scipy(), directed=True, connection="weak")
    relabel: dict[int, int] = {}
    return np.array([relabel.setdefault(c, len(relabel)) for c in raw.tolist()], dtype=np.int64)


def mcl(
    a: CsrMatrix,
    params: MclParams = MclParams(),
    driver: str | None = None,
    P: int = 16,
    lam: int = 4,
    topology: TopologySpec | None = None,
) -> MclResult:
    """Markov clustering with the expansion step run by ``driver``.

    ``driver=None`` runs the serial reference. Each iteration is
    expand (M <- M @ M), normalise, prune, inflate (elementwise power),
    normalise; the input is column-normalised once up front.
    """
    if a.nrows != a.ncols:
        raise DimensionError("MCL needs a square matrix")
    if a.nnz and a.values.min() < 0:
        raise ParameterError("MCL needs a nonnegative matrix")
    m = column_normalize(a)
    reports = []
    history = []
    for it in range(params.iterations):
        if driver is None:
            m = spgemm_local(m, m)
        else:
            result = run_algorithm(driver, m, m, P, lam, topology)
            reports.append(build_report(result, {"iteration": it}))
            m = result.c
        m = column_normalize(m)
        before = m.nnz
        m = prune(m, params.prune_threshold)
        history.append((before, m.nnz))
        m = column_normalize(elementwise_power(m, params.inflation_exponent))
    return MclResult(extract_clusters(m), m, reports, history)


def make_restriction(nrows: int, agg_size: int) -> CsrMatrix:
    """Piecewise-constant aggregation: R[i, i // agg_size] = 1."""
    if agg_size < 1:
        raise ParameterError("agg_size must be >= 1")
    ncols = math.ceil(nrows / agg_size)
    return CsrMatrix(nrows, ncols, np.arange(nrows + 1), np.arange(nrows) // agg_size, np.ones(nrows))


@dataclass
class PermutationRun:
    algo: str
    original: RunReport
    permuted: RunReport

    def volume(self, which: str) -> int:
        agg = getattr(self, which).aggregate
        return agg["gi_nnz"] + agg["li_nnz"]


def permutation_study(
    a: CsrMatrix,
    seed: int,
    drivers=ALGORITHMS,
    P: int = 16,
    lam: int = 4,
    topology: TopologySpec | None = None,
    rtol: float = 1e-12,
) -> list[PermutationRun]:
    """Run every driver on ``a`` and on a random symmetric permutation of it.

    Both products are checked against the serial oracle, and the permuted
    product is mapped back with the inverse permutation and compared to
    the original product.
    """
    if a.nrows != a.ncols:
        raise DimensionError("permutation study needs a square matrix")
    perm = Permutation.random(a.nrows, seed)
    ap = permute_symmetric(a, perm)
    runs = []
    for algo in drivers:
        base = run_algorithm(algo, a, a, P, lam, topology)
        moved = run_algorithm(algo, ap, ap, P, lam, topology)
        ok0, err0 = oracle_error(base.c, a, a)
        ok1, err1 = oracle_error(moved.c, ap, ap)
        back = permute_symmetric(moved.c, perm.inverse())
        ok2, err2 = oracle_error(back, a, a)
        runs.append(
            PermutationRun(
                algo,
                build_report(base, {"permuted": False, "seed": seed}, ok0 and err0 <= rtol),
                build_report(moved, {"permuted": True, "seed": seed}, ok1 and err1 <= rtol and ok2 and err2 <= rtol),
            )
        )
    return runs


def write_permutation_csv(runs: list[PermutationRun], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algo", "variant", "gi_nnz", "li_nnz", "total_nnz", "makespan", "verified"])
        for run in runs:
            for variant in ("original", "permuted"):
                rep = getattr(run, variant)
                agg = rep.aggregate
                writer.writerow(
                    [run.algo, variant, agg["gi_nnz"], agg["li_nnz"], agg["gi_nnz"] + agg["li_nnz"], repr(rep.makespan), rep.verified]
                )

