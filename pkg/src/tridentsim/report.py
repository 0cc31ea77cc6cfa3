"""Run reports, result checksums and oracle verification."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .netmodel import LinkClass
from .sparse import CsrMatrix, spgemm_local

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finaliser; uint64 arithmetic wraps modulo 2**64
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def checksum(m: CsrMatrix, quantum: float = 1e-9) -> dict:
    """Order-independent 64-bit hash of (row, col, quantised value) triples."""
    rows, cols, vals = m.to_coo()
    quant = np.rint(vals / quantum) + 0.0  # +0.0 folds -0.0 into 0.0
    with np.errstate(over="ignore"):
        h = _mix64(rows.astype(np.uint64) + np.uint64(0x9E3779B97F4A7C15))
        h = _mix64(h ^ cols.astype(np.uint64))
        h = _mix64(h ^ quant.view(np.uint64))
        total = int(np.sum(h, dtype=np.uint64) & _MASK64) if len(h) else 0
    return {"nnz": m.nnz, "hash": f"{total:016x}"}


def oracle_error(c: CsrMatrix, a: CsrMatrix, b: CsrMatrix) -> tuple[bool, float]:
    """Compare ``c`` with the serial product of ``a`` and ``b``.

    Returns (pattern matches, worst relative error). The error of each
    entry is scaled by the sum of absolute partial products, which reduces
    to plain relative error for nonnegative operands.
    """
    ref = spgemm_local(a, b)
    if not c.same_pattern(ref):
        return False, float("inf")
    if ref.nnz == 0:
        return True, 0.0
    absref = spgemm_local(_abs(a), _abs(b))
    scale = np.where(absref.values > 0, absref.values, 1.0)
    return True, float(np.max(np.abs(c.values - ref.values) / scale))


def verify_product(c: CsrMatrix, a: CsrMatrix, b: CsrMatrix, rtol: float = 1e-12) -> bool:
    ok, err = oracle_error(c, a, b)
    return ok and err <= rtol


def _abs(m: CsrMatrix) -> CsrMatrix:
    return CsrMatrix(m.nrows, m.ncols, m.rowptr, m.colind, np.abs(m.values))


@dataclass
class RunReport:
    config: dict
    ledger: list[dict]
    aggregate: dict
    makespan: float
    rounds: int
    checksum: dict
    verified: bool | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "config": self.config,
            "ledger": self.ledger,
            "aggregate": self.aggregate,
            "makespan": self.makespan,
            "rounds": self.rounds,
            "checksum": self.checksum,
            "verified": self.verified,
        }
        if self.extra:
            out["extra"] = self.extra
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def write(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


def build_report(result, config: dict | None = None, verified: bool | None = None) -> RunReport:
    """Summarise a DistributedResult."""
    ledger = result.ledger
    gi_sent = ledger.per_process(LinkClass.GI)
    li_sent = ledger.per_process(LinkClass.LI)
    gi_tot, li_tot = ledger.totals(LinkClass.GI), ledger.totals(LinkClass.LI)
    P = ledger.nprocs
    aggregate = {
        "gi_nnz": gi_tot.nnz,
        "li_nnz": li_tot.nnz,
        "gi_bytes": gi_tot.bytes,
        "li_bytes": li_tot.bytes,
        "gi_messages": gi_tot.messages,
        "li_messages": li_tot.messages,
        "gi_nnz_per_process_mean": gi_tot.nnz / P,
        "gi_nnz_per_process_max": max(gi_sent) if gi_sent else 0,
        "li_nnz_per_process_mean": li_tot.nnz / P,
        "li_nnz_per_process_max": max(li_sent) if li_sent else 0,
    }
    cfg = {
        "algo": result.algo,
        "P": P,
        "gpus_per_node": result.topology.gpus_per_node,
        "topology": result.topology.to_dict(),
    }
    cfg.update(config or {})
    return RunReport(cfg, ledger.rows(), aggregate, result.makespan, result.rounds, checksum(result.c), verified)
