"""Two-level interconnect model and communication accounting.

Transfers between ranks on the same node use the local interconnect (LI),
transfers between nodes use the global interconnect (GI). A transfer to
oneself is a local copy (SELF) and costs nothing.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import os
from collections import defaultdict
from dataclasses import asdict, dataclass, fields, replace

from .errors import GridError, ParameterError


class LinkClass(str, enum.Enum):
    SELF = "SELF"
    LI = "LI"
    GI = "GI"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TopologySpec:
    """Node count, GPUs per node and alpha-beta parameters per link class.

    ``alpha_*`` are seconds per message, ``beta_*`` bytes per second.
    ``flop_rate`` (flops per second, one multiply-add = 2 flops) prices
    local SpGEMM work in the modeled timeline.
    """

    nodes: int
    gpus_per_node: int
    alpha_li: float = 1.0e-6
    alpha_gi: float = 4.0e-6
    beta_li: float = 200.0e9
    beta_gi: float = 25.0e9
    index_width: int = 4
    value_width: int = 8
    flop_rate: float = 2.0e9

    def __post_init__(self):
        if self.nodes < 1 or self.gpus_per_node < 1:
            raise ParameterError("nodes and gpus_per_node must be positive")
        if not (self.beta_li >= self.beta_gi > 0):
            raise ParameterError("need beta_li >= beta_gi > 0")
        if not (self.alpha_gi >= self.alpha_li >= 0):
            raise ParameterError("need alpha_gi >= alpha_li >= 0")
        if self.index_width < 1 or self.value_width < 1:
            raise ParameterError("index/value widths must be positive")
        if self.flop_rate <= 0:
            raise ParameterError("flop_rate must be positive")

    @classmethod
    def preset(cls, nodes: int, gpus_per_node: int = 4) -> TopologySpec:
        """Default machine: LI 8x the bandwidth and 1/4 the latency of GI."""
        return cls(nodes, gpus_per_node)

    @property
    def P(self) -> int:
        return self.nodes * self.gpus_per_node

    def alpha(self, cls: LinkClass) -> float:
        if cls is LinkClass.SELF:
            return 0.0
        return self.alpha_li if cls is LinkClass.LI else self.alpha_gi

    def beta(self, cls: LinkClass) -> float:
        return self.beta_li if cls is LinkClass.LI else self.beta_gi

    def payload_bytes(self, nrows: int, nnz: int) -> int:
        """Bytes of a CSR payload: column indices, values and rowptr."""
        return nnz * (self.index_width + self.value_width) + (nrows + 1) * self.index_width

    def message_time(self, cls: LinkClass, nbytes: int) -> float:
        if cls is LinkClass.SELF:
            return 0.0
        return self.alpha(cls) + nbytes / self.beta(cls)

    def compute_time(self, flops: float) -> float:
        return flops / self.flop_rate

    def with_overrides(self, **kwargs) -> TopologySpec:
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)


_TOPOLOGY_KEYS = {f.name for f in fields(TopologySpec)}


def topology_from_dict(d: dict) -> TopologySpec:
    """Build a TopologySpec from a config mapping.

    Accepts either the bare fields or a mapping with a ``topology`` section.
    """
    section = d.get("topology", d)
    unknown = set(section) - _TOPOLOGY_KEYS
    if unknown:
        raise ParameterError(f"unknown topology keys: {sorted(unknown)}")
    return TopologySpec(**section)


def load_topology(path: str | os.PathLike) -> dict:
    """Read the raw topology section from a JSON or TOML file."""
    path = os.fspath(path)
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    else:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    return dict(data.get("topology", data))


def classify(sender: int, receiver: int, grid) -> LinkClass:
    if sender == receiver:
        return LinkClass.SELF
    if grid.node_of(sender) == grid.node_of(receiver):
        return LinkClass.LI
    return LinkClass.GI


# -- ledger ----------------------------------------------------------------


@dataclass
class Counters:
    messages: int = 0
    nnz: int = 0
    bytes: int = 0


class CommLedger:
    """Per-process, per-link-class message, nonzero and byte counters.

    Both directions are tracked; ``sent`` feeds the per-process volume
    reports and ``received`` feeds the per-round volume checks. Request
    (control) messages are counted separately and carry no volume.
    """

    def __init__(self, nprocs: int, topology: TopologySpec):
        self.nprocs = nprocs
        self.topology = topology
        self.sent: dict[tuple[int, LinkClass], Counters] = defaultdict(Counters)
        self.received: dict[tuple[int, LinkClass], Counters] = defaultdict(Counters)
        self.requests: dict[tuple[int, LinkClass], int] = defaultdict(int)
        self.local_copies: dict[int, Counters] = defaultdict(Counters)
        self.time: list[float] = [0.0] * nprocs

    def record_transfer(self, sender: int, receiver: int, cls: LinkClass, nrows: int, nnz: int) -> int:
        """Charge one payload message; returns its size in bytes."""
        nbytes = self.topology.payload_bytes(nrows, nnz)
        if cls is LinkClass.SELF:
            c = self.local_copies[receiver]
            c.messages += 1
            c.nnz += nnz
            c.bytes += nbytes
            return nbytes
        for table, rank in ((self.sent, sender), (self.received, receiver)):
            c = table[(rank, cls)]
            c.messages += 1
            c.nnz += nnz
            c.bytes += nbytes
        return nbytes

    def record_request(self, sender: int, cls: LinkClass) -> None:
        self.requests[(sender, cls)] += 1

    def totals(self, cls: LinkClass, direction: str = "sent") -> Counters:
        table = self.sent if direction == "sent" else self.received
        out = Counters()
        for (_, c), v in table.items():
            if c is cls:
                out.messages += v.messages
                out.nnz += v.nnz
                out.bytes += v.bytes
        return out

    def per_process(self, cls: LinkClass, attr: str = "nnz", direction: str = "sent") -> list[int]:
        table = self.sent if direction == "sent" else self.received
        return [getattr(table[(p, cls)], attr) if (p, cls) in table else 0 for p in range(self.nprocs)]

    @property
    def makespan(self) -> float:
        return max(self.time) if self.time else 0.0

    def rows(self) -> list[dict]:
        out = []
        for p in range(self.nprocs):
            for cls in (LinkClass.LI, LinkClass.GI):
                s = self.sent.get((p, cls), Counters())
                r = self.received.get((p, cls), Counters())
                out.append(
                    {
                        "process": p,
                        "class": cls.value,
                        "messages": s.messages,
                        "nnz": s.nnz,
                        "bytes": s.bytes,
                        "time": self.time[p],
                        "messages_recv": r.messages,
                        "nnz_recv": r.nnz,
                        "bytes_recv": r.bytes,
                        "requests": self.requests.get((p, cls), 0),
                    }
                )
        return out

    def write_csv(self, path: str | os.PathLike) -> None:
        rows = self.rows()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["process"])
            writer.writeheader()
            writer.writerows(rows)


# -- analytic prediction ---------------------------------------------------


@dataclass(frozen=True)
class VolumePrediction:
    """Closed-form trident volumes for a uniform nonzero distribution.

    All quantities are nonzero counts. ``gi_total_per_node`` is the
    closed form 2*nnz/(sqrt(P)*sqrt(lam)); it equals the GI
    volume one process fetches over all q rounds.
    """

    nnz: int
    P: int
    lam: int
    q: int
    gi_per_iteration: float
    li_per_iteration: float
    gi_total_per_node: float
    summa_per_operand: float
    assumes_uniform: bool = True

    @property
    def summa_per_process(self) -> float:
        """SUMMA volume per process counting both the A and the B panels."""
        return 2 * self.summa_per_operand

    @property
    def summa_ratio(self) -> float:
        """SUMMA per-process volume over trident per-node GI volume (= sqrt(lam))."""
        return self.summa_per_process / self.gi_total_per_node if self.gi_total_per_node else math.inf


def predict_trident_volume(nnz: int, P: int, lam: int) -> VolumePrediction:
    from .partition import make_trident_grid

    grid = make_trident_grid(P, lam)
    if nnz < 0:
        raise GridError("nnz must be non-negative")
    per_tile = nnz / P
    return VolumePrediction(
        nnz=nnz,
        P=P,
        lam=lam,
        q=grid.q,
        gi_per_iteration=2 * per_tile,
        li_per_iteration=(lam - 1) * per_tile,
        gi_total_per_node=2 * nnz / (math.sqrt(P) * math.sqrt(lam)),
        summa_per_operand=nnz / math.sqrt(P),
    )
