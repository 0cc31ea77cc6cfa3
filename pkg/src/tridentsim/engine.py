"""Deterministic discrete-event engine for simulated SpGEMM processes.

Each simulated process runs a generator on its *main* lane. The generator
yields a :class:`Future` (or a list of them) and is resumed, in logical
time, once all of them have resolved. Outgoing service runs on separate
per-operand server lanes ("A" and "B"), so serving a request never
advances the owner's main clock.

Events are ordered by ``(time, insertion sequence)``; replaying the same
inputs reproduces the same timeline, ledger and result bit for bit.
"""

from __future__ import annotations

import heapq
import json
import os
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Any, Callable, Generator

from .errors import DeadlockError, RoutingError, ScheduleError
from .netmodel import CommLedger, LinkClass, TopologySpec, classify
from .sparse import CsrMatrix, vstack


class Future:
    __slots__ = ("done", "value", "time", "label", "_callbacks")

    def __init__(self, label: str = ""):
        self.done = False
        self.value = None
        self.time = None
        self.label = label
        self._callbacks: list[Callable[[Future], None]] = []

    def resolve(self, value, time: float) -> None:
        if self.done:
            raise ScheduleError(f"future {self.label!r} resolved twice")
        self.done, self.value, self.time = True, value, time
        callbacks, self._callbacks = self._callbacks, []
        for cb in callbacks:
            cb(self)

    def add_callback(self, cb: Callable[[Future], None]) -> None:
        if self.done:
            cb(self)
        else:
            self._callbacks.append(cb)

    def __repr__(self) -> str:
        state = f"done@{self.time}" if self.done else "pending"
        return f"Future({self.label!r}, {state})"


@dataclass
class Event:
    type: str
    actors: tuple[int, ...]
    round: int
    t_start: float
    t_end: float
    bytes: int = 0
    nnz: int = 0
    link: str = ""
    operand: str = ""

    def to_dict(self) -> dict:
        return {
            "type": self.type,
            "actors": list(self.actors),
            "round": self.round,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "bytes": self.bytes,
            "nnz": self.nnz,
            "link": self.link,
            "operand": self.operand,
        }


class EventTimeline:
    """Append-only list of completed engine events."""

    def __init__(self):
        self.events: list[Event] = []

    def add(self, event: Event) -> None:
        if event.t_end < event.t_start:
            raise ScheduleError(f"event ends before it starts: {event}")
        self.events.append(event)

    def of_type(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.type == kind]

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in self.events)

    def write_jsonl(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())


@dataclass
class Request:
    requester: int
    owner: int
    tag: str
    round: int
    issued: float
    future: Future
    selector: Any = None


@dataclass
class RequestQueue:
    owner: int
    tag: str
    pending: deque = field(default_factory=deque)
    busy: bool = False


@dataclass
class SimProcess:
    rank: int
    coords: tuple
    body: Generator
    clock: float = 0.0
    finished: bool = False
    waiting: list = field(default_factory=list)


class Engine:
    """Event loop plus the communication primitives the drivers use."""

    def __init__(self, grid, topology: TopologySpec, compute_delay: dict[int, float] | None = None):
        self.grid = grid
        self.topology = topology
        self.ledger = CommLedger(grid.P, topology)
        self.timeline = EventTimeline()
        self.compute_delay = dict(compute_delay or {})
        self.now = 0.0
        self._heap: list = []
        self._seq = 0
        self._stores: dict[tuple[int, str], CsrMatrix] = {}
        self._queues: dict[tuple[int, str], RequestQueue] = {}
        self._lane_free: dict[tuple[int, str], float] = defaultdict(float)
        self._procs: dict[int, SimProcess] = {}
        self._mailboxes: dict[tuple[int, Any], Future] = {}
        self._collectives: dict[int, dict] = {}
        self._node_round: dict[int, int] = defaultdict(int)

    # -- core loop ---------------------------------------------------------

    def at(self, t: float, fn: Callable, *args) -> None:
        if t < self.now:
            raise ScheduleError(f"cannot schedule at {t} < now {self.now}")
        heapq.heappush(self._heap, (t, self._seq, fn, args))
        self._seq += 1

    def spawn(self, rank: int, body: Generator, coords: tuple = ()) -> None:
        self._procs[rank] = SimProcess(rank, coords, body)
        self.at(0.0, self._step, rank, None)

    def run(self) -> float:
        while self._heap:
            t, _, fn, args = heapq.heappop(self._heap)
            self.now = t
            fn(*args)
        blocked = {
            rank: [f.label for f in p.waiting if not f.done] for rank, p in self._procs.items() if not p.finished
        }
        if blocked:
            raise DeadlockError(f"{len(blocked)} processes blocked with no eligible event", blocked)
        return self.ledger.makespan

    def _step(self, rank: int, value) -> None:
        proc = self._procs[rank]
        proc.clock = self.now
        try:
            waitable = proc.body.send(value)
        except StopIteration:
            proc.finished = True
            proc.waiting = []
            self.ledger.time[rank] = self.now
            return
        single = isinstance(waitable, Future)
        futures = [waitable] if single else list(waitable)
        proc.waiting = futures
        remaining = [sum(not f.done for f in futures)]

        def wake(_f=None):
            remaining[0] -= 1
            if remaining[0] <= 0:
                result = futures[0].value if single else [f.value for f in futures]
                self.at(self.now, self._step, rank, result)

        if remaining[0] == 0:
            remaining[0] = 1
            wake()
            return
        for f in futures:
            if not f.done:
                f.add_callback(wake)

    # -- primitives --------------------------------------------------------

    def ready(self, value, label: str = "") -> Future:
        """An already-resolved future (e.g. a tile the process owns)."""
        f = Future(label)
        f.resolve(value, self.now)
        return f

    def expose(self, rank: int, tag: str, tile: CsrMatrix) -> None:
        """Make ``tile`` servable from ``rank``'s ``tag`` request queue."""
        self._stores[(rank, tag)] = tile
        self._queues[(rank, tag)] = RequestQueue(rank, tag)

    def _payload(self, owner: int, tag: str, selector) -> CsrMatrix:
        tile = self._stores[(owner, tag)]
        return tile if selector is None else tile.select_rows(selector)

    def request_tile(self, requester: int, owner: int, tag: str, round: int, selector=None) -> Future:
        """Enqueue a one-sided request for ``owner``'s ``tag`` tile.

        Self-owned tiles short-circuit to a zero-cost local copy.
        """
        if (owner, tag) not in self._stores:
            raise RoutingError(f"rank {owner} exposes no {tag!r} tile")
        label = f"{tag}[r{round}] {owner}->{requester}"
        cls = classify(requester, owner, self.grid)
        if cls is LinkClass.SELF:
            tile = self._payload(owner, tag, selector)
            nbytes = self.ledger.record_transfer(owner, requester, cls, tile.nrows, tile.nnz)
            self.timeline.add(
                Event("local-copy", (owner, requester), round, self.now, self.now, nbytes, tile.nnz, cls.value, tag)
            )
            return self.ready(tile, label)
        fut = Future(label)
        self.ledger.record_request(requester, cls)
        req = Request(requester, owner, tag, round, self.now, fut, selector)
        self.at(self.now + self.topology.alpha(cls), self._enqueue, req, cls)
        return fut

    def _enqueue(self, req: Request, cls: LinkClass) -> None:
        queue = self._queues[(req.owner, req.tag)]
        queue.pending.append(req)
        self.timeline.add(
            Event("enqueue-request", (req.requester, req.owner), req.round, req.issued, self.now, 0, 0, cls.value, req.tag)
        )
        self._serve(queue)

    def _serve(self, queue: RequestQueue) -> None:
        if queue.busy or not queue.pending:
            return
        req = queue.pending.popleft()
        queue.busy = True
        tile = self._payload(queue.owner, queue.tag, req.selector)
        cls = classify(queue.owner, req.requester, self.grid)
        nbytes = self.ledger.record_transfer(queue.owner, req.requester, cls, tile.nrows, tile.nnz)
        t_end = self.now + self.topology.message_time(cls, nbytes)
        self._lane_free[(queue.owner, queue.tag)] = t_end
        self.timeline.add(
            Event("transfer", (queue.owner, req.requester), req.round, self.now, t_end, nbytes, tile.nnz, cls.value, queue.tag)
        )
        self.at(t_end, self._served, queue, req, tile)

    def _served(self, queue: RequestQueue, req: Request, tile: CsrMatrix) -> None:
        queue.busy = False
        req.future.resolve(tile, self.now)
        self._serve(queue)

    def expect(self, receiver: int, key) -> Future:
        """Mailbox future for a pushed message identified by ``key``."""
        box = self._mailboxes.get((receiver, key))
        if box is None:
            box = self._mailboxes[(receiver, key)] = Future(f"{key} -> {receiver}")
        return box

    def send(self, sender: int, receiver: int, key, tile: CsrMatrix, lane: str, round: int) -> Future:
        """Push ``tile`` to ``receiver`` on ``sender``'s outgoing ``lane``.

        Sends on one lane are serialised. The returned future resolves when
        the send completes; the receiver's ``expect(key)`` resolves at the
        same time.
        """
        cls = classify(sender, receiver, self.grid)
        if cls is LinkClass.SELF:
            raise RoutingError("send to self; use a local tile instead")
        nbytes = self.ledger.record_transfer(sender, receiver, cls, tile.nrows, tile.nnz)
        start = max(self.now, self._lane_free[(sender, lane)])
        t_end = start + self.topology.message_time(cls, nbytes)
        self._lane_free[(sender, lane)] = t_end
        self.timeline.add(Event("transfer", (sender, receiver), round, start, t_end, nbytes, tile.nnz, cls.value, lane))
        done = Future(f"send {key} {sender}->{receiver}")
        box = self.expect(receiver, key)
        self.at(t_end, box.resolve, tile, t_end)
        self.at(t_end, done.resolve, None, t_end)
        return done

    def allgather(self, rank: int, round: int, tile: CsrMatrix) -> Future:
        """Intranode allgather of row slices; resolves to their concatenation.

        Completion = max(participant ready times)
                     + max over participants of sum_{others}(alpha_LI + bytes/beta_LI).
        """
        node = self.grid.node_of(rank)
        members = self.grid.node_ranks(node)
        fut = Future(f"allgather node{node} r{round} @{rank}")
        if round != self._node_round[node]:
            raise ScheduleError(
                f"rank {rank} entered allgather round {round} while node {node} is at round {self._node_round[node]}"
            )
        coll = self._collectives.setdefault(node, {})
        if rank in coll:
            raise ScheduleError(f"rank {rank} entered allgather round {round} twice")
        coll[rank] = (tile, self.now, fut)
        if len(coll) < len(members):
            return fut

        del self._collectives[node]
        self._node_round[node] += 1
        t0 = max(ready for _, ready, _ in coll.values())
        slices = [coll[m][0] for m in members]
        if len(members) == 1:
            self.at(t0, fut.resolve, tile, t0)
            return fut
        sizes = [self.topology.payload_bytes(s.nrows, s.nnz) for s in slices]
        recv_cost = []
        for dst, receiver in enumerate(members):
            cost = 0.0
            for src, sender in enumerate(members):
                if src != dst:
                    self.ledger.record_transfer(sender, receiver, LinkClass.LI, slices[src].nrows, slices[src].nnz)
                    cost += self.topology.message_time(LinkClass.LI, sizes[src])
            recv_cost.append(cost)
        t_end = t0 + max(recv_cost)
        moved = (len(members) - 1) * sum(sizes)
        nnz = (len(members) - 1) * sum(s.nnz for s in slices)
        self.timeline.add(Event("allgather", tuple(members), round, t0, t_end, moved, nnz, LinkClass.LI.value, "B"))
        full = vstack(slices)
        for m in members:
            self.at(t_end, coll[m][2].resolve, full, t_end)
        return fut

    def compute(self, rank: int, flops: float, round: int) -> Future:
        dt = self.topology.compute_time(flops) + self.compute_delay.get(rank, 0.0)
        fut = Future(f"compute r{round} @{rank}")
        self.timeline.add(Event("compute", (rank,), round, self.now, self.now + dt, 0, int(flops)))
        self.at(self.now + dt, fut.resolve, None, self.now + dt)
        return fut
