"""Synchronous CONGEST engine with KT1 initial knowledge and block metering.

A message of ``bits`` bits costs ``ceil(bits / B)`` metered messages with
``B = kappa * ceil(log2 n)``, and occupies its directed link for that many
consecutive rounds. Links are FIFO: a message sent while the link is still
busy starts when the link frees up. A message whose last block goes out in
round r is handled by its receiver in round r + 1.

Algorithms are written as a sequence of *stages*. Every stage starts when the
previous one has ended on all nodes, which models the public round schedule
that all nodes can compute from n and the constants. A stage costs the round
of its last transmission (one round when nodes ran but nobody sent).
"""

from __future__ import annotations

import heapq
import json
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .graph import Graph

DEFAULT_KAPPA = 4


def block_bits(n: int, kappa: int = DEFAULT_KAPPA) -> int:
    """Bits that fit in one metered message."""
    return kappa * max(1, math.ceil(math.log2(n))) if n > 1 else kappa


def meter_payload(bits: int, n: int, kappa: int = DEFAULT_KAPPA) -> int:
    if bits < 0:
        raise ValueError("payload size must be non-negative")
    b = block_bits(n, kappa)
    return -(-bits // b)


class CongestFault(RuntimeError):
    """A node tried something the model forbids, e.g. messaging a non-neighbour."""

    def __init__(self, node: int, message: str):
        super().__init__(f"node {node}: {message}")
        self.node = node


class RoundLimitExceeded(RuntimeError):
    def __init__(self, metrics: "Metrics"):
        super().__init__(f"round limit exceeded after {metrics.rounds} rounds")
        self.metrics = metrics


@dataclass
class Metrics:
    rounds: int = 0
    messages: int = 0
    phases: dict[str, list[int]] = field(default_factory=dict)

    def charge(self, label: str, rounds: int, messages: int) -> None:
        if rounds < 0 or messages < 0:
            raise ValueError("metric increments must be non-negative")
        self.rounds += rounds
        self.messages += messages
        slot = self.phases.setdefault(label, [0, 0])
        slot[0] += rounds
        slot[1] += messages

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "messages": self.messages,
            "phases": {k: {"rounds": r, "messages": m} for k, (r, m) in sorted(self.phases.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def copy(self) -> "Metrics":
        return Metrics(self.rounds, self.messages, {k: list(v) for k, v in self.phases.items()})


@dataclass(frozen=True)
class Kt1Knowledge:
    """What a node knows before any communication: itself and its incident edges."""

    self_id: int
    n: int
    idspace: int
    neighbor_ids: tuple[int, ...]
    incident_weights: tuple[int, ...]
    multiplicities: tuple[int, ...]


class Node:
    """Local view of one node: KT1 knowledge, private memory and private coins.

    Algorithms touch nothing but the ``Node`` they run on; the engine and the
    collective schedulers are the only code that sees more than one node.
    """

    __slots__ = ("id", "nbrs", "nbr_set", "weight", "mult", "mem", "_seed", "_rng", "n", "id_bits", "idspace")

    def __init__(self, g: Graph, v: int, seed: int):
        self.id = v
        self.nbrs = g.adj[v]
        self.nbr_set = frozenset(self.nbrs)
        self.weight = {w: g.weight(v, w) for w in self.nbrs}
        self.mult = {w: g.multiplicity(v, w) for w in self.nbrs}
        self.n = g.n
        self.id_bits = g.id_bits
        self.idspace = g.idspace
        self.mem: dict[str, Any] = {}
        self._seed = seed
        self._rng = None

    @property
    def knowledge(self) -> Kt1Knowledge:
        return Kt1Knowledge(self.id, self.n, self.idspace, self.nbrs,
                            tuple(self.weight[w] for w in self.nbrs),
                            tuple(self.mult[w] for w in self.nbrs))

    @property
    def rng(self) -> np.random.Generator:
        if self._rng is None:
            ss = np.random.SeedSequence([self._seed & 0xFFFFFFFFFFFFFFFF, self.id])
            self._rng = np.random.Generator(np.random.Philox(ss))
        return self._rng

    def random_bits(self, k: int) -> int:
        out = 0
        while k > 0:
            take = min(k, 32)
            out = (out << take) | int(self.rng.integers(0, 1 << take))
            k -= take
        return out

    def coin(self, p: float) -> bool:
        return bool(self.rng.random() < p)


class NodeProgram:
    """Per-node state machine for one stage.

    ``step`` is called in round 1 and afterwards only in rounds where the node
    has mail or asked to be woken. The inbox is a list of ``(src, data)``
    sorted by source id (FIFO among messages from the same source).
    """

    def step(self, ctx: "Context", rnd: int, inbox: list[tuple[int, Any]]) -> None:
        raise NotImplementedError


class Context:
    __slots__ = ("_engine", "node", "round", "halted", "output")

    def __init__(self, engine: "_Stage", node: Node):
        self._engine = engine
        self.node = node
        self.round = 0
        self.halted = False
        self.output: Any = None

    def send(self, dst: int, data: Any, bits: int) -> None:
        self._engine.send(self.node, dst, data, bits, self.round)

    def wake(self, rnd: int) -> None:
        self._engine.wake(self.node.id, max(rnd, self.round + 1))

    def halt(self) -> None:
        self.halted = True


class _Stage:
    """One run of node programs until quiescence (or a round cap)."""

    def __init__(self, sim: "Simulation", programs: dict[int, NodeProgram], cap: int | None):
        self.sim = sim
        self.programs = programs
        self.cap = cap
        self.busy: dict[tuple[int, int], int] = {}
        self.mail: dict[int, dict[int, list]] = {}
        self.wakes: dict[int, set[int]] = {}
        self.heap: list[int] = []
        self.queued: set[int] = set()
        self.seq = 0
        self.messages = 0
        self.last_tx = 0
        self.ran = False
        self.cut = False

    def _schedule(self, rnd: int) -> None:
        if rnd not in self.queued:
            self.queued.add(rnd)
            heapq.heappush(self.heap, rnd)

    def send(self, node: Node, dst: int, data: Any, bits: int, rnd: int) -> None:
        if dst not in node.nbr_set:
            raise CongestFault(node.id, f"cannot send to non-neighbour {dst}")
        blocks = max(1, self.sim.blocks(bits))
        key = (node.id, dst)
        start = rnd
        prev = self.busy.get(key)
        if prev is not None and prev >= start:
            start = prev + 1
        end = start + blocks - 1
        self.busy[key] = end
        if not self.sim.is_free(node.id, dst):
            self.messages += blocks
        if end > self.last_tx:
            self.last_tx = end
        self.seq += 1
        box = self.mail.setdefault(end + 1, {})
        box.setdefault(dst, []).append((node.id, self.seq, data))
        self._schedule(end + 1)

    def wake(self, v: int, rnd: int) -> None:
        self.wakes.setdefault(rnd, set()).add(v)
        self._schedule(rnd)

    def execute(self) -> dict[int, Context]:
        ctxs = {v: Context(self, self.sim.nodes[v]) for v in self.programs}
        for v in self.programs:
            self.wakes.setdefault(1, set()).add(v)
        self._schedule(1)
        while self.heap:
            rnd = heapq.heappop(self.heap)
            self.queued.discard(rnd)
            if self.cap is not None and rnd > self.cap:
                self.cut = True
                break
            box = self.mail.pop(rnd, {})
            woken = self.wakes.pop(rnd, set())
            for v in sorted(woken.union(box)):
                ctx = ctxs.get(v)
                if ctx is None or ctx.halted:
                    continue
                inbox = box.get(v)
                if inbox:
                    inbox.sort(key=lambda item: (item[0], item[1]))
                    inbox = [(src, data) for src, _, data in inbox]
                else:
                    inbox = []
                ctx.round = rnd
                self.ran = True
                self.programs[v].step(ctx, rnd, inbox)
        return ctxs

    @property
    def rounds(self) -> int:
        r = self.last_tx if self.last_tx else (1 if self.ran else 0)
        return min(r, self.cap) if self.cap is not None else r


class Simulation:
    """Shared state of one simulated execution: nodes, clock and metrics.

    ``mode`` selects how the collective primitives in ``primitives`` execute:
    ``"engine"`` runs them as node programs message by message, ``"fast"``
    computes the same schedule, outputs and metered costs directly. The two
    are checked against each other in the test suite.
    """

    def __init__(self, g: Graph, seed: int = 0, *, kappa: int = DEFAULT_KAPPA, mode: str = "fast",
                 round_limit: int | None = None, free_edges: set[tuple[int, int]] | None = None):
        if mode not in ("fast", "engine"):
            raise ValueError(f"unknown simulation mode {mode!r}")
        self.graph = g
        self.n = g.n
        self.seed = seed
        self.kappa = kappa
        self.B = block_bits(g.n, kappa)
        self.id_bits = g.id_bits
        self.mode = mode
        self.round_limit = round_limit
        self.free_edges = frozenset(free_edges or ())
        self.nodes = {v: Node(g, v, seed) for v in g.nodes}
        self.metrics = Metrics()
        self._labels: list[str] = []
        self.stage_seq = 0

    # -- metering ----------------------------------------------------------
    def blocks(self, bits: int) -> int:
        return -(-bits // self.B)

    def is_free(self, u: int, v: int) -> bool:
        if not self.free_edges:
            return False
        return ((u, v) if u < v else (v, u)) in self.free_edges

    @property
    def clock(self) -> int:
        return self.metrics.rounds

    @property
    def label(self) -> str:
        return "/".join(self._labels) if self._labels else "main"

    @contextmanager
    def phase(self, label: str):
        self._labels.append(label)
        try:
            yield
        finally:
            self._labels.pop()

    def charge(self, rounds: int, messages: int) -> None:
        self.metrics.charge(self.label, rounds, messages)
        if self.round_limit is not None and self.metrics.rounds > self.round_limit:
            raise RoundLimitExceeded(self.metrics.copy())

    def pad_to(self, target: int) -> int:
        """Idle until the global clock reads ``target``; returns the overrun (>0 if already past)."""
        if self.clock < target:
            self.charge(target - self.clock, 0)
            return 0
        return self.clock - target

    # -- message-level execution -----------------------------------------
    def execute(self, programs: dict[int, NodeProgram], cap: int | None = None) -> dict[int, Context]:
        """Run one stage of node programs; charges its cost to the current phase."""
        if not programs:
            return {}
        stage = _Stage(self, programs, cap)
        ctxs = stage.execute()
        self.charge(stage.rounds, stage.messages)
        return ctxs


@dataclass
class RunResult:
    outputs: dict[int, Any]
    metrics: Metrics
    timed_out: bool = False


def run(g: Graph, program_factory: Callable[[Kt1Knowledge], NodeProgram], shared_seed: int = 0,
        round_limit: int | None = None, *, kappa: int = DEFAULT_KAPPA) -> RunResult:
    """Run one program per node until every node is quiet; return outputs and metrics."""
    if round_limit is not None and round_limit <= 0:
        raise ValueError("round_limit must be positive")
    sim = Simulation(g, shared_seed, kappa=kappa, round_limit=round_limit)
    programs = {v: program_factory(sim.nodes[v].knowledge) for v in g.nodes}
    stage = _Stage(sim, programs, round_limit)
    ctxs = stage.execute()
    timed_out = stage.cut or (round_limit is not None and stage.last_tx > round_limit)
    sim.metrics.charge(sim.label, stage.rounds, stage.messages)
    return RunResult({v: c.output for v, c in ctxs.items()}, sim.metrics, timed_out)
