"""Distributed construction of an additive danner (a diameter-preserving spanner).

Steps, for a trade-off parameter delta in [0, 1]:

1. every node becomes a center with probability ``p = min(c ln n / n^delta, 1)``;
2. every node adds the edges to its ``min(deg, ceil(n^delta))`` lowest-id
   neighbours to H (nodes with ``deg >= n^delta`` are *high-degree*);
3. low-degree nodes and centers tell all neighbours so;
4. for ``ceil(log2 n)`` iterations, every component of H restricted to the
   high-degree nodes and centers elects a leader, finds one edge of G
   restricted to the same nodes that leaves it, adds that edge to H, and
   waits until ``T`` rounds have passed since the iteration began.

With delta = 1 every node simply keeps all its edges and nothing is sent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .congest import Metrics, RoundLimitExceeded, Simulation
from .graph import Graph, bfs_distances, components, edge_set_diameter
from .primitives import elect_leader, exchange
from .sketch import find_any


@dataclass(frozen=True)
class DannerParams:
    delta: float
    c: float = 2.0
    c_T: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")
        if self.c < 1:
            raise ValueError("center sampling constant c must be at least 1")

    def center_probability(self, n: int) -> float:
        if n <= 1:
            return 1.0
        return min(self.c * math.log(n) / n ** self.delta, 1.0)

    def threshold(self, n: int) -> float:
        return n ** self.delta

    def picks(self, n: int) -> int:
        return math.ceil(n ** self.delta - 1e-9)

    def iterations(self, n: int) -> int:
        return math.ceil(math.log2(n)) if n > 1 else 0

    def budget(self, n: int) -> int:
        """Rounds per loop iteration, T = c_T n^(1-delta) log2(n)^2."""
        lg = math.log2(n) if n > 1 else 1.0
        return max(1, math.ceil(self.c_T * n ** (1 - self.delta) * lg * lg))


@dataclass
class DannerResult:
    H: set[tuple[int, int]]
    metrics: Metrics
    params: DannerParams
    centers: set[int] = field(default_factory=set)
    high: set[int] = field(default_factory=set)
    component_count_trace: list[dict[int, int]] = field(default_factory=list)
    domination_trace: list[bool] = field(default_factory=list)
    diameter_trace: list[bool] = field(default_factory=list)
    overruns: list[int] = field(default_factory=list)
    timed_out: bool = False
    graph: Graph | None = None
    _diameter: float | None = None

    @property
    def hat(self) -> set[int]:
        return self.high | self.centers

    @property
    def realized_diameter(self) -> float:
        if self._diameter is None:
            self._diameter = edge_set_diameter(self.graph.nodes, self.H)
        return self._diameter

    def spanning_connected(self) -> bool:
        return len(set(components(self.graph.nodes, self.H).values())) == 1

    def summary(self) -> dict:
        g = self.graph
        return {
            "n": g.n,
            "m": g.m,
            "delta": self.params.delta,
            "edges_H": len(self.H),
            "diam_H": self.realized_diameter,
            "connected": self.spanning_connected(),
            "rounds": self.metrics.rounds,
            "messages": self.metrics.messages,
            "overruns": sum(1 for o in self.overruns if o > 0),
            "timed_out": self.timed_out,
        }


def _nbrs_in_hat(node):
    return node.mem["ghat"]


def construct(sim: Simulation, params: DannerParams, *, audit: bool = True,
              audit_diameter: bool = False) -> DannerResult:
    """Run the construction inside an existing simulation.

    Afterwards every node holds its incident danner edges as the neighbour
    set ``mem["H"]``.
    """
    g = sim.graph
    n = g.n
    nodes = sim.nodes
    result = DannerResult(set(), sim.metrics, params, graph=g)
    if params.delta >= 1.0:
        for v, node in nodes.items():
            node.mem["H"] = set(node.nbrs)
        result.H = {e for e in g.edges}
        return result

    with sim.phase("danner"):
        p = params.center_probability(n)
        thresh = params.threshold(n)
        k = params.picks(n)
        sends = []
        for v in g.nodes:
            node = nodes[v]
            node.mem["center"] = node.coin(p) if p < 1 else True
            node.mem["high"] = len(node.nbrs) >= thresh
            picked = set(node.nbrs[:k])
            node.mem["H"] = set(picked)
            node.mem["low_nbrs"] = set()
            announce = (not node.mem["high"]) or node.mem["center"]
            for w in node.nbrs:
                if w in picked or announce:
                    sends.append((v, w, (w in picked, not node.mem["high"], node.mem["center"]), 3))

        def learn(node, box):
            for src, (picked, low, center) in box:
                if picked:
                    node.mem["H"].add(src)
                if low and not center:
                    node.mem["low_nbrs"].add(src)

        with sim.phase("local"):
            exchange(sim, sends, learn)
        hat = []
        for v in g.nodes:
            node = nodes[v]
            node.mem["in_hat"] = node.mem["high"] or node.mem["center"]
            if node.mem["in_hat"]:
                hat.append(v)
                node.mem["ghat"] = tuple(w for w in node.nbrs if w not in node.mem["low_nbrs"])
            else:
                node.mem["ghat"] = ()
            if node.mem["center"]:
                result.centers.add(v)
            if node.mem["high"]:
                result.high.add(v)

        def hat_h(node):
            ghat = node.mem["ghat"]
            return [w for w in ghat if w in node.mem["H"]]

        def adopt(node, w):
            node.mem["H"].add(w)

        T = params.budget(n)
        if audit:
            _audit(sim, result, hat, audit_diameter)
        try:
            for _ in range(params.iterations(n)):
                start = sim.clock
                with sim.phase("loop"):
                    if hat:
                        forest = elect_leader(sim, hat, hat_h, "comp", cap=T).forest
                        find_any(sim, forest, _nbrs_in_hat, on_confirm=adopt)
                    result.overruns.append(sim.pad_to(start + T))
                if audit:
                    _audit(sim, result, hat, audit_diameter)
        except RoundLimitExceeded:
            result.timed_out = True
    H = set()
    for v in g.nodes:
        for w in nodes[v].mem["H"]:
            H.add((v, w) if v < w else (w, v))
    result.H = H
    return result


def build_danner(g: Graph, params: DannerParams, seed: int = 0, *, kappa: int = 4,
                 round_limit: int | None = None, mode: str = "fast", audit: bool = True,
                 audit_diameter: bool = False) -> DannerResult:
    sim = Simulation(g, seed, kappa=kappa, mode=mode, round_limit=round_limit)
    return construct(sim, params, audit=audit, audit_diameter=audit_diameter)


def _audit(sim: Simulation, result: DannerResult, hat: list[int], audit_diameter: bool) -> None:
    """Central snapshot of the hat graphs at a loop boundary (reads node memories)."""
    nodes = sim.nodes
    hat_set = set(hat)
    g_edges, h_edges = [], []
    for v in hat:
        node = nodes[v]
        for w in node.mem["ghat"]:
            if v < w and w in hat_set:
                g_edges.append((v, w))
                if w in node.mem["H"] or v in nodes[w].mem["H"]:
                    h_edges.append((v, w))
    g_label = components(hat, g_edges)
    h_label = components(hat, h_edges)
    counts: dict[int, set[int]] = {}
    for v in hat:
        counts.setdefault(g_label[v], set()).add(h_label[v])
    result.component_count_trace.append({k: len(s) for k, s in sorted(counts.items())})
    adj = {v: [] for v in hat}
    for u, w in h_edges:
        adj[u].append(w)
        adj[w].append(u)
    centers = result.centers
    dominated = all(v in centers or any(w in centers for w in adj[v]) for v in hat)
    result.domination_trace.append(dominated)
    if audit_diameter:
        ok = True
        members: dict[int, list[int]] = {}
        for v in hat:
            members.setdefault(h_label[v], []).append(v)
        for comp in members.values():
            n_centers = sum(1 for v in comp if v in centers)
            diam = max(max(bfs_distances(adj, v).values()) for v in comp)
            if n_centers and diam >= 3 * n_centers:
                ok = False
        result.diameter_trace.append(ok)


def component_trace_check(result: DannerResult) -> bool:
    """True iff per hat-component counts halve (or stay at 1) at every boundary."""
    trace = result.component_count_trace
    for before, after in zip(trace, trace[1:]):
        for label, count in before.items():
            nxt = after.get(label, count)
            if count >= 2 and nxt > count // 2:
                return False
            if count <= 1 and nxt > 1:
                return False
    return True


def domination_audit(result: DannerResult) -> bool:
    """True iff centers dominated every hat component at every recorded boundary."""
    return all(result.domination_trace)
