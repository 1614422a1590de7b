"""Graph verification problems reduced to connected components.

Every problem runs one distributed components computation on a subgraph
whose edges both endpoints can identify locally, followed by one
convergecast over the backbone tree that gathers what the verdict needs.
Bipartiteness runs on the double cover: node ``v`` hosts virtual nodes
``(v, 0)`` and ``(v, 1)``, each edge ``{v, w}`` of the subgraph links
opposite layers, and the subgraph is bipartite iff no node sees both of its
copies in one component. Traffic between the two copies of one node is local
and costs nothing.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .congest import Metrics, RoundLimitExceeded, Simulation
from .danner import DannerParams
from .graph import Graph, components, oracle_bipartite
from .mst import build_backbone, components_in
from .primitives import convergecast

PROBLEMS = (
    "spanning_connected_subgraph",
    "cycle_containment",
    "e_cycle_containment",
    "cut",
    "s_t_connectivity",
    "edge_on_all_paths",
    "s_t_cut",
    "bipartiteness",
)

Edge = tuple[int, int]


def _norm(e) -> Edge:
    u, v = e
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Instance:
    """A problem with its marked edges and designated nodes or edge.

    ``marks`` is the subgraph H for subgraph problems and the edge set E'
    for the two cut problems.
    """

    problem: str
    marks: frozenset[Edge] = field(default_factory=frozenset)
    s: int | None = None
    t: int | None = None
    edge: Edge | None = None

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")
        object.__setattr__(self, "marks", frozenset(_norm(e) for e in self.marks))
        if self.edge is not None:
            object.__setattr__(self, "edge", _norm(self.edge))

    def check(self, g: Graph) -> None:
        for e in self.marks:
            if not g.has_edge(*e):
                raise ValueError(f"marked edge {e} is not in the graph")
        need_st = self.problem in ("s_t_connectivity", "s_t_cut", "edge_on_all_paths")
        need_e = self.problem in ("e_cycle_containment", "edge_on_all_paths")
        if need_st and (self.s not in g.adj or self.t not in g.adj or self.s == self.t):
            raise ValueError(f"{self.problem} needs two distinct nodes s and t")
        if need_e and (self.edge is None or not g.has_edge(*self.edge)):
            raise ValueError(f"{self.problem} needs an edge of the graph")


def kept_edges(g: Graph, inst: Instance) -> set[Edge]:
    """The subgraph whose components decide the instance."""
    p = inst.problem
    if p in ("cut", "s_t_cut"):
        return set(g.edges) - inst.marks
    if p == "edge_on_all_paths":
        return set(g.edges) - {inst.edge}
    if p == "e_cycle_containment":
        return set(inst.marks) - {inst.edge}
    return set(inst.marks)


# ---------------------------------------------------------------- oracles

def oracle_verdict(g: Graph, inst: Instance) -> bool:
    """Centralized answer for the instance."""
    inst.check(g)
    p = inst.problem
    keep = kept_edges(g, inst)
    label = components(g.nodes, keep)
    count = len(set(label.values()))
    if p == "spanning_connected_subgraph":
        return count == 1
    if p == "cycle_containment":
        return len(keep) > g.n - count
    if p == "e_cycle_containment":
        u, v = inst.edge
        return inst.edge in inst.marks and label[u] == label[v]
    if p == "cut":
        return count > len(set(components(g.nodes, g.edges).values()))
    if p == "s_t_connectivity":
        return label[inst.s] == label[inst.t]
    if p in ("edge_on_all_paths", "s_t_cut"):
        return label[inst.s] != label[inst.t]
    ok, _ = oracle_bipartite(Graph(g.nodes, {e: (1, 1) for e in keep}, idspace=g.idspace))
    return ok


# ------------------------------------------------------------ distributed

@dataclass
class VerifyResult:
    verdict: bool
    metrics: Metrics
    timed_out: bool = False
    cover_consistent: bool = True


def double_cover(g: Graph, marks: set[Edge]) -> tuple[Graph, set[Edge], set[Edge]]:
    """Virtual graph for bipartiteness: copy ``(v, layer)`` gets id ``2v - 1 + layer``.

    Returns the virtual graph (all crossed edges of g plus the host links
    between the copies of each node), the host links, and the crossed edges
    of the marked subgraph.
    """
    def vid(v, layer):
        return 2 * v - 1 + layer

    edges = {}
    host = set()
    for v in g.nodes:
        e = (vid(v, 0), vid(v, 1))
        edges[e] = (1, 1)
        host.add(e)
    crossed = set()
    for u, v in g.edges:
        for a in (0, 1):
            e = _norm((vid(u, a), vid(v, 1 - a)))
            edges[e] = (1, 1)
            if (u, v) in marks:
                crossed.add(e)
    nodes = sorted(vid(v, a) for v in g.nodes for a in (0, 1))
    return Graph(nodes, edges, idspace=max(2 * g.idspace, len(nodes) ** 3)), host, crossed


def verify(g: Graph, inst: Instance, delta: float, seed: int = 0, *, c: float = 2.0, c_T: float = 2.0,
           kappa: int = 4, mode: str = "fast", round_limit: int | None = None) -> VerifyResult:
    """Decide the instance with one distributed components run and one convergecast."""
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"verify supports delta in [0, 0.5], got {delta}")
    inst.check(g)
    if inst.problem == "bipartiteness":
        return _bipartite(g, inst, delta, seed, c=c, c_T=c_T, kappa=kappa, mode=mode, round_limit=round_limit)
    sim = Simulation(g, seed, kappa=kappa, mode=mode, round_limit=round_limit)
    keep = kept_edges(g, inst)
    ends = inst.edge if inst.problem == "e_cycle_containment" else (inst.s, inst.t)
    designated = {ends[0]: "s", ends[1]: "t"}
    for v in g.nodes:
        node = sim.nodes[v]
        # local: each endpoint knows the marks, the designated edge and whether it is s or t
        node.mem["marked"] = tuple(w for w in node.nbrs if _norm((v, w)) in keep)
        node.mem["role"] = designated.get(v)
    try:
        backbone = build_backbone(sim, DannerParams(delta, c, c_T))
        components_in(sim, backbone, lambda nd: nd.mem["marked"], delta)
        with sim.phase("verdict"):
            verdict = _decide(sim, backbone, inst)
    except RoundLimitExceeded:
        return VerifyResult(False, sim.metrics, True)
    return VerifyResult(verdict, sim.metrics)


def _decide(sim: Simulation, backbone, inst: Instance) -> bool:
    """Gather (labels, marked-degree sum, s label, t label, e-marked flag) at the root."""
    n = sim.n
    p = inst.problem

    def up(node):
        fid = node.mem["fid"]
        s_lab = fid if node.mem["role"] == "s" else None
        t_lab = fid if node.mem["role"] == "t" else None
        e_marked = inst.edge is not None and node.id in inst.edge and _norm(inst.edge) in inst.marks
        return (int(fid == node.id), len(node.mem["marked"]), s_lab, t_lab, e_marked)

    def combine(a, b):
        return (a[0] + b[0], a[1] + b[1], a[2] if a[2] is not None else b[2],
                a[3] if a[3] is not None else b[3], a[4] or b[4])

    lg = max(1, (n - 1).bit_length())
    got = {}
    convergecast(sim, backbone.forest, up, combine, 4 * lg + 2 * sim.id_bits + 1,
                 lambda nd, val: got.__setitem__(nd.id, val))
    roots = backbone.forest.roots
    labels = sum(got[r][0] for r in roots)
    degree_sum = sum(got[r][1] for r in roots)
    s_lab = next((got[r][2] for r in roots if got[r][2] is not None), None)
    t_lab = next((got[r][3] for r in roots if got[r][3] is not None), None)
    e_marked = any(got[r][4] for r in roots)
    if p == "spanning_connected_subgraph":
        return labels == 1
    if p == "cycle_containment":
        return degree_sum // 2 > n - labels
    if p == "e_cycle_containment":
        return e_marked and s_lab == t_lab
    if p == "cut":
        return labels > 1
    if p == "s_t_connectivity":
        return s_lab == t_lab
    return s_lab != t_lab


def _bipartite(g: Graph, inst: Instance, delta: float, seed: int, **kw) -> VerifyResult:
    cover, host, crossed = double_cover(g, set(inst.marks))
    sim = Simulation(cover, seed, kappa=kw["kappa"], mode=kw["mode"], round_limit=kw["round_limit"],
                     free_edges=host)
    for v in cover.nodes:
        node = sim.nodes[v]
        node.mem["marked"] = tuple(w for w in node.nbrs if _norm((v, w)) in crossed)
    try:
        backbone = build_backbone(sim, DannerParams(delta, kw["c"], kw["c_T"]))
        components_in(sim, backbone, lambda nd: nd.mem["marked"], delta)
        with sim.phase("verdict"):
            nodes = sim.nodes
            # layer 0 copies ask their twin (a free host link) and report a clash
            got = {}

            def up(node):
                if node.id % 2 == 1:
                    twin = nodes[node.id + 1]
                    return node.mem["fid"] == twin.mem["fid"]
                return False

            convergecast(sim, backbone.forest, up, lambda a, b: a or b, 1,
                         lambda nd, val: got.__setitem__(nd.id, val))
            clash = any(got.values())
    except RoundLimitExceeded:
        return VerifyResult(False, sim.metrics, True)
    consistent = _cover_consistent(sim, g)
    return VerifyResult(not clash, sim.metrics, False, consistent)


def _cover_consistent(sim: Simulation, g: Graph) -> bool:
    """Projected labels agree: copies of adjacent nodes pair up the same way in both layers."""
    fid = {v: sim.nodes[v].mem["fid"] for v in sim.graph.nodes}
    pairs = {}
    for v in g.nodes:
        a, b = fid[2 * v - 1], fid[2 * v]
        key = frozenset((a, b))
        pairs.setdefault(key, set()).add(v)
    seen = {}
    for key, vs in pairs.items():
        for label in key:
            if label in seen and seen[label] != key:
                return False
            seen[label] = key
    return True


# ------------------------------------------------------ random instances

def random_instance(g: Graph, problem: str, rng: random.Random) -> Instance:
    """A random instance whose answer is true or false about equally often."""
    nodes = list(g.nodes)
    edges = sorted(g.edges)
    tree = sorted(_spanning_tree(g, rng))
    others = [e for e in edges if e not in set(tree)]
    yes = rng.random() < 0.5
    if problem == "spanning_connected_subgraph":
        marks = set(tree) | set(rng.sample(others, min(len(others), rng.randint(0, 3))))
        if not yes:
            marks.discard(rng.choice(tree))
        return Instance(problem, frozenset(marks))
    if problem == "cycle_containment":
        if yes and others:
            return Instance(problem, frozenset(set(tree) | {rng.choice(others)}))
        return Instance(problem, frozenset(rng.sample(tree, rng.randint(len(tree) // 2, len(tree)))))
    if problem == "e_cycle_containment":
        if yes and others:
            e = rng.choice(others)
            return Instance(problem, frozenset(set(tree) | {e}), edge=e)
        marks = set(tree)
        if rng.random() < 0.5:
            return Instance(problem, frozenset(marks), edge=rng.choice(tree))
        e = rng.choice(edges)
        return Instance(problem, frozenset(marks - {e}), edge=e)
    if problem == "cut":
        v = rng.choice(nodes)
        marks = {_norm((v, w)) for w in g.adj[v]} if yes else set()
        marks |= set(rng.sample(edges, rng.randint(0, max(1, len(edges) // 10))))
        return Instance(problem, frozenset(marks))
    if problem == "s_t_connectivity":
        s, t = rng.sample(nodes, 2)
        marks = set(rng.sample(tree, rng.randint(len(tree) // 2, len(tree))))
        return Instance(problem, frozenset(marks), s=s, t=t)
    if problem == "edge_on_all_paths":
        bridges = _bridges(g, tree)
        if yes and bridges:
            e = rng.choice(bridges)
            side = components(g.nodes, set(edges) - {e})
            s = rng.choice([v for v in nodes if side[v] == side[e[0]]])
            t = rng.choice([v for v in nodes if side[v] == side[e[1]]])
            return Instance(problem, s=s, t=t, edge=e)
        s, t = rng.sample(nodes, 2)
        return Instance(problem, s=s, t=t, edge=rng.choice(_path(tree, s, t)))
    if problem == "s_t_cut":
        s, t = rng.sample(nodes, 2)
        marks = {_norm((s, w)) for w in g.adj[s]} if yes else set()
        marks |= set(rng.sample(edges, rng.randint(0, max(1, len(edges) // 8))))
        return Instance(problem, frozenset(marks), s=s, t=t)
    if problem == "bipartiteness":
        marks = set(tree)
        if others:
            marks |= set(rng.sample(others, min(len(others), rng.randint(0 if yes else 1, 2))))
        return Instance(problem, frozenset(marks))
    raise ValueError(f"unknown problem {problem!r}")


def _spanning_tree(g: Graph, rng: random.Random) -> set[Edge]:
    start = rng.choice(list(g.nodes))
    seen = {start}
    out = set()
    frontier = [start]
    while frontier:
        v = frontier.pop(rng.randrange(len(frontier)))
        for w in g.adj[v]:
            if w not in seen:
                seen.add(w)
                out.add(_norm((v, w)))
                frontier.append(w)
    return out


def _bridges(g: Graph, tree: list[Edge]) -> list[Edge]:
    """Tree edges whose removal disconnects g (every bridge lies on every spanning tree)."""
    everything = set(g.edges)
    return [e for e in tree if len(set(components(g.nodes, everything - {e}).values())) > 1]


def _path(tree: list[Edge], s: int, t: int) -> list[Edge]:
    adj: dict[int, list[int]] = {}
    for u, v in tree:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    parent = {s: None}
    stack = [s]
    while stack:
        v = stack.pop()
        for w in adj.get(v, ()):
            if w not in parent:
                parent[w] = v
                stack.append(w)
    out = []
    v = t
    while parent[v] is not None:
        out.append(_norm((v, parent[v])))
        v = parent[v]
    return out
