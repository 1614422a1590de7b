"""Weighted undirected multigraphs, canonical edge identifiers, generators and oracles.

Node identifiers are arbitrary positive integers drawn from an id space of
size ``n**3`` by default. An edge is named by its two endpoint ids, smaller
first, and encoded as the bit string ``lo || hi`` so that integer order on
encodings equals lexicographic order on pairs.
"""

from __future__ import annotations

import io
import math
import random
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, NamedTuple, TextIO

import numpy as np

INFINITE = math.inf

GENERATOR_KINDS = ("path", "cycle", "star", "complete", "gnp", "barbell", "geometric", "torus")


class EdgeId(NamedTuple):
    lo: int
    hi: int

    @classmethod
    def of(cls, u: int, v: int) -> "EdgeId":
        if u == v:
            raise ValueError(f"self-loop at node {u}")
        return cls(u, v) if u < v else cls(v, u)

    def encode(self, id_bits: int) -> int:
        return (self.lo << id_bits) | self.hi

    @classmethod
    def decode(cls, code: int, id_bits: int) -> "EdgeId":
        return cls(code >> id_bits, code & ((1 << id_bits) - 1))


def edge_code(u: int, v: int, id_bits: int) -> int:
    """Integer encoding of the edge {u, v}; the hot-path twin of EdgeId.encode."""
    if u < v:
        return (u << id_bits) | v
    return (v << id_bits) | u


@dataclass(frozen=True)
class GraphStats:
    n: int
    m: int
    D: float


class Graph:
    """Immutable undirected graph with integer weights and edge multiplicities.

    ``edges`` maps ``(lo, hi)`` to ``(weight, multiplicity)``. ``idspace`` is
    the public upper bound on identifiers; every node knows it, as it knows n.
    """

    __slots__ = ("nodes", "_edges", "adj", "idspace", "id_bits", "weight_bound", "_hash")

    def __init__(self, nodes: Iterable[int], edges: dict[tuple[int, int], tuple[int, int]] | Iterable,
                 idspace: int | None = None):
        node_list = sorted(set(int(v) for v in nodes))
        if any(v < 1 for v in node_list):
            raise ValueError("node ids must be positive integers")
        table: dict[tuple[int, int], tuple[int, int]] = {}
        items = edges.items() if isinstance(edges, dict) else ((e[:2], e[2:]) for e in edges)
        for (u, v), wm in items:
            u, v = int(u), int(v)
            w = int(wm[0]) if len(wm) > 0 else 1
            mult = int(wm[1]) if len(wm) > 1 else 1
            key = EdgeId.of(u, v)
            if key in table:
                raise ValueError(f"duplicate edge {key.lo}-{key.hi}; use multiplicity instead")
            if w < 1 or mult < 1:
                raise ValueError(f"edge {key.lo}-{key.hi} needs weight >= 1 and multiplicity >= 1")
            table[(key.lo, key.hi)] = (w, mult)
        nodeset = set(node_list)
        adj: dict[int, list[int]] = {v: [] for v in node_list}
        for lo, hi in table:
            if lo not in nodeset or hi not in nodeset:
                raise ValueError(f"edge {lo}-{hi} touches an unknown node")
            adj[lo].append(hi)
            adj[hi].append(lo)
        n = len(node_list)
        if idspace is None:
            idspace = max([n ** 3, 1] + node_list)
        if node_list and node_list[-1] > idspace:
            raise ValueError("node id exceeds the id space")
        self.nodes = tuple(node_list)
        self._edges = dict(sorted(table.items()))
        self.adj = {v: tuple(sorted(ns)) for v, ns in adj.items()}
        self.idspace = idspace
        self.id_bits = max(1, idspace.bit_length())
        max_w = max((w for w, _ in table.values()), default=1)
        self.weight_bound = max(n * n, max_w, 1)
        self._hash = None

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return sum(mult for _, mult in self._edges.values())

    @property
    def m_simple(self) -> int:
        return len(self._edges)

    @property
    def edges(self) -> dict[tuple[int, int], tuple[int, int]]:
        return dict(self._edges)

    def edge_items(self):
        return self._edges.items()

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._edges

    def weight(self, u: int, v: int) -> int:
        return self._edges[(min(u, v), max(u, v))][0]

    def multiplicity(self, u: int, v: int) -> int:
        return self._edges[(min(u, v), max(u, v))][1]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def distinct_weights(self) -> bool:
        ws = [w for w, _ in self._edges.values()]
        return len(set(ws)) == len(ws)

    def edge_code(self, u: int, v: int) -> int:
        return edge_code(u, v, self.id_bits)

    def subgraph(self, keep) -> "Graph":
        """Spanning subgraph on the same nodes with the edges for which ``keep(lo, hi)`` holds."""
        return Graph(self.nodes, {e: wm for e, wm in self._edges.items() if keep(*e)}, self.idspace)

    def stats(self) -> GraphStats:
        return GraphStats(self.n, self.m, oracle_diameter(self))

    def __eq__(self, other) -> bool:
        return (isinstance(other, Graph) and self.nodes == other.nodes
                and self._edges == other._edges and self.idspace == other.idspace)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nodes, tuple(self._edges.items()), self.idspace))
        return self._hash

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


# ---------------------------------------------------------------- generators

def _shape(kind: str, params: dict, rng: random.Random) -> tuple[int, list[tuple[int, int]], dict]:
    """Edges over positions 0..n-1 for a generator kind, plus per-position-pair multiplicities."""
    mult: dict[tuple[int, int], int] = {}
    if kind == "path":
        n = params["n"]
        return n, [(i, i + 1) for i in range(n - 1)], mult
    if kind == "cycle":
        n = params["n"]
        if n < 3:
            raise ValueError("cycle needs n >= 3")
        return n, [(i, (i + 1) % n) for i in range(n)], mult
    if kind == "star":
        n = params["n"]
        return n, [(0, i) for i in range(1, n)], mult
    if kind == "complete":
        n = params["n"]
        return n, list(combinations(range(n), 2)), mult
    if kind == "gnp":
        n, p = params["n"], params["p"]
        for _ in range(params.get("retries", 200)):
            pairs = [(i, j) for i, j in combinations(range(n), 2) if rng.random() < p]
            if _connected_positions(n, pairs):
                return n, pairs, mult
        raise ValueError(f"G({n}, {p}) stayed disconnected after the allowed retries")
    if kind == "barbell":
        k, b = params["k"], params["b"]
        if b > k or k < 2 or b < 1:
            raise ValueError("barbell needs 1 <= b <= k and k >= 2")
        pairs = list(combinations(range(k), 2)) + [(k + i, k + j) for i, j in combinations(range(k), 2)]
        pairs += [(i, k + i) for i in range(b)]
        return 2 * k, pairs, mult
    if kind == "geometric":
        n, radius = params["n"], params["radius"]
        for _ in range(params.get("retries", 200)):
            pts = [(rng.random(), rng.random()) for _ in range(n)]
            pairs = [(i, j) for i, j in combinations(range(n), 2)
                     if math.dist(pts[i], pts[j]) <= radius]
            if _connected_positions(n, pairs):
                return n, pairs, mult
        raise ValueError(f"geometric graph with radius {radius} stayed disconnected")
    if kind == "torus":
        rows, cols = params["rows"], params["cols"]
        if rows < 3 or cols < 3:
            raise ValueError("torus needs at least 3 rows and 3 columns")
        pairs = []
        for r in range(rows):
            for c in range(cols):
                here = r * cols + c
                pairs.append((here, r * cols + (c + 1) % cols))
                pairs.append((here, ((r + 1) % rows) * cols + c))
        return rows * cols, pairs, mult
    raise ValueError(f"unknown generator kind {kind!r}; expected one of {GENERATOR_KINDS}")


def _connected_positions(n: int, pairs: list[tuple[int, int]]) -> bool:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    parts = n
    for i, j in pairs:
        a, b = find(i), find(j)
        if a != b:
            parent[a] = b
            parts -= 1
    return parts <= 1


def generate(kind: str, seed: int = 0, *, weights: str = "distinct", multiplicity: int = 1,
             relabel: bool = True, **params) -> Graph:
    """Build a connected graph of the given kind, reproducibly from ``seed``.

    ``weights`` is ``"distinct"`` (a random permutation of 1..m) or ``"unit"``.
    With ``relabel`` the ids are a random injective draw from {1..n^3};
    otherwise nodes are numbered 1..n.
    """
    rng = random.Random(seed)
    n, pairs, _ = _shape(kind, params, rng)
    if n < 1:
        raise ValueError("graph needs at least one node")
    idspace = max(n ** 3, 1)
    ids = sorted(rng.sample(range(1, idspace + 1), n)) if relabel else list(range(1, n + 1))
    if relabel:
        rng.shuffle(ids)
    canon = sorted({EdgeId.of(ids[i], ids[j]) for i, j in pairs})
    if weights == "distinct":
        ws = list(range(1, len(canon) + 1))
        rng.shuffle(ws)
    elif weights == "unit":
        ws = [1] * len(canon)
    else:
        raise ValueError(f"unknown weight mode {weights!r}")
    edges = {(e.lo, e.hi): (w, multiplicity) for e, w in zip(canon, ws)}
    return Graph(ids, edges, idspace)


def with_weights(g: Graph, seed: int) -> Graph:
    """Same topology with a fresh random permutation of 1..m as weights."""
    rng = random.Random(seed)
    keys = list(g.edges)
    ws = list(range(1, len(keys) + 1))
    rng.shuffle(ws)
    return Graph(g.nodes, {k: (w, g.multiplicity(*k)) for k, w in zip(keys, ws)}, g.idspace)


# ------------------------------------------------------------------ text I/O

def write_graph(g: Graph, fp: TextIO) -> None:
    """Write ``n m`` then one ``u v w [mult]`` line per edge.

    Isolated nodes (and the exact id space) are recorded in comment lines so
    that reading back reproduces the same graph.
    """
    fp.write(f"{g.n} {g.m_simple}\n")
    fp.write(f"# idspace {g.idspace}\n")
    touched = {v for e in g.edges for v in e}
    lonely = [v for v in g.nodes if v not in touched]
    if lonely:
        fp.write("# nodes " + " ".join(map(str, lonely)) + "\n")
    for (u, v), (w, mult) in g.edge_items():
        fp.write(f"{u} {v} {w}\n" if mult == 1 else f"{u} {v} {w} {mult}\n")


def read_graph(fp: TextIO) -> Graph:
    header = None
    idspace = None
    extra_nodes: list[int] = []
    edges: dict[tuple[int, int], tuple[int, int]] = {}
    for lineno, raw in enumerate(fp, 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            words = line[1:].split()
            if words[:1] == ["idspace"] and len(words) == 2:
                idspace = int(words[1])
            elif words[:1] == ["nodes"]:
                extra_nodes.extend(int(x) for x in words[1:])
            continue
        fields = line.split("#", 1)[0].split()
        if header is None:
            if len(fields) != 2:
                raise ValueError(f"line {lineno}: expected header 'n m'")
            header = (int(fields[0]), int(fields[1]))
            continue
        if len(fields) not in (3, 4):
            raise ValueError(f"line {lineno}: expected 'u v w [mult]'")
        u, v, w = int(fields[0]), int(fields[1]), int(fields[2])
        mult = int(fields[3]) if len(fields) == 4 else 1
        key = EdgeId.of(u, v)
        if (key.lo, key.hi) in edges:
            raise ValueError(f"line {lineno}: duplicate edge {u} {v}")
        edges[(key.lo, key.hi)] = (w, mult)
    if header is None:
        raise ValueError("empty graph file")
    n, m = header
    if len(edges) != m:
        raise ValueError(f"header announces {m} edges, found {len(edges)}")
    nodes = set(extra_nodes)
    for u, v in edges:
        nodes.update((u, v))
    fill = 1
    while len(nodes) < n:
        if fill not in nodes:
            nodes.add(fill)
        fill += 1
    if len(nodes) != n:
        raise ValueError(f"header announces {n} nodes, edges mention {len(nodes)}")
    return Graph(nodes, edges, idspace)


def dumps(g: Graph) -> str:
    buf = io.StringIO()
    write_graph(g, buf)
    return buf.getvalue()


def loads(text: str) -> Graph:
    return read_graph(io.StringIO(text))


# ------------------------------------------------------------------- oracles

def bfs_distances(adj: dict[int, Iterable[int]], source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in adj[u]:
            if w not in dist:
                dist[w] = du
                queue.append(w)
    return dist


def oracle_diameter(g: Graph) -> float:
    """Exact hop diameter, or ``INFINITE`` when the graph is disconnected."""
    if g.n <= 1:
        return 0
    best = 0
    for v in g.nodes:
        dist = bfs_distances(g.adj, v)
        if len(dist) < g.n:
            return INFINITE
        best = max(best, max(dist.values()))
    return best


def edge_set_diameter(nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> float:
    adj: dict[int, list[int]] = {v: [] for v in nodes}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    if len(adj) <= 1:
        return 0
    best = 0
    for v in adj:
        dist = bfs_distances(adj, v)
        if len(dist) < len(adj):
            return INFINITE
        best = max(best, max(dist.values()))
    return best


def oracle_shortest_path(g: Graph, s: int, t: int) -> list[int] | None:
    parent = {s: None}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        if u == t:
            break
        for w in g.adj[u]:
            if w not in parent:
                parent[w] = u
                queue.append(w)
    if t not in parent:
        return None
    path = [t]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path[::-1]


def oracle_domination_number(g: Graph) -> int:
    """Smallest dominating set size, by enumeration over subsets in size order."""
    n = g.n
    if n > 24:
        raise ValueError(f"domination oracle is limited to n <= 24, got {n}")
    if n == 0:
        return 0
    index = {v: i for i, v in enumerate(g.nodes)}
    closed = []
    for v in g.nodes:
        mask = 1 << index[v]
        for w in g.adj[v]:
            mask |= 1 << index[w]
        closed.append(mask)
    full = (1 << n) - 1
    for size in range(1, n + 1):
        for combo in combinations(range(n), size):
            mask = 0
            for i in combo:
                mask |= closed[i]
            if mask == full:
                return size
    return n


def components(nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> dict[int, int]:
    """Map every node to the smallest id in its connected component."""
    adj: dict[int, list[int]] = {v: [] for v in nodes}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    label: dict[int, int] = {}
    for v in sorted(adj):
        if v in label:
            continue
        for w in bfs_distances(adj, v):
            label[w] = v
    return label


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def oracle_mst(g: Graph) -> set[tuple[int, int]]:
    """The unique minimum spanning tree (Kruskal); weights must be distinct."""
    if not g.distinct_weights():
        raise ValueError("MST oracle needs distinct edge weights")
    uf = _UnionFind(g.nodes)
    tree = set()
    for (u, v), (w, _) in sorted(g.edge_items(), key=lambda kv: kv[1][0]):
        if uf.union(u, v):
            tree.add((u, v))
    if len(tree) != g.n - 1:
        raise ValueError("MST oracle needs a connected graph")
    return tree


def oracle_mincut(g: Graph) -> int:
    """Edge connectivity of the multigraph (Stoer-Wagner, vectorized)."""
    n = g.n
    if n > 256:
        raise ValueError(f"min-cut oracle is limited to n <= 256, got {n}")
    if n <= 1:
        return 0
    index = {v: i for i, v in enumerate(g.nodes)}
    w = np.zeros((n, n), dtype=np.int64)
    for (u, v), (_, mult) in g.edge_items():
        w[index[u], index[v]] += mult
        w[index[v], index[u]] += mult
    alive = list(range(n))
    best = None
    while len(alive) > 1:
        sub = w[np.ix_(alive, alive)]
        k = len(alive)
        added = np.zeros(k, dtype=bool)
        conn = np.zeros(k, dtype=np.int64)
        prev = last = 0
        for step in range(k):
            cand = np.where(added, -1, conn)
            nxt = int(np.argmax(cand))
            added[nxt] = True
            prev, last = last, nxt
            if step == k - 1:
                cut = int(conn[nxt])
                best = cut if best is None else min(best, cut)
            conn += sub[nxt]
        s, t = alive[prev], alive[last]
        w[s, :] += w[t, :]
        w[:, s] += w[:, t]
        w[s, s] = 0
        alive.remove(t)
    return int(best)


def oracle_mincut_bruteforce(g: Graph) -> int:
    n = g.n
    if n > 12:
        raise ValueError(f"brute-force min-cut is limited to n <= 12, got {n}")
    nodes = g.nodes
    best = None
    for mask in range(1, 1 << (n - 1)):
        side = {nodes[i] for i in range(n) if mask >> i & 1}
        cut = sum(mult for (u, v), (_, mult) in g.edge_items() if (u in side) != (v in side))
        best = cut if best is None else min(best, cut)
    return best if best is not None else 0


def oracle_bipartite(g: Graph) -> tuple[bool, list[int] | None]:
    """Two-colouring by BFS; on failure also returns an odd cycle as a node list."""
    colour: dict[int, int] = {}
    parent: dict[int, int | None] = {}
    for s in g.nodes:
        if s in colour:
            continue
        colour[s] = 0
        parent[s] = None
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in g.adj[u]:
                if w not in colour:
                    colour[w] = colour[u] ^ 1
                    parent[w] = u
                    queue.append(w)
                elif colour[w] == colour[u]:
                    return False, _odd_cycle(parent, u, w)
    return True, None


def _odd_cycle(parent, u, w) -> list[int]:
    up = [u]
    while parent[up[-1]] is not None:
        up.append(parent[up[-1]])
    wp = [w]
    while parent[wp[-1]] is not None:
        wp.append(parent[wp[-1]])
    on_up = set(up)
    meet = next(x for x in wp if x in on_up)
    left = up[:up.index(meet) + 1]
    right = wp[:wp.index(meet)]
    return left + right[::-1]
