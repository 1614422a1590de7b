"""Minimum spanning trees and connected components on top of a danner.

Step 1 builds a danner, elects a leader on it and grows a BFS tree (the
*backbone*); the leader learns m by convergecast and picks a branch.

Step 2 grows MST fragments in ``ceil((1 - delta) log2 n)`` controlled
iterations: each fragment finds its lightest leaving edge, the chosen edges
orient fragments into a forest, a Cole-Vishkin colouring of that forest
yields a maximal matching, and every fragment merges with its partner (or,
if unmatched, with its parent or one child). Each merge group holds at least
two fragments, so the count halves, and groups are stars of depth <= 2 in the
fragment forest, so fragment diameters stay controlled.

Step 3 runs global Boruvka phases over the backbone: all fragments search
for their lightest leaving edge in parallel with pipelined convergecasts,
and the leader computes the merges and pipelines them back.

Connected components of a marked subgraph reuse the same pipeline with only
marked edges as candidates; a fragment with no leaving marked edge retires.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .congest import Metrics, Node, RoundLimitExceeded, Simulation
from .danner import DannerParams, DannerResult, construct
from .graph import Graph, _UnionFind, components, edge_code, edge_set_diameter
from .primitives import (BfsTree, Forest, TreeSlot, broadcast, build_bfs_tree, convergecast,
                         elect_leader, exchange, forest_members, pipelined_broadcast,
                         pipelined_convergecast)
from .sketch import (FoundEdge, SketchSpec, _Local, confirm_candidates, field_bits, find_any,
                     find_min, sketch_prime)

FRAG = "frag"


@dataclass
class Backbone:
    danner: DannerResult
    tree: BfsTree
    forest: Forest
    leaders: int

    @property
    def root(self) -> int:
        return self.tree.root

    @property
    def connected(self) -> bool:
        return self.leaders == 1


@dataclass
class FragmentMap:
    fragment_of: dict[int, int]
    edges: set[tuple[int, int]]

    @property
    def fragment_count(self) -> int:
        return len(set(self.fragment_of.values()))

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for v, f in sorted(self.fragment_of.items()):
            out.setdefault(f, []).append(v)
        return out

    def diameters(self) -> dict[int, float]:
        by_frag = self.members()
        out = {}
        for f, vs in by_frag.items():
            vset = set(vs)
            out[f] = edge_set_diameter(vs, [e for e in self.edges if e[0] in vset])
        return out


@dataclass
class Adoption:
    """An edge added to a fragment forest, with the fragment that chose it."""

    edge: tuple[int, int]
    chooser: int
    snapshot: int


@dataclass
class Trace:
    snapshots: list[dict[int, int]] = field(default_factory=list)
    adoptions: list[Adoption] = field(default_factory=list)
    step2_counts: list[int] = field(default_factory=list)
    step2_diameters: list[int] = field(default_factory=list)
    step3_counts: list[int] = field(default_factory=list)


@dataclass
class MstResult:
    mst_edges: set[tuple[int, int]]
    metrics: Metrics
    branch_taken: str
    fragments_after_step2: int
    trace: Trace
    backbone_connected: bool
    timed_out: bool = False

    def weight_total(self, g: Graph) -> int:
        return sum(g.weight(*e) for e in self.mst_edges)


@dataclass
class ComponentsResult:
    labels: dict[int, int]
    metrics: Metrics
    trace: Trace
    count: int
    timed_out: bool = False


# ---------------------------------------------------------------- backbone

def build_backbone(sim: Simulation, params: DannerParams) -> Backbone:
    """Danner, then a leader on it, then a BFS tree from the leader (memory key ``bb``)."""
    danner = construct(sim, params, audit=False)
    nodes = sim.nodes
    with sim.phase("backbone"):
        le = elect_leader(sim, sim.graph.nodes, lambda nd: nd.mem["H"], "bb_le")
        roots = sorted(le.forest.roots)
        trees = [build_bfs_tree(sim, lambda nd: nd.mem["H"], r, "bb") for r in roots]
    tree = trees[0]
    if len(trees) > 1:
        parent, depth = {}, {}
        for t in trees:
            parent.update(t.parent)
            depth.update(t.depth)
        tree = BfsTree(roots[0], parent, depth)
    for v in sim.graph.nodes:
        nodes[v].mem["bb_root"] = nodes[v].mem["bb"].root
    return Backbone(danner, tree, Forest("bb", roots), len(roots))


# ------------------------------------------------------ fragment plumbing

def _init_fragments(sim: Simulation, members: Iterable[int]) -> None:
    for v in members:
        node = sim.nodes[v]
        node.mem[FRAG] = TreeSlot(v, None, ())
        node.mem["fid"] = v
        node.mem["mst"] = set()
        node.mem["retired"] = False


def _fid(node: Node) -> int:
    return node.mem["fid"]


def _snapshot(sim: Simulation, trace: Trace) -> int:
    trace.snapshots.append({v: nd.mem["fid"] for v, nd in sim.nodes.items() if "fid" in nd.mem})
    return len(trace.snapshots) - 1


def _record_links(sim: Simulation, members: Iterable[int]) -> None:
    """Turn probe records into fragment-forest links.

    A fragment's chosen edge points to its parent, except that of two
    fragments choosing the same edge the one with the smaller id is the root.
    """
    nodes = sim.nodes
    seq = sim.stage_seq
    for v in members:
        node = nodes[v]
        node.mem["plink"] = None
        node.mem["clinks"] = {}
        probe = node.mem.get("probe")
        if probe is None or probe["seq"] != seq:
            continue
        tag = probe["tag"]
        chosen = probe["chosen"]
        target = probe["target"]
        if chosen is not None:
            w, theirs = chosen
            mutual = w in probe["incoming"]
            if theirs != tag and not (mutual and tag < theirs):
                node.mem["plink"] = w
        for src, theirs in probe["incoming"].items():
            mutual = src == target
            if theirs != tag and not (mutual and theirs < tag):
                node.mem["clinks"][src] = theirs


def _frag_round(sim: Simulation, roots: list[int], values: dict[int, tuple], bits: int,
                on_link: Callable[[Node, int, str, object, bool], None] | None = None) -> dict[int, tuple]:
    """One fragment-level round: every root's ``(up, down)`` pair is broadcast
    in its fragment, ``up`` crosses the parent link and ``down`` every child
    link, and the root collects ``(value from parent, min over children)``.
    """
    forest = Forest(FRAG, roots)
    sim.stage_seq += 1
    seq = sim.stage_seq

    def store(node, vals):
        node.mem["_fr"] = vals[0]
        node.mem["_fr_in"] = (seq, None, None)

    broadcast(sim, forest, lambda nd: [(values[nd.id], bits)], store)
    sends = []
    for r in roots:
        for v in forest_members(sim, Forest(FRAG, [r]))[r]:
            node = sim.nodes[v]
            up, down = node.mem["_fr"]
            if up is not None and node.mem["plink"] is not None:
                sends.append((v, node.mem["plink"], ("u", up), bits))
                if on_link:
                    on_link(node, node.mem["plink"], "u", up, True)
            if down is not None:
                for c in sorted(node.mem["clinks"]):
                    sends.append((v, c, ("d", down), bits))
                    if on_link:
                        on_link(node, c, "d", down, True)

    def receive(node, box):
        _, from_parent, from_children = node.mem.get("_fr_in", (seq, None, None))
        for src, (kind, val) in box:
            if kind == "d" and src == node.mem["plink"]:
                from_parent = val
                if on_link:
                    on_link(node, src, "d", val, False)
            elif kind == "u" and src in node.mem["clinks"]:
                from_children = val if from_children is None else min(from_children, val)
                if on_link:
                    on_link(node, src, "u", val, False)
        node.mem["_fr_in"] = (seq, from_parent, from_children)

    exchange(sim, sends, receive)
    out: dict[int, tuple] = {}

    def up(node):
        s, fp, fc = node.mem.get("_fr_in", (None, None, None))
        if s != seq or (fp is None and fc is None):
            return None
        return (fp, fc)

    def combine(a, b):
        fp = a[0] if a[0] is not None else b[0]
        fc = a[1] if b[1] is None else b[1] if a[1] is None else min(a[1], b[1])
        return (fp, fc)

    convergecast(sim, forest, up, combine, bits, lambda nd, val: out.__setitem__(nd.id, val or (None, None)))
    return out


def _cv_rounds(id_bits: int) -> int:
    top = (1 << id_bits) - 1
    rounds = 0
    while top > 5:
        top = 2 * (top.bit_length() - 1) + 1
        rounds += 1
    return rounds


def _mark(node: Node, w: int) -> None:
    node.mem["mst"].add(w)


def controlled_ghs(sim: Simulation, max_iters: int, finder: Callable, *, trace: Trace | None = None,
                   retire: bool = False) -> FragmentMap:
    """Grow fragments for ``max_iters`` iterations of matched merging.

    ``finder(sim, forest, roots)`` returns each root's confirmed leaving edge
    (or None) and leaves probe records at the endpoints. With ``retire`` a
    fragment that finds nothing stops for good.
    """
    trace = trace if trace is not None else Trace()
    nodes = sim.nodes
    everyone = [v for v in sim.graph.nodes if FRAG in nodes[v].mem]
    id_bits = sim.id_bits
    for _ in range(max_iters):
        roots = sorted(v for v in everyone
                       if nodes[v].mem[FRAG].parent is None and not nodes[v].mem["retired"])
        if not roots:
            break
        snap = _snapshot(sim, trace)
        with sim.phase("find"):
            found = finder(sim, Forest(FRAG, roots), roots)
        active = [v for v in everyone if not nodes[v].mem["retired"]]
        find_seq = sim.stage_seq
        _record_links(sim, active)
        for r, edge in found.items():
            if edge is None and retire:
                for v in forest_members(sim, Forest(FRAG, [r]))[r]:
                    nodes[v].mem["retired"] = True
        roots = [r for r in roots if not nodes[r].mem["retired"]]
        if not roots:
            break

        def link_hook(node, nbr, direction, value, sent):
            tag = node.mem["fid"]
            if direction == "d" and isinstance(value, tuple) and value[0] == "accept":
                child = node.mem["clinks"].get(nbr) if sent else tag
                if value[1] == child:
                    _mark(node, nbr)
            elif direction == "u" and value == "attach":
                _mark(node, nbr)
            elif direction == "d" and isinstance(value, tuple) and value[0] == "adopt":
                child = node.mem["clinks"].get(nbr) if sent else tag
                if value[1] == child:
                    _mark(node, nbr)

        with sim.phase("colour"):
            colour = {r: r for r in roots}
            has_parent = {}
            min_child = {}
            for i in range(_cv_rounds(id_bits)):
                res = _frag_round(sim, roots, {r: (r if i == 0 else None, colour[r]) for r in roots},
                                  id_bits + 1)
                for r in roots:
                    pc, mc = res[r]
                    if i == 0:
                        has_parent[r] = pc is not None
                        min_child[r] = mc
                    c = colour[r]
                    other = pc if pc is not None else c ^ 1
                    diff = c ^ other
                    j = (diff & -diff).bit_length() - 1
                    colour[r] = 2 * j + ((c >> j) & 1)
            if _cv_rounds(id_bits) == 0:
                res = _frag_round(sim, roots, {r: (r, None) for r in roots}, id_bits + 1)
                for r in roots:
                    has_parent[r] = res[r][0] is not None or nodes[r].mem[FRAG].parent is not None
                    min_child[r] = res[r][1]
        with sim.phase("match"):
            matched = {r: False for r in roots}
            pending_accept: dict[int, int | None] = {r: None for r in roots}
            for k in range(7):
                vals = {}
                for r in roots:
                    down = None
                    if k > 0:
                        down = ("accept", pending_accept[r])
                    up = None
                    if k < 6 and colour[r] == k and has_parent[r] and not matched[r]:
                        up = r
                    vals[r] = (up, down)
                res = _frag_round(sim, roots, vals, 2 * id_bits + 2, link_hook)
                for r in roots:
                    from_parent, proposal = res[r]
                    if from_parent is not None and from_parent[1] == r:
                        matched[r] = True
                    pending_accept[r] = None
                    if proposal is not None and not matched[r] and k < 6:
                        pending_accept[r] = proposal
                        matched[r] = True
        with sim.phase("attach"):
            vals = {}
            for r in roots:
                up = "attach" if not matched[r] and has_parent[r] else None
                down = ("adopt", min_child[r]) if not matched[r] and not has_parent[r] and min_child[r] else None
                vals[r] = (up, down)
            _frag_round(sim, roots, vals, id_bits + 2, link_hook)
        _note_adoptions(sim, everyone, trace, snap, find_seq)
        with sim.phase("reroot"):
            members = [v for v in everyone if not nodes[v].mem["retired"]]
            le = elect_leader(sim, members, lambda nd: nd.mem["mst"], FRAG, rank="id")
            for v in members:
                nodes[v].mem["fid"] = le.leader[v]
        trace.step2_counts.append(len({nodes[v].mem["fid"] for v in everyone}))
    return FragmentMap({v: nodes[v].mem["fid"] for v in everyone}, _collect_edges(sim, everyone))


def _note_adoptions(sim: Simulation, members, trace: Trace, snap: int, seq: int) -> None:
    """Record newly marked forest edges with the fragment whose chosen edge it was (audit only)."""
    nodes = sim.nodes
    seen = trace.__dict__.setdefault("_seen", set())
    frag_at = trace.snapshots[snap]
    for v in members:
        node = nodes[v]
        for w in node.mem["mst"]:
            e = (v, w) if v < w else (w, v)
            if e in seen:
                continue
            seen.add(e)
            probe_v = node.mem.get("probe")
            chooser = frag_at[v]
            if probe_v is None or probe_v["seq"] != seq or probe_v["target"] != w:
                chooser = frag_at[w]
            trace.adoptions.append(Adoption(e, chooser, snap))


def _collect_edges(sim: Simulation, members) -> set[tuple[int, int]]:
    out = set()
    for v in members:
        for w in sim.nodes[v].mem["mst"]:
            out.add((v, w) if v < w else (w, v))
    return out


# --------------------------------------------------------------- finders

def _sketch_finder(qualify, by_weight: bool):
    def finder(sim, forest, roots):
        if by_weight:
            return find_min(sim, forest, qualify, roots=roots, tag_of=_fid)
        return find_any(sim, forest, qualify, roots=roots, tag_of=_fid)
    return finder


def _direct_finder(qualify, by_weight: bool):
    """Neighbours swap fragment ids over every candidate edge; members report their best."""

    def finder(sim, forest, roots):
        nodes = sim.nodes
        members = forest_members(sim, forest)
        sends = []
        for r in roots:
            for v in members[r]:
                node = nodes[v]
                for w in qualify(node):
                    sends.append((v, w, node.mem["fid"], sim.id_bits))

        def learn(node, box):
            node.mem["nbr_fid"] = dict(box)

        with sim.phase("swap"):
            exchange(sim, sends, learn)
        best: dict[int, int] = {}

        def up(node):
            seen = node.mem.get("nbr_fid", {})
            mine = node.mem["fid"]
            cands = [((node.weight[w] if by_weight else 0), edge_code(node.id, w, node.id_bits))
                     for w in qualify(node) if seen.get(w, mine) != mine]
            return min(cands) if cands else None

        with sim.phase("report"):
            convergecast(sim, forest, up, min, 3 * sim.id_bits,
                         lambda nd, val: best.__setitem__(nd.id, val[1]) if val else None, roots)
        for v in (v for r in roots for v in members[r]):
            nodes[v].mem.pop("nbr_fid", None)
        with sim.phase("confirm"):
            found = {r: None for r in roots}
            found.update(confirm_candidates(sim, forest, best, _fid))
        return found

    return finder


# ----------------------------------------------------- step 3 (global)

def merge_phase_step3(sim: Simulation, backbone: Backbone, qualify: Callable[[Node], Iterable[int]],
                      *, by_weight: bool, iterations: int, retire: bool,
                      trace: Trace | None = None) -> FragmentMap:
    """Boruvka phases for all fragments at once, pipelined over the backbone tree."""
    trace = trace if trace is not None else Trace()
    nodes = sim.nodes
    p = sketch_prime(field_bits(sim.B, sim.id_bits))
    pbits = p.bit_length()
    id_bits = sim.id_bits
    forest = backbone.forest
    lo_key = 1 if by_weight else 0
    key_bound = sim.graph.weight_bound if by_weight else (1 << (2 * id_bits)) - 1
    key_bits = key_bound.bit_length()
    everyone = list(sim.graph.nodes)
    # state kept at the backbone root(s)
    stopped = {r: False for r in forest.roots}
    retired: dict[int, set[int]] = {r: set() for r in forest.roots}
    newly_retired: dict[int, list[int]] = {r: [] for r in forest.roots}

    def add(a, b):
        return (a + b) % p

    for _ in range(iterations):
        live_roots = [r for r in forest.roots if not stopped[r]]
        if not live_roots:
            break
        snap = _snapshot(sim, trace)

        # spec and retirements
        def spec_items(node):
            spec = SketchSpec.draw(node, p, id_bits)
            items = [(spec, spec.bits)]
            items += [(("retire", f), id_bits + 1) for f in newly_retired[node.id]]
            newly_retired[node.id] = []
            return items

        def take_spec(node, values):
            spec = values[0]
            for val in values[1:]:
                if val[1] == node.mem["fid"]:
                    node.mem["retired"] = True
            node.mem["s3_on"] = False
            if node.mem["retired"]:
                node.mem.pop("s3", None)
                return
            st = _Local(node, spec, qualify(node), by_weight, node.mem["fid"])
            st.lo, st.hi = lo_key, key_bound
            node.mem["s3"] = st

        with sim.phase("spec"):
            broadcast(sim, forest, spec_items, take_spec, live_roots)

        ctl: dict[int, dict[int, list]] = {r: {} for r in live_roots}

        def own_item(node, fn):
            st = node.mem.get("s3")
            if st is None:
                return {}
            val = fn(st)
            return {node.mem["fid"]: val}

        def root_totals(node, totals):
            c = ctl[node.id]
            for f, tot in totals.items():
                if tot:
                    c[f] = [lo_key, key_bound, None]
                elif retire:
                    retired[node.id].add(f)
                    newly_retired[node.id].append(f)

        with sim.phase("detect"):
            pipelined_convergecast(sim, forest, lambda nd: own_item(nd, lambda st: st.range_sum(st.lo, st.hi, p)),
                                   add, id_bits + pbits + 1, root_totals, live_roots)

        def decisions(node):
            c = ctl[node.id]
            live = [(f, s[2]) for f, s in sorted(c.items()) if s[0] < s[1] or s[2] is not None]
            if not live:
                return None
            return [((f, d), id_bits + 2) for f, d in live]

        def apply(node, values):
            st = node.mem.get("s3")
            if st is None:
                return
            fid = node.mem["fid"]
            for f, d in values:
                if f == fid:
                    node.mem["s3_on"] = True
                    if d is not None:
                        mid = (st.lo + st.hi) // 2
                        if d == 0:
                            st.hi = mid
                        else:
                            st.lo = mid + 1

        def lower_item(node):
            st = node.mem.get("s3")
            if st is None or not node.mem["s3_on"] or st.lo >= st.hi:
                return {}
            return {node.mem["fid"]: st.range_sum(st.lo, (st.lo + st.hi) // 2, p)}

        def root_lower(node, sums):
            c = ctl[node.id]
            for f, s in c.items():
                if s[0] >= s[1]:
                    continue
                mid = (s[0] + s[1]) // 2
                if sums.get(f):
                    s[1], s[2] = mid, 0
                else:
                    s[0], s[2] = mid + 1, 1

        with sim.phase("search"):
            while True:
                searching = [r for r in live_roots if any(s[0] < s[1] for s in ctl[r].values())]
                if not searching:
                    break
                pipelined_broadcast(sim, forest, decisions, apply, searching)
                for r in searching:
                    for s in ctl[r].values():
                        s[2] = None
                pipelined_convergecast(sim, forest, lower_item, add, id_bits + pbits + 1, root_lower, searching)

        candidates: dict[int, dict[int, int]] = {r: {} for r in live_roots}
        if by_weight:
            with sim.phase("locate"):
                pipelined_broadcast(sim, forest, decisions, apply,
                                    [r for r in live_roots if ctl[r]])
                for r in live_roots:
                    for s in ctl[r].values():
                        s[2] = None

                def locate_item(node):
                    st = node.mem.get("s3")
                    if st is None or not node.mem["s3_on"]:
                        return {}
                    i = bisect_left(st.keys, st.lo)
                    if i < len(st.keys) and st.keys[i] == st.lo:
                        return {node.mem["fid"]: st.codes[i]}
                    return {}

                def root_codes(node, codes):
                    candidates[node.id].update(codes)

                pipelined_convergecast(sim, forest, locate_item, min, id_bits + 2 * id_bits + 1, root_codes,
                                       [r for r in live_roots if ctl[r]])
        else:
            for r in live_roots:
                candidates[r] = {f: s[0] for f, s in ctl[r].items()}

        # learn the fragment on the far side of each candidate
        peers: dict[int, dict[int, int]] = {r: {} for r in live_roots}

        def cand_items(node):
            c = candidates[node.id]
            if not c:
                return None
            return [((f, code), id_bits + 2 * id_bits) for f, code in sorted(c.items())]

        def far_side(node, values):
            mine = node.mem["fid"]
            hits = {}
            for f, code in values:
                lo, hi = code >> id_bits, code & ((1 << id_bits) - 1)
                if node.id in (lo, hi) and mine != f:
                    other = hi if node.id == lo else lo
                    if other in node.nbr_set:
                        hits[f] = mine
            node.mem["s3_far"] = hits

        def far_item(node):
            return node.mem.pop("s3_far", {})

        def root_peers(node, got):
            peers[node.id].update(got)

        with sim.phase("endpoints"):
            has = [r for r in live_roots if candidates[r]]
            pipelined_broadcast(sim, forest, cand_items, far_side, has)
            pipelined_convergecast(sim, forest, far_item, min, 2 * id_bits + 1, root_peers, has)

        # merges, computed at the root
        with sim.phase("merge"):
            plans = {}
            for r in live_roots:
                frags = set(ctl[r]) | set(peers[r].values())
                uf = _UnionFind(frags)
                adopted = []
                for f, far in sorted(peers[r].items()):
                    if uf.union(f, far):
                        adopted.append((candidates[r][f], f))
                remap = {f: uf.find(f) for f in frags if uf.find(f) != f}
                left = len(frags) - len(remap)
                stopped[r] = not ctl[r] if retire else left <= 1
                plans[r] = (remap, adopted)

            def merge_items(node):
                remap, adopted = plans[node.id]
                items = [(("map", a, b), 2 * id_bits + 1) for a, b in sorted(remap.items())]
                items += [(("edge", code), 2 * id_bits + 1) for code, _ in adopted]
                if stopped[node.id]:
                    items.append((("stop",), 1))
                return items or [(("idle",), 1)]

            def apply_merge(node, values):
                fid = node.mem["fid"]
                for val in values:
                    if val[0] == "map" and val[1] == fid:
                        node.mem["fid"] = val[2]
                    elif val[0] == "edge":
                        code = val[1]
                        lo, hi = code >> id_bits, code & ((1 << id_bits) - 1)
                        if node.id == lo:
                            _mark(node, hi)
                        elif node.id == hi:
                            _mark(node, lo)

            pipelined_broadcast(sim, forest, merge_items, apply_merge, live_roots)
        for r in live_roots:
            for code, f in plans[r][1]:
                e = (code >> id_bits, code & ((1 << id_bits) - 1))
                trace.adoptions.append(Adoption(e, f, snap))
        trace.step3_counts.append(len({nodes[v].mem["fid"] for v in everyone}))
    return FragmentMap({v: nodes[v].mem["fid"] for v in everyone}, _collect_edges(sim, everyone))


# ------------------------------------------------------------------ MST

def _all_edges(node: Node):
    return node.nbrs


def mst_in(sim: Simulation, delta: float, *, c: float = 2.0, c_T: float = 2.0,
           backbone: Backbone | None = None) -> MstResult:
    g = sim.graph
    n = g.n
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"mst supports delta in [0, 0.5], got {delta}")
    trace = Trace()
    timed_out = False
    branch = "dense"
    after2 = n
    bb_connected = True
    try:
        if backbone is None:
            backbone = build_backbone(sim, DannerParams(delta, c, c_T))
        bb_connected = backbone.connected
        forest = backbone.forest
        with sim.phase("count"):
            m_at: dict[int, int] = {}
            convergecast(sim, forest, lambda nd: len(nd.nbrs), lambda a, b: a + b,
                         2 * max(1, (n - 1).bit_length()) + 1,
                         lambda nd, total: m_at.__setitem__(nd.id, total // 2))
            dense = {r: m_at[r] > n ** (1 + delta) for r in forest.roots}
            broadcast(sim, forest, lambda nd: [(dense[nd.id], 1)],
                      lambda nd, vals: nd.mem.__setitem__("dense", vals[0]))
        dense_root = dense[forest.roots[0]]
        branch = "dense" if dense_root else "sparse"
        eff = delta if dense_root else 0.5
        iters = math.ceil((1 - eff) * math.log2(n)) if n > 1 else 0
        _init_fragments(sim, g.nodes)
        finder = _sketch_finder(_all_edges, True) if dense_root else _direct_finder(_all_edges, True)
        with sim.phase("ghs"):
            controlled_ghs(sim, iters, finder, trace=trace)
        after2 = len({sim.nodes[v].mem["fid"] for v in g.nodes})
        with sim.phase("merge"):
            merge_phase_step3(sim, backbone, _all_edges, by_weight=True,
                              iterations=math.ceil(math.log2(n)) if n > 1 else 0, retire=False, trace=trace)
    except RoundLimitExceeded:
        timed_out = True
    edges = _collect_edges(sim, [v for v in g.nodes if "mst" in sim.nodes[v].mem])
    return MstResult(edges, sim.metrics, branch, after2, trace, bb_connected, timed_out)


def mst(g: Graph, delta: float, seed: int = 0, *, c: float = 2.0, c_T: float = 2.0, kappa: int = 4,
        mode: str = "fast", round_limit: int | None = None) -> MstResult:
    """Minimum spanning tree with the danner-based three-step algorithm."""
    sim = Simulation(g, seed, kappa=kappa, mode=mode, round_limit=round_limit)
    return mst_in(sim, delta, c=c, c_T=c_T)


# ------------------------------------------------------------ components

def components_in(sim: Simulation, backbone: Backbone, marked: Callable[[Node], Iterable[int]],
                  delta: float) -> ComponentsResult:
    """Label every node with the smallest id of its component in the marked subgraph."""
    g = sim.graph
    n = g.n
    trace = Trace()
    timed_out = False
    try:
        with sim.phase("count"):
            dense = {}
            convergecast(sim, backbone.forest, lambda nd: len(nd.nbrs), lambda a, b: a + b,
                         2 * max(1, (n - 1).bit_length()) + 1,
                         lambda nd, total: dense.__setitem__(nd.id, total // 2 > n ** (1 + delta)))
        dense_root = dense[backbone.forest.roots[0]]
        eff = delta if dense_root else 0.5
        iters = math.ceil((1 - eff) * math.log2(n)) if n > 1 else 0
        _init_fragments(sim, g.nodes)
        finder = _sketch_finder(marked, False) if dense_root else _direct_finder(marked, False)
        with sim.phase("ghs"):
            controlled_ghs(sim, iters, finder, trace=trace, retire=True)
        with sim.phase("merge"):
            merge_phase_step3(sim, backbone, marked, by_weight=False,
                              iterations=math.ceil(math.log2(n)) if n > 1 else 0, retire=True, trace=trace)
    except RoundLimitExceeded:
        timed_out = True
    labels = {v: sim.nodes[v].mem.get("fid", v) for v in g.nodes}
    return ComponentsResult(labels, sim.metrics, trace, len(set(labels.values())), timed_out)


def connected_components(g: Graph, marked_edges: set[tuple[int, int]] | Callable[[int, int], bool],
                         delta: float, seed: int = 0, *, c: float = 2.0, c_T: float = 2.0,
                         kappa: int = 4, mode: str = "fast",
                         round_limit: int | None = None) -> ComponentsResult:
    """Component labels of the subgraph of marked edges (both endpoints know the marks)."""
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"components supports delta in [0, 0.5], got {delta}")
    if callable(marked_edges):
        keep = marked_edges
    else:
        marks = {(min(e), max(e)) for e in marked_edges}
        keep = lambda u, v: (u, v) in marks  # noqa: E731
    sim = Simulation(g, seed, kappa=kappa, mode=mode, round_limit=round_limit)
    for v in g.nodes:
        node = sim.nodes[v]
        node.mem["marked"] = tuple(w for w in node.nbrs if keep(min(v, w), max(v, w)))
    try:
        backbone = build_backbone(sim, DannerParams(delta, c, c_T))
    except RoundLimitExceeded:
        return ComponentsResult({v: v for v in g.nodes}, sim.metrics, Trace(), g.n, True)
    return components_in(sim, backbone, lambda nd: nd.mem["marked"], delta)


# ----------------------------------------------------------------- audits

def cut_property_audit(g: Graph, trace: Trace) -> bool:
    """Every adopted edge was the lightest edge leaving the fragment that chose it."""
    for ad in trace.adoptions:
        frag = trace.snapshots[ad.snapshot]
        f = ad.chooser
        best = None
        for (u, v), (w, _) in g.edge_items():
            fu, fv = frag.get(u), frag.get(v)
            if (fu == f) != (fv == f):
                if best is None or w < best[0]:
                    best = (w, (u, v))
        if best is None or best[1] != ad.edge:
            return False
    return True
