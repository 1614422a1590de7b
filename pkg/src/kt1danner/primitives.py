"""Tree collectives, neighbour exchanges, BFS trees and leader election.

Every collective has two executions with identical outputs and metered cost:
a node program run by the engine, and a schedule computation that derives
the same delivery times directly from the tree shape. ``Simulation.mode``
picks one. Callbacks passed to a collective receive a single ``Node`` and
must only read and write that node's state.

A forest is stored distributedly: each member keeps a ``TreeSlot`` under a
memory key. Several trees of one forest run the same collective at once and
the stage ends when the slowest tree is done.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable

from .congest import CongestFault, Context, Node, NodeProgram, Simulation


@dataclass(slots=True)
class TreeSlot:
    root: int
    parent: int | None
    children: tuple[int, ...]


@dataclass
class Forest:
    key: str
    roots: list[int]


@dataclass
class BfsTree:
    root: int
    parent: dict[int, int | None]
    depth: dict[int, int]

    @property
    def height(self) -> int:
        return max(self.depth.values(), default=0)


@dataclass
class LeaderResult:
    leader: dict[int, int]
    forest: Forest

    def leaders(self) -> set[int]:
        return set(self.forest.roots)


def tree_order(sim: Simulation, key: str, root: int) -> list[tuple[int, int]]:
    """Members of the tree rooted at ``root`` in BFS order, with depths."""
    nodes = sim.nodes
    order = [(root, 0)]
    i = 0
    while i < len(order):
        v, d = order[i]
        i += 1
        for c in nodes[v].mem[key].children:
            order.append((c, d + 1))
    return order


def forest_members(sim: Simulation, forest: Forest) -> dict[int, list[int]]:
    return {r: [v for v, _ in tree_order(sim, forest.key, r)] for r in forest.roots}


def _paid_edges(sim: Simulation, key: str, order) -> int:
    if not sim.free_edges:
        return len(order) - 1
    nodes = sim.nodes
    return sum(1 for v, _ in order[1:] if not sim.is_free(v, nodes[v].mem[key].parent))


# ------------------------------------------------------------- broadcast

Items = list[tuple[Any, int]]


def broadcast(sim: Simulation, forest: Forest, payload: Callable[[Node], Items | None],
              on_recv: Callable[[Node, list], None], roots: Iterable[int] | None = None) -> dict[int, list]:
    """Each root sends a list of ``(value, bits)`` items to every node of its tree.

    Items are split into B-bit chunks that are forwarded as soon as they
    arrive, so ``k`` chunks reach depth ``d`` after ``d + k - 1`` rounds.
    ``payload`` returning None keeps that tree out of the stage.
    """
    roots = forest.roots if roots is None else list(roots)
    if sim.mode == "engine":
        return _engine_broadcast(sim, forest, payload, on_recv, roots)
    nodes = sim.nodes
    last_tx = msgs = 0
    active = False
    sent: dict[int, list] = {}
    for r in roots:
        items = payload(nodes[r])
        if items is None:
            continue
        if not items:
            raise ValueError("broadcast needs at least one item")
        active = True
        values = [v for v, _ in items]
        chunks = sum(max(1, sim.blocks(b)) for _, b in items)
        order = tree_order(sim, forest.key, r)
        for v, _ in order:
            on_recv(nodes[v], values)
        if len(order) > 1:
            msgs += chunks * _paid_edges(sim, forest.key, order)
            last_tx = max(last_tx, order[-1][1] + chunks - 1)
        sent[r] = values
    if active:
        sim.charge(last_tx or 1, msgs)
    return sent


class _BroadcastProgram(NodeProgram):
    def __init__(self, sim, slot: TreeSlot, items, on_recv):
        self.sim = sim
        self.slot = slot
        self.items = items
        self.on_recv = on_recv
        self.got = 0
        self.received: list = []

    def _chunks(self, items):
        out = []
        for idx, (value, bits) in enumerate(items):
            k = max(1, self.sim.blocks(bits))
            for j in range(k):
                size = min(self.sim.B, bits - j * self.sim.B) if bits else 1
                out.append(((idx, j == k - 1, value), max(1, size)))
        return out

    def step(self, ctx: Context, rnd, inbox):
        if rnd == 1 and self.items is not None:
            chunks = self._chunks(self.items)
            self.on_recv(ctx.node, [v for v, _ in self.items])
            for c in self.slot.children:
                for data, bits in chunks:
                    ctx.send(c, (len(chunks), data), bits)
            return
        for _, (total, data) in inbox:
            for c in self.slot.children:
                ctx.send(c, (total, data), self.sim.B if not data[1] else 1)
            self.got += 1
            if data[1]:
                self.received.append(data[2])
            if self.got == total:
                self.on_recv(ctx.node, self.received)


def _engine_broadcast(sim, forest, payload, on_recv, roots):
    nodes = sim.nodes
    programs: dict[int, NodeProgram] = {}
    sent = {}
    for r in roots:
        items = payload(nodes[r])
        if items is None:
            continue
        if not items:
            raise ValueError("broadcast needs at least one item")
        sent[r] = [v for v, _ in items]
        for v, _ in tree_order(sim, forest.key, r):
            slot = nodes[v].mem[forest.key]
            programs[v] = _BroadcastProgram(sim, slot, items if v == r else None, on_recv)
    sim.execute(programs)
    return sent


# -------------------------------------------------------- broadcast-echo

def broadcast_echo(sim: Simulation, forest: Forest, down: Callable[[Node], tuple[Any, int] | None],
                   on_recv: Callable[[Node, Any], None], up: Callable[[Node], Any],
                   combine: Callable[[Any, Any], Any], up_bits: int,
                   on_root: Callable[[Node, Any], None], roots: Iterable[int] | None = None) -> None:
    """Broadcast ``down``'s value, then fold ``up`` values back to the root.

    A node echoes once it has the broadcast and all its children's echoes.
    ``combine`` must be associative and commutative; None values are skipped.
    """
    _echo(sim, forest, down, on_recv, up, combine, up_bits, on_root, roots, True)


def convergecast(sim: Simulation, forest: Forest, up: Callable[[Node], Any],
                 combine: Callable[[Any, Any], Any], up_bits: int,
                 on_root: Callable[[Node, Any], None], roots: Iterable[int] | None = None) -> None:
    """Fold ``up`` values to each root; every node starts in round 1."""
    _echo(sim, forest, None, None, up, combine, up_bits, on_root, roots, False)


def _fold(combine, acc, value):
    if value is None:
        return acc
    if acc is None:
        return value
    return combine(acc, value)


def _echo(sim, forest, down, on_recv, up, combine, up_bits, on_root, roots, has_down):
    roots = forest.roots if roots is None else list(roots)
    if sim.mode == "engine":
        return _engine_echo(sim, forest, down, on_recv, up, combine, up_bits, on_root, roots, has_down)
    nodes = sim.nodes
    key = forest.key
    cu = max(1, sim.blocks(up_bits))
    last_tx = msgs = 0
    active = False
    for r in roots:
        root = nodes[r]
        if has_down:
            first = down(root)
            if first is None:
                continue
            value, bits = first
            cd = max(1, sim.blocks(bits))
        else:
            value, cd = None, 0
        active = True
        order = tree_order(sim, key, r)
        local = {}
        for v, _ in order:
            node = nodes[v]
            if has_down:
                on_recv(node, value)
            local[v] = up(node)
        if len(order) == 1:
            on_root(root, local[r])
            continue
        paid = _paid_edges(sim, key, order)
        msgs += paid * (cd + cu)
        arrive: dict[int, int] = {}
        acc: dict[int, Any] = {}
        for v, d in reversed(order):
            slot = nodes[v].mem[key]
            agg = local[v]
            start = d + cd if has_down else 1
            for c in slot.children:
                agg = _fold(combine, agg, acc[c])
                if arrive[c] + 1 > start:
                    start = arrive[c] + 1
            acc[v] = agg
            if v != r:
                arrive[v] = start + cu - 1
        done = max(arrive[c] for c in root.mem[key].children)
        last_tx = max(last_tx, done)
        on_root(root, acc[r])
    if active:
        sim.charge(last_tx or 1, msgs)


class _EchoProgram(NodeProgram):
    def __init__(self, sim, slot, is_root, first, spec):
        self.sim = sim
        self.slot = slot
        self.is_root = is_root
        self.first = first
        self.spec = spec
        self.total = None
        self.got = 0
        self.own = None
        self.ready = False
        self.child_vals: dict[int, Any] = {}
        self.sent = False

    def _arrived(self, node, value):
        on_recv, up = self.spec[1], self.spec[2]
        if on_recv is not None:
            on_recv(node, value)
        self.own = up(node)
        self.ready = True

    def step(self, ctx: Context, rnd, inbox):
        _, _, _, combine, up_bits, on_root, has_down = self.spec
        node = ctx.node
        B = self.sim.B
        if rnd == 1:
            if not has_down:
                self._arrived(node, None)
            elif self.is_root:
                value, bits = self.first
                k = max(1, self.sim.blocks(bits))
                self._arrived(node, value)
                for c in self.slot.children:
                    for j in range(k):
                        ctx.send(c, ("d", k, value), B if j < k - 1 else max(1, bits - (k - 1) * B))
        for src, data in inbox:
            if data[0] == "d":
                _, k, value = data
                for c in self.slot.children:
                    ctx.send(c, data, B)
                self.got += 1
                if self.got == k:
                    self._arrived(node, value)
            else:
                self.child_vals[src] = data[1]
        if self.ready and not self.sent and len(self.child_vals) == len(self.slot.children):
            agg = self.own
            for c in self.slot.children:
                agg = _fold(combine, agg, self.child_vals[c])
            self.sent = True
            if self.is_root:
                on_root(node, agg)
            else:
                ctx.send(self.slot.parent, ("u", agg), up_bits)


def _engine_echo(sim, forest, down, on_recv, up, combine, up_bits, on_root, roots, has_down):
    nodes = sim.nodes
    spec = (down, on_recv, up, combine, max(1, up_bits), on_root, has_down)
    programs: dict[int, NodeProgram] = {}
    for r in roots:
        first = None
        if has_down:
            first = down(nodes[r])
            if first is None:
                continue
        for v, _ in tree_order(sim, forest.key, r):
            programs[v] = _EchoProgram(sim, nodes[v].mem[forest.key], v == r, first, spec)
    sim.execute(programs)


# ------------------------------------------------- pipelined convergecast

def pipelined_convergecast(sim: Simulation, forest: Forest, items: Callable[[Node], dict],
                           combine: Callable[[Any, Any], Any], item_bits: int,
                           on_root: Callable[[Node, dict], None], roots: Iterable[int] | None = None,
                           max_tags: int | None = None) -> None:
    """Fold tagged items to each root, one tag per message, lowest tag first.

    A node forwards tag t once every child has finished or already passed t.
    A tag sent after all children are done and with nothing left behind it
    carries the end marker; otherwise a separate 1-bit end marker follows
    once the subtree is exhausted.
    """
    roots = forest.roots if roots is None else list(roots)
    if sim.mode == "engine":
        _engine_pipelined(sim, forest, items, combine, item_bits, on_root, roots, max_tags)
        return
    nodes = sim.nodes
    key = forest.key
    c_item = max(1, sim.blocks(item_bits))
    last_tx = msgs = 0
    for r in roots:
        order = tree_order(sim, key, r)
        streams: dict[int, list] = {}
        for v, _ in reversed(order):
            node = nodes[v]
            slot = node.mem[key]
            own = items(node)
            if max_tags is not None and len(own) > max_tags:
                raise ValueError(f"node {v} holds {len(own)} tags, above the declared {max_tags}")
            acc = dict(own)
            events = []
            for c in slot.children:
                for seq, (when, tag, val, last) in enumerate(streams.pop(c)):
                    events.append((when, c, seq, tag, val, last))
            events.sort()
            if v == r:
                for _, _, _, tag, val, _ in events:
                    if tag is not None:
                        acc[tag] = combine(acc[tag], val) if tag in acc else val
                on_root(node, acc)
                if events:
                    last_tx = max(last_tx, events[-1][0] - 1)
                continue
            out, tx = _pipeline_node(acc, slot.children, events, c_item, combine)
            if max_tags is not None and len(out) > max_tags:
                raise ValueError(f"node {v} forwards {len(out)} tags, above the declared {max_tags}")
            free = sim.free_edges and sim.is_free(v, slot.parent)
            if not free:
                msgs += sum(c_item if t is not None else 1 for _, t, _, _ in out)
            last_tx = max(last_tx, tx)
            streams[v] = out
    if roots:
        sim.charge(last_tx or 1, msgs)


def _pipeline_node(acc, children, events, c_item, combine):
    """Send schedule of one non-root node given its children's arrivals.

    ``events`` are (handled_round, child, seq, tag, value, last) sorted by
    round. Returns the outgoing stream as (handled_round_at_parent, tag, value,
    last) and the last transmission round.
    """
    done = {c: False for c in children}
    high = {c: None for c in children}
    sent: set = set()
    marked = False
    out = []
    free_at = 1
    i = 0
    rnd = 1
    n_events = len(events)
    tx = 0
    while True:
        while i < n_events and events[i][0] <= rnd:
            _, c, _, tag, val, last = events[i]
            if tag is not None:
                acc[tag] = combine(acc[tag], val) if tag in acc else val
                high[c] = tag
            if last:
                done[c] = True
            i += 1
        all_done = all(done.values())
        if rnd >= free_at:
            unsent = sorted(t for t in acc if t not in sent)
            if not unsent:
                if all_done:
                    if not marked:
                        out.append((rnd + 1, None, None, True))
                        tx = rnd
                    break
            else:
                t = unsent[0]
                ready = all(done[c] or (high[c] is not None and high[c] >= t) for c in children)
                if ready:
                    last = all_done and len(unsent) == 1
                    marked = last
                    sent.add(t)
                    end = rnd + c_item - 1
                    out.append((end + 1, t, acc[t], last))
                    tx = end
                    free_at = end + 1
                    if last:
                        break
                    rnd = free_at
                    continue
        nxt = events[i][0] if i < n_events else None
        if rnd < free_at:
            rnd = free_at if nxt is None or nxt >= free_at else nxt
        elif nxt is None:
            raise RuntimeError("pipelined convergecast stalled")
        else:
            rnd = nxt
    return out, tx


class _PipelineProgram(NodeProgram):
    def __init__(self, sim, slot, is_root, spec):
        self.sim = sim
        self.slot = slot
        self.is_root = is_root
        self.spec = spec
        self.acc = None
        self.done = {c: False for c in slot.children}
        self.high = {c: None for c in slot.children}
        self.sent: set = set()
        self.free_at = 1
        self.finished = False
        self.marked = False

    def step(self, ctx: Context, rnd, inbox):
        items, combine, item_bits, on_root, max_tags = self.spec
        node = ctx.node
        if self.acc is None:
            self.acc = dict(items(node))
            if max_tags is not None and len(self.acc) > max_tags:
                raise ValueError(f"node {node.id} holds {len(self.acc)} tags, above the declared {max_tags}")
        acc = self.acc
        for src, (tag, val, last) in inbox:
            if tag is not None:
                acc[tag] = combine(acc[tag], val) if tag in acc else val
                self.high[src] = tag
            if last:
                self.done[src] = True
        if self.finished:
            return
        all_done = all(self.done.values())
        if self.is_root:
            if all_done:
                self.finished = True
                on_root(node, acc)
            return
        if rnd < self.free_at:
            ctx.wake(self.free_at)
            return
        unsent = sorted(t for t in acc if t not in self.sent)
        if not unsent:
            if all_done:
                if not self.marked:
                    ctx.send(self.slot.parent, (None, None, True), 1)
                self.finished = True
            return
        t = unsent[0]
        ready = all(self.done[c] or (self.high[c] is not None and self.high[c] >= t)
                    for c in self.slot.children)
        if ready:
            last = all_done and len(unsent) == 1
            self.marked = last
            self.sent.add(t)
            ctx.send(self.slot.parent, (t, acc[t], last), item_bits)
            self.free_at = rnd + max(1, self.sim.blocks(item_bits))
            if max_tags is not None and len(self.sent) > max_tags:
                raise ValueError(f"node {node.id} forwards more than the declared {max_tags} tags")
            if last:
                self.finished = True
            else:
                ctx.wake(self.free_at)


def _engine_pipelined(sim, forest, items, combine, item_bits, on_root, roots, max_tags):
    nodes = sim.nodes
    spec = (items, combine, item_bits, on_root, max_tags)
    programs: dict[int, NodeProgram] = {}
    for r in roots:
        for v, _ in tree_order(sim, forest.key, r):
            programs[v] = _PipelineProgram(sim, nodes[v].mem[forest.key], v == r, spec)
    sim.execute(programs)


def pipelined_broadcast(sim: Simulation, forest: Forest, items: Callable[[Node], Items | None],
                        on_recv: Callable[[Node, list], None],
                        roots: Iterable[int] | None = None) -> dict[int, list]:
    """Stream a list of items from each root; k one-block items reach depth d by d + k - 1."""
    return broadcast(sim, forest, items, on_recv, roots)


# --------------------------------------------------------------- exchange

def exchange(sim: Simulation, sends: list[tuple[int, int, Any, int]],
             on_recv: Callable[[Node, list[tuple[int, Any]]], None]) -> None:
    """One burst of neighbour messages ``(src, dst, value, bits)``, all sent in round 1.

    Messages on the same directed link queue behind each other. Each receiver
    then handles its whole inbox, sorted by sender.
    """
    if not sends:
        return
    nodes = sim.nodes
    for src, dst, _, _ in sends:
        if dst not in nodes[src].nbr_set:
            raise CongestFault(src, f"cannot send to non-neighbour {dst}")
    if sim.mode == "engine":
        _engine_exchange(sim, sends, on_recv)
        return
    load: dict[tuple[int, int], int] = {}
    msgs = 0
    inbox: dict[int, list] = {}
    for seq, (src, dst, value, bits) in enumerate(sends):
        k = max(1, sim.blocks(bits))
        load[(src, dst)] = load.get((src, dst), 0) + k
        if not sim.is_free(src, dst):
            msgs += k
        inbox.setdefault(dst, []).append((src, seq, value))
    sim.charge(max(load.values()), msgs)
    for dst in sorted(inbox):
        box = sorted(inbox[dst], key=lambda t: (t[0], t[1]))
        on_recv(nodes[dst], [(s, val) for s, _, val in box])


class _SendProgram(NodeProgram):
    def __init__(self, outgoing):
        self.outgoing = outgoing
        self.inbox: list = []

    def step(self, ctx: Context, rnd, inbox):
        if rnd == 1:
            for dst, value, bits in self.outgoing:
                ctx.send(dst, value, bits)
        self.inbox.extend(inbox)


def _engine_exchange(sim, sends, on_recv):
    programs: dict[int, _SendProgram] = {}
    for src, dst, value, bits in sends:
        programs.setdefault(src, _SendProgram([])).outgoing.append((dst, value, bits))
        programs.setdefault(dst, _SendProgram([]))
    sim.execute(programs)
    for dst in sorted(programs):
        prog = programs[dst]
        if prog.inbox:
            on_recv(sim.nodes[dst], prog.inbox)


# ------------------------------------------------------------ BFS trees

def build_bfs_tree(sim: Simulation, sub: Callable[[Node], Iterable[int]], root: int, key: str) -> BfsTree:
    """Flood from ``root`` over the subgraph given by ``sub``; parents are the
    smallest-id neighbour one layer up. Every node registers with its parent
    in the same round it forwards the flood.
    """
    nodes = sim.nodes
    if sim.mode == "engine":
        return _engine_bfs(sim, sub, root, key)
    depth = {root: 0}
    parent: dict[int, int | None] = {root: None}
    frontier = [root]
    msgs = 0
    adj: dict[int, list[int]] = {}
    while frontier:
        nxt = []
        for u in frontier:
            adj[u] = sorted(sub(nodes[u]))
            for w in adj[u]:
                if w not in depth:
                    depth[w] = depth[u] + 1
                    parent[w] = u
                    nxt.append(w)
                elif depth[w] == depth[u] + 1 and u < parent[w]:
                    parent[w] = u
        frontier = nxt
    children: dict[int, list[int]] = {v: [] for v in depth}
    for v, p in parent.items():
        if p is not None:
            children[p].append(v)
    last_tx = 0
    for v in depth:
        paid = 0
        for w in adj[v]:
            if w == parent[v]:
                continue
            paid += 0 if sim.is_free(v, w) else 1
        if parent[v] is not None and not sim.is_free(v, parent[v]):
            paid += 1
        msgs += paid
        if adj[v]:
            last_tx = max(last_tx, depth[v] + 1)
    for v in depth:
        nodes[v].mem[key] = TreeSlot(root, parent[v], tuple(sorted(children[v])))
    has_edges = any(adj[v] for v in depth)
    sim.charge(last_tx if has_edges else 1, msgs)
    return BfsTree(root, parent, depth)


class _BfsProgram(NodeProgram):
    def __init__(self, sim, sub_nbrs, root, is_root):
        self.sim = sim
        self.nbrs = sub_nbrs
        self.root = root
        self.is_root = is_root
        self.parent = None
        self.joined = is_root
        self.children: list[int] = []
        self.bits = sim.id_bits

    def step(self, ctx: Context, rnd, inbox):
        if rnd == 1 and self.is_root:
            for w in self.nbrs:
                ctx.send(w, ("bfs", self.root), self.bits)
        newcomer = not self.joined
        for src, (kind, _) in inbox:
            if kind == "child":
                self.children.append(src)
            elif newcomer and not self.joined:
                self.joined = True
                self.parent = src
        if newcomer and self.joined:
            for w in self.nbrs:
                if w != self.parent:
                    ctx.send(w, ("bfs", self.root), self.bits)
            ctx.send(self.parent, ("child", self.root), 1)


def _engine_bfs(sim, sub, root, key):
    nodes = sim.nodes
    members = {root}
    frontier = [root]
    adj = {}
    while frontier:
        nxt = []
        for u in frontier:
            adj[u] = sorted(sub(nodes[u]))
            for w in adj[u]:
                if w not in members:
                    members.add(w)
                    nxt.append(w)
        frontier = nxt
    programs = {v: _BfsProgram(sim, adj[v], root, v == root) for v in members}
    sim.execute(programs)
    parent = {v: programs[v].parent for v in members}
    for v in members:
        nodes[v].mem[key] = TreeSlot(root, parent[v], tuple(sorted(programs[v].children)))
    depth = {root: 0}
    for v, _ in tree_order(sim, key, root):
        for c in nodes[v].mem[key].children:
            depth[c] = depth[v] + 1
    return BfsTree(root, parent, depth)


# ------------------------------------------------------- leader election

class _ElectProgram(NodeProgram):
    """Flood the best (rank, id) seen so far; only strict improvements travel."""

    def __init__(self, sub_nbrs, rank, node_id, bits):
        self.nbrs = sub_nbrs
        self.best = (rank, node_id)
        self.parent = None
        self.bits = bits

    def step(self, ctx: Context, rnd, inbox):
        if rnd == 1:
            for w in self.nbrs:
                ctx.send(w, self.best, self.bits)
            return
        best_src = None
        best = self.best
        for src, cand in inbox:
            if cand < best:
                best, best_src = cand, src
        if best_src is not None:
            self.best = best
            self.parent = best_src
            for w in self.nbrs:
                if w != best_src:
                    ctx.send(w, best, self.bits)


def elect_leader(sim: Simulation, members: Iterable[int], sub: Callable[[Node], Iterable[int]],
                 key: str, *, rank: str = "random", cap: int | None = None) -> LeaderResult:
    """Elect one leader per connected component of the subgraph ``sub`` on ``members``.

    With ``rank="random"`` each member draws 2*ceil(log2 n) random bits and
    the smallest (rank, id) wins; with ``rank="id"`` the smallest id wins.
    The winner's flood leaves a spanning tree behind (parent = the neighbour
    that first delivered the winning pair), which a one-round registration
    turns into a ``TreeSlot`` forest under ``key``. ``cap`` cuts the flood off
    after that many rounds.
    """
    nodes = sim.nodes
    members = sorted(members)
    rank_bits = 2 * max(1, (sim.n - 1).bit_length()) if rank == "random" else 0
    bits = rank_bits + sim.id_bits
    programs = {}
    for v in members:
        node = nodes[v]
        r = node.random_bits(rank_bits) if rank_bits else 0
        programs[v] = _ElectProgram(tuple(sorted(sub(node))), r, v, bits)
    sim.execute(programs, cap)
    children: dict[int, list[int]] = {v: [] for v in members}
    parent = {v: p.parent for v, p in programs.items()}
    if cap is None:
        def register(node, box):
            for src, _ in box:
                children[node.id].append(src)

        exchange(sim, [(v, u, None, 1) for v, u in parent.items() if u is not None], register)
    else:
        # A cut-off flood can leave a child registered under a leader its parent has since dropped.
        rejected = []

        def register(node, box):
            mine = programs[node.id].best[1]
            for src, label in box:
                if label == mine:
                    children[node.id].append(src)
                else:
                    rejected.append((node.id, src))

        exchange(sim, [(v, u, programs[v].best[1], sim.id_bits) for v, u in parent.items() if u is not None],
                 register)

        def orphan(node, box):
            parent[node.id] = None

        exchange(sim, [(u, v, None, 1) for u, v in rejected], orphan)
    leader = {}
    roots = []
    for v in members:
        nodes[v].mem[key] = TreeSlot(v, parent[v], tuple(sorted(children[v])))
        if parent[v] is None:
            roots.append(v)
    if cap is None:
        leader = {v: programs[v].best[1] for v in members}
        for v in members:
            nodes[v].mem[key].root = leader[v]
    else:
        def label(node, vals):
            leader[node.id] = vals[0]
            node.mem[key].root = vals[0]

        broadcast(sim, Forest(key, roots), lambda nd: [(nd.id, sim.id_bits)], label)
    return LeaderResult(leader, Forest(key, roots))
