"""Detecting edges that leave a component with shared-hash sketches.

Each member of a component adds up a value for every incident ambient edge;
the two endpoints of an internal edge contribute opposite values, so the
component total only depends on the edges that leave it. The root broadcasts
a fresh random hash, collects the total by broadcast-and-echo, and narrows a
nonzero total down to one edge by binary search over edge codes (find_any)
or over weights (find_min). The last candidate is confirmed by its inside
endpoint with one probe across the edge, so a returned edge always leaves.

Sketch values live in the prime field GF(p) with p the largest prime below
2^max(B, id_bits + 1), so one value fits one metered message. The hash of
edge {lo, hi} is c / ((s - lo)(t - hi)); a nonempty set of leaving edges sums
to zero with probability at most about 4|S|/p over (s, t, c).

``HashSpec`` is the GF(2^64) polynomial family used for shared edge sampling.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

from .congest import Node, Simulation
from .graph import edge_code
from .primitives import Forest, broadcast, broadcast_echo, convergecast, exchange

# ---------------------------------------------------------------- GF(2^64)

GF64_MODULUS = (1 << 64) | 0x1B


def gf64_mul(a: int, b: int) -> int:
    r = 0
    if a < b:
        a, b = b, a
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> 64:
            a ^= GF64_MODULUS
    return r


@dataclass(frozen=True)
class HashSpec:
    """Degree-(k-1) polynomial over GF(2^64); k-wise independent on distinct keys."""

    coeffs: tuple[int, ...]

    @classmethod
    def draw(cls, node: Node, k: int) -> "HashSpec":
        return cls(tuple(node.random_bits(64) for _ in range(k)))

    @property
    def bits(self) -> int:
        return 64 * len(self.coeffs)

    def value(self, key: int) -> int:
        if not 0 <= key < (1 << 64):
            raise ValueError("hash keys must fit in 64 bits")
        acc = 0
        for c in self.coeffs:
            acc = gf64_mul(acc, key) ^ c
        return acc

    def bit(self, key: int) -> int:
        return self.value(key) & 1


# ------------------------------------------------------- prime-field sketch

def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for q in small:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=None)
def sketch_prime(bits: int) -> int:
    """Largest prime below 2^bits."""
    q = (1 << bits) - 1
    while not _is_prime(q):
        q -= 1
    return q


def field_bits(sim_or_B: int, id_bits: int) -> int:
    return max(sim_or_B, id_bits + 1)


@dataclass(frozen=True)
class SketchSpec:
    s: int
    t: int
    c: int
    p: int

    @classmethod
    def draw(cls, node: Node, p: int, id_bits: int) -> "SketchSpec":
        lo = 1 << id_bits
        span = p - lo

        def pick():
            while True:
                x = node.random_bits(p.bit_length())
                if x < span:
                    return lo + x

        s, t = pick(), pick()
        while True:
            c = node.random_bits(p.bit_length())
            if 0 < c < p:
                break
        return cls(s, t, c, p)

    @property
    def bits(self) -> int:
        return 3 * self.p.bit_length()

    def edge_value(self, lo: int, hi: int) -> int:
        p = self.p
        return self.c * pow((self.s - lo) * (self.t - hi) % p, -1, p) % p

    def contribution(self, u: int, w: int) -> int:
        """What endpoint u adds for edge {u, w}: +h from the lower id, -h from the higher."""
        if u < w:
            return self.edge_value(u, w)
        return (self.p - self.edge_value(w, u)) % self.p

    def test_bit(self, total: int) -> int:
        return total & 1


@dataclass(frozen=True)
class Restriction:
    """Optional filters on the edges a sketch counts."""

    id_range: tuple[int, int] | None = None
    max_weight: int | None = None

    def admits(self, code: int, weight: int) -> bool:
        if self.id_range is not None and not self.id_range[0] <= code <= self.id_range[1]:
            return False
        return self.max_weight is None or weight <= self.max_weight


def member_sketch(spec: SketchSpec, node: Node, ambient: Iterable[int],
                  restriction: Restriction = Restriction()) -> int:
    """One node's share of the component total."""
    total = 0
    for w in ambient:
        if restriction.admits(edge_code(node.id, w, node.id_bits), node.weight[w]):
            total += spec.contribution(node.id, w)
    return total % spec.p


# ------------------------------------------------------ distributed search

@dataclass(frozen=True)
class FoundEdge:
    lo: int
    hi: int
    peer_tag: int

    @property
    def edge(self) -> tuple[int, int]:
        return (self.lo, self.hi)


class _Local:
    """Per-node search state: sorted keys of qualifying edges with prefix sums."""

    __slots__ = ("keys", "prefix", "codes", "lo", "hi", "tag")

    def __init__(self, node: Node, spec: SketchSpec, ambient: Iterable[int], by_weight: bool, tag: int):
        rows = []
        p = spec.p
        for w in ambient:
            code = edge_code(node.id, w, node.id_bits)
            key = node.weight[w] if by_weight else code
            rows.append((key, code, w, spec.contribution(node.id, w)))
        rows.sort()
        self.keys = [r[0] for r in rows]
        self.codes = [r[1] for r in rows]
        prefix = [0]
        acc = 0
        for r in rows:
            acc = (acc + r[3]) % p
            prefix.append(acc)
        self.prefix = prefix
        self.lo = 0
        self.hi = 0
        self.tag = tag

    def range_sum(self, lo: int, hi: int, p: int) -> int:
        i = bisect_left(self.keys, lo)
        j = bisect_right(self.keys, hi)
        return (self.prefix[j] - self.prefix[i]) % p


def _add_mod(p: int):
    return lambda a, b: (a + b) % p


def test_out(sim: Simulation, forest: Forest, ambient: Callable[[Node], Iterable[int]],
             roots: Iterable[int] | None = None, key: str = "_sketch") -> dict[int, tuple[SketchSpec, int]]:
    """One broadcast-and-echo per tree: a fresh spec down, the component total up.

    Returns ``root -> (spec, total)``. The parity bit of the total is the
    classic one-bit test; the full total is zero for sure when nothing leaves.
    """
    p = sketch_prime(field_bits(sim.B, sim.id_bits))
    out: dict[int, tuple[SketchSpec, int]] = {}

    def down(node):
        spec = SketchSpec.draw(node, p, sim.id_bits)
        node.mem[key + "_spec"] = spec
        return (spec, node.id), spec.bits + sim.id_bits

    def on_recv(node, value):
        spec, tag = value
        node.mem[key] = (spec, tag)

    def up(node):
        spec, _ = node.mem[key]
        return member_sketch(spec, node, ambient(node))

    def on_root(node, total):
        out[node.id] = (node.mem[key][0], total or 0)

    broadcast_echo(sim, forest, down, on_recv, up, _add_mod(p), p.bit_length(), on_root, roots)
    return out


def _search(sim: Simulation, forest: Forest, ambient, roots, by_weight: bool, key_bound: int,
            tag_of, on_confirm, key: str) -> dict[int, FoundEdge | None]:
    p = sketch_prime(field_bits(sim.B, sim.id_bits))
    add = _add_mod(p)
    pbits = p.bit_length()
    roots = list(forest.roots if roots is None else roots)
    lo_key = 1 if by_weight else 0
    nodes = sim.nodes
    if tag_of is None:
        slot_key = forest.key

        def tag_of(node):
            slot = node.mem.get(slot_key)
            return None if slot is None else slot.root
    # interval kept by each root: [lo, hi, last decision]
    ctl: dict[int, list] = {}

    def down(node):
        spec = SketchSpec.draw(node, p, sim.id_bits)
        return spec, spec.bits

    def on_recv(node, spec):
        st = _Local(node, spec, ambient(node), by_weight, tag_of(node))
        st.lo, st.hi = lo_key, key_bound
        node.mem[key] = st

    def up_total(node):
        st = node.mem[key]
        return st.range_sum(st.lo, st.hi, p)

    def root_total(node, value):
        if value:
            ctl[node.id] = [lo_key, key_bound, None]

    with sim.phase("detect"):
        broadcast_echo(sim, forest, down, on_recv, up_total, add, pbits, root_total, roots)

    def down_decision(node):
        return ctl[node.id][2], 1

    def apply(node, decision):
        st = node.mem[key]
        if decision is not None:
            mid = (st.lo + st.hi) // 2
            if decision == 0:
                st.hi = mid
            else:
                st.lo = mid + 1

    def up_lower(node):
        st = node.mem[key]
        return st.range_sum(st.lo, (st.lo + st.hi) // 2, p)

    def root_lower(node, low):
        c = ctl[node.id]
        mid = (c[0] + c[1]) // 2
        if low:
            c[1], c[2] = mid, 0
        else:
            c[0], c[2] = mid + 1, 1

    with sim.phase("search"):
        while True:
            live = [r for r in ctl if ctl[r][0] < ctl[r][1]]
            if not live:
                break
            broadcast_echo(sim, forest, down_decision, apply, up_lower, add, pbits, root_lower, live)

    found: dict[int, FoundEdge | None] = {r: None for r in roots}
    if not ctl:
        return found
    if by_weight:
        code_of: dict[int, int | None] = {}

        def down_weight(node):
            return ctl[node.id][0], key_bound.bit_length()

        def pin(node, w):
            st = node.mem[key]
            st.lo = st.hi = w

        def up_code(node):
            st = node.mem[key]
            i = bisect_left(st.keys, st.lo)
            return st.codes[i] if i < len(st.keys) and st.keys[i] == st.lo else None

        def root_code(node, code):
            code_of[node.id] = code

        with sim.phase("locate"):
            broadcast_echo(sim, forest, down_weight, pin, up_code, min, 2 * sim.id_bits, root_code, list(ctl))
        candidate = {r: c for r, c in code_of.items() if c is not None}
    else:
        candidate = {r: c[0] for r, c in ctl.items()}
    with sim.phase("confirm"):
        found.update(confirm_candidates(sim, forest, candidate, tag_of, on_confirm))
    return found


def confirm_candidates(sim: Simulation, forest: Forest, candidate: dict[int, int],
                       tag_of: Callable[[Node], int],
                       on_confirm: Callable[[Node, int], None] | None = None) -> dict[int, FoundEdge | None]:
    """Check each root's candidate edge code with one probe across the edge.

    The root announces the code; the member incident to it sends its
    component tag across, the other endpoint answers with its own, and the
    edge leaves iff the tags differ. Endpoints record what they learned in
    ``mem["probe"]``: ``chosen = (neighbour, peer tag)`` at the prober and
    ``incoming = {prober: prober tag}`` at the other end. ``on_confirm`` runs
    at both endpoints of every confirmed leaving edge.
    """
    id_bits = sim.id_bits
    nodes = sim.nodes
    result: dict[int, FoundEdge | None] = {r: None for r in candidate}
    if not candidate:
        return result
    sim.stage_seq += 1
    seq = sim.stage_seq

    def record(node):
        probe = node.mem.get("probe")
        if probe is None or probe["seq"] != seq:
            probe = {"seq": seq, "tag": tag_of(node), "target": None, "chosen": None, "incoming": {}}
            node.mem["probe"] = probe
        return probe

    probers: list[int] = []

    def announce(node, values):
        code = values[0]
        probe = record(node)
        lo, hi = code >> id_bits, code & ((1 << id_bits) - 1)
        other = hi if node.id == lo else lo if node.id == hi else None
        if other is not None and other in node.nbr_set:
            probe["target"] = other
            probers.append(node.id)

    with sim.phase("announce"):
        broadcast(sim, forest, lambda nd: [(candidate[nd.id], 2 * id_bits)], announce, list(candidate))

    sends = [(v, nodes[v].mem["probe"]["target"], nodes[v].mem["probe"]["tag"], id_bits)
             for v in sorted(probers)]
    replies = []

    def got_probe(node, box):
        probe = record(node)
        for src, theirs in box:
            probe["incoming"][src] = theirs
            if theirs != probe["tag"] and on_confirm is not None:
                on_confirm(node, src)
            replies.append((node.id, src, probe["tag"], id_bits))

    def got_reply(node, box):
        probe = node.mem["probe"]
        for src, theirs in box:
            if src == probe["target"]:
                probe["chosen"] = (src, theirs)
                if theirs != probe["tag"] and on_confirm is not None:
                    on_confirm(node, src)

    with sim.phase("probe"):
        exchange(sim, sends, got_probe)
        exchange(sim, replies, got_reply)

    def up(node):
        probe = node.mem.get("probe")
        if probe is None or probe["seq"] != seq or probe["chosen"] is None:
            return None
        w, theirs = probe["chosen"]
        if theirs == probe["tag"]:
            return None
        return (min(node.id, w), max(node.id, w), theirs)

    def on_root(node, value):
        if value is not None:
            result[node.id] = FoundEdge(*value)

    with sim.phase("report"):
        convergecast(sim, forest, up, min, 3 * id_bits, on_root, list(candidate))
    return result


def find_any(sim: Simulation, forest: Forest, ambient: Callable[[Node], Iterable[int]], *,
             roots: Iterable[int] | None = None, tag_of: Callable[[Node], int] | None = None,
             on_confirm: Callable[[Node, int], None] | None = None,
             key: str = "_search") -> dict[int, FoundEdge | None]:
    """An ambient edge leaving each tree's component, or None.

    Binary search over edge codes. Each level echoes the total of the lower
    half of the current interval; since internal edges cancel exactly, a
    nonzero total always contains a leaving edge and a zero lower half means
    the upper half carries the whole nonzero total. Only the first test can
    miss, with probability about 4|S|/p.
    """
    bound = (1 << (2 * sim.id_bits)) - 1
    return _search(sim, forest, ambient, roots, False, bound, tag_of, on_confirm, key)


def find_min(sim: Simulation, forest: Forest, ambient: Callable[[Node], Iterable[int]], *,
             weight_bound: int | None = None, roots: Iterable[int] | None = None,
             tag_of: Callable[[Node], int] | None = None,
             on_confirm: Callable[[Node, int], None] | None = None,
             key: str = "_search") -> dict[int, FoundEdge | None]:
    """The lightest ambient edge leaving each tree's component, or None.

    Binary search for the smallest weight w such that the edges of weight at
    most w have a nonzero total; then the member holding the weight-w edge
    reports its code, and the code is confirmed as in ``find_any``.
    """
    bound = weight_bound if weight_bound is not None else sim.graph.weight_bound
    return _search(sim, forest, ambient, roots, True, bound, tag_of, on_confirm, key)
