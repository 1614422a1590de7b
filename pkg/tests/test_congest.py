import pytest

from kt1danner.congest import (CongestFault, Metrics, NodeProgram, Simulation, block_bits, meter_payload, run)
from kt1danner.graph import Graph, generate


def test_block_size_and_metering():
    assert block_bits(256) == 32
    assert block_bits(1) == 4
    assert meter_payload(0, 256) == 0
    assert meter_payload(1, 256) == 1
    assert meter_payload(32, 256) == 1
    assert meter_payload(33, 256) == 2
    assert meter_payload(100, 256, kappa=1) == 13
    with pytest.raises(ValueError):
        meter_payload(-1, 16)


class Flood(NodeProgram):
    def __init__(self, know, source, bits=1):
        self.know = know
        self.source = source
        self.bits = bits
        self.seen = False

    def step(self, ctx, rnd, inbox):
        if self.seen:
            return
        if self.know.self_id == self.source or inbox:
            self.seen = True
            ctx.output = rnd
            for w in self.know.neighbor_ids:
                ctx.send(w, "x", self.bits)


def test_flood_on_path_reaches_the_end_after_n_minus_one_hops():
    g = generate("path", 0, n=10, relabel=False)
    res = run(g, lambda k: Flood(k, 1), 0)
    # node 10 still forwards back to node 9 in round 10
    assert res.metrics.rounds == 10
    assert res.metrics.messages == 2 * g.m
    assert res.outputs[10] == 10  # handled the round after the last hop


def test_multi_block_message_occupies_link():
    g = generate("path", 0, n=3, relabel=False)
    B = block_bits(3)
    res = run(g, lambda k: Flood(k, 1, bits=3 * B), 0)
    # each hop costs 3 rounds, node 3 hears at 3 + 3 + 1
    assert res.outputs[3] == 7
    assert res.metrics.messages == 3 * 2 * g.m


class Burst(NodeProgram):
    def __init__(self, know):
        self.know = know
        self.got = []

    def step(self, ctx, rnd, inbox):
        if rnd == 1 and self.know.self_id == 1:
            for i in range(3):
                ctx.send(2, i, 1)
        self.got.extend((rnd, d) for _, d in inbox)
        ctx.output = list(self.got)


def test_link_is_fifo():
    g = Graph([1, 2], {(1, 2): (1, 1)})
    res = run(g, Burst, 0)
    assert res.outputs[2] == [(2, 0), (3, 1), (4, 2)]
    assert res.metrics.rounds == 3


class Rogue(NodeProgram):
    def __init__(self, know):
        self.know = know

    def step(self, ctx, rnd, inbox):
        ctx.send(99, None, 1)


def test_sending_to_non_neighbour_faults():
    g = Graph([1, 2, 99], {(1, 2): (1, 1), (2, 99): (2, 1)})
    with pytest.raises(CongestFault):
        run(g, lambda k: Rogue(k) if k.self_id == 1 else Burst(k), 0)


class Chatter(NodeProgram):
    def __init__(self, know):
        self.know = know

    def step(self, ctx, rnd, inbox):
        for w in self.know.neighbor_ids:
            ctx.send(w, None, 1)


def test_round_limit_cuts_and_flags():
    g = generate("cycle", 0, n=5)
    res = run(g, Chatter, 0, round_limit=7)
    assert res.timed_out
    assert res.metrics.rounds == 7
    with pytest.raises(ValueError):
        run(g, Chatter, 0, round_limit=0)


def test_kt1_knowledge_is_local():
    g = generate("gnp", 2, n=10, p=0.4, multiplicity=2)
    sim = Simulation(g, 1)
    for v in g.nodes:
        k = sim.nodes[v].knowledge
        assert k.self_id == v and k.n == 10
        assert k.neighbor_ids == g.adj[v]
        assert k.incident_weights == tuple(g.weight(v, w) for w in g.adj[v])
        assert set(k.multiplicities) == {2}


def test_node_coins_are_reproducible_and_private():
    g = generate("path", 0, n=4)
    a, b = Simulation(g, 5), Simulation(g, 5)
    v, w = g.nodes[:2]
    assert a.nodes[v].random_bits(40) == b.nodes[v].random_bits(40)
    assert Simulation(g, 5).nodes[v].random_bits(40) != Simulation(g, 5).nodes[w].random_bits(40)
    assert Simulation(g, 5).nodes[v].random_bits(40) != Simulation(g, 6).nodes[v].random_bits(40)


def test_phases_and_padding():
    sim = Simulation(generate("path", 0, n=4), 0)
    with sim.phase("a"):
        with sim.phase("b"):
            sim.charge(3, 7)
        assert sim.pad_to(10) == 0
        assert sim.pad_to(4) == 6
    m = sim.metrics
    assert (m.rounds, m.messages) == (10, 7)
    assert m.phases == {"a/b": [3, 7], "a": [7, 0]}
    assert Metrics.to_json(m) == m.copy().to_json()


class Hello(NodeProgram):
    def __init__(self, know):
        self.know = know

    def step(self, ctx, rnd, inbox):
        if rnd == 1:
            for w in self.know.neighbor_ids:
                ctx.send(w, None, 1)


def test_free_edges_are_not_metered():
    g = Graph([1, 2, 3], {(1, 2): (1, 1), (2, 3): (2, 1)})
    sim = Simulation(g, 0, free_edges={(1, 2)}, mode="engine")
    sim.execute({v: Hello(sim.nodes[v].knowledge) for v in g.nodes})
    assert sim.metrics.messages == 2
