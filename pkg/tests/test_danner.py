import math

import networkx as nx
import pytest

from kt1danner.danner import DannerParams, build_danner, component_trace_check, domination_audit
from kt1danner.graph import Graph, generate, oracle_diameter
from conftest import to_nx


def log2(n):
    return math.log2(n)


def test_params_follow_their_formulas():
    p = DannerParams(0.5, c=2.0, c_T=2.0)
    assert p.center_probability(256) == pytest.approx(2 * math.log(256) / 16)
    assert p.picks(256) == 16
    assert p.picks(10) == 4
    assert p.iterations(256) == 8
    assert p.budget(256) == math.ceil(2 * 16 * 64)
    assert DannerParams(0.0).center_probability(256) == 1.0
    for bad in (-0.1, 1.5):
        with pytest.raises(ValueError):
            DannerParams(bad)
    with pytest.raises(ValueError):
        DannerParams(0.5, c=0.5)


@pytest.mark.parametrize("kind,params", [("gnp", {"n": 60, "p": 0.1}), ("torus", {"rows": 5, "cols": 6}),
                                         ("barbell", {"k": 10, "b": 2})])
def test_delta_one_keeps_every_edge_for_free(kind, params):
    g = generate(kind, 1, **params)
    res = build_danner(g, DannerParams(1.0), 0)
    assert res.H == set(g.edges)
    assert (res.metrics.rounds, res.metrics.messages) == (0, 0)


@pytest.mark.parametrize("delta", [0.0, 0.3, 0.5, 0.8, 1.0])
def test_star_danner_is_the_star(delta):
    g = generate("star", 0, n=10)
    res = build_danner(g, DannerParams(delta), 3)
    assert res.H == set(g.edges)


def test_single_node_and_single_edge():
    one = Graph([5], {})
    res = build_danner(one, DannerParams(0.5), 0)
    assert res.H == set() and res.spanning_connected()
    two = generate("path", 0, n=2)
    assert build_danner(two, DannerParams(0.5), 0).H == set(two.edges)


def test_danner_is_a_subgraph_spanning_every_node():
    g = generate("gnp", 2, n=100, p=0.15)
    res = build_danner(g, DannerParams(0.5), 4)
    assert res.H <= set(g.edges)
    assert res.spanning_connected()
    assert nx.is_connected(to_nx(Graph(g.nodes, {e: g.edges[e] for e in res.H})))


def test_low_degree_nodes_keep_all_their_edges():
    g = generate("gnp", 6, n=120, p=0.08)
    delta = 0.6
    res = build_danner(g, DannerParams(delta), 1)
    for v in g.nodes:
        if g.degree(v) < g.n ** delta:
            assert all((min(v, w), max(v, w)) in res.H for w in g.adj[v])
    for v in res.high:
        assert g.degree(v) >= g.n ** delta


def test_gnp_256_bounds_at_half():
    n, delta = 256, 0.5
    for seed in range(6):
        g = generate("gnp", seed, n=n, p=0.1)
        res = build_danner(g, DannerParams(delta), seed)
        assert res.spanning_connected()
        assert len(res.H) <= 4 * min(g.m, n ** 1.5) * log2(n)
        assert res.realized_diameter <= oracle_diameter(g) + 8 * n ** 0.5 * log2(n) ** 2
        assert res.metrics.rounds <= 16 * n ** 0.5 * log2(n) ** 3
        assert res.metrics.messages <= 16 * min(g.m, n ** 1.5) * log2(n) ** 3


def test_all_low_degree_graph_has_trivial_trace():
    g = generate("cycle", 0, n=40)
    res = build_danner(g, DannerParams(0.5), 0)
    assert res.high == set()
    assert all(set(t.values()) <= {1} for t in res.component_count_trace)
    assert component_trace_check(res)


def test_clique_of_high_degree_nodes_halves():
    g = generate("complete", 0, n=8)
    for seed in range(20):
        res = build_danner(g, DannerParams(0.9), seed)
        assert res.high == set(g.nodes)
        counts = [sum(t.values()) for t in res.component_count_trace]
        for i, c in enumerate(counts):
            assert c <= max(1, 8 >> i)
        assert component_trace_check(res)


def test_trace_check_flags_a_stall():
    g = generate("complete", 0, n=8)
    res = build_danner(g, DannerParams(0.9), 0)
    res.component_count_trace = [{1: 4}, {1: 4}]
    assert not component_trace_check(res)


@pytest.mark.parametrize("delta", [0.0, 0.25])
def test_everyone_is_a_center_when_p_is_one(delta):
    g = generate("gnp", 1, n=24, p=0.3)
    res = build_danner(g, DannerParams(delta), 0)
    assert res.centers == set(g.nodes)
    assert domination_audit(res)


def test_audits_pass_on_random_runs():
    bad = 0
    for seed in range(30):
        g = generate("gnp", seed, n=128, p=0.12)
        res = build_danner(g, DannerParams(0.5), seed, audit_diameter=True)
        bad += not (domination_audit(res) and component_trace_check(res) and all(res.diameter_trace))
    assert bad <= 1


def test_fast_and_engine_build_the_same_danner():
    for seed, (kind, params) in enumerate([("gnp", {"n": 50, "p": 0.15}), ("torus", {"rows": 6, "cols": 6}),
                                           ("barbell", {"k": 8, "b": 3})]):
        g = generate(kind, seed, **params)
        for delta in (0.0, 0.5, 0.75):
            a = build_danner(g, DannerParams(delta), seed, mode="fast")
            b = build_danner(g, DannerParams(delta), seed, mode="engine")
            assert a.H == b.H
            assert a.metrics.to_dict() == b.metrics.to_dict()


def test_same_seed_same_danner():
    g = generate("gnp", 3, n=80, p=0.1)
    a = build_danner(g, DannerParams(0.5), 9)
    b = build_danner(g, DannerParams(0.5), 9)
    assert a.summary() == b.summary() and a.H == b.H


def test_round_limit_flags_a_partial_result():
    g = generate("gnp", 3, n=80, p=0.1)
    full = build_danner(g, DannerParams(0.5), 0)
    res = build_danner(g, DannerParams(0.5), 0, round_limit=50)
    assert res.timed_out and not full.timed_out
    # the stage that crosses the limit is charged in full, then the run stops
    assert 50 < res.metrics.rounds < full.metrics.rounds
