import io
import itertools
import random

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import Bounds, LinearConstraint, milp

from kt1danner.graph import (EdgeId, Graph, bfs_distances, components, edge_code, generate, oracle_bipartite,
                             oracle_diameter, oracle_domination_number, oracle_mincut,
                             oracle_mincut_bruteforce, oracle_mst, oracle_shortest_path, read_graph,
                             with_weights, write_graph, dumps, loads)
from conftest import to_nx


def test_path_and_star_shapes():
    p4 = generate("path", 0, n=4)
    assert (p4.n, p4.m, oracle_diameter(p4)) == (4, 3, 3)
    star = generate("star", 0, n=6)
    assert oracle_diameter(star) == 2
    assert oracle_domination_number(star) == 1
    assert oracle_domination_number(p4) == 2


def test_barbell_has_connectivity_b():
    assert oracle_mincut(generate("barbell", 1, k=5, b=3)) == 3


def test_generators_are_reproducible():
    for kind, kw in [("gnp", dict(n=30, p=0.2)), ("geometric", dict(n=30, radius=0.4)), ("torus", dict(rows=4, cols=5))]:
        assert generate(kind, 7, **kw) == generate(kind, 7, **kw)
        assert nx.is_connected(to_nx(generate(kind, 7, **kw)))


def test_distinct_weights_are_a_permutation():
    g = generate("gnp", 3, n=25, p=0.3)
    assert sorted(w for w, _ in g.edges.values()) == list(range(1, g.m + 1))


def test_ids_come_from_cubic_idspace():
    g = generate("gnp", 4, n=20, p=0.3)
    assert all(1 <= v <= 20 ** 3 for v in g.nodes)
    assert len(set(g.nodes)) == 20


def test_edge_code_order_matches_pair_order():
    bits = 10
    pairs = sorted({EdgeId.of(a, b) for a, b in itertools.combinations(range(1, 40, 3), 2)})
    codes = [p.encode(bits) for p in pairs]
    assert codes == sorted(codes)
    assert all(EdgeId.decode(c, bits) == p for c, p in zip(codes, pairs))
    assert edge_code(9, 4, bits) == edge_code(4, 9, bits)


def test_rejects_self_loops_and_bad_multiplicity():
    with pytest.raises(ValueError):
        Graph([1, 2], {(1, 1): (1, 1)})
    with pytest.raises(ValueError):
        Graph([1, 2], {(1, 2): (1, 0)})


def test_diameter_matches_floyd_warshall():
    for seed in range(10):
        g = generate("gnp", seed, n=12, p=0.3)
        dist = nx.floyd_warshall(to_nx(g), weight=None)
        assert oracle_diameter(g) == max(max(row.values()) for row in dist.values())


def test_disconnected_diameter_is_infinite():
    g = Graph([1, 2, 3], {(1, 2): (1, 1)})
    assert oracle_diameter(g) == float("inf")


def test_mst_small_cases():
    tri = Graph([1, 2, 3], {(1, 2): (1, 1), (2, 3): (2, 1), (1, 3): (3, 1)})
    assert oracle_mst(tri) == {(1, 2), (2, 3)}
    path = generate("path", 2, n=9)
    assert oracle_mst(path) == set(path.edges)


def test_mst_matches_prim():
    for seed in range(40):
        g = generate("gnp", seed, n=random.Random(seed).randint(5, 30), p=0.3)
        prim = nx.minimum_spanning_tree(to_nx(g), algorithm="prim")
        assert oracle_mst(g) == {tuple(sorted(e)) for e in prim.edges}


def test_mst_rejects_duplicate_weights():
    with pytest.raises(ValueError):
        oracle_mst(generate("cycle", 0, n=5, weights="unit"))


def test_mincut_known_values_and_bruteforce():
    assert oracle_mincut(generate("cycle", 0, n=8)) == 2
    assert oracle_mincut(generate("complete", 0, n=6)) == 5
    assert oracle_mincut(generate("cycle", 0, n=8, multiplicity=5)) == 10
    for seed in range(15):
        g = generate("gnp", seed, n=random.Random(seed).randint(4, 11), p=0.4)
        assert oracle_mincut(g) == oracle_mincut_bruteforce(g)
        assert oracle_mincut(g) == nx.stoer_wagner(to_nx(g), weight="mult")[0]


def test_bipartite_cycles():
    assert oracle_bipartite(generate("cycle", 0, n=4))[0]
    ok, cycle = oracle_bipartite(generate("cycle", 0, n=5))
    assert not ok and len(cycle) % 2 == 1


def test_bipartite_matches_networkx():
    for seed in range(20):
        g = generate("gnp", seed, n=14, p=0.15)
        ok, cycle = oracle_bipartite(g)
        assert ok == nx.is_bipartite(to_nx(g))
        if not ok:
            assert len(cycle) % 2 == 1
            assert all(g.has_edge(cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle)))


def test_components_labels_are_min_ids():
    labels = components([5, 3, 9, 1], [(3, 9)])
    assert labels == {5: 5, 3: 3, 9: 3, 1: 1}


def test_shortest_path_is_shortest():
    g = generate("gnp", 11, n=20, p=0.2)
    a, b = g.nodes[0], g.nodes[-1]
    path = oracle_shortest_path(g, a, b)
    assert len(path) - 1 == nx.shortest_path_length(to_nx(g), a, b)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(["distinct", "unit"]), st.integers(1, 3))
def test_text_round_trip(seed, weights, mult):
    g = generate("gnp", seed, n=12, p=0.35, weights=weights, multiplicity=mult)
    buf = io.StringIO()
    write_graph(g, buf)
    buf.seek(0)
    back = read_graph(buf)
    assert back == g and back.idspace == g.idspace
    assert loads(dumps(g)) == g


def test_with_weights_keeps_topology():
    g = generate("torus", 1, rows=3, cols=4)
    h = with_weights(g, 9)
    assert set(h.edges) == set(g.edges) and h.distinct_weights()


def test_bfs_distances_on_path():
    adj = {1: [2], 2: [1, 3], 3: [2]}
    assert bfs_distances(adj, 1) == {1: 0, 2: 1, 3: 2}


def min_dominating_set_milp(g):
    """Minimum dominating set size as a 0/1 integer program."""
    index = {v: i for i, v in enumerate(g.nodes)}
    a = np.eye(g.n)
    for (u, v) in g.edges:
        a[index[u], index[v]] = a[index[v], index[u]] = 1
    res = milp(np.ones(g.n), constraints=LinearConstraint(a, lb=1), integrality=np.ones(g.n), bounds=Bounds(0, 1))
    return round(res.fun)


@pytest.mark.parametrize("seed", range(40))
def test_domination_number_matches_integer_program(seed):
    rng = random.Random(seed)
    g = generate("gnp", seed, n=rng.randint(1, 14), p=rng.uniform(0.15, 0.6))
    assert oracle_domination_number(g) == min_dominating_set_milp(g)


def test_domination_number_known_values():
    assert oracle_domination_number(generate("path", 0, n=7)) == 3
    assert oracle_domination_number(generate("star", 0, n=9)) == 1
    assert oracle_domination_number(generate("cycle", 0, n=9)) == 3
    with pytest.raises(ValueError):
        oracle_domination_number(generate("path", 0, n=25))
