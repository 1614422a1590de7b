"""Acceptance suite: one test per criterion, each reporting a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the terminal summary under "acceptance criteria".
"""

import io
import json
import math
import random
import statistics
import time
from contextlib import redirect_stdout
from functools import lru_cache

import networkx as nx

from kt1danner.cli import main as cli_main
from kt1danner.danner import DannerParams, build_danner
from kt1danner.graph import (Graph, bfs_distances, generate, oracle_diameter, oracle_domination_number,
                             oracle_mincut, oracle_mst)
from kt1danner.mincut import C_APPROX, C_S, approx_mincut, sampling_connectivity_curve
from kt1danner.mst import cut_property_audit, mst
from kt1danner.verify import PROBLEMS, oracle_verdict, random_instance, verify
from conftest import ACCEPTANCE_LINES
from instances import leaving_edges, search_instance

C_METER = 16
F_DIAM = 8
DELTAS = (0.0, 0.25, 0.5, 0.75, 1.0)
GRID_SEEDS = range(20)
GRID_KINDS = {
    "gnp": ("gnp", {"n": 256, "p": 0.05}),
    "torus": ("torus", {"rows": 16, "cols": 16}),
    "barbell": ("barbell", {"k": 64, "b": 3}),
}


def record(number, name, ok, elapsed, limit, detail):
    ok = ok and elapsed <= limit
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {name}  [{detail}; {elapsed:.1f}s of {limit}s]"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def lg(n):
    return math.log2(n)


# ---------------------------------------------------------------- criterion 1

def connected_test_graphs():
    for nxg in nx.graph_atlas_g()[1:]:
        if nxg.number_of_nodes() <= 7 and nx.is_connected(nxg):
            yield Graph([v + 1 for v in nxg.nodes], {(u + 1, v + 1): (1, 1) for u, v in nxg.edges})
    rng = random.Random(2024)
    made = 0
    while made < 500:
        n = rng.randint(2, 20)
        p = min(1.0, rng.uniform(0.8, 4.0) * math.log(n + 1) / n)
        try:
            g = generate("gnp", rng.randrange(10 ** 9), n=n, p=p, retries=5)
        except ValueError:
            continue
        made += 1
        yield g


def shortest_paths_from(g, s):
    """One BFS shortest path from ``s`` to every other node."""
    parent = {s: None}
    order = [s]
    for v in order:
        for w in g.adj[v]:
            if w not in parent:
                parent[w] = v
                order.append(w)
    for t in order[1:]:
        path = [t]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])
        yield path


def test_criterion_1_diameter_and_path_neighbourhoods():
    start = time.perf_counter()
    graphs = diam_bad = path_bad = 0
    for g in connected_test_graphs():
        graphs += 1
        diam = max(max(bfs_distances(g.adj, v).values()) for v in g.nodes)
        diam_bad += not diam < 3 * oracle_domination_number(g)
        closed = {v: set(g.adj[v]) | {v} for v in g.nodes}
        for s in g.nodes:
            for path in shortest_paths_from(g, s):
                on_path = set(path)
                if any(len(closed[v] & on_path) > 3 for v in g.nodes):
                    path_bad += 1
    ok = diam_bad == 0 and path_bad == 0
    detail = f"{graphs} graphs, diameter violations {diam_bad}, path-neighbourhood violations {path_bad}"
    assert record(1, "diam < 3 gamma and |N[v] on a shortest path| <= 3", ok,
                  time.perf_counter() - start, 60, detail)


# ---------------------------------------------------------------- criterion 2

def test_criterion_2_edge_search_soundness_and_completeness():
    start = time.perf_counter()
    instances = 1000
    violations = missed = min_right = 0
    for seed in range(instances):
        g, label, found, _ = search_instance(seed, max_n=64)
        leaving = leaving_edges(g, label)
        miss = False
        for root, edge in found.items():
            options = {e for _, e in leaving[label[root]]}
            if edge is None:
                miss = miss or bool(options)
            elif edge not in options:
                violations += 1
        missed += miss
        g, label, found, _ = search_instance(seed, by_weight=True, max_n=64)
        leaving = leaving_edges(g, label)
        min_right += all(edge == (leaving[label[r]][0][1] if leaving[label[r]] else None)
                         for r, edge in found.items())
    ok = violations == 0 and missed / instances < 0.01 and min_right / instances >= 0.99
    detail = (f"{instances} instances, violations {violations}, miss rate {missed / instances:.3f}, "
              f"find_min exact {min_right / instances:.3f}")
    assert record(2, "find_any/find_min sound and complete", ok, time.perf_counter() - start, 90, detail)


# ---------------------------------------------------------- criteria 3, 4, 9

@lru_cache(maxsize=None)
def grid_graph(kind, seed):
    name, params = GRID_KINDS[kind]
    g = generate(name, seed, **params)
    return g, oracle_diameter(g)


@lru_cache(maxsize=None)
def danner_grid():
    start = time.perf_counter()
    rows = []
    for kind in GRID_KINDS:
        for seed in GRID_SEEDS:
            g, d = grid_graph(kind, seed)
            for delta in DELTAS:
                res = build_danner(g, DannerParams(delta), seed, audit=False)
                connected = res.spanning_connected()
                rows.append({
                    "kind": kind, "seed": seed, "delta": delta, "n": g.n, "m": g.m, "D": d,
                    "edges_H": len(res.H), "diam_H": res.realized_diameter if connected else math.inf,
                    "connected": connected, "equals_G": res.H == set(g.edges),
                    "rounds": res.metrics.rounds, "messages": res.metrics.messages,
                })
    return rows, time.perf_counter() - start


def test_criterion_3_danner_correctness():
    rows, elapsed = danner_grid()
    connected = sum(r["connected"] for r in rows)
    diam_bad = sum(1 for r in rows if r["connected"]
                   and r["diam_H"] > r["D"] + F_DIAM * r["n"] ** (1 - r["delta"]) * lg(r["n"]) ** 2)
    edge_bad = sum(1 for r in rows
                   if r["edges_H"] > 4 * min(r["m"], r["n"] ** (1 + r["delta"])) * lg(r["n"]))
    full_bad = sum(1 for r in rows if r["delta"] == 1.0 and not r["equals_G"])
    worst_f = max((r["diam_H"] - r["D"]) / (r["n"] ** (1 - r["delta"]) * lg(r["n"]) ** 2)
                  for r in rows if r["connected"])
    ok = connected >= 0.99 * len(rows) and diam_bad == edge_bad == full_bad == 0
    detail = (f"{len(rows)} runs, connected {connected}, diameter violations {diam_bad} (worst F {worst_f:.3f}), "
              f"edge violations {edge_bad}, delta=1 mismatches {full_bad}")
    assert record(3, "danner spans, stretches and sizes within bounds", ok, elapsed, 240, detail)


def path_rounds(delta=0.5, sizes=(256, 512, 1024, 2048)):
    out = []
    for n in sizes:
        g = generate("path", 0, n=n)
        res = build_danner(g, DannerParams(delta), 0, audit=False)
        out.append((n, res.metrics.rounds))
    return out


def test_criterion_4_danner_metered_bounds():
    rows, elapsed = danner_grid()
    start = time.perf_counter()
    loop = [r for r in rows if r["delta"] < 1.0]
    round_c = max(r["rounds"] / (r["n"] ** (1 - r["delta"]) * lg(r["n"]) ** 3) for r in loop)
    msg_c = max(r["messages"] / (min(r["m"], r["n"] ** (1 + r["delta"])) * lg(r["n"]) ** 3) for r in loop)
    paths = path_rounds()
    path_c = max(rounds / (n ** 0.5 * lg(n) ** 3) for n, rounds in paths)
    (n0, r0), (n1, r1) = paths[0], paths[-1]
    slope = math.log(r1 / r0) / math.log(n1 / n0)
    ok = max(round_c, msg_c, path_c) <= C_METER and slope < 1
    detail = (f"rounds C {round_c:.2f}, messages C {msg_c:.3f}, path C {path_c:.2f}, "
              f"path rounds exponent {slope:.3f} over n={n0}..{n1}")
    assert record(4, f"danner rounds and messages within C={C_METER} polylog bounds", ok,
                  elapsed + time.perf_counter() - start, 240, detail)


def inversions(values, rising):
    return sum(1 for a, b in zip(values, values[1:]) if (b < a if rising else b > a))


def test_criterion_9_tradeoff_monotone_on_medians():
    rows, elapsed = danner_grid()
    start = time.perf_counter()
    parts = []
    ok = True
    for kind in GRID_KINDS:
        msgs = [statistics.median(r["messages"] for r in rows if r["kind"] == kind and r["delta"] == d)
                for d in DELTAS]
        rnds = [statistics.median(r["rounds"] for r in rows if r["kind"] == kind and r["delta"] == d)
                for d in DELTAS]
        mi, ri = inversions(msgs, True), inversions(rnds, False)
        ok = ok and mi <= 1 and ri <= 1
        parts.append(f"{kind} messages {[int(x) for x in msgs]} ({mi} inv), rounds {[int(x) for x in rnds]} ({ri} inv)")
    assert record(9, "messages rise and rounds fall with delta", ok, time.perf_counter() - start, 240,
                  "; ".join(parts))


# ---------------------------------------------------------------- criterion 5

def mst_graph(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 128)
    return generate("gnp", seed, n=n, p=min(1.0, rng.uniform(1.2, 10.0) * math.log(n + 1) / n))


def test_criterion_5_mst_exact():
    start = time.perf_counter()
    runs = equal = audited = 0
    branches = {"dense": 0, "sparse": 0}
    for seed in range(200):
        g = mst_graph(seed)
        truth = oracle_mst(g)
        for delta in (0.0, 0.25, 0.5):
            res = mst(g, delta, seed)
            runs += 1
            equal += res.mst_edges == truth
            audited += cut_property_audit(g, res.trace)
            branches[res.branch_taken] += 1
    ok = equal >= 0.99 * runs and audited == runs
    detail = f"{runs} runs, equal to Kruskal {equal}, cut audit passed {audited}, branches {branches}"
    assert record(5, "MST equals Kruskal and passes the cut-property audit", ok, time.perf_counter() - start,
                  240, detail)


# ---------------------------------------------------------------- criterion 6

def test_criterion_6_dense_mst_at_half():
    start = time.perf_counter()
    worst_m = worst_r = 0.0
    ok = True
    for seed in range(3):
        g = generate("gnp", seed, n=256, p=0.3)
        n, d = g.n, oracle_diameter(g)
        res = mst(g, 0.5, seed)
        worst_m = max(worst_m, res.metrics.messages / (n ** 1.5 * lg(n) ** 3))
        worst_r = max(worst_r, res.metrics.rounds / ((d + n ** 0.5) * lg(n) ** 3))
        ok = ok and res.branch_taken == "dense" and res.mst_edges == oracle_mst(g)
    ok = ok and max(worst_m, worst_r) <= C_METER
    detail = f"3 seeds, dense branch and exact: {ok}, messages C {worst_m:.3f}, rounds C {worst_r:.2f}"
    assert record(6, "dense-branch MST on G(256, 0.3) within polylog bounds", ok,
                  time.perf_counter() - start, 60, detail)


# ---------------------------------------------------------------- criterion 7

def mincut_suite():
    return {
        "C32": (generate("cycle", 0, n=32), 2),
        "K16": (generate("complete", 0, n=16), 15),
        "barbell(8,4)": (generate("barbell", 0, k=8, b=4), 4),
        "C8x5": (generate("cycle", 0, n=8, multiplicity=5), 10),
    }


def test_criterion_7_mincut_bracket_and_sampling():
    start = time.perf_counter()
    parts = []
    ok = True
    for name, (g, lam) in mincut_suite().items():
        assert oracle_mincut(g) == lam
        slack = C_APPROX * lg(g.n)
        inside = connected = 0
        for seed in range(100):
            est = approx_mincut(g, 0.25, seed).estimate
            inside += lam / slack <= est <= lam * slack
            curve = sampling_connectivity_curve(g, seed)
            connected += all(t.connected for t in curve if t.p >= C_S * math.log(g.n) / lam)
        ok = ok and inside >= 95 and connected >= 95
        parts.append(f"{name} bracket {inside}/100, sampled connected {connected}/100")
    detail = f"C_approx {C_APPROX}; " + "; ".join(parts)
    assert record(7, "min-cut estimate within the O(log n) bracket", ok, time.perf_counter() - start, 180,
                  detail)


# ---------------------------------------------------------------- criterion 8

def verify_graph(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 96)
    g = generate("gnp", seed, n=n, p=min(1.0, rng.uniform(1.2, 5.0) * math.log(n + 1) / n))
    return g, rng


def test_criterion_8_verification():
    start = time.perf_counter()
    parts = []
    ok = True
    ratios = []
    for i, problem in enumerate(PROBLEMS):
        agree = 0
        for j in range(200):
            seed = 1000 * i + j
            g, rng = verify_graph(seed)
            inst = random_instance(g, problem, rng)
            delta = (0.0, 0.25, 0.5)[j % 3]
            res = verify(g, inst, delta, seed)
            agree += res.verdict == oracle_verdict(g, inst) and res.cover_consistent
            n, d, l3 = g.n, oracle_diameter(g), lg(g.n) ** 3
            ratios.append((max(res.metrics.rounds / ((d + n ** (1 - delta)) * l3),
                               res.metrics.messages / (min(g.m, n ** (1 + delta)) * l3)), n))
        ok = ok and agree >= 0.99 * 200
        parts.append(f"{problem} {agree}/200")
    over = [n for c, n in ratios if c > C_METER]
    ok = ok and not over
    worst = max(c for c, _ in ratios)
    rest = max((c for c, n in ratios if n not in over), default=0.0)
    detail = (f"worst metered C {worst:.2f}, {len(over)} runs above C={C_METER} (n = {sorted(set(over))}), "
              f"worst C on the other sizes {rest:.2f}; " + ", ".join(parts))
    assert record(8, "verification verdicts agree with oracles", ok, time.perf_counter() - start, 180, detail)


# --------------------------------------------------------------- criterion 10

def cells():
    """One cell from each of criteria 3 to 8, serialized."""
    g, _ = grid_graph("torus", 3)
    res = build_danner(g, DannerParams(0.5), 3, audit=False)
    yield "danner", {"H": sorted(res.H), "metrics": res.metrics.to_dict()}
    g = mst_graph(7)
    res = mst(g, 0.25, 7)
    yield "mst", {"edges": sorted(res.mst_edges), "metrics": res.metrics.to_dict(), "branch": res.branch_taken}
    g = generate("gnp", 0, n=256, p=0.3)
    res = mst(g, 0.5, 0)
    yield "mst-dense", {"edges": sorted(res.mst_edges), "metrics": res.metrics.to_dict()}
    g, _ = mincut_suite()["barbell(8,4)"]
    res = approx_mincut(g, 0.25, 11, full_curve=True)
    yield "mincut", {"estimate": res.estimate, "trials": [t.to_dict() for t in res.trials],
                     "metrics": res.metrics.to_dict()}
    for i, problem in enumerate(PROBLEMS):
        g, rng = verify_graph(1000 * i)
        res = verify(g, random_instance(g, problem, rng), 0.25, i)
        yield problem, {"verdict": res.verdict, "metrics": res.metrics.to_dict()}


def cli_bytes():
    buf = io.StringIO()
    with redirect_stdout(buf):
        cli_main(["sweep", "--gen", "gnp", "--n", "64", "--p", "0.1", "--seeds", "0,1", "--print-config"])
    return buf.getvalue()


def test_criterion_10_determinism():
    start = time.perf_counter()
    first = json.dumps(dict(cells()), sort_keys=True)
    second = json.dumps(dict(cells()), sort_keys=True)
    same_cli = cli_bytes() == cli_bytes()
    ok = first == second and same_cli
    detail = f"{len(json.loads(first))} cells byte-identical: {first == second}, CLI output identical: {same_cli}"
    assert record(10, "re-runs are byte-identical", ok, time.perf_counter() - start, 30, detail)
