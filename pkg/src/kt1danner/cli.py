"""Command-line harness: one JSON record per (delta, seed) cell plus a CSV summary."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import statistics
import sys
from pathlib import Path

from .danner import DannerParams, build_danner
from .graph import (GENERATOR_KINDS, Graph, components, generate, oracle_diameter, oracle_mincut, oracle_mst,
                    read_graph, write_graph)
from .mincut import C_H, C_S, approx_mincut
from .mst import connected_components, mst
from .verify import PROBLEMS, Instance, oracle_verdict, random_instance, verify

DELTA_RANGE = {"danner": 1.0, "sweep": 1.0, "mst": 0.5, "components": 0.5, "mincut": 0.5, "verify": 0.5}
CSV_BASE = ["n", "m", "D", "delta", "seed", "rounds", "messages", "timed_out"]


def _number_list(kind):
    def parse(text: str):
        try:
            return [kind(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a comma-separated list of {kind.__name__}: {text!r}")
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kt1danner", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    source = argparse.ArgumentParser(add_help=False)
    src = source.add_argument_group("graph")
    src.add_argument("--graph", type=Path, help="graph file (one 'u v [weight [multiplicity]]' per line)")
    src.add_argument("--gen", choices=GENERATOR_KINDS, help="generator kind")
    src.add_argument("--n", type=int)
    src.add_argument("--p", type=float)
    src.add_argument("--k", type=int, help="barbell clique size")
    src.add_argument("--b", type=int, help="barbell bridge count")
    src.add_argument("--rows", type=int)
    src.add_argument("--cols", type=int)
    src.add_argument("--radius", type=float)
    src.add_argument("--multiplicity", type=int, default=1)
    src.add_argument("--weights", choices=("distinct", "unit"), default="distinct")
    src.add_argument("--gen-seed", type=int, default=0, help="seed of the generator")

    run = argparse.ArgumentParser(add_help=False)
    grid = run.add_argument_group("experiment")
    grid.add_argument("--delta", type=_number_list(float), default=None, help="comma-separated deltas")
    grid.add_argument("--seeds", type=_number_list(int), default=[0], help="comma-separated seeds")
    grid.add_argument("--out", type=Path, help="output directory for records.json and summary.csv")
    grid.add_argument("--round-limit", type=int)
    grid.add_argument("--mode", choices=("fast", "engine"), default="fast")
    grid.add_argument("--print-config", action="store_true", help="include effective constants in the output")
    consts = run.add_argument_group("constants")
    consts.add_argument("--c", type=float, default=2.0, help="center sampling constant")
    consts.add_argument("--c-T", dest="c_T", type=float, default=2.0, help="loop budget constant")
    consts.add_argument("--kappa", type=int, default=4, help="block size factor, B = kappa ceil(log2 n)")
    consts.add_argument("--c-s", dest="c_s", type=float, default=C_S, help="min-cut sampling constant")
    consts.add_argument("--c-h", dest="c_h", type=float, default=C_H, help="hash independence constant")

    for name, helptext in (("danner", "build a danner"), ("mst", "minimum spanning tree"),
                           ("mincut", "approximate edge connectivity"), ("sweep", "danner delta sweep")):
        sub.add_parser(name, parents=[source, run], help=helptext)
    comp = sub.add_parser("components", parents=[source, run], help="components of a marked subgraph")
    comp.add_argument("--marks", type=Path, help="edge-subset file (default: all edges)")
    ver = sub.add_parser("verify", parents=[source, run], help="graph verification problems")
    ver.add_argument("--problem", choices=PROBLEMS, required=True)
    ver.add_argument("--marks", type=Path, help="edge-subset file; omit to draw a random instance")
    ver.add_argument("--s", type=int)
    ver.add_argument("--t", type=int)
    ver.add_argument("--edge", type=int, nargs=2, metavar=("U", "V"))
    gen = sub.add_parser("gen", parents=[source], help="write a generated graph")
    gen.add_argument("--out", type=Path, help="output file (default stdout)")
    return parser


def _load_graph(args, parser) -> Graph:
    if args.graph and args.gen:
        parser.error("--graph and --gen are mutually exclusive")
    if args.graph:
        with open(args.graph) as fp:
            return read_graph(fp)
    if not args.gen:
        parser.error("one of --graph or --gen is required")
    params = {k: getattr(args, k) for k in ("n", "p", "k", "b", "rows", "cols", "radius")
              if getattr(args, k) is not None}
    try:
        return generate(args.gen, args.gen_seed, weights=args.weights, multiplicity=args.multiplicity, **params)
    except KeyError as exc:
        parser.error(f"--{exc.args[0]} is required for --gen {args.gen}")
    except ValueError as exc:
        parser.error(f"--gen: {exc}")


def _read_marks(path: Path) -> set[tuple[int, int]]:
    out = set()
    with open(path) as fp:
        for line in fp:
            line = line.split("#", 1)[0].strip()
            if line:
                u, v = map(int, line.split()[:2])
                out.add((min(u, v), max(u, v)))
    return out


def _finite(x):
    return None if x is None or math.isinf(x) else int(x)


def _base(g: Graph, D, delta: float, seed: int, metrics, timed_out: bool) -> dict:
    return {"n": g.n, "m": g.m, "D": D, "delta": delta, "seed": seed,
            "rounds": metrics.rounds, "messages": metrics.messages, "timed_out": timed_out}


def _run_cell(cmd: str, g: Graph, D, delta: float, seed: int, args, extra) -> dict:
    kw = dict(c=args.c, c_T=args.c_T, kappa=args.kappa, mode=args.mode, round_limit=args.round_limit)
    if cmd in ("danner", "sweep"):
        res = build_danner(g, DannerParams(delta, args.c, args.c_T), seed, kappa=args.kappa,
                           round_limit=args.round_limit, mode=args.mode, audit=False)
        rec = _base(g, D, delta, seed, res.metrics, res.timed_out)
        rec.update(edges_H=len(res.H), diam_H=_finite(res.realized_diameter), connected=res.spanning_connected())
        return rec
    if cmd == "mst":
        res = mst(g, delta, seed, **kw)
        rec = _base(g, D, delta, seed, res.metrics, res.timed_out)
        match = res.mst_edges == extra["oracle"] if extra["oracle"] is not None else None
        rec.update(branch=res.branch_taken, mst_weight=res.weight_total(g), oracle_match=match)
        return rec
    if cmd == "components":
        res = connected_components(g, extra["marks"], delta, seed, **kw)
        rec = _base(g, D, delta, seed, res.metrics, res.timed_out)
        rec.update(count=res.count, oracle_match=_same_partition(res.labels, extra["oracle"]))
        return rec
    if cmd == "mincut":
        res = approx_mincut(g, delta, seed, c_s=args.c_s, c_h=args.c_h, **kw)
        rec = _base(g, D, delta, seed, res.metrics, res.timed_out)
        rec.update(lambda_oracle=extra["oracle"], estimate=res.estimate,
                   trials=[t.to_dict() for t in res.trials])
        return rec
    inst = extra["instance"] or random_instance(g, args.problem, random.Random(seed))
    res = verify(g, inst, delta, seed, **kw)
    rec = _base(g, D, delta, seed, res.metrics, res.timed_out)
    rec.update(problem=inst.problem, verdict=res.verdict, oracle=oracle_verdict(g, inst))
    return rec


def _same_partition(a: dict, b: dict) -> bool:
    pairs = {(a[v], b[v]) for v in a}
    return len(pairs) == len({x for x, _ in pairs}) == len({y for _, y in pairs})


def _oracles(cmd: str, g: Graph, args, parser) -> dict:
    extra: dict = {}
    if cmd == "mst":
        extra["oracle"] = oracle_mst(g) if g.distinct_weights() else None
    elif cmd == "components":
        marks = _read_marks(args.marks) if args.marks else set(g.edges)
        bad = [e for e in marks if not g.has_edge(*e)]
        if bad:
            parser.error(f"--marks: edge {bad[0]} is not in the graph")
        extra["marks"] = marks
        extra["oracle"] = components(g.nodes, marks)
    elif cmd == "mincut":
        extra["oracle"] = oracle_mincut(g) if g.n <= 256 else None
    elif cmd == "verify":
        inst = None
        if args.marks or args.s is not None or args.edge:
            inst = Instance(args.problem, frozenset(_read_marks(args.marks)) if args.marks else frozenset(),
                            s=args.s, t=args.t, edge=tuple(args.edge) if args.edge else None)
            try:
                inst.check(g)
            except ValueError as exc:
                parser.error(f"--problem {args.problem}: {exc}")
        extra["instance"] = inst
    return extra


def _config(args) -> dict:
    return {"c": args.c, "c_T": args.c_T, "kappa": args.kappa, "c_s": args.c_s, "c_h": args.c_h,
            "mode": args.mode, "round_limit": args.round_limit}


def _csv(records: list[dict]) -> str:
    extra = []
    for rec in records:
        for k in rec:
            if k not in CSV_BASE and k not in extra and not isinstance(rec[k], (list, dict)):
                extra.append(k)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_BASE + extra, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(rec)
    return buf.getvalue()


def sweep_medians(records: list[dict]) -> list[dict]:
    """Median rounds and messages per delta."""
    by: dict[float, list[dict]] = {}
    for rec in records:
        by.setdefault(rec["delta"], []).append(rec)
    return [{"delta": d, "median_rounds": statistics.median(r["rounds"] for r in rs),
             "median_messages": statistics.median(r["messages"] for r in rs)} for d, rs in sorted(by.items())]


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cmd = args.command
    g = _load_graph(args, parser)
    if cmd == "gen":
        if args.out:
            with open(args.out, "w") as fp:
                write_graph(g, fp)
        else:
            write_graph(g, sys.stdout)
        return 0
    if not args.seeds:
        parser.error("--seeds: at least one seed is required")
    deltas = args.delta if args.delta is not None else ([0.0, 0.25, 0.5, 0.75, 1.0] if cmd == "sweep" else [0.5])
    if not deltas:
        parser.error("--delta: at least one value is required")
    top = DELTA_RANGE[cmd]
    for d in deltas:
        if not 0.0 <= d <= top:
            parser.error(f"--delta: {d} is outside [0, {top}] for {cmd}")
    extra = _oracles(cmd, g, args, parser)
    D = _finite(oracle_diameter(g))
    records = [_run_cell(cmd, g, D, d, s, args, extra) for d in deltas for s in args.seeds]
    payload: dict = {"command": cmd, "records": records}
    if cmd == "sweep":
        payload["medians"] = sweep_medians(records)
    if args.print_config:
        payload["config"] = _config(args)
    text = json.dumps(payload, sort_keys=True, indent=1)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "records.json").write_text(text + "\n")
        (args.out / "summary.csv").write_text(_csv(records))
    else:
        sys.stdout.write(text + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
