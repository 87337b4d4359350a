"""Command line: ``agreecomm {generate,detect,eval,bench,amazon}``.

Exit codes: 0 on success, 1 for data errors (unreadable or invalid
input), 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import bench
from .detection import DetectionParams, detect
from .generators import ConfigError, LfrLikeConfig, PlantedConfig, gen_lfr_like, gen_planted, save_benchmark
from .graph import GraphError, Partition, karate, karate_remap, load_edge_list, read_partition, write_partition
from .metrics import CarrierMismatch, ari, nmi
from .runtime import CoverError, PollerPlan, poll_and_merge, run_rounds
from .snap import AMAZON_HINT, load_with_communities

KARATE = "@karate"


class DataError(Exception):
    pass


def _floats(text: str) -> list[float]:
    """``"0.1,0.2"`` or ``"start:stop:step"`` (inclusive stop)."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(count)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None


def _load_graph(path: str):
    if path == KARATE:
        graph, _ = karate()
        return graph, karate_remap()
    try:
        with open(path) as f:
            return load_edge_list(f)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def _load_partition(path: str) -> Partition:
    if path == KARATE:
        _, truth = karate()
        return truth.map_vertices(karate_remap().external)
    try:
        with open(path) as f:
            return read_partition(f)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def _params(args) -> DetectionParams:
    return DetectionParams(
        tau=args.tau,
        k_rule=args.k_rule,
        tie_policy=args.ties,
        seed=args.seed,
        normalization=args.normalization,
    )


def cmd_generate(args) -> int:
    if args.kind == "planted":
        config = PlantedConfig(n=args.n or 128, groups=args.groups, z=args.z, z_out=args.zout, seed=args.seed)
        graph, truth = gen_planted(config)
    else:
        config = LfrLikeConfig(
            n=args.n or 1000,
            mu=args.mu,
            degree_exponent=args.degree_exponent,
            community_exponent=args.community_exponent,
            avg_degree=args.avg_degree,
            max_degree=args.max_degree,
            min_community=args.min_community,
            max_community=args.max_community,
            seed=args.seed,
        )
        graph, truth = gen_lfr_like(config)
    try:
        paths = save_benchmark(args.out, graph, truth)
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc.strerror}") from None
    for p in paths:
        print(p, file=sys.stderr)
    return 0


def cmd_detect(args) -> int:
    graph, remap = _load_graph(args.input)
    params = _params(args)
    if args.engine == "actors":
        assignment = run_rounds(graph, params, workers=args.workers)
        if args.poll_plan == "blocks":
            plan = PollerPlan.blocks(graph.n, args.pollers)
        else:
            plan = PollerPlan.random(graph.n, args.pollers, seed=args.seed)
        partition = poll_and_merge(assignment, plan, workers=args.workers)
    else:
        partition, _ = detect(graph, params, workers=args.workers)
    if args.out:
        with open(args.out, "w") as f:
            write_partition(partition, f, remap)
    else:
        write_partition(partition, sys.stdout, remap)
    return 0


def cmd_eval(args) -> int:
    pred = _load_partition(args.pred)
    truth = _load_partition(args.truth)
    print(f"ARI={ari(pred, truth):.6f} NMI={nmi(pred, truth):.6f}")
    return 0


def cmd_bench(args) -> int:
    overrides = {"n": args.n} if args.n else {}
    rows = bench.run_sweep(
        args.suite,
        args.sweep,
        args.repeats,
        args.tau,
        args.seed,
        workers=args.workers,
        timing=not args.no_timing,
        **overrides,
    )
    bench.write_csv(rows, sys.stdout)
    return 0


def cmd_amazon(args) -> int:
    for path in (args.edges, args.truth):
        if not Path(path).is_file():
            raise DataError(f"missing {path}; {AMAZON_HINT}")
    start = time.perf_counter()
    with open(args.edges) as edges, open(args.truth) as communities:
        graph, truth, _ = load_with_communities(edges, communities, seed=args.seed)
    loaded = time.perf_counter()
    found, _ = detect(graph, _params(args), workers=args.workers)
    done = time.perf_counter()
    print(f"n={graph.n} m={graph.m} communities={truth.num_communities}")
    print(f"ARI={ari(found, truth):.6f} NMI={nmi(found, truth):.6f}")
    print(f"load={loaded - start:.2f}s detect={done - loaded:.2f}s", file=sys.stderr)
    return 0


def _detection_flags(p: argparse.ArgumentParser):
    p.add_argument("--tau", type=float, default=0.2, help="agreement threshold (default 0.2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ties", choices=["seeded_random", "lowest_id"], default="seeded_random")
    p.add_argument("--k-rule", choices=["ceil_half", "floor_half", "one", "all"], default="ceil_half")
    p.add_argument("--normalization", choices=["min_degree", "min_list"], default="min_degree")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agreecomm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a benchmark graph and its communities")
    g.add_argument("kind", choices=["planted", "lfr-like"])
    g.add_argument("--out", required=True, help="output prefix for .edges and .truth")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=int, help="vertices (default 128 planted, 1000 lfr-like)")
    g.add_argument("--groups", type=int, default=4)
    g.add_argument("--z", type=float, default=16.0, help="expected degree")
    g.add_argument("--zout", type=float, default=0.0, help="expected inter-group degree")
    g.add_argument("--mu", type=float, default=0.3, help="mixing parameter")
    g.add_argument("--avg-degree", type=float, default=20.0)
    g.add_argument("--max-degree", type=int, default=50)
    g.add_argument("--degree-exponent", type=float, default=2.0)
    g.add_argument("--community-exponent", type=float, default=1.0)
    g.add_argument("--min-community", type=int, default=10)
    g.add_argument("--max-community", type=int, default=50)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("detect", help="print 'vertex community' lines")
    d.add_argument("--in", dest="input", required=True, help=f"edge list path or {KARATE}")
    d.add_argument("--out", help="write here instead of stdout")
    d.add_argument("--engine", choices=["pipeline", "actors"], default="pipeline")
    d.add_argument("--pollers", type=int, default=1)
    d.add_argument("--poll-plan", choices=["random", "blocks"], default="random")
    _detection_flags(d)
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("eval", help="compare two partition files")
    e.add_argument("--pred", required=True)
    e.add_argument("--truth", required=True, help=f"partition path or {KARATE}")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="CSV sweep over generated graphs")
    b.add_argument("--suite", choices=sorted(bench.SUITES), default="planted")
    b.add_argument("--sweep", type=_floats, help="'a,b,c' or 'start:stop:step'")
    b.add_argument("--repeats", type=int, default=10)
    b.add_argument("--tau", type=_floats, default=[0.2], help="comma-separated list")
    b.add_argument("--seed", type=int, default=0, help="master seed")
    b.add_argument("--n", type=int, help="override the generator's vertex count")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--no-timing", action="store_true", help="write nan for ms_mean")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("amazon", help="detect on the SNAP Amazon co-purchasing graph")
    a.add_argument("--edges", default="com-amazon.ungraph.txt")
    a.add_argument("--truth", default="com-amazon.all.dedup.cmty.txt")
    _detection_flags(a)
    a.set_defaults(func=cmd_amazon)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CarrierMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, CoverError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
