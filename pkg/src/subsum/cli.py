"""Command-line harness.

Subcommands:

* ``estimate``    one seeded run of an estimator over an instance file
                  or a generator spec, printed as a JSON report;
* ``bench``       a Monte Carlo grid over universe sizes and accuracies,
                  rows to CSV plus a recomputable summary JSON;
* ``graph-edges`` the average-degree/edge-count estimator over a graph
                  file or graph generator.

The default master seed comes from ``SUBSUM_SEED`` when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict

from .bench import (
    AdvicePolicy,
    BenchConfig,
    GRAPH_ALGORITHMS,
    WEIGHT_ALGORITHMS,
    run_single,
    run_trials,
    write_csv,
    write_summary,
)
from .core import load_instance
from .generators import GeneratedGraph, GeneratedWeights, GeneratorSpec, generate
from .graphs import load_graph
from .hybrid import DEFAULT_ABORT_SCALE


def _default_seed() -> int:
    return int(os.environ.get("SUBSUM_SEED", "0"))


def _parse_grid(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--eps", type=float, required=True, help="relative accuracy target")
    parser.add_argument("--seed", type=int, default=None, help="master seed (default: $SUBSUM_SEED or 0)")


def _estimate_cmd(args: argparse.Namespace) -> int:
    if (args.instance is None) == (args.gen is None):
        raise SystemExit("estimate: give exactly one of --instance or --gen")
    if args.instance is not None:
        instance = load_instance(args.instance)
        produced = GeneratedWeights(
            instance=instance, true_total=instance.total_weight, n=instance.n
        )
    else:
        spec = GeneratorSpec.parse(args.gen, seed=args.gen_seed)
        produced = generate(spec)
        if isinstance(produced, GeneratedGraph):
            raise SystemExit("estimate: graph generators belong to the graph-edges subcommand")
    seed = args.seed if args.seed is not None else _default_seed()
    report = run_single(
        args.algo,
        produced,
        eps=args.eps,
        advice_policy=AdvicePolicy.parse(args.advice),
        phi=args.phi,
        abort_scale=args.abort_scale,
        master_seed=seed,
        index=0,
    )
    json.dump(asdict(report), sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def _bench_cmd(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    base = GeneratorSpec.parse(args.gen, seed=args.gen_seed)
    n_grid = _parse_grid(args.n_grid) if args.n_grid else [None]
    eps_grid = _parse_grid(args.eps_grid) if args.eps_grid else [args.eps]
    reports = []
    summaries = []
    cell = 0
    for n in n_grid:
        spec = base if n is None else base.with_params(n=n)
        for eps in eps_grid:
            config = BenchConfig(
                algorithm=args.algo,
                gen=spec,
                eps=eps,
                trials=args.trials,
                master_seed=seed + cell,
                advice=AdvicePolicy.parse(args.advice),
                parallel=args.parallel,
                abort_scale=args.abort_scale,
                phi=args.phi,
            )
            cell_reports, summary = run_trials(config)
            reports.extend(cell_reports)
            summaries.append(summary)
            cell += 1
    if args.out:
        write_csv(reports, args.out)
        write_summary({"cells": summaries}, args.out + ".summary.json")
    else:
        json.dump({"cells": summaries}, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def _graph_edges_cmd(args: argparse.Namespace) -> int:
    if (args.graph is None) == (args.gen is None):
        raise SystemExit("graph-edges: give exactly one of --graph or --gen")
    seed = args.seed if args.seed is not None else _default_seed()
    if args.graph is not None:
        g = load_graph(args.graph)
        produced = GeneratedGraph(
            graph=g, true_avg_degree=g.average_degree, true_edges=g.num_edges, n=g.num_vertices
        )
        reports = [
            run_single(
                "graph-edges",
                produced,
                eps=args.eps,
                advice_policy=AdvicePolicy("none"),
                master_seed=seed,
                index=i,
            )
            for i in range(args.trials)
        ]
        from .bench import summarize

        summary = summarize(reports)
        if args.out:
            write_csv(reports, args.out)
            write_summary(summary, args.out + ".summary.json")
        else:
            json.dump(summary, sys.stdout, indent=2, sort_keys=True)
            print()
        return 0
    config = BenchConfig(
        algorithm="graph-edges",
        gen=GeneratorSpec.parse(args.gen, seed=args.gen_seed),
        eps=args.eps,
        trials=args.trials,
        master_seed=seed,
        advice=AdvicePolicy("none"),
        parallel=args.parallel,
    )
    _, summary = run_trials(config, csv_path=args.out)
    if not args.out:
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subsum", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="one seeded estimator run")
    est.add_argument("--instance", help="instance file: '<id> <weight>' lines")
    est.add_argument("--gen", help="generator spec, e.g. uniform:n=10000")
    est.add_argument("--gen-seed", type=int, default=0, help="generator seed")
    est.add_argument("--algo", required=True, choices=WEIGHT_ALGORITHMS)
    est.add_argument("--advice", default="exact-n", help="exact-n | inflated-n:FACTOR | none")
    est.add_argument("--phi", type=float, default=None, help="harmonic clip threshold")
    est.add_argument("--abort-scale", type=float, default=DEFAULT_ABORT_SCALE)
    _add_common(est)
    est.set_defaults(func=_estimate_cmd)

    ben = sub.add_parser("bench", help="Monte Carlo grid to CSV")
    ben.add_argument("--gen", required=True, help="generator spec; n overridden by --n-grid")
    ben.add_argument("--gen-seed", type=int, default=0)
    ben.add_argument("--algo", required=True, choices=WEIGHT_ALGORITHMS + GRAPH_ALGORITHMS)
    ben.add_argument("--advice", default="none")
    ben.add_argument("--phi", type=float, default=None)
    ben.add_argument("--abort-scale", type=float, default=DEFAULT_ABORT_SCALE)
    ben.add_argument("--trials", type=int, required=True)
    ben.add_argument("--n-grid", help="comma-separated universe sizes")
    ben.add_argument("--eps-grid", help="comma-separated accuracies (overrides --eps)")
    ben.add_argument("--out", help="CSV path; summary lands next to it")
    ben.add_argument("--parallel", type=int, default=os.cpu_count() or 1)
    _add_common(ben)
    ben.set_defaults(func=_bench_cmd)

    ged = sub.add_parser("graph-edges", help="average degree / edge count")
    ged.add_argument("--graph", help="graph file: 'n <count>' header plus 'u v' lines")
    ged.add_argument("--gen", help="graph generator spec, e.g. er-graph:n=2000,p=0.005")
    ged.add_argument("--gen-seed", type=int, default=0)
    ged.add_argument("--trials", type=int, default=1)
    ged.add_argument("--out", help="CSV path")
    ged.add_argument("--parallel", type=int, default=os.cpu_count() or 1)
    _add_common(ged)
    ged.set_defaults(func=_graph_edges_cmd)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
