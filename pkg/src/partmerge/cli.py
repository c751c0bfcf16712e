"""``pm`` command-line entry point.

Exit status: 0 on success, 1 when inputs fail validation or a check fails,
2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .graph import estimate_growth
from .harness import (
    ExperimentConfig,
    cutprob_campaign,
    load_config,
    load_graph,
    run_experiment,
    scaling_benchmark,
)
from .modularity import pm_cluster
from .mrf import evaluate_H, load_mrf, pm_map
from .partition import PartitionParams, partition, select_params


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _read_order(path: str) -> tuple[int, ...]:
    with open(path, encoding="utf-8") as fh:
        return tuple(int(tok) for tok in fh.read().split())


def _params(args, g, problem: str) -> tuple[PartitionParams, dict | None]:
    if getattr(args, "auto_params", False):
        if args.delta is None:
            raise ValueError("--auto-params requires --delta")
        prof = estimate_growth(g)
        rec = select_params(prof.chosen_rho, prof.chosen_C, args.delta, problem)
        return PartitionParams(rec.K, rec.epsilon, args.seed), rec.to_dict()
    if args.K is None or args.eps is None:
        raise ValueError("--K and --eps are required unless --auto-params is given")
    return PartitionParams(args.K, args.eps, args.seed), None


def cmd_partition(args) -> int:
    g = load_graph(args.graph)
    order = _read_order(args.order_file) if args.order_file else None
    params = PartitionParams(args.K, args.eps, args.seed, order)
    part = partition(g, params)
    _emit(part.to_dict(params), args.out)
    return 0


def cmd_map(args) -> int:
    model = load_mrf(args.mrf)
    params, rec = _params(args, model.graph, "map")
    growth = (rec["rho"], rec["C"]) if rec else None
    x, cert, part = pm_map(model, params, args.solver, args.threads, growth=growth)
    doc = {"assignment": x.tolist(), "H": evaluate_H(model, x), "certificate": cert.to_dict(),
           "params": params.to_dict(), "blocks": part.p, "boundary_size": len(part.boundary)}
    if rec:
        doc["auto_params"] = rec
    _emit(doc, args.out)
    return 0


def cmd_cluster(args) -> int:
    g = load_graph(args.graph)
    params, rec = _params(args, g, "modularity")
    labels, cert, part = pm_cluster(g, params, args.solver, args.threads)
    doc = {"labels": labels, "modularity": cert.m_hat, "certificate": cert.to_dict(),
           "params": params.to_dict(), "blocks": part.p, "boundary_size": len(part.boundary)}
    if rec:
        doc["auto_params"] = rec
    _emit(doc, args.out)
    return 0


def cmd_growth(args) -> int:
    prof = estimate_growth(load_graph(args.graph), args.rho_max)
    print("rho  min_C  C*2^rho")
    for rho, C in prof.per_rho_min_C.items():
        print(f"{rho:>3}  {C:>5}  {C * 2**rho:>7}")
    print(f"chosen: rho={prof.chosen_rho} C={prof.chosen_C}")
    return 0


def cmd_cutprob(args) -> int:
    g = load_graph(args.graph)
    res = cutprob_campaign(g, args.K, args.eps, args.trials, args.threads, args.seed)
    print(f"edges={len(res.edges)} trials={res.trials} tolerance={res.tolerance:.6f}")
    print(f"violations={res.violations} max_margin={res.margin:.6f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("u,v,frequency,bound,threshold\n")
            for k, (u, v) in enumerate(res.edges):
                fh.write(f"{u},{v},{res.frequency[k]!r},{res.bound[k]!r},{res.threshold[k]!r}\n")
    return 0 if res.passed else 1


def cmd_bench(args) -> int:
    res = scaling_benchmark(args.generator, args.sizes, args.solver, args.K, args.eps, args.seed,
                            args.problem, threads=args.threads)
    print("n,m,blocks,t_partition,t_solve,t_merge,t_total")
    for r in res.rows:
        print(f"{r['n']},{r['m']},{r['blocks']},{r['t_partition']:.4f},{r['t_solve']:.4f},"
              f"{r['t_merge']:.4f},{r['t_total']:.4f}")
    print(f"fitted exponent: {res.exponent:.3f} (partition only: {res.partition_exponent:.3f})")
    return 0


def cmd_sweep(args) -> int:
    if args.config:
        cfg = load_config(args.config)
    else:
        if args.task is None:
            raise ValueError("sweep needs --config or --task")
        cfg = ExperimentConfig(task=args.task)
    for name in ("graph", "mrf", "solver", "delta", "threads", "trials", "q"):
        val = getattr(args, name)
        if val is not None:
            setattr(cfg, name, val)
    if args.K:
        cfg.K = args.K
    if args.eps:
        cfg.eps = args.eps
    if args.sizes:
        cfg.sizes = args.sizes
    if args.seeds is not None:
        cfg.seeds = args.seeds
    if args.seed is not None:
        cfg.base_seed = args.seed
    if args.no_timings:
        cfg.timings = False
    out = args.out or cfg.output
    report = run_experiment(cfg)
    if out:
        report.write(out)
    else:
        sys.stdout.write(report.to_csv())
    print(json.dumps(report.summary, sort_keys=True), file=sys.stderr)
    if cfg.task == "cutprob" and not report.summary["passed"]:
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pm", description="Partition-merge graph computation.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="carve a graph into low-diameter blocks")
    p.add_argument("--graph", required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--order-file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_partition)

    for name, solvers, func in (("map", ("exact", "icm"), cmd_map),
                                ("cluster", ("exact", "greedy"), cmd_cluster)):
        p = sub.add_parser(name, help=f"partition-merge {'MAP inference' if name == 'map' else 'clustering'}")
        if name == "map":
            p.add_argument("--mrf", required=True)
        else:
            p.add_argument("--graph", required=True)
        p.add_argument("--solver", choices=solvers, default=solvers[1])
        p.add_argument("--K", type=int)
        p.add_argument("--eps", type=float)
        p.add_argument("--auto-params", action="store_true")
        p.add_argument("--delta", type=float)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out")
        p.set_defaults(func=func)

    p = sub.add_parser("growth", help="estimate polynomial-growth constants")
    p.add_argument("--graph", required=True)
    p.add_argument("--rho-max", type=int, default=4)
    p.set_defaults(func=cmd_growth)

    p = sub.add_parser("cutprob", help="Monte Carlo check of per-edge cut probabilities")
    p.add_argument("--graph", required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cutprob)

    p = sub.add_parser("bench", help="runtime scaling benchmark")
    p.add_argument("--generator", choices=("grid", "geometric"), default="grid")
    p.add_argument("--sizes", type=int, nargs="+", required=True)
    p.add_argument("--problem", choices=("map", "cluster"), default="map")
    p.add_argument("--solver", default="icm")
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--eps", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="run an experiment sweep and write a CSV report")
    p.add_argument("--config")
    p.add_argument("--task", choices=("map", "cluster", "cutprob", "scaling"))
    p.add_argument("--graph")
    p.add_argument("--mrf")
    p.add_argument("--q", type=int)
    p.add_argument("--solver")
    p.add_argument("--K", type=int, nargs="+")
    p.add_argument("--eps", type=float, nargs="+")
    p.add_argument("--delta", type=float)
    p.add_argument("--seeds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--sizes", type=int, nargs="+")
    p.add_argument("--no-timings", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, TypeError) as exc:
        print(f"pm {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
