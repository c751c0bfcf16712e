"""Runtime versus graph size for the partition-merge pipeline.

    python scripts/run_scaling.py --sizes 10000 40000 160000
"""

import argparse

from partmerge.harness import scaling_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--generator", choices=("grid", "geometric"), default="grid")
    ap.add_argument("--sizes", type=int, nargs="+", default=[10_000, 40_000, 160_000])
    ap.add_argument("--problem", choices=("map", "cluster"), default="map")
    ap.add_argument("--solver", default=None, help="icm for map, greedy for cluster by default")
    ap.add_argument("--K", type=int, default=3)
    ap.add_argument("--eps", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    solver = args.solver or ("icm" if args.problem == "map" else "greedy")
    res = scaling_benchmark(args.generator, args.sizes, solver, args.K, args.eps, args.seed,
                            args.problem, threads=args.threads)
    print(f"{'n':>8} {'m':>8} {'blocks':>7} {'partition':>10} {'solve':>8} {'total':>8}")
    for r in res.rows:
        print(f"{r['n']:>8} {r['m']:>8} {r['blocks']:>7} {r['t_partition']:>10.3f} "
              f"{r['t_solve']:>8.3f} {r['t_total']:>8.3f}")
    print(f"log-log exponent: total {res.exponent:.3f}, partition {res.partition_exponent:.3f}")


if __name__ == "__main__":
    main()
