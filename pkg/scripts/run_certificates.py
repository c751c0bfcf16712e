"""Certificate tightness on small random instances with brute-force optima.

Reports, per problem, how often the per-block guarantee is met and how much
slack the certificate leaves. For clustering both the per-edge penalty
|B|/(2m) and the doubled penalty |B|/m are checked.

    python scripts/run_certificates.py --instances 200
"""

import argparse
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from conftest import random_connected_graph  # noqa: E402
from oracles import map_optimum_of, max_modularity  # noqa: E402

from partmerge.modularity import pm_cluster  # noqa: E402
from partmerge.mrf import evaluate_H, pm_map, random_mrf  # noqa: E402
from partmerge.partition import PartitionParams  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--max-n", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rnd = random.Random(args.seed)

    map_fail, map_slack = 0, []
    mod_fail_edge, mod_fail_double, mod_gap = 0, 0, []
    for t in range(args.instances):
        n = rnd.randint(3, args.max_n)
        g = random_connected_graph(rnd, n, 0.2)
        params = PartitionParams(rnd.randint(1, 3), rnd.choice([0.1, 0.5, 0.9]), t)

        mrf = random_mrf(g, rnd.choice([2, 3]), seed=t)
        x, cert, _ = pm_map(mrf, params, "exact")
        opt, _ = map_optimum_of(mrf)
        loss = opt - evaluate_H(mrf, x)
        map_fail += loss > cert.boundary_penalty + 1e-9 * abs(opt)
        if cert.boundary_penalty > 0:
            map_slack.append(loss / cert.boundary_penalty)

        _, mc, _ = pm_cluster(g, params, "exact")
        mopt = max_modularity(n, g.edges)
        mod_fail_edge += mc.m_hat < mopt - mc.penalty - 1e-9
        mod_fail_double += mc.m_hat < mopt - mc.sound_penalty - 1e-9
        if mc.penalty > 0:
            mod_gap.append((mopt - mc.m_hat) / mc.penalty)

    print(f"{args.instances} instances, n in [3, {args.max_n}]")
    print(f"MAP: {map_fail} violations; loss / penalty max {max(map_slack, default=0):.3f}")
    print(f"clustering: {mod_fail_edge} below M* - |B|/2m, {mod_fail_double} below M* - |B|/m; "
          f"loss / (|B|/2m) max {max(mod_gap, default=0):.3f}")


if __name__ == "__main__":
    main()
