"""Modularity of a clustering, exact and greedy maximisers, and the
partition-merge clustering pipeline.

Internally everything is kept in integers: for total degree ``two_m`` the
ordered-pair sum ``S = sum_{i,j same cluster} (two_m * A_ij - d_i d_j)``
gives ``M = S / two_m**2``. Block solvers receive the global degrees and
the global ``two_m``, so each block maximises its own share of the global
objective.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .graph import Graph
from .mrf import SizeError
from .parallel import ordered_map
from .partition import Partition, PartitionParams, hop_ball_bound, partition


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


DEFAULT_BELL_LIMIT = bell_number(12)


def _require_edges(g: Graph) -> None:
    if g.m == 0:
        raise ValueError("modularity is undefined for a graph without edges")


def modularity(g: Graph, labels: Sequence, include_self: bool = True) -> float:
    """Newman modularity over ordered vertex pairs.

    With ``include_self`` the i == j terms (A_ii = 0) are part of the sum,
    which makes the one-cluster value exactly 0.
    """
    _require_edges(g)
    if len(labels) != g.n:
        raise ValueError(f"need {g.n} labels, got {len(labels)}")
    two_m = 2 * g.m
    internal: dict = {}
    degree_sum: dict = {}
    deg = g.degrees
    for i, c in enumerate(labels):
        degree_sum[c] = degree_sum.get(c, 0) + deg[i]
    for u, v in g.edges:
        if labels[u] == labels[v]:
            internal[labels[u]] = internal.get(labels[u], 0) + 1
    s = sum(2 * two_m * internal.get(c, 0) - d * d for c, d in degree_sum.items())
    if not include_self:
        s += sum(d * d for d in deg)
    return s / (two_m * two_m)


def _block_inputs(g: Graph, degrees, two_m) -> tuple[list[int], int]:
    if degrees is None:
        degrees = g.degrees
    if two_m is None:
        _require_edges(g)
        two_m = 2 * g.m
    if len(degrees) != g.n:
        raise ValueError("degree vector does not match the graph")
    return [int(d) for d in degrees], int(two_m)


def restricted_growth_strings(n: int) -> np.ndarray:
    """All set partitions of ``n`` items as restricted-growth strings, in
    lexicographic order, one per row."""
    X = np.zeros((1, 0), dtype=np.int8)
    mx = np.full(1, -1, dtype=np.int64)
    for _ in range(n):
        counts = mx + 2
        total = int(counts.sum())
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        child = np.arange(total, dtype=np.int64) - starts
        X = np.concatenate([np.repeat(X, counts, axis=0), child[:, None].astype(np.int8)], axis=1)
        mx = np.maximum(np.repeat(mx, counts), child)
    return X


def exact_modularity(
    g: Graph, bell_limit: int = DEFAULT_BELL_LIMIT, degrees=None, two_m=None
) -> list[int]:
    """Modularity maximiser by enumerating every set partition.

    Ties go to the lexicographically smallest restricted-growth string.
    """
    b = bell_number(g.n)
    if b > bell_limit:
        raise SizeError(f"Bell({g.n}) = {b} set partitions exceeds limit {bell_limit}")
    degrees, two_m = _block_inputs(g, degrees, two_m)
    if g.n == 0:
        return []
    X = restricted_growth_strings(g.n)
    score = np.zeros(len(X), dtype=np.int64)
    for i in range(g.n):
        for j in range(i + 1, g.n):
            w = (two_m if g.has_edge(i, j) else 0) - degrees[i] * degrees[j]
            if w:
                score += (X[:, i] == X[:, j]) * (2 * w)
    return X[int(np.argmax(score))].astype(int).tolist()


def greedy_modularity(g: Graph, degrees=None, two_m=None) -> list[int]:
    """Agglomerative merging from singletons.

    Repeatedly merges the adjacent cluster pair with the largest positive gain;
    equal gains go to the smallest (a, b) pair of cluster ids. A merged
    cluster keeps the smaller id, so labels are vertex ids.
    """
    degrees, two_m = _block_inputs(g, degrees, two_m)
    n = g.n
    D = list(degrees)
    links: list[dict[int, int]] = [dict.fromkeys(a, 1) for a in g.adjacency]
    members = [[v] for v in range(n)]
    alive = [True] * n
    version = [0] * n
    heap = []
    for u, v in g.edges:
        gain = two_m - D[u] * D[v]
        if gain > 0:
            heap.append((-gain, u, v, 0, 0))
    heapq.heapify(heap)
    while heap:
        neg, a, b, va, vb = heapq.heappop(heap)
        if not (alive[a] and alive[b]) or version[a] != va or version[b] != vb:
            continue
        alive[b] = False
        members[a].extend(members[b])
        members[b] = []
        D[a] += D[b]
        version[a] += 1
        la, lb = links[a], links[b]
        la.pop(b, None)
        for x, cnt in lb.items():
            if x == a:
                continue
            la[x] = la.get(x, 0) + cnt
            lx = links[x]
            lx[a] = lx.get(a, 0) + lx.pop(b)
        links[b] = {}
        for x, cnt in la.items():
            gain = two_m * cnt - D[a] * D[x]
            if gain > 0:
                lo, hi = (a, x) if a < x else (x, a)
                heapq.heappush(heap, (-gain, lo, hi, version[lo], version[hi]))
    labels = [0] * n
    for c in range(n):
        for v in members[c]:
            labels[v] = c
    return labels


def merge_clusterings(
    block_clusterings: Sequence[Sequence[int]], back_maps: Sequence[Sequence[int]]
) -> list[int]:
    """Stitch per-block clusterings; blocks never share a label."""
    n = sum(len(b) for b in back_maps)
    out = [-1] * n
    offset = 0
    for labels, back in zip(block_clusterings, back_maps):
        if len(labels) != len(back) or any(not 0 <= v < n for v in back):
            raise ValueError("back maps must partition range(n)")
        dense: dict = {}
        for local, lab in enumerate(labels):
            if lab not in dense:
                dense[lab] = offset + len(dense)
            out[back[local]] = dense[lab]
        offset += len(dense)
    if -1 in out:
        raise ValueError("back maps do not cover every vertex")
    return out


def modularity_lower_bound(C: float, m: int) -> float:
    """Lower bound on the optimal modularity of a graph with every degree <= C."""
    if C < 1 or m < 1:
        raise ValueError("need C >= 1 and m >= 1")
    return (1.0 / (2 * (2 * C - 1))) * (1.0 - C * C / (2.0 * m))


@dataclass(frozen=True)
class ModSolver:
    name: str
    solve: Callable[[Graph, list[int], int], list[int]]
    alpha: Callable[[int], float] | None = None


def exact_mod_solver(bell_limit: int = DEFAULT_BELL_LIMIT) -> ModSolver:
    return ModSolver("exact", lambda sg, d, tm: exact_modularity(sg, bell_limit, d, tm), lambda _k: 1.0)


GREEDY = ModSolver("greedy", greedy_modularity)


def resolve_mod_solver(solver) -> ModSolver:
    if isinstance(solver, ModSolver):
        return solver
    if solver == "exact":
        return exact_mod_solver()
    if solver == "greedy":
        return GREEDY
    raise ValueError(f"unknown clustering solver {solver!r}")


@dataclass(frozen=True)
class ModCertificate:
    m_hat: float
    penalty: float
    sound_penalty: float
    solver: str
    alpha_used: float | None
    k_tilde_hop: int | None
    implied_opt_upper: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def solve_blocks(g: Graph, blocks, solver="exact", parallelism: int = 1) -> list[int]:
    """Cluster each block's induced subgraph against the global degrees and
    edge count, then stitch with disjoint label ranges."""
    solver = resolve_mod_solver(solver)
    deg = g.degrees
    two_m = 2 * g.m
    jobs = []
    for k, blk in enumerate(blocks):
        sub, back = g.subgraph(blk)
        jobs.append((k, sub, [deg[v] for v in back], back))

    def run(job):
        k, sub, d, _ = job
        try:
            return solver.solve(sub, d, two_m)
        except SizeError as exc:
            raise SizeError(f"block {k}: {exc}") from exc

    block_labels = ordered_map(run, jobs, parallelism)
    return merge_clusterings(block_labels, [j[3] for j in jobs])


def pm_cluster(
    g: Graph,
    params: PartitionParams,
    solver="exact",
    parallelism: int = 1,
    hop_bound: bool = True,
    timings: dict | None = None,
) -> tuple[list[int], ModCertificate, Partition]:
    """Partition, cluster each induced block independently, stitch, certify."""
    _require_edges(g)
    solver = resolve_mod_solver(solver)
    t0 = time.perf_counter()
    part = partition(g, params)
    t1 = time.perf_counter()
    labels = solve_blocks(g, part.blocks, solver, parallelism)
    t2 = time.perf_counter()
    two_m = 2 * g.m
    m_hat = modularity(g, labels)
    penalty = len(part.boundary) / two_m
    # a cut edge splits two ordered pairs of an optimal cluster, so the loss
    # the stitching provably stays within is twice the per-edge penalty
    sound_penalty = 2 * penalty
    k_hop = hop_ball_bound(g, params.K) if hop_bound else None
    alpha = None if solver.alpha is None else float(solver.alpha(k_hop or max(map(len, part.blocks))))
    # block optima may be negative, so only the exact (alpha == 1) form is certified
    upper = m_hat + sound_penalty if alpha == 1.0 else None
    t3 = time.perf_counter()
    if timings is not None:
        timings.update(partition=t1 - t0, solve=t2 - t1, merge=t3 - t2)
    return labels, ModCertificate(m_hat, penalty, sound_penalty, solver.name, alpha, k_hop, upper), part
