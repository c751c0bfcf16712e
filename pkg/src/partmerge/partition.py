"""Randomized ball carving with truncated-geometric radii, parameter selection
and the per-edge cut-probability bound."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Literal, Sequence

import mpmath

from . import rng as rngmod
from .graph import Graph, ball, closed_ball

OrderPolicy = Literal["random", "given"]
Problem = Literal["map", "modularity"]


@dataclass(frozen=True)
class PartitionParams:
    K: int
    epsilon: float
    seed: int = 0
    order: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def order_policy(self) -> OrderPolicy:
        return "random" if self.order is None else "given"

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "order_policy": self.order_policy,
            "order": None if self.order is None else list(self.order),
        }


@dataclass(frozen=True)
class Partition:
    blocks: tuple[tuple[int, ...], ...]
    pivots: tuple[int, ...]
    radii: tuple[int, ...]
    boundary: tuple[tuple[int, int], ...]
    cut_fraction: float

    @property
    def p(self) -> int:
        return len(self.blocks)

    def block_of(self, n: int) -> list[int]:
        owner = [-1] * n
        for k, blk in enumerate(self.blocks):
            for v in blk:
                owner[v] = k
        return owner

    def to_dict(self, params: PartitionParams | None = None) -> dict:
        return {
            "params": None if params is None else params.to_dict(),
            "blocks": [list(b) for b in self.blocks],
            "pivots": list(self.pivots),
            "radii": list(self.radii),
            "boundary": [list(e) for e in self.boundary],
            "cut_fraction": self.cut_fraction,
        }

    def to_json(self, params: PartitionParams | None = None) -> str:
        return json.dumps(self.to_dict(params), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "Partition":
        return cls(
            tuple(tuple(b) for b in doc["blocks"]),
            tuple(doc["pivots"]),
            tuple(doc["radii"]),
            tuple((int(u), int(v)) for u, v in doc["boundary"]),
            float(doc["cut_fraction"]),
        )


def radius_law(K: int, epsilon: float) -> list[float]:
    """``law[l-1] = Pr(R = l)`` for l = 1..K."""
    law = [epsilon * (1.0 - epsilon) ** (ell - 1) for ell in range(1, K)]
    law.append((1.0 - epsilon) ** (K - 1))
    return law


def radius_from_uniform(u: float, K: int, epsilon: float) -> int:
    """Inverse CDF of the truncated geometric law: smallest l with u < 1 - (1-eps)^l."""
    if K == 1:
        return 1
    ell = int(math.floor(math.log1p(-u) / math.log1p(-epsilon))) + 1
    return min(max(ell, 1), K)


def sample_radius(K: int, epsilon: float, rng) -> int:
    # One uniform per call, even when K == 1, to keep streams aligned.
    return radius_from_uniform(float(rng.random()), K, epsilon)


def boundary_edges(g: Graph, blocks: Sequence[Iterable[int]]) -> list[tuple[int, int]]:
    owner = [-1] * g.n
    for k, blk in enumerate(blocks):
        for v in blk:
            owner[v] = k
    return [(u, v) for u, v in g.edges if owner[u] != owner[v]]


def pivot_order(g: Graph, params: PartitionParams) -> list[int]:
    if params.order is not None:
        order = list(params.order)
        if sorted(order) != list(range(g.n)):
            raise ValueError("explicit order must be a permutation of 0..n-1")
        return order
    return rngmod.stream(params.seed, rngmod.PERMUTATION).permutation(g.n).tolist()


def partition(g: Graph, params: PartitionParams) -> Partition:
    """Carve ``g`` into blocks.

    Pivots are visited in order; an unclaimed pivot draws a radius R and claims
    every unclaimed vertex within R hops of it. Distances are always measured
    in ``g`` itself, so the search walks through already-claimed vertices.
    """
    if g.n == 0:
        raise ValueError("cannot partition an empty graph")
    order = pivot_order(g, params)
    radius_rng = rngmod.stream(params.seed, rngmod.RADII)
    claimed = [False] * g.n
    blocks, pivots, radii = [], [], []
    K, eps = params.K, params.epsilon
    for pivot in order:
        if claimed[pivot]:
            continue
        R = sample_radius(K, eps, radius_rng)
        blk = []
        for v in closed_ball(g, pivot, R):
            if not claimed[v]:
                claimed[v] = True
                blk.append(v)
        blk.sort()
        blocks.append(tuple(blk))
        pivots.append(pivot)
        radii.append(R)
    boundary = boundary_edges(g, blocks)
    beta = len(boundary) / g.m if g.m else 0.0
    return Partition(tuple(blocks), tuple(pivots), tuple(radii), tuple(boundary), beta)


def hop_ball_bound(g: Graph, K: int) -> int:
    """Largest closed K-hop neighbourhood: an upper bound on any block size."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    return max((len(closed_ball(g, i, K)) for i in range(g.n)), default=0)


def edge_cut_bound(g: Graph, e: tuple[int, int], K: int, epsilon: float) -> float:
    """``eps + (1-eps)^(K-1) * |B(u, K) ∪ B(v, K)|`` with strict balls."""
    u, v = e
    if not g.has_edge(u, v):
        raise ValueError(f"({u}, {v}) is not an edge")
    union = ball(g, u, K) | ball(g, v, K)
    return epsilon + (1.0 - epsilon) ** (K - 1) * len(union)


@dataclass(frozen=True)
class ParamRecommendation:
    K: int
    epsilon: float
    delta: float
    problem: Problem
    rho: int
    C: int
    k_tilde_analytic: int

    def to_dict(self) -> dict:
        return asdict(self)


def recommended_epsilon(rho: int, C: int, delta: float, problem: Problem) -> float:
    if problem == "map":
        return delta / (2 * C * 2**rho)
    if problem == "modularity":
        return delta / (4 * (2 * C - 1))
    raise ValueError(f"unknown problem {problem!r}")


def k_inequality_holds(rho: int, C: int, K: int, epsilon: float, dps: int = 50) -> bool:
    """``C (1-eps)^(K-1) K^rho <= eps`` evaluated with ``dps`` decimal digits."""
    with mpmath.workdps(dps):
        eps = mpmath.mpf(epsilon)
        lhs = C * (1 - eps) ** (K - 1) * mpmath.mpf(K) ** rho
        return bool(lhs <= eps)


def select_params(rho: int, C: int, delta: float, problem: Problem = "map") -> ParamRecommendation:
    """Radius cap K and geometric parameter eps for a polynomial-growth graph."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if rho < 1 or C < 1:
        raise ValueError("need rho >= 1 and C >= 1")
    eps = recommended_epsilon(rho, C, delta, problem)
    a = 8 * rho / eps
    K_real = a * math.log(a) + (4 / eps) * math.log(C) + (4 / eps) * math.log(1 / eps) + 2
    K = math.ceil(K_real)
    if not k_inequality_holds(rho, C, K, eps):
        raise AssertionError(f"K={K} violates C(1-eps)^(K-1)K^rho <= eps for rho={rho}, C={C}")
    return ParamRecommendation(K, eps, delta, problem, rho, C, C * K**rho)
