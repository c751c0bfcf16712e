"""Pairwise MRFs in the log domain: objective, exact and ICM solvers, the
partition-merge MAP pipeline and its per-run certificate."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import rng as rngmod
from .graph import Graph, max_degree
from .parallel import ordered_map
from .partition import Partition, PartitionParams, hop_ball_bound, partition

DEFAULT_ENUMERATION_LIMIT = 2**24
_CHUNK = 1 << 16


class SizeError(ValueError):
    """Instance too large for an exhaustive solver."""


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PairwiseMRF:
    """``node_logpot[i, a]`` is ln phi_i(a); ``edge_logpot[e, a, b]`` is
    ln psi_uv(a, b) for ``graph.edges[e] == (u, v)``, ``u < v``."""

    graph: Graph
    q: int
    node_logpot: np.ndarray
    edge_logpot: np.ndarray

    def __post_init__(self):
        n, m, q = self.graph.n, self.graph.m, self.q
        if q < 2:
            raise ValueError(f"alphabet size must be >= 2, got {q}")
        node = np.asarray(self.node_logpot, dtype=float).reshape(n, q)
        edge = np.asarray(self.edge_logpot, dtype=float).reshape(m, q, q)
        if not (np.all(np.isfinite(node)) and np.all(np.isfinite(edge))):
            raise ValueError("log-potentials must be finite")
        node.setflags(write=False)
        edge.setflags(write=False)
        object.__setattr__(self, "node_logpot", node)
        object.__setattr__(self, "edge_logpot", edge)

    @property
    def n(self) -> int:
        return self.graph.n

    @cached_property
    def nonnegative(self) -> bool:
        return bool(np.all(self.node_logpot >= 0) and np.all(self.edge_logpot >= 0))

    @cached_property
    def _edge_index(self) -> dict[tuple[int, int], int]:
        return {e: k for k, e in enumerate(self.graph.edges)}

    @cached_property
    def _edge_array(self) -> np.ndarray:
        return np.asarray(self.graph.edges, dtype=np.int64).reshape(-1, 2)

    def edge_id(self, u: int, v: int) -> int:
        try:
            return self._edge_index[(u, v) if u < v else (v, u)]
        except KeyError:
            raise ValueError(f"({u}, {v}) is not an edge") from None

    def edge_table(self, u: int, v: int) -> np.ndarray:
        """Table indexed ``[x_u, x_v]`` whichever way round the edge is stored."""
        t = self.edge_logpot[self.edge_id(u, v)]
        return t if u < v else t.T

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "q": self.q,
            "domain": "log",
            "nodes": self.node_logpot.tolist(),
            "edges": [
                {"u": u, "v": v, "table": self.edge_logpot[k].ravel().tolist()}
                for k, (u, v) in enumerate(self.graph.edges)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PairwiseMRF":
        n, q = int(doc["n"]), int(doc["q"])
        domain = doc.get("domain", "log")
        if domain not in ("log", "raw"):
            raise ValueError(f"domain must be 'log' or 'raw', got {domain!r}")
        nodes = np.asarray(doc["nodes"], dtype=float)
        if nodes.shape != (n, q):
            raise ValueError(f"nodes must be an {n}x{q} array, got shape {nodes.shape}")
        tables = {}
        for item in doc["edges"]:
            u, v = int(item["u"]), int(item["v"])
            t = np.asarray(item["table"], dtype=float)
            if t.size != q * q:
                raise ValueError(f"edge ({u}, {v}) table must hold {q * q} entries")
            t = t.reshape(q, q)
            key = (u, v) if u < v else (v, u)
            if key in tables:
                raise ValueError(f"duplicate edge ({u}, {v})")
            tables[key] = t if u < v else t.T
        g = Graph.from_edges(n, tables.keys())
        edge = np.stack([tables[e] for e in g.edges]) if g.m else np.zeros((0, q, q))
        if domain == "raw":
            if np.any(nodes <= 0) or np.any(edge <= 0):
                raise ValueError("raw potentials must be strictly positive")
            nodes, edge = np.log(nodes), np.log(edge)
        return cls(g, q, nodes, edge)


def load_mrf(path) -> PairwiseMRF:
    with open(path, encoding="utf-8") as fh:
        return PairwiseMRF.from_dict(json.load(fh))


def random_mrf(g: Graph, q: int, seed: int, low: float = 0.0, high: float = 1.0) -> PairwiseMRF:
    """Log-potentials drawn i.i.d. uniform on [low, high)."""
    gen = rngmod.stream(seed, rngmod.MODEL)
    nodes = gen.uniform(low, high, size=(g.n, q))
    edges = gen.uniform(low, high, size=(g.m, q, q))
    return PairwiseMRF(g, q, nodes, edges)


def evaluate_H(mrf: PairwiseMRF, x) -> float:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (mrf.n,) or (mrf.n and (x.min() < 0 or x.max() >= mrf.q)):
        raise ValueError("assignment does not match the model")
    total = float(mrf.node_logpot[np.arange(mrf.n), x].sum())
    if mrf.graph.m:
        ea = mrf._edge_array
        total += float(mrf.edge_logpot[np.arange(len(ea)), x[ea[:, 0]], x[ea[:, 1]]].sum())
    return total


def exact_map(mrf: PairwiseMRF, enumeration_limit: int = DEFAULT_ENUMERATION_LIMIT) -> np.ndarray:
    """Exhaustive maximiser of H; the lexicographically smallest among ties."""
    n, q = mrf.n, mrf.q
    total = q**n
    if total > enumeration_limit:
        raise SizeError(f"q^n = {q}^{n} = {total} exceeds enumeration limit {enumeration_limit}")
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    place = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    ea = mrf._edge_array
    best_val, best_idx = -math.inf, 0
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        X = (idx[:, None] // place) % q
        h = mrf.node_logpot[np.arange(n), X].sum(axis=1)
        for k in range(len(ea)):
            h += mrf.edge_logpot[k][X[:, ea[k, 0]], X[:, ea[k, 1]]]
        j = int(np.argmax(h))
        if h[j] > best_val:
            best_val, best_idx = float(h[j]), start + j
    return (best_idx // place) % q


@dataclass
class ICMResult:
    assignment: np.ndarray
    sweeps: int
    converged: bool


def greedy_unary(mrf: PairwiseMRF) -> np.ndarray:
    return np.argmax(mrf.node_logpot, axis=1).astype(np.int64)


def icm_detailed(
    mrf: PairwiseMRF,
    init=None,
    max_sweeps: int = 100,
    rng: np.random.Generator | None = None,
    callback: Callable[[int, int, int], None] | None = None,
) -> ICMResult:
    """Iterated conditional modes with a fresh random vertex order per sweep.

    Each visit sets x_i to the argmax of its conditional score (smallest
    symbol on ties). ``callback(i, old, new)`` fires after every visit.
    """
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1")
    n = mrf.n
    x = greedy_unary(mrf) if init is None else np.array(init, dtype=np.int64)
    if x.shape != (n,):
        raise ValueError("initial assignment does not match the model")
    if rng is None:
        rng = np.random.default_rng(0)
    g = mrf.graph
    nbrs = [np.asarray(a, dtype=np.int64) for a in g.adjacency]
    # tabs[i][k, a, b] = theta(x_i = a, x_j = b) for the k-th neighbour j of i
    tabs = []
    for i in range(n):
        if not g.adjacency[i]:
            tabs.append(None)
            continue
        t = mrf.edge_logpot[list(g.incident[i])]
        flip = nbrs[i] < i
        if flip.any():
            t = t.copy()
            t[flip] = t[flip].transpose(0, 2, 1)
        tabs.append(t)
    node = mrf.node_logpot
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        changes = 0
        for i in rng.permutation(n).tolist():
            score = node[i]
            t = tabs[i]
            if t is not None:
                score = score + t[np.arange(len(t)), :, x[nbrs[i]]].sum(axis=0)
            new = int(np.argmax(score))
            old = int(x[i])
            if new != old:
                x[i] = new
                changes += 1
            if callback is not None:
                callback(i, old, new)
        if changes == 0:
            converged = True
            break
    return ICMResult(x, sweeps, converged)


def icm(mrf: PairwiseMRF, init=None, max_sweeps: int = 100, rng=None) -> np.ndarray:
    return icm_detailed(mrf, init, max_sweeps, rng).assignment


def restrict(mrf: PairwiseMRF, block: Sequence[int]) -> tuple[PairwiseMRF, list[int]]:
    """The model on the subgraph induced by ``block``, relabelled densely.

    Node potentials are copied; edges leaving the block are dropped. Returns
    the sub-model and ``back_map`` with ``back_map[local] = global``.
    """
    back = sorted(block)
    local = {v: k for k, v in enumerate(back)}
    g = mrf.graph
    pairs, eids = [], []
    for u in back:
        for w, eid in zip(g.adjacency[u], g.incident[u]):
            if u < w and w in local:
                pairs.append((local[u], local[w]))
                eids.append(eid)
    # back is sorted and adjacency is sorted, so pairs are already in Graph order
    sub_g = Graph.from_edges(len(back), pairs)
    edge = mrf.edge_logpot[eids] if eids else np.zeros((0, mrf.q, mrf.q))
    return PairwiseMRF(sub_g, mrf.q, mrf.node_logpot[back], edge), back


def psi_gap(mrf: PairwiseMRF, e) -> tuple[float, float]:
    """``(max, min)`` entry of an edge's log-table; ``e`` is an id or a pair."""
    eid = mrf.edge_id(*e) if isinstance(e, tuple) else int(e)
    t = mrf.edge_logpot[eid]
    return float(t.max()), float(t.min())


def total_gap(mrf: PairwiseMRF, edges=None) -> float:
    t = mrf.edge_logpot
    if edges is not None:
        ids = [mrf.edge_id(u, v) for u, v in edges]
        t = t[ids] if ids else np.zeros((0, mrf.q, mrf.q))
    if len(t) == 0:
        return 0.0
    return float((t.max(axis=(1, 2)) - t.min(axis=(1, 2))).sum())


def map_lower_bound(mrf: PairwiseMRF) -> float:
    """Certified lower bound on max H for nonnegative log-potentials:
    the total edge gap divided by (max degree + 1)."""
    if not mrf.nonnegative:
        raise PreconditionError("lower bound requires all log-potentials >= 0")
    return total_gap(mrf) / (max_degree(mrf.graph) + 1)


@dataclass(frozen=True)
class MapSolver:
    """A per-block solver. ``alpha(size)``, when known, is its certified
    approximation factor on blocks of that many vertices."""

    name: str
    solve: Callable[[PairwiseMRF, np.random.Generator], np.ndarray]
    alpha: Callable[[int], float] | None = None


def exact_solver(enumeration_limit: int = DEFAULT_ENUMERATION_LIMIT) -> MapSolver:
    return MapSolver("exact", lambda sub, _rng: exact_map(sub, enumeration_limit), lambda _k: 1.0)


def icm_solver(max_sweeps: int = 100) -> MapSolver:
    return MapSolver("icm", lambda sub, r: icm(sub, None, max_sweeps, r))


def resolve_solver(solver) -> MapSolver:
    if isinstance(solver, MapSolver):
        return solver
    if solver == "exact":
        return exact_solver()
    if solver == "icm":
        return icm_solver()
    raise ValueError(f"unknown MAP solver {solver!r}")


@dataclass(frozen=True)
class MapCertificate:
    h_hat: float
    boundary_penalty: float
    solver: str
    alpha_used: float | None
    k_tilde_hop: int | None
    k_tilde_analytic: int | None
    implied_opt_upper: float | None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class _BlockTask:
    sub: PairwiseMRF
    seed: int
    index: int


def pm_map(
    mrf: PairwiseMRF,
    params: PartitionParams,
    solver="exact",
    parallelism: int = 1,
    growth: tuple[int, int] | None = None,
    hop_bound: bool = True,
    timings: dict | None = None,
) -> tuple[np.ndarray, MapCertificate, Partition]:
    """Partition, solve every block independently, stitch, certify.

    ``growth=(rho, C)`` adds the analytic block-size bound C*K^rho to the
    certificate. ``timings``, if given, receives partition/solve/merge seconds.
    """
    solver = resolve_solver(solver)
    t0 = time.perf_counter()
    part = partition(mrf.graph, params)
    t1 = time.perf_counter()
    tasks = []
    backs = []
    for k, blk in enumerate(part.blocks):
        sub, back = restrict(mrf, blk)
        tasks.append(_BlockTask(sub, params.seed, k))
        backs.append(back)

    def run(task: _BlockTask) -> np.ndarray:
        try:
            return solver.solve(task.sub, rngmod.stream(task.seed, rngmod.BLOCK, task.index))
        except SizeError as exc:
            raise SizeError(f"block {task.index}: {exc}") from exc

    solutions = ordered_map(run, tasks, parallelism)
    t2 = time.perf_counter()
    x = np.zeros(mrf.n, dtype=np.int64)
    for back, sol in zip(backs, solutions):
        x[back] = sol
    h_hat = evaluate_H(mrf, x)
    penalty = total_gap(mrf, part.boundary)
    k_hop = hop_ball_bound(mrf.graph, params.K) if hop_bound else None
    k_an = growth[1] * params.K ** growth[0] if growth else None
    alpha = None
    upper = None
    # alpha > 1 certificates are only sound when every log-potential is >= 0
    if solver.alpha is not None:
        size = k_hop if k_hop is not None else max(len(b) for b in part.blocks)
        alpha = float(solver.alpha(size))
        if alpha == 1.0 or mrf.nonnegative:
            upper = alpha * h_hat + penalty
    t3 = time.perf_counter()
    if timings is not None:
        timings.update(partition=t1 - t0, solve=t2 - t1, merge=t3 - t2)
    cert = MapCertificate(h_hat, penalty, solver.name, alpha, k_hop, k_an, upper)
    return x, cert, part
