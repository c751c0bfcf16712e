"""Undirected simple graphs, edge-list ingestion, generators and ball queries."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

UNREACHABLE = -1


class GraphFormatError(ValueError):
    """Raised for malformed edge-list documents."""


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph on vertices ``0..n-1``.

    ``edges`` holds each edge once as ``(u, v)`` with ``u < v``, sorted.
    ``adjacency[i]`` and ``incident[i]`` list neighbours and the matching
    edge ids in ascending neighbour order.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)
    incident: tuple[tuple[int, ...], ...] = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        if n < 0:
            raise ValueError(f"vertex count must be nonnegative, got {n}")
        canon = set()
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) outside vertex range 0..{n - 1}")
            canon.add((u, v) if u < v else (v, u))
        ordered = tuple(sorted(canon))
        nbrs: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for eid, (u, v) in enumerate(ordered):
            nbrs[u].append((v, eid))
            nbrs[v].append((u, eid))
        for lst in nbrs:
            lst.sort()
        adjacency = tuple(tuple(j for j, _ in lst) for lst in nbrs)
        incident = tuple(tuple(eid for _, eid in lst) for lst in nbrs)
        return cls(n, ordered, adjacency, incident)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def subgraph(self, vertices: Sequence[int]) -> tuple["Graph", list[int]]:
        """Induced subgraph relabelled densely; returns it with the back-map."""
        back = sorted(vertices)
        local = {v: k for k, v in enumerate(back)}
        sub_edges = [
            (local[u], local[v]) for u in back for v in self.adjacency[u] if u < v and v in local
        ]
        return Graph.from_edges(len(back), sub_edges), back


def load_edge_list(text: str) -> Graph:
    """Parse an edge-list document.

    One ``u v`` pair per line; ``#`` starts a comment line; an optional first
    data line ``n <count>`` declares the vertex count.
    """
    declared = None
    pairs = []
    seen_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if not seen_data and parts[0] == "n":
            if len(parts) != 2 or not parts[1].isdigit():
                raise GraphFormatError(f"line {lineno}: malformed header {raw!r}")
            declared = int(parts[1])
            seen_data = True
            continue
        seen_data = True
        if len(parts) != 2 or not (parts[0].isdigit() and parts[1].isdigit()):
            raise GraphFormatError(f"line {lineno}: expected two nonnegative integers, got {raw!r}")
        u, v = int(parts[0]), int(parts[1])
        if u == v:
            raise GraphFormatError(f"line {lineno}: self-loop at vertex {u}")
        pairs.append((u, v))
    n = 1 + max((max(p) for p in pairs), default=-1)
    if declared is not None:
        if declared < n:
            raise GraphFormatError(f"header declares n={declared} but vertex {n - 1} appears")
        n = declared
    return Graph.from_edges(n, pairs)


def read_edge_list(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh.read())


def dump_edge_list(g: Graph) -> str:
    lines = [f"n {g.n}"]
    lines.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def _check_vertex(g: Graph, v: int) -> None:
    if not 0 <= v < g.n:
        raise ValueError(f"vertex {v} out of range for graph with n={g.n}")


def bfs_distances(g: Graph, source: int, max_depth: int | None = None) -> list[int]:
    """Hop distances from ``source``; ``UNREACHABLE`` (-1) where no path exists.

    With ``max_depth`` the search stops expanding past that depth, and farther
    vertices are reported as unreachable.
    """
    _check_vertex(g, source)
    dist = [UNREACHABLE] * g.n
    dist[source] = 0
    queue = deque([source])
    adj = g.adjacency
    while queue:
        u = queue.popleft()
        du = dist[u]
        if max_depth is not None and du >= max_depth:
            continue
        for w in adj[u]:
            if dist[w] < 0:
                dist[w] = du + 1
                queue.append(w)
    return dist


def closed_ball(g: Graph, i: int, radius: int) -> list[int]:
    """Vertices at distance <= radius from ``i`` in BFS order."""
    seen = {i}
    frontier = [i]
    out = [i]
    adj = g.adjacency
    for _ in range(radius):
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        if not nxt:
            break
        out.extend(nxt)
        frontier = nxt
    return out


def ball(g: Graph, i: int, r: int) -> set[int]:
    """``{j : d(i, j) < r}`` -- the strict-inequality ball."""
    _check_vertex(g, i)
    if r < 1:
        raise ValueError(f"ball radius must be >= 1, got {r}")
    return set(closed_ball(g, i, r - 1))


def max_degree(g: Graph) -> int:
    return max((len(a) for a in g.adjacency), default=0)


@dataclass(frozen=True)
class GrowthProfile:
    per_rho_min_C: dict[int, int]
    chosen_rho: int
    chosen_C: int


def ball_size_profile(g: Graph, i: int) -> list[int]:
    """``sizes[r-1] = |ball(g, i, r)|`` for r = 1 .. eccentricity(i) + 1."""
    dist = bfs_distances(g, i)
    ecc = max(dist)
    counts = [0] * (ecc + 1)
    for d in dist:
        if d >= 0:
            counts[d] += 1
    return list(np.cumsum(counts).tolist())


def estimate_growth(g: Graph, rho_max: int = 4) -> GrowthProfile:
    """Minimal integer C per degree rho with ``|B(i, r)| <= C r^rho`` for all i, r.

    The chosen pair minimises ``C * 2**rho`` (ties go to the smaller rho).
    Ball sizes are constant past eccentricity + 1, so larger radii only loosen
    the constraint and are skipped.
    """
    if g.n == 0:
        raise ValueError("cannot estimate growth of an empty graph")
    if rho_max < 1:
        raise ValueError(f"rho_max must be >= 1, got {rho_max}")
    best = {rho: 1 for rho in range(1, rho_max + 1)}
    for i in range(g.n):
        sizes = ball_size_profile(g, i)
        for r, size in enumerate(sizes, start=1):
            for rho in best:
                need = -(-size // r**rho)
                if need > best[rho]:
                    best[rho] = need
    chosen = min(best, key=lambda rho: (best[rho] * 2**rho, rho))
    return GrowthProfile(best, chosen, best[chosen])


def generate_grid(width: int, height: int) -> Graph:
    """4-neighbour lattice; vertex ``(x, y)`` has id ``y * width + x``."""
    if width < 1 or height < 1:
        raise ValueError("grid dimensions must be >= 1")
    edges = []
    for y in range(height):
        for x in range(width):
            v = y * width + x
            if x + 1 < width:
                edges.append((v, v + 1))
            if y + 1 < height:
                edges.append((v, v + width))
    return Graph.from_edges(width * height, edges)


def generate_geometric(n: int, connect_radius: float, box_side: float = 1.0, seed: int = 0) -> Graph:
    """Random geometric graph: uniform points in a square, edge iff distance <= radius."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, box_side, size=(n, 2))
    # Bucket points into cells of side connect_radius; only neighbouring cells can hold partners.
    cell = max(connect_radius, 1e-12)
    buckets: dict[tuple[int, int], list[int]] = {}
    keys = np.floor(pts / cell).astype(np.int64)
    for idx, (cx, cy) in enumerate(keys.tolist()):
        buckets.setdefault((cx, cy), []).append(idx)
    r2 = connect_radius * connect_radius
    edges = []
    for (cx, cy), members in buckets.items():
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                others = buckets.get((cx + dx, cy + dy))
                if not others:
                    continue
                for a in members:
                    pa = pts[a]
                    for b in others:
                        if b <= a:
                            continue
                        d = pts[b] - pa
                        if d[0] * d[0] + d[1] * d[1] <= r2:
                            edges.append((a, b))
    return Graph.from_edges(n, edges)


def parse_generator(spec: str) -> Graph:
    """Build a graph from a short generator spec.

    ``grid:WxH``, ``path:N`` or ``geometric:n=N,r=R[,side=S][,seed=X]``.
    """
    kind, _, rest = spec.partition(":")
    if kind == "grid":
        w, _, h = rest.partition("x")
        return generate_grid(int(w), int(h or w))
    if kind == "path":
        n = int(rest)
        return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])
    if kind == "geometric":
        kw = dict(item.split("=", 1) for item in rest.split(",") if item)
        return generate_geometric(
            int(kw["n"]), float(kw["r"]), float(kw.get("side", 1.0)), int(kw.get("seed", 0))
        )
    raise ValueError(f"unknown generator spec {spec!r}")
