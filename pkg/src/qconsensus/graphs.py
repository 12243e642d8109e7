"""Undirected simple graphs and the topology generators used by the simulator.

Nodes are dense integers 0..n-1. Generator conventions are fixed so that
exact-value tests can address specific nodes: star puts the hub at node 0,
line orders nodes 0..n-1 along the path, lollipop builds the clique on
nodes 0..m-1 and hangs the tail off node m-1.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

TOPOLOGY_KINDS = ("star", "line", "lollipop", "complete", "erdos_renyi", "edge_list")


class GraphConstructionError(ValueError):
    """A topology spec or edge list violates a structural constraint."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph as sorted adjacency lists."""

    n: int
    adjacency: tuple[tuple[int, ...], ...]
    meta: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise GraphConstructionError("node count must be >= 1")
        if len(self.adjacency) != self.n:
            raise GraphConstructionError("adjacency length must equal node count")
        for i, nbrs in enumerate(self.adjacency):
            if any(j < 0 or j >= self.n for j in nbrs):
                raise GraphConstructionError(f"node {i} has a neighbor outside 0..{self.n - 1}")
            if i in nbrs:
                raise GraphConstructionError(f"self-loop at node {i}")
            if len(set(nbrs)) != len(nbrs):
                raise GraphConstructionError(f"duplicate neighbor at node {i}")
            if tuple(sorted(nbrs)) != tuple(nbrs):
                raise GraphConstructionError(f"adjacency of node {i} is not sorted")
        for i, nbrs in enumerate(self.adjacency):
            for j in nbrs:
                if i not in self.adjacency[j]:
                    raise GraphConstructionError(f"edge ({i},{j}) is not symmetric")

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphConstructionError(f"edge ({u},{v}) outside 0..{n - 1}")
            if u == v:
                raise GraphConstructionError(f"self-loop at node {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs))

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def degrees(self) -> list[int]:
        return [len(nbrs) for nbrs in self.adjacency]

    def edges(self) -> list[tuple[int, int]]:
        """All edges as (u, v) pairs with u < v."""
        return [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]

    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.adjacency) // 2

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]


@dataclass(frozen=True)
class TopologySpec:
    """Parameters for one of the supported topology generators.

    kind: star | line | lollipop | complete | erdos_renyi | edge_list
    n: node count
    m: clique size (lollipop only), 3 <= m <= n
    p: edge probability (erdos_renyi only), 0 < p <= 1
    seed: RNG seed (erdos_renyi only)
    edges: explicit edge list (edge_list only)
    """

    kind: str
    n: int
    m: int | None = None
    p: float | None = None
    seed: int | None = None
    edges: tuple[tuple[int, int], ...] | None = None

    def validate(self) -> None:
        if self.kind not in TOPOLOGY_KINDS:
            raise GraphConstructionError(f"unknown topology kind {self.kind!r}")
        if self.n < 1:
            raise GraphConstructionError("n must be >= 1")
        if self.kind == "lollipop":
            if self.m is None or not (3 <= self.m <= self.n):
                raise GraphConstructionError(
                    f"lollipop requires 3 <= m <= n, got m={self.m}, n={self.n}"
                )
        if self.kind == "erdos_renyi":
            if self.p is None or not (0.0 < self.p <= 1.0):
                raise GraphConstructionError(f"erdos_renyi requires 0 < p <= 1, got p={self.p}")
            if self.seed is None:
                raise GraphConstructionError("erdos_renyi requires a seed")
        if self.kind == "edge_list" and self.edges is None:
            raise GraphConstructionError("edge_list requires an explicit edge list")


def star_graph(n: int) -> Graph:
    """Hub at node 0, leaves 1..n-1."""
    if n == 1:
        return Graph(1, ((),))
    adjacency = [tuple(range(1, n))] + [(0,)] * (n - 1)
    return Graph(n, tuple(adjacency))


def line_graph(n: int) -> Graph:
    """Path 0 - 1 - ... - (n-1)."""
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def lollipop_graph(n: int, m: int) -> Graph:
    """Clique on nodes 0..m-1 with a path m-1, m, ..., n-1 hanging off it."""
    if not (3 <= m <= n):
        raise GraphConstructionError(f"lollipop requires 3 <= m <= n, got m={m}, n={n}")
    edges = [(i, j) for i in range(m) for j in range(i + 1, m)]
    edges += [(i, i + 1) for i in range(m - 1, n - 1)]
    return Graph.from_edges(n, edges)


def erdos_renyi_graph(n: int, p: float, seed: int) -> Graph:
    """G(n, p), re-sampled with seed+1, seed+2, ... until connected.

    Deterministic re-seeding (rather than drawing again from one stream)
    makes the produced graph a pure function of (n, p, seed). The number
    of rejected samples is recorded in graph.meta["er_retries"].
    """
    if not (0.0 < p <= 1.0):
        raise GraphConstructionError(f"erdos_renyi requires 0 < p <= 1, got p={p}")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    retries = 0
    while True:
        rng = np.random.default_rng(seed + retries)
        mask = rng.random(len(pairs)) < p
        g = Graph.from_edges(n, [e for e, keep in zip(pairs, mask) if keep])
        if is_connected(g):
            g.meta["er_retries"] = retries
            g.meta["er_seed"] = seed + retries
            return g
        retries += 1


def build_graph(spec: TopologySpec) -> Graph:
    """Build the graph described by ``spec``; always returns a connected graph."""
    spec.validate()
    if spec.kind == "star":
        return star_graph(spec.n)
    if spec.kind == "line":
        return line_graph(spec.n)
    if spec.kind == "complete":
        return complete_graph(spec.n)
    if spec.kind == "lollipop":
        return lollipop_graph(spec.n, spec.m)
    if spec.kind == "erdos_renyi":
        return erdos_renyi_graph(spec.n, spec.p, spec.seed)
    g = Graph.from_edges(spec.n, spec.edges)
    if not is_connected(g):
        raise GraphConstructionError("explicit edge list does not yield a connected graph")
    return g


def is_connected(g: Graph) -> bool:
    """True iff breadth-first traversal from node 0 reaches every node."""
    seen = [False] * g.n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in g.adjacency[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == g.n


def shortest_path(g: Graph, x: int, y: int) -> list[int]:
    """Minimum-hop path from x to y, inclusive of both endpoints.

    Ties are broken deterministically: each BFS level is processed in
    ascending node order, so every node is claimed by its lexicographically
    smallest same-level predecessor.
    """
    if not (0 <= x < g.n and 0 <= y < g.n):
        raise ValueError(f"nodes must be in 0..{g.n - 1}")
    if x == y:
        return [x]
    parent = [-1] * g.n
    parent[x] = x
    frontier = [x]
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.adjacency[u]:
                if parent[v] < 0:
                    parent[v] = u
                    nxt.append(v)
        if parent[y] >= 0:
            break
        frontier = sorted(nxt)
    if parent[y] < 0:
        raise ValueError(f"node {y} is unreachable from node {x}")
    path = [y]
    while path[-1] != x:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def path_degree_sum(g: Graph, x: int, y: int) -> int:
    """Sum of degrees along the shortest x-y path; < 3n on any connected graph."""
    return sum(g.degree(q) for q in shortest_path(g, x, y))


def read_edge_list(path) -> Graph:
    """Read a graph from text: one ``u v`` pair per line, '#' starts a comment."""
    edges = []
    max_node = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphConstructionError(f"{path}:{lineno}: expected 'u v', got {raw.strip()!r}")
            u, v = int(parts[0]), int(parts[1])
            edges.append((u, v))
            max_node = max(max_node, u, v)
    return Graph.from_edges(max_node + 1, edges)


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w") as fh:
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")


def expected_er_edges(n: int, p: float) -> float:
    """Mean edge count of G(n, p): 0.5 n (n-1) p."""
    return 0.5 * n * (n - 1) * p


def er_probability(n: int, factor: float = 5.0) -> float:
    """The connectivity-safe edge probability factor * ln(n) / n, capped at 1."""
    return min(1.0, factor * math.log(n) / n)
