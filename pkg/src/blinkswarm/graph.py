"""Undirected graphs and Erdős–Rényi generation for the slot-coloring protocol."""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

_U64 = (1 << 64) - 1

# Philox key lanes. Each consumer of randomness in this package draws from its
# own lane so streams never collide across modules.
LANE_PICK = 0
LANE_LOSS = 1
LANE_GRAPH = 2
LANE_ARENA = 3
LANE_SLOTS = 4
LANE_OBSERVER = 5


def philox_stream(seed: int, lane: int, counter: int = 0) -> np.random.Generator:
    """Counter-based generator: output depends only on (seed, lane, counter, position)."""
    key = [seed & _U64, lane & _U64]
    return np.random.Generator(np.random.Philox(counter=[0, 0, 0, counter & _U64], key=key))


class GraphParameterError(ValueError):
    """Generator parameters out of range (e.g. average degree above n-1)."""


class InvalidNodeError(IndexError):
    """Node id outside the graph."""


class Graph:
    """Immutable undirected graph over dense node ids 0..node_count-1.

    Edges are canonical (u, v) pairs with u < v; adjacency lists are kept
    sorted so every traversal in the package is order-deterministic.
    """

    __slots__ = ("node_count", "edges", "_adj", "_dir_index")

    def __init__(self, node_count: int, edges: Iterable[tuple[int, int]] = ()):
        if node_count < 0:
            raise GraphParameterError(f"node_count must be >= 0, got {node_count}")
        canonical: set[tuple[int, int]] = set()
        for u, v in edges:
            if u == v:
                raise GraphParameterError(f"self-loop at node {u}")
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise InvalidNodeError(f"edge ({u}, {v}) outside 0..{node_count - 1}")
            canonical.add((u, v) if u < v else (v, u))
        self.node_count = node_count
        self.edges = frozenset(canonical)
        adj: list[list[int]] = [[] for _ in range(node_count)]
        for u, v in canonical:
            adj[u].append(v)
            adj[v].append(u)
        self._adj = tuple(tuple(sorted(nbrs)) for nbrs in adj)
        # directed edge index (u, v) -> k, in sorted order; used by the loss model
        self._dir_index: dict[tuple[int, int], int] = {}
        for k, (u, v) in enumerate(sorted((u, v) for a, b in canonical for (u, v) in ((a, b), (b, a)))):
            self._dir_index[(u, v)] = k

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> tuple[int, ...]:
        """Sorted adjacent node ids."""
        if not (0 <= v < self.node_count):
            raise InvalidNodeError(f"node {v} outside 0..{self.node_count - 1}")
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def max_degree(self) -> int:
        """Maximum vertex degree Δ; 0 for edgeless graphs."""
        if self.node_count == 0:
            return 0
        return max(len(a) for a in self._adj)

    def directed_edge_index(self, u: int, v: int) -> int:
        return self._dir_index[(u, v)]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Graph)
            and self.node_count == other.node_count
            and self.edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.node_count, self.edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.node_count}, m={self.edge_count})"


def erdos_renyi(n: int, c: float, seed: int) -> Graph:
    """Random G(n, p) graph with edge probability p = c / (n - 1).

    Each unordered pair is included independently, so the expected vertex
    degree is c and the expected edge count n*c/2. Identical (n, c, seed)
    always produce the identical edge set. Uses geometric skip-sampling,
    O(n + m), so 10k-node benchmark graphs are cheap.
    """
    if n < 1:
        raise GraphParameterError(f"n must be >= 1, got {n}")
    if c < 0 or c > n - 1:
        raise GraphParameterError(f"average degree c must lie in [0, {n - 1}], got {c}")
    p = 0.0 if n == 1 else c / (n - 1)
    if p <= 0.0:
        return Graph(n)
    if p >= 1.0:
        return Graph(n, ((u, v) for u in range(n) for v in range(u + 1, n)))

    rng = philox_stream(seed, LANE_GRAPH)
    total = n * (n - 1) // 2
    log1mp = math.log1p(-p)
    edges: list[tuple[int, int]] = []
    # walk the lexicographic pair index space with geometric jumps
    k = -1
    row = 0          # current row u
    row_end = n - 1  # pairs with index < row_end belong to row 0
    row_start = 0
    while True:
        u01 = rng.random()
        k += 1 + int(math.log1p(-u01) / log1mp)
        if k >= total:
            break
        while k >= row_end:
            row += 1
            row_start = row_end
            row_end += n - 1 - row
        edges.append((row, row + 1 + (k - row_start)))
    return Graph(n, edges)


def dump_edge_list(g: Graph, path: str) -> None:
    """Plain-text dump: first line "n m", then one "u v" line per edge."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{g.node_count} {g.edge_count}\n")
        for u, v in sorted(g.edges):
            fh.write(f"{u} {v}\n")


def load_edge_list(path: str) -> Graph:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise GraphParameterError(f"{path}: expected 'n m' header")
        n, m = int(header[0]), int(header[1])
        edges = []
        for line in fh:
            if line.strip():
                u, v = line.split()
                edges.append((int(u), int(v)))
    if len(edges) != m:
        raise GraphParameterError(f"{path}: header says {m} edges, found {len(edges)}")
    return Graph(n, edges)
