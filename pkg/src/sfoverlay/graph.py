"""Undirected simple graph with dense integer node ids and BFS utilities."""
from __future__ import annotations

from collections import deque
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from ._jit import jit

UNREACHABLE = -1


class GraphError(ValueError):
    """Invalid node id or degenerate input."""


class Graph:
    """Simple undirected graph on nodes ``0..n-1``.

    Adjacency is a list of sets so that duplicate-edge checks are O(1).
    ``total_degree`` is kept incrementally and always equals twice the
    number of edges.
    """

    def __init__(self, n_nodes: int = 0):
        if n_nodes < 0:
            raise GraphError("node count must be non-negative")
        self.adjacency: list[set[int]] = [set() for _ in range(n_nodes)]
        self.total_degree = 0
        self._csr = None

    @property
    def node_count(self) -> int:
        return len(self.adjacency)

    def __len__(self) -> int:
        return len(self.adjacency)

    def __repr__(self) -> str:
        return f"Graph(n_nodes={self.node_count}, n_edges={self.n_edges})"

    @property
    def n_edges(self) -> int:
        return self.total_degree // 2

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    @property
    def degrees(self) -> np.ndarray:
        return np.fromiter((len(a) for a in self.adjacency), dtype=np.int64, count=len(self.adjacency))

    def _check(self, u: int) -> None:
        if not 0 <= u < len(self.adjacency):
            raise GraphError(f"node id {u} out of range [0, {len(self.adjacency)})")

    def has_edge(self, u: int, v: int) -> bool:
        self._check(u)
        self._check(v)
        return v in self.adjacency[u]

    def add_edge(self, u: int, v: int) -> bool:
        """Add the edge u-v; return False for self-loops and duplicates."""
        self._check(u)
        self._check(v)
        if u == v or v in self.adjacency[u]:
            return False
        self.adjacency[u].add(v)
        self.adjacency[v].add(u)
        self.total_degree += 2
        self._csr = None
        return True

    def neighbors(self, u: int) -> set[int]:
        self._check(u)
        return self.adjacency[u]

    def edges(self) -> Iterable[tuple[int, int]]:
        """Each undirected edge once, as (u, v) with u < v, sorted."""
        for u, nbrs in enumerate(self.adjacency):
            for v in sorted(nbrs):
                if u < v:
                    yield u, v

    def edge_array(self) -> np.ndarray:
        out = np.array(list(self.edges()), dtype=np.int64)
        return out.reshape(-1, 2)

    @classmethod
    def from_edges(cls, n_nodes: int, edges) -> "Graph":
        g = cls(n_nodes)
        for u, v in edges:
            g.add_edge(int(u), int(v))
        return g

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) with each neighbor list sorted; cached until the next add_edge."""
        if self._csr is None:
            deg = self.degrees
            indptr = np.zeros(len(deg) + 1, dtype=np.int64)
            np.cumsum(deg, out=indptr[1:])
            indices = np.empty(indptr[-1], dtype=np.int64)
            for u, nbrs in enumerate(self.adjacency):
                indices[indptr[u]:indptr[u + 1]] = sorted(nbrs)
            self._csr = (indptr, indices)
        return self._csr

    def check_invariants(self) -> None:
        """Raise AssertionError if symmetry, simplicity or degree bookkeeping is broken."""
        total = 0
        for u, nbrs in enumerate(self.adjacency):
            assert u not in nbrs, f"self-loop at {u}"
            for v in nbrs:
                assert u in self.adjacency[v], f"asymmetric edge {u}-{v}"
            total += len(nbrs)
        assert total == self.total_degree, "total_degree out of sync"
        assert total % 2 == 0


# ---------------------------------------------------------------------------
# traversal

@jit
def _bfs_kernel(indptr, indices, source, max_depth):
    n = len(indptr) - 1
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    dist[source] = 0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        if max_depth >= 0 and du >= max_depth:
            continue
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if dist[v] < 0:
                dist[v] = du + 1
                queue[tail] = v
                tail += 1
    return dist


@jit
def _components_kernel(indptr, indices):
    n = len(indptr) - 1
    label = np.full(n, -1, np.int64)
    queue = np.empty(max(n, 1), np.int64)
    n_comp = 0
    for s in range(n):
        if label[s] >= 0:
            continue
        label[s] = n_comp
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            for p in range(indptr[u], indptr[u + 1]):
                v = indices[p]
                if label[v] < 0:
                    label[v] = n_comp
                    queue[tail] = v
                    tail += 1
        n_comp += 1
    return label, n_comp


class DistanceMap:
    """Hop distances from ``source``; ``None`` marks unreachable nodes."""

    def __init__(self, source: int, raw: np.ndarray):
        self.source = source
        self.raw = raw

    def __getitem__(self, v: int) -> int | None:
        d = int(self.raw[v])
        return None if d < 0 else d

    def __len__(self) -> int:
        return len(self.raw)

    def reachable(self, v: int) -> bool:
        return self.raw[v] >= 0

    def tolist(self) -> list[int | None]:
        return [None if d < 0 else int(d) for d in self.raw]


def bfs_distances(g: Graph, source: int, max_depth: int | None = None) -> DistanceMap:
    g._check(source)
    indptr, indices = g.csr()
    depth = -1 if max_depth is None else int(max_depth)
    return DistanceMap(source, _bfs_kernel(indptr, indices, source, depth))


def component_labels(g: Graph) -> tuple[np.ndarray, int]:
    indptr, indices = g.csr()
    return _components_kernel(indptr, indices)


def giant_component(g: Graph) -> tuple[int, np.ndarray]:
    """Size of the largest component and a boolean membership mask.

    Ties go to the component containing the lowest node id; labels are
    assigned in order of their smallest member, so argmax does that.
    """
    if g.node_count == 0:
        return 0, np.zeros(0, dtype=bool)
    labels, n_comp = component_labels(g)
    sizes = np.bincount(labels, minlength=n_comp)
    best = int(np.argmax(sizes))
    return int(sizes[best]), labels == best


def approx_avg_shortest_path(g: Graph, sample_sources: int, rng_seed=None) -> float:
    """Mean hop count from sampled sources to every node they can reach.

    Sources are drawn without replacement (all nodes if ``sample_sources``
    is at least N), so sampling every node gives the exact average.
    """
    if g.node_count < 2:
        raise GraphError("need at least two nodes")
    if sample_sources < 1:
        raise GraphError("sample_sources must be >= 1")
    if g.n_edges == 0:
        raise GraphError("graph has no edges; average path length undefined")
    rng = np.random.default_rng(rng_seed)
    n = g.node_count
    if sample_sources >= n:
        sources = np.arange(n)
    else:
        sources = np.sort(rng.choice(n, size=sample_sources, replace=False))
    indptr, indices = g.csr()
    total = 0
    pairs = 0
    for s in sources:
        d = _bfs_kernel(indptr, indices, int(s), -1)
        reach = d > 0
        total += int(d[reach].sum())
        pairs += int(reach.sum())
    if pairs == 0:
        raise GraphError("sampled sources reach no other node")
    return total / pairs


# ---------------------------------------------------------------------------
# edge-list text format

def write_edgelist(g: Graph, dest: str | Path | TextIO, comment: str | None = None) -> None:
    """Write ``u v`` lines, each undirected edge once.

    A ``# nodes N`` header preserves isolated nodes on round trip.
    """
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.append(f"# nodes {g.node_count}")
    lines.extend(f"{u} {v}" for u, v in g.edges())
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)


def parse_edgelist(text: str, n_nodes: int | None = None) -> Graph:
    edges = []
    declared = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "nodes" and parts[1].isdigit():
                declared = int(parts[1])
            continue
        parts = line.split()
        if len(parts) < 2:
            raise GraphError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphError(f"line {lineno}: non-integer node id in {line!r}") from None
        if u < 0 or v < 0:
            raise GraphError(f"line {lineno}: negative node id")
        edges.append((u, v))
    if n_nodes is None:
        n_nodes = declared
    if n_nodes is None:
        n_nodes = 1 + max((max(e) for e in edges), default=-1)
    return Graph.from_edges(n_nodes, edges)


def read_edgelist(path: str | Path, n_nodes: int | None = None) -> Graph:
    return parse_edgelist(Path(path).read_text(), n_nodes)
