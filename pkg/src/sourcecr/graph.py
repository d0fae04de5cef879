"""Undirected social graphs: ingestion, traversal and synthetic topologies.

Node ids are arbitrary non-negative integers and are preserved at the
interface.  A dense ``0..n-1`` index (see :meth:`SocialGraph.csr`) is kept
internally for the vectorised kernels.
"""

from __future__ import annotations

from bisect import bisect_left
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, TextIO

import numpy as np


class EdgeListParseError(ValueError):
    """Raised when an edge-list line cannot be parsed."""

    def __init__(self, lineno: int, line: str):
        super().__init__(f"line {lineno}: cannot parse edge {line.strip()!r}")
        self.lineno = lineno


class SocialGraph:
    """Immutable undirected simple graph.

    Parameters
    ----------
    nodes : iterable of int
        Node ids. Endpoints of ``edges`` are added automatically.
    edges : iterable of (int, int)
        Undirected edges. Duplicates and reversed duplicates collapse;
        self-loops are dropped.
    """

    __slots__ = ("_adj", "_nodes", "_n_edges", "_csr", "_index")

    def __init__(self, nodes: Iterable[int] = (), edges: Iterable[tuple[int, int]] = ()):
        adj: dict[int, set[int]] = {int(v): set() for v in nodes}
        for u, v in edges:
            u, v = int(u), int(v)
            adj.setdefault(u, set())
            adj.setdefault(v, set())
            if u != v:
                adj[u].add(v)
                adj[v].add(u)
        self._nodes = tuple(sorted(adj))
        self._adj = {v: tuple(sorted(adj[v])) for v in self._nodes}
        self._n_edges = sum(len(nb) for nb in self._adj.values()) // 2
        self._csr = None
        self._index = None

    @classmethod
    def _from_sorted(cls, adj: dict[int, tuple[int, ...]]) -> "SocialGraph":
        # trusted path: symmetric, loop-free, neighbour tuples already sorted
        self = cls.__new__(cls)
        self._nodes = tuple(sorted(adj))
        self._adj = {v: adj[v] for v in self._nodes}
        self._n_edges = sum(len(nb) for nb in adj.values()) // 2
        self._csr = None
        self._index = None
        return self

    @classmethod
    def from_adjacency(cls, adjacency: Mapping[int, Iterable[int]]) -> "SocialGraph":
        edges = ((u, v) for u, nbrs in adjacency.items() for v in nbrs)
        return cls(adjacency.keys(), edges)

    # -- basic queries -------------------------------------------------

    @property
    def nodes(self) -> tuple[int, ...]:
        return self._nodes

    def neighbors(self, v: int) -> tuple[int, ...]:
        try:
            return self._adj[v]
        except KeyError:
            raise KeyError(f"node {v} not in graph") from None

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def has_edge(self, u: int, v: int) -> bool:
        nb = self._adj.get(u)
        if nb is None:
            return False
        i = bisect_left(nb, v)
        return i < len(nb) and nb[i] == v

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in self._nodes for v in self._adj[u] if u < v]

    @property
    def n_nodes(self) -> int:
        return len(self._nodes)

    @property
    def n_edges(self) -> int:
        return self._n_edges

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, v) -> bool:
        return v in self._adj

    def __iter__(self):
        return iter(self._nodes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SocialGraph):
            return NotImplemented
        return self._adj == other._adj

    def __hash__(self):
        return hash((self._nodes, self._n_edges))

    def __repr__(self) -> str:
        return f"SocialGraph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"

    # -- dense view ----------------------------------------------------

    def index_of(self) -> dict[int, int]:
        """Map node id -> dense position in :attr:`nodes`."""
        if self._index is None:
            self._index = {v: i for i, v in enumerate(self._nodes)}
        return self._index

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(indptr, indices)`` over dense positions, neighbours sorted."""
        if self._csr is None:
            index = self.index_of()
            indptr = np.zeros(len(self._nodes) + 1, dtype=np.int64)
            indptr[1:] = np.cumsum([len(self._adj[v]) for v in self._nodes])
            indices = np.fromiter(
                (index[u] for v in self._nodes for u in self._adj[v]),
                dtype=np.int64,
                count=int(indptr[-1]),
            )
            self._csr = (indptr, indices)
        return self._csr


@dataclass(frozen=True)
class RootedTree:
    """Spanning tree of one connected component, rooted at ``root``."""

    root: int
    parent: dict[int, int | None] = field(repr=False)
    hop_distance: dict[int, int] = field(repr=False)

    @property
    def nodes(self) -> list[int]:
        return list(self.parent)

    def __len__(self) -> int:
        return len(self.parent)

    def children(self) -> dict[int, list[int]]:
        kids: dict[int, list[int]] = {v: [] for v in self.parent}
        for v, p in self.parent.items():
            if p is not None:
                kids[p].append(v)
        for c in kids.values():
            c.sort()
        return kids

    def subtree_sizes(self) -> dict[int, int]:
        size = {v: 1 for v in self.parent}
        for v in sorted(self.parent, key=self.hop_distance.__getitem__, reverse=True):
            p = self.parent[v]
            if p is not None:
                size[p] += size[v]
        return size

    @classmethod
    def from_edges(cls, root: int, edges: Iterable[tuple[int, int]]) -> "RootedTree":
        """Orient an undirected tree given as an edge list away from ``root``."""
        g = SocialGraph([root], edges)
        tree = bfs_tree(g, root)
        if len(tree) != g.n_nodes or g.n_edges != g.n_nodes - 1:
            raise ValueError("edges do not form a tree containing the root")
        return tree


def load_edge_list(stream: TextIO | Iterable[str], *, skip_header: bool = False) -> SocialGraph:
    """Parse a SNAP-style edge list.

    Lines starting with ``#`` or ``%`` are comments.  Each remaining line
    holds two integer ids separated by whitespace or a comma.  Set
    ``skip_header`` for CSV exports such as ``node_1,node_2``.  A self-loop
    adds no edge but keeps its node, which is how isolated nodes are stored.
    """
    edges = []
    nodes = set()
    first = True
    for lineno, line in enumerate(stream, start=1):
        s = line.strip()
        if not s or s[0] in "#%":
            continue
        if first and skip_header:
            first = False
            continue
        first = False
        parts = s.replace(",", " ").split()
        if len(parts) != 2:
            raise EdgeListParseError(lineno, line)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListParseError(lineno, line) from None
        if u < 0 or v < 0:
            raise EdgeListParseError(lineno, line)
        if u != v:
            edges.append((u, v))
        else:
            nodes.add(u)
    return SocialGraph(nodes, edges)


def read_edge_list(path, **kwargs) -> SocialGraph:
    with open(path) as fh:
        return load_edge_list(fh, **kwargs)


def write_edge_list(g: SocialGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# nodes {g.n_nodes} edges {g.n_edges}\n")
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")
        for v in g.nodes:
            if not g.degree(v):
                fh.write(f"{v} {v}\n")


def induced_subgraph(g: SocialGraph, keep: Iterable[int]) -> SocialGraph:
    keep = set(keep)
    missing = [v for v in keep if v not in g]
    if missing:
        raise KeyError(f"nodes not in graph: {sorted(missing)[:5]}")
    return SocialGraph._from_sorted(
        {u: tuple(v for v in g.neighbors(u) if v in keep) for u in keep}
    )


def bfs_tree(g: SocialGraph, root: int) -> RootedTree:
    """BFS tree of ``root``'s component.

    Among equally distant candidate parents the smallest node id wins,
    which is what a level-by-level BFS over sorted frontiers produces.
    """
    if root not in g:
        raise KeyError(f"root {root} not in graph")
    parent: dict[int, int | None] = {root: None}
    dist = {root: 0}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:  # frontier is sorted, so first claim is smallest id
            for w in g.neighbors(u):
                if w not in dist:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    nxt.append(w)
        nxt.sort()
        frontier = nxt
    return RootedTree(root, parent, dist)


def hop_distances(g: SocialGraph, source: int) -> dict[int, int]:
    if source not in g:
        raise KeyError(f"node {source} not in graph")
    dist = {source: 0}
    q = deque([source])
    while q:
        u = q.popleft()
        for w in g.neighbors(u):
            if w not in dist:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def connected_components(g: SocialGraph) -> list[set[int]]:
    seen: set[int] = set()
    comps = []
    for v in g.nodes:
        if v not in seen:
            comp = set(hop_distances(g, v))
            seen |= comp
            comps.append(comp)
    return comps


def largest_component(g: SocialGraph) -> set[int]:
    if g.n_nodes == 0:
        raise ValueError("graph is empty")
    # components are discovered in increasing order of their smallest id
    return max(connected_components(g), key=len)


def generate_regular_tree(d: int, depth: int) -> SocialGraph:
    """Tree whose root has ``d`` children and other internal nodes ``d-1``."""
    if d < 3:
        raise ValueError(f"degree must be >= 3, got {d}")
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    edges = []
    level = [0]
    nxt_id = 1
    for k in range(depth):
        new_level = []
        for u in level:
            for _ in range(d if k == 0 else d - 1):
                edges.append((u, nxt_id))
                new_level.append(nxt_id)
                nxt_id += 1
        level = new_level
    return SocialGraph(range(nxt_id), edges)


def generate_random_graph(n: int, avg_degree: float, seed: int) -> SocialGraph:
    """Erdos-Renyi G(n, p) with ``p = avg_degree / (n - 1)``."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0 < avg_degree < n:
        raise ValueError(f"avg_degree must lie in (0, n), got {avg_degree}")
    p = min(1.0, avg_degree / (n - 1))
    rng = np.random.default_rng(seed)
    edges = []
    for i in range(n - 1):
        hits = np.flatnonzero(rng.random(n - i - 1) < p)
        edges.extend((i, i + 1 + int(j)) for j in hits)
    return SocialGraph(range(n), edges)
