"""Rumor centrality on trees and on BFS trees of general graphs.

``R(v, T) = n! / prod_u |T_u^v|`` counts the infection orders that start at
``v`` and are consistent with tree ``T`` (``T_u^v`` is the subtree of ``u``
when ``T`` is rooted at ``v``).  Values overflow quickly, so the public
functions return natural logarithms; :func:`rumor_centrality_exact` gives
integers for small trees.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .graph import RootedTree, SocialGraph, bfs_tree

EXACT_MAX_NODES = 20


def rumor_centrality(tree: RootedTree) -> dict[int, float]:
    """Log rumor centrality of every node of ``tree``.

    The root is evaluated directly from subtree sizes, the remaining nodes
    by passing ``R(c) = R(p) * t_c / (n - t_c)`` from parent to child.
    """
    n = len(tree)
    sizes = tree.subtree_sizes()
    log_r = {tree.root: math.lgamma(n + 1) - sum(math.log(t) for t in sizes.values())}
    kids = tree.children()
    stack = [tree.root]
    while stack:
        p = stack.pop()
        for c in kids[p]:
            t = sizes[c]
            log_r[c] = log_r[p] + math.log(t) - math.log(n - t)
            stack.append(c)
    return log_r


def rumor_centrality_exact(tree: RootedTree) -> dict[int, int]:
    """Integer rumor centrality of every node; trees up to 20 nodes."""
    n = len(tree)
    if n > EXACT_MAX_NODES:
        raise ValueError(f"exact rumor centrality limited to {EXACT_MAX_NODES} nodes, got {n}")
    sizes = tree.subtree_sizes()
    root_val = math.factorial(n) // math.prod(sizes.values())
    out = {tree.root: root_val}
    kids = tree.children()
    stack = [tree.root]
    while stack:
        p = stack.pop()
        for c in kids[p]:
            t = sizes[c]
            num = out[p] * t
            assert num % (n - t) == 0
            out[c] = num // (n - t)
            stack.append(c)
    return out


def root_rumor_centrality(tree: RootedTree) -> float:
    """Log rumor centrality of the root only."""
    n = len(tree)
    return math.lgamma(n + 1) - sum(math.log(t) for t in tree.subtree_sizes().values())


@numba.njit(cache=True)
def _bfs_log_centrality(indptr, indices):  # pragma: no cover - compiled
    n = indptr.shape[0] - 1
    out = np.empty(n, dtype=np.float64)
    dist = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    size = np.zeros(n, dtype=np.int64)
    for s in range(n):
        dist[s] = 0
        order[0] = s
        head = 0
        tail = 1
        while head < tail:
            u = order[head]
            head += 1
            for e in range(indptr[u], indptr[u + 1]):
                w = indices[e]
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    order[tail] = w
                    tail += 1
        # queue order is non-decreasing in distance, so children come later
        acc = 0.0
        for k in range(tail - 1, 0, -1):
            w = order[k]
            size[w] += 1
            acc += math.log(size[w])
            # parent: smallest-id neighbour one hop closer (neighbours are sorted)
            for e in range(indptr[w], indptr[w + 1]):
                u = indices[e]
                if dist[u] == dist[w] - 1:
                    size[u] += size[w]
                    break
        size[s] += 1
        acc += math.log(size[s])
        out[s] = math.lgamma(tail + 1.0) - acc
        for k in range(tail):
            u = order[k]
            dist[u] = -1
            size[u] = 0
    return out


def bfs_log_centrality_array(g: SocialGraph) -> np.ndarray:
    """Like :func:`bfs_rumor_centrality`, as an array aligned with ``g.nodes``."""
    if g.n_nodes == 0:
        return np.empty(0)
    indptr, indices = g.csr()
    return _bfs_log_centrality(indptr, indices)


def bfs_rumor_centrality(g: SocialGraph) -> dict[int, float]:
    """``log R(v, T_bfs(v))`` for every node ``v`` of ``g``.

    Each node is scored on its own BFS tree, over its own component.
    """
    return dict(zip(g.nodes, bfs_log_centrality_array(g).tolist()))


def bfs_rumor_centrality_reference(g: SocialGraph) -> dict[int, float]:
    """Pure-Python equivalent of :func:`bfs_rumor_centrality`."""
    return {v: root_rumor_centrality(bfs_tree(g, v)) for v in g.nodes}
