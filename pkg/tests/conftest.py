"""Shared fixtures and independent oracles.

The oracles here are deliberately written from scratch (Prim instead of
Kruskal, heapq Dijkstra, per-pair loops) so the library is checked against
implementations that share no code with it.
"""

import heapq

import numpy as np
import pytest

from treefield.graphs import TensorField, WeightedGraph, WeightedTree


def prim_mst_weight(g: WeightedGraph) -> float:
    """Total MST weight via Prim's algorithm (oracle for Kruskal)."""
    adj = g.adjacency()
    visited = [False] * g.n
    visited[0] = True
    heap = [(w, u) for u, w in adj[0]]
    heapq.heapify(heap)
    total = 0.0
    count = 1
    while heap and count < g.n:
        w, v = heapq.heappop(heap)
        if visited[v]:
            continue
        visited[v] = True
        count += 1
        total += w
        for u, wu in adj[v]:
            if not visited[u]:
                heapq.heappush(heap, (wu, u))
    assert count == g.n, "oracle needs a connected graph"
    return total


def dijkstra_oracle(adjacency, source: int, n: int) -> np.ndarray:
    """Plain heapq Dijkstra (oracle for scipy and for tree sweeps)."""
    dist = np.full(n, np.inf)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for u, w in adjacency[v]:
            nd = d + w
            if nd < dist[u]:
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist


def naive_integrate(t: WeightedTree, f, X: np.ndarray) -> np.ndarray:
    """Per-pair loop integration; the third, slowest reference."""
    n = t.n
    adj = t.adjacency
    out = np.zeros_like(X, dtype=np.float64)
    for i in range(n):
        drow = dijkstra_oracle(adj, i, n)
        for j in range(n):
            out[i] += f(np.array([drow[j]]))[0] * X[j]
    return out


def dense_cross(x, y, f) -> np.ndarray:
    """Direct materialization of f(x_i + y_j)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return np.asarray(f(x[:, None] + y[None, :]), dtype=np.float64)


def rel_frobenius(a, b) -> float:
    denom = np.linalg.norm(b)
    if denom == 0:
        return float(np.linalg.norm(a - b))
    return float(np.linalg.norm(a - b) / denom)


def random_spanning_tree_weight(g: WeightedGraph, rng) -> float:
    """Weight of a random spanning tree (random-order Kruskal)."""
    edges = list(g.edges)
    rng.shuffle(edges)
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    total = 0.0
    count = 0
    for u, v, w in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            total += w
            count += 1
    assert count == g.n - 1
    return total


def scalar_field(values) -> TensorField:
    return TensorField.from_array(np.asarray(values, dtype=np.float64))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
