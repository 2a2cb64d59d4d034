"""Graph and tree substrates: representations, ingestion, metrics.

Everything here is immutable after construction and safe to share across
threads. Distances are 64-bit floats; traversals visit neighbors in
ascending-id order so repeated runs are bit-identical.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import ParseError, PreconditionError

__all__ = [
    "WeightedGraph",
    "WeightedTree",
    "TensorField",
    "Mesh",
    "load_edge_list",
    "load_off_mesh",
    "minimum_spanning_tree",
    "tree_distances_from",
    "graph_shortest_paths",
    "all_pairs_distances",
    "random_tree",
    "path_with_random_edges",
]


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with positive edge weights, vertices 0..n-1.

    Edges are stored once per undirected pair. Connectivity is not required
    here; operations that need it state (and check) their own precondition.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        seen = set()
        for u, v, w in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise PreconditionError(f"edge ({u},{v}) out of range for n={self.n}")
            if u == v:
                raise PreconditionError(f"self-loop at vertex {u}")
            if not (w > 0):
                raise PreconditionError(f"nonpositive weight {w} on edge ({u},{v})")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise PreconditionError(f"duplicate edge ({u},{v})")
            seen.add(key)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> list[list[tuple[int, float]]]:
        """Per-vertex (neighbor, weight) lists sorted by neighbor id."""
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for u, v, w in self.edges:
            adj[u].append((v, w))
            adj[v].append((u, w))
        for lst in adj:
            lst.sort()
        return adj

    def to_sparse(self) -> csr_matrix:
        us = np.fromiter((e[0] for e in self.edges), dtype=np.int64, count=len(self.edges))
        vs = np.fromiter((e[1] for e in self.edges), dtype=np.int64, count=len(self.edges))
        ws = np.fromiter((e[2] for e in self.edges), dtype=np.float64, count=len(self.edges))
        rows = np.concatenate([us, vs])
        cols = np.concatenate([vs, us])
        data = np.concatenate([ws, ws])
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        if len(self.edges) < self.n - 1:
            return False
        ncomp, _ = connected_components(self.to_sparse(), directed=False)
        return ncomp == 1


class WeightedTree:
    """Connected, positively weighted tree on vertices 0..n-1.

    Adjacency lists are sorted by neighbor id; this fixes every traversal
    order in the package deterministically.
    """

    __slots__ = ("n", "adjacency")

    def __init__(self, n: int, adjacency: list[list[tuple[int, float]]], _validated: bool = False):
        self.n = n
        self.adjacency = adjacency
        if not _validated:
            self._validate()

    def _validate(self):
        deg_sum = 0
        for v, lst in enumerate(self.adjacency):
            lst.sort()
            prev = -1
            for u, w in lst:
                if not (0 <= u < self.n) or u == v:
                    raise PreconditionError(f"bad neighbor {u} of vertex {v}")
                if u == prev:
                    raise PreconditionError(f"duplicate edge ({v},{u})")
                if not (w > 0):
                    raise PreconditionError(f"nonpositive weight {w} on edge ({v},{u})")
                prev = u
            deg_sum += len(lst)
        if self.n == 0 or deg_sum != 2 * (self.n - 1):
            raise PreconditionError(
                f"a tree on {self.n} vertices needs exactly {self.n - 1} edges"
            )
        # connectivity: single sweep from 0
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        count = 1
        while stack:
            v = stack.pop()
            for u, _ in self.adjacency[v]:
                if not seen[u]:
                    seen[u] = True
                    count += 1
                    stack.append(u)
        if count != self.n:
            raise PreconditionError("tree adjacency is not connected")

    @classmethod
    def from_edges(cls, n: int, edges) -> "WeightedTree":
        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for u, v, w in edges:
            adj[u].append((v, float(w)))
            adj[v].append((u, float(w)))
        return cls(n, adj)

    def edges(self) -> list[tuple[int, int, float]]:
        out = []
        for v, lst in enumerate(self.adjacency):
            for u, w in lst:
                if v < u:
                    out.append((v, u, w))
        return out

    def as_graph(self) -> WeightedGraph:
        return WeightedGraph(self.n, tuple(self.edges()))

    def to_sparse(self) -> csr_matrix:
        return self.as_graph().to_sparse()

    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges()))


@dataclass(frozen=True)
class TensorField:
    """Vertex-indexed field of shape n x d1 x ... x ds, flattened to n x D.

    dims is the trailing shape; D = prod(dims) with D >= 1 (scalar fields
    use dims=()).
    """

    n: int
    dims: tuple[int, ...]
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = int(np.prod(self.dims)) if self.dims else 1
        if self.data.shape != (self.n, d):
            raise PreconditionError(
                f"field data shape {self.data.shape} != ({self.n}, {d})"
            )
        if not np.isfinite(self.data).all():
            raise PreconditionError("field contains non-finite entries")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "TensorField":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim == 1:
            return cls(arr.shape[0], (), arr.reshape(arr.shape[0], 1).copy())
        n = arr.shape[0]
        dims = tuple(arr.shape[1:])
        return cls(n, dims, arr.reshape(n, -1).astype(np.float64, copy=True))

    def to_array(self) -> np.ndarray:
        if not self.dims:
            return self.data[:, 0].copy()
        return self.data.reshape((self.n, *self.dims)).copy()


@dataclass(frozen=True)
class Mesh:
    """Triangle mesh ingested as a metric graph.

    normals are unit area-weighted vertex normals; skipped_faces counts
    zero-area triangles dropped during ingestion.
    """

    graph: WeightedGraph
    positions: np.ndarray
    normals: np.ndarray
    skipped_faces: int


def load_edge_list(path) -> WeightedGraph:
    """Parse a "u v w" text file ('#' comments) into a WeightedGraph.

    Vertex count is 1 + max id seen. Raises ParseError with the offending
    line number, PreconditionError for nonpositive weights / duplicates.
    """
    edges = []
    max_id = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected 'u v w', got {raw.rstrip()!r}")
            try:
                u = int(parts[0])
                v = int(parts[1])
                w = float(parts[2])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            if u < 0 or v < 0:
                raise ParseError(f"{path}:{lineno}: negative vertex id")
            if not (w > 0):
                raise PreconditionError(f"{path}:{lineno}: nonpositive weight {w}")
            edges.append((u, v, w))
            max_id = max(max_id, u, v)
    if max_id < 0:
        raise ParseError(f"{path}: no edges found")
    return WeightedGraph(max_id + 1, tuple(edges))


def load_off_mesh(path) -> Mesh:
    """Load a triangle mesh in OFF format.

    The graph has mesh vertices as vertices and unique triangle edges
    weighted by Euclidean length. Vertex normals are area-weighted averages
    of incident face normals (zero-area faces are skipped and counted).
    """
    with open(path, "r", encoding="utf-8") as fh:
        tokens: list[str] = []
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise ParseError(f"{path}: missing OFF header")
    pos = 1
    try:
        nv, nf, _ne = int(tokens[pos]), int(tokens[pos + 1]), int(tokens[pos + 2])
        pos += 3
        verts = np.empty((nv, 3), dtype=np.float64)
        for i in range(nv):
            verts[i] = [float(tokens[pos]), float(tokens[pos + 1]), float(tokens[pos + 2])]
            pos += 3
        faces = np.empty((nf, 3), dtype=np.int64)
        for i in range(nf):
            k = int(tokens[pos])
            if k != 3:
                raise ParseError(f"{path}: face {i} has {k} vertices; only triangles supported")
            faces[i] = [int(tokens[pos + 1]), int(tokens[pos + 2]), int(tokens[pos + 3])]
            pos += 4
    except (IndexError, ValueError) as exc:
        raise ParseError(f"{path}: malformed OFF file ({exc})") from exc
    if nf > 0 and (faces.min() < 0 or faces.max() >= nv):
        raise ParseError(f"{path}: face references vertex out of range")

    normals = np.zeros((nv, 3), dtype=np.float64)
    edge_set = set()
    skipped = 0
    for a, b, c in faces:
        cross = np.cross(verts[b] - verts[a], verts[c] - verts[a])
        if np.linalg.norm(cross) == 0.0:
            skipped += 1
            continue
        # cross norm = 2*area, so summing raw cross products is area weighting
        normals[a] += cross
        normals[b] += cross
        normals[c] += cross
        for u, v in ((a, b), (b, c), (a, c)):
            edge_set.add((u, v) if u < v else (v, u))
    lengths = np.linalg.norm(normals, axis=1)
    nz = lengths > 0
    normals[nz] /= lengths[nz, None]

    edges = []
    for u, v in sorted(edge_set):
        w = float(np.linalg.norm(verts[u] - verts[v]))
        if w == 0.0:
            raise ParseError(f"{path}: coincident vertices {u},{v} give zero-length edge")
        edges.append((int(u), int(v), w))
    graph = WeightedGraph(nv, tuple(edges))
    return Mesh(graph=graph, positions=verts, normals=normals, skipped_faces=skipped)


class _UnionFind:
    __slots__ = ("parent", "rank")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def minimum_spanning_tree(g: WeightedGraph) -> WeightedTree:
    """Kruskal MST with edges sorted by (weight, u, v); deterministic.

    Raises PreconditionError if g is disconnected.
    """
    if g.n == 0:
        raise PreconditionError("empty graph")
    ordered = sorted((w, min(u, v), max(u, v)) for u, v, w in g.edges)
    uf = _UnionFind(g.n)
    chosen = []
    for w, u, v in ordered:
        if uf.union(u, v):
            chosen.append((u, v, w))
            if len(chosen) == g.n - 1:
                break
    if len(chosen) != g.n - 1:
        raise PreconditionError("graph is disconnected; MST undefined")
    return WeightedTree.from_edges(g.n, chosen)


def _distances_adj(adjacency, root: int, n: int) -> np.ndarray:
    """BFS accumulation d[v] = d[parent] + w, neighbors in ascending id."""
    dist = np.empty(n, dtype=np.float64)
    seen = np.zeros(n, dtype=bool)
    dist[root] = 0.0
    seen[root] = True
    queue = deque([root])
    while queue:
        v = queue.popleft()
        dv = dist[v]
        for u, w in adjacency[v]:
            if not seen[u]:
                seen[u] = True
                dist[u] = dv + w
                queue.append(u)
    return dist


def tree_distances_from(t: WeightedTree, root: int) -> np.ndarray:
    """Distances from root along unique tree paths (exact path sums)."""
    if not (0 <= root < t.n):
        raise PreconditionError(f"root {root} out of range")
    return _distances_adj(t.adjacency, root, t.n)


def graph_shortest_paths(g: WeightedGraph, sources) -> np.ndarray:
    """Dijkstra distances from each source; g must be connected."""
    sources = np.asarray(sources, dtype=np.int64)
    if sources.size and (sources.min() < 0 or sources.max() >= g.n):
        raise PreconditionError("source out of range")
    if not g.is_connected():
        raise PreconditionError("graph is disconnected")
    return dijkstra(g.to_sparse(), directed=False, indices=sources)


def all_pairs_distances(obj) -> np.ndarray:
    """Dense all-pairs shortest-path matrix for a graph or tree.

    One shared code path so brute-force integrators and the metric
    evaluator produce bit-identical matrices.
    """
    sparse = obj.to_sparse()
    dist = dijkstra(sparse, directed=False)
    if np.isinf(dist).any():
        raise PreconditionError("input is disconnected")
    return dist


def random_tree(n: int, seed: int = 0, unit_weights: bool = False,
                low: float = 0.0, high: float = 1.0) -> WeightedTree:
    """Uniform random labeled tree (Prufer decode) with random weights.

    Weights are uniform on (low, high) excluding endpoints, or all 1.0.
    """
    if n < 1:
        raise PreconditionError("need n >= 1")
    rng = np.random.default_rng(seed)
    if n == 1:
        return WeightedTree(1, [[]], _validated=True)
    if n == 2:
        w = 1.0 if unit_weights else _positive_uniform(rng, low, high, 1)[0]
        return WeightedTree.from_edges(2, [(0, 1, w)])
    prufer = rng.integers(0, n, size=n - 2)
    degree = np.ones(n, dtype=np.int64)
    for v in prufer:
        degree[v] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in prufer:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, int(v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, int(v))
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((u, v))
    if unit_weights:
        weights = np.ones(n - 1)
    else:
        weights = _positive_uniform(rng, low, high, n - 1)
    return WeightedTree.from_edges(n, [(a, b, w) for (a, b), w in zip(edges, weights)])


def _positive_uniform(rng, low, high, size):
    w = rng.uniform(low, high, size=size)
    while (w <= low).any():
        w[w <= low] = rng.uniform(low, high, size=int((w <= low).sum()))
    return w


def path_with_random_edges(n: int, extra_edges: int, seed: int = 0) -> WeightedGraph:
    """Path graph 0-1-...-(n-1) plus extra random non-duplicate edges.

    All weights (path and extra) are drawn uniformly from (0, 1).
    """
    if n < 2:
        raise PreconditionError("need n >= 2")
    max_extra = n * (n - 1) // 2 - (n - 1)
    if extra_edges > max_extra:
        raise PreconditionError(f"cannot add {extra_edges} distinct non-path edges")
    rng = np.random.default_rng(seed)
    present = {(i, i + 1) for i in range(n - 1)}
    extras = []
    while len(extras) < extra_edges:
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u == v:
            continue
        key = (u, v) if u < v else (v, u)
        if key in present:
            continue
        present.add(key)
        extras.append(key)
    all_edges = [(i, i + 1) for i in range(n - 1)] + extras
    weights = _positive_uniform(rng, 0.0, 1.0, len(all_edges))
    return WeightedGraph(n, tuple((u, v, float(w)) for (u, v), w in zip(all_edges, weights)))
