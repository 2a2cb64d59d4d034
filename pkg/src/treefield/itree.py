"""Preprocessing structure for fast field integration on a tree.

The structure is a rooted binary decomposition built once per tree and
reused across every field and every scalar map. Internal nodes record, for
each of the two sides of a pivot decomposition, the side's vertices grouped
by their exact distance from the pivot; leaves store raw pairwise distance
matrices for small subtrees. Scalar maps are applied at integration time,
never here, so one structure serves every map.

Serialized form (little-endian, see ``IntegratorTree.to_bytes``):

    magic b"TFIT", u32 version=1, i64 n, i64 leaf_threshold,
    u8 has_quantization, f64 quantization, then nodes in preorder:
      u8 tag (0=leaf, 1=internal)
      leaf:     i64 m, i64 ids[m], f64 dist[m*m]
      internal: i64 m, i64 ids[m], i64 pivot, twice (left then right):
                i64 side_m, i64 k, i64 pos[side_m], f64 dists[k],
                i64 dist_index[side_m]
                followed by the two child nodes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, PreconditionError
from .graphs import WeightedTree, _distances_adj
from .separator import _decompose_adjacency

__all__ = [
    "LeafNode",
    "Side",
    "InternalNode",
    "IntegratorTree",
    "ITStats",
    "build_integrator_tree",
    "it_stats",
]

DEFAULT_LEAF_THRESHOLD = 32


class LeafNode:
    """Small subtree stored as its raw pairwise distance matrix."""

    __slots__ = ("ids", "dist")

    def __init__(self, ids: np.ndarray, dist: np.ndarray):
        self.ids = ids
        self.dist = dist

    @property
    def size(self) -> int:
        return len(self.ids)


class Side:
    """One side of a pivot decomposition, grouped by pivot distance.

    ids[i] is the original-tree id of side-local vertex i (ids[0] is the
    pivot); pos[i] is its row in the parent node's local order. dists is
    the sorted array of distinct pivot distances (dists[0] = 0), and
    dist_index maps each local vertex to its slot in dists. group_order
    concatenates the per-distance vertex groups (ascending local id within
    a group); group_starts[j] is the offset of group j.
    """

    __slots__ = ("ids", "pos", "dists", "dist_index", "group_order", "group_starts")

    def __init__(self, ids, pos, dists, dist_index):
        self.ids = ids
        self.pos = pos
        self.dists = dists
        self.dist_index = dist_index
        self.group_order = np.argsort(dist_index, kind="stable").astype(np.int64)
        sorted_idx = dist_index[self.group_order]
        self.group_starts = np.searchsorted(
            sorted_idx, np.arange(len(dists)), side="left"
        ).astype(np.int64)

    @property
    def size(self) -> int:
        return len(self.ids)

    def groups(self) -> list[np.ndarray]:
        """Per-distance ordered local-id groups (the expanded view)."""
        bounds = list(self.group_starts) + [len(self.group_order)]
        return [self.group_order[bounds[j]:bounds[j + 1]] for j in range(len(self.dists))]


class InternalNode:
    """Pivot node: two child links plus the grouped side arrays."""

    __slots__ = ("ids", "pivot", "left", "right", "left_side", "right_side")

    def __init__(self, ids, pivot, left, right, left_side, right_side):
        self.ids = ids
        self.pivot = pivot
        self.left = left
        self.right = right
        self.left_side = left_side
        self.right_side = right_side

    @property
    def size(self) -> int:
        return len(self.ids)


class IntegratorTree:
    """Root of the decomposition plus build parameters.

    quantization, when set to q, means all stored distances were rounded
    to multiples of 1/q (exact for trees whose weights are multiples of
    1/q), which licenses the FFT-based cross multipliers downstream.
    """

    __slots__ = ("root", "n", "leaf_threshold", "quantization")

    def __init__(self, root, n: int, leaf_threshold: int, quantization=None):
        self.root = root
        self.n = n
        self.leaf_threshold = leaf_threshold
        self.quantization = quantization

    def nodes(self):
        """Preorder iterator over all nodes."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, InternalNode):
                stack.append(node.right)
                stack.append(node.left)

    def to_bytes(self) -> bytes:
        out = [b"TFIT", struct.pack("<I", 1)]
        q = self.quantization
        out.append(struct.pack("<qqBd", self.n, self.leaf_threshold,
                               0 if q is None else 1, 0.0 if q is None else float(q)))
        _write_node(self.root, out)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "IntegratorTree":
        if blob[:4] != b"TFIT":
            raise ParseError("bad magic in serialized integrator tree")
        (version,) = struct.unpack_from("<I", blob, 4)
        if version != 1:
            raise ParseError(f"unsupported integrator-tree version {version}")
        n, threshold, has_q, qval = struct.unpack_from("<qqBd", blob, 8)
        offset = 8 + struct.calcsize("<qqBd")
        root, offset = _read_node(blob, offset)
        if offset != len(blob):
            raise ParseError("trailing bytes in serialized integrator tree")
        return cls(root, n, threshold, float(qval) if has_q else None)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def _write_node(node, out):
    if isinstance(node, LeafNode):
        out.append(struct.pack("<Bq", 0, len(node.ids)))
        out.append(node.ids.astype("<i8").tobytes())
        out.append(node.dist.astype("<f8").tobytes())
        return
    out.append(struct.pack("<Bqq", 1, len(node.ids), node.pivot))
    out.append(node.ids.astype("<i8").tobytes())
    for side in (node.left_side, node.right_side):
        out.append(struct.pack("<qq", side.size, len(side.dists)))
        out.append(side.pos.astype("<i8").tobytes())
        out.append(side.dists.astype("<f8").tobytes())
        out.append(side.dist_index.astype("<i8").tobytes())
    _write_node(node.left, out)
    _write_node(node.right, out)


def _read_node(blob, offset):
    (tag,) = struct.unpack_from("<B", blob, offset)
    offset += 1
    if tag == 0:
        (m,) = struct.unpack_from("<q", blob, offset)
        offset += 8
        ids = np.frombuffer(blob, "<i8", m, offset).copy()
        offset += 8 * m
        dist = np.frombuffer(blob, "<f8", m * m, offset).reshape(m, m).copy()
        offset += 8 * m * m
        return LeafNode(ids, dist), offset
    if tag != 1:
        raise ParseError(f"bad node tag {tag}")
    m, pivot = struct.unpack_from("<qq", blob, offset)
    offset += 16
    ids = np.frombuffer(blob, "<i8", m, offset).copy()
    offset += 8 * m
    sides = []
    for _ in range(2):
        sm, k = struct.unpack_from("<qq", blob, offset)
        offset += 16
        pos = np.frombuffer(blob, "<i8", sm, offset).copy()
        offset += 8 * sm
        dists = np.frombuffer(blob, "<f8", k, offset).copy()
        offset += 8 * k
        dist_index = np.frombuffer(blob, "<i8", sm, offset).copy()
        offset += 8 * sm
        sides.append(Side(ids[pos], pos, dists, dist_index))
    left, offset = _read_node(blob, offset)
    right, offset = _read_node(blob, offset)
    return InternalNode(ids, pivot, left, right, sides[0], sides[1]), offset


def build_integrator_tree(t: WeightedTree, leaf_threshold: int = DEFAULT_LEAF_THRESHOLD,
                          quantization=None) -> IntegratorTree:
    """Build the decomposition; O(n log n) and fully deterministic.

    Subtrees of at most max(leaf_threshold, 3) vertices become dense
    leaves; larger ones are pivot-split. leaf_threshold below 5 therefore
    pivots 4- and 5-vertex subtrees, where the prefix construction is still
    valid even though the public decomposition contract starts at 6.
    """
    if leaf_threshold < 2:
        raise PreconditionError("leaf_threshold must be >= 2")
    if quantization is not None and quantization <= 0:
        raise PreconditionError("quantization must be positive")
    ids = np.arange(t.n, dtype=np.int64)
    root = _build(t.adjacency, t.n, ids, leaf_threshold, quantization)
    return IntegratorTree(root, t.n, leaf_threshold, quantization)


def _maybe_quantize(d: np.ndarray, q) -> np.ndarray:
    if q is None:
        return d
    return np.round(d * q) / q


def _build(adjacency, m, orig_ids, threshold, q):
    if m <= max(threshold, 3):
        dist = np.empty((m, m), dtype=np.float64)
        for v in range(m):
            dist[v] = _distances_adj(adjacency, v, m)
        return LeafNode(orig_ids, _maybe_quantize(dist, q))

    pivot_local, left_list, right_list = _decompose_adjacency(adjacency, m)
    sides = []
    children = []
    for sel in (left_list, right_list):
        pos = np.asarray(sel, dtype=np.int64)
        sub_adj, side_m = _relabel(adjacency, sel)
        d = _maybe_quantize(_distances_adj(sub_adj, 0, side_m), q)
        dists = np.unique(d)
        dist_index = np.searchsorted(dists, d).astype(np.int64)
        side_ids = orig_ids[pos]
        sides.append(Side(side_ids, pos, dists, dist_index))
        children.append(_build(sub_adj, side_m, side_ids, threshold, q))
    return InternalNode(
        ids=orig_ids,
        pivot=int(orig_ids[pivot_local]),
        left=children[0],
        right=children[1],
        left_side=sides[0],
        right_side=sides[1],
    )


def _relabel(adjacency, selection):
    """Induced-subtree adjacency with local ids = positions in selection."""
    local = {v: i for i, v in enumerate(selection)}
    sub = []
    for v in selection:
        sub.append([(local[u], w) for u, w in adjacency[v] if u in local])
    return sub, len(selection)


@dataclass(frozen=True)
class ITStats:
    """Descriptive statistics used by benchmarks and tests."""

    node_count: int
    depth: int
    max_vertex_multiplicity: int
    distinct_distance_histogram: tuple[tuple[int, int], ...]


def it_stats(it: IntegratorTree) -> ITStats:
    """node count, depth, how often one vertex recurs, and per-side
    (distinct distance count, side size) pairs."""
    counts = np.zeros(it.n, dtype=np.int64)
    histogram = []
    node_count = 0

    def walk(node, depth):
        nonlocal node_count
        node_count += 1
        np.add.at(counts, node.ids, 1)
        if isinstance(node, LeafNode):
            return depth
        for side in (node.left_side, node.right_side):
            histogram.append((len(side.dists), side.size))
        return max(walk(node.left, depth + 1), walk(node.right, depth + 1))

    depth = walk(it.root, 0)
    return ITStats(
        node_count=node_count,
        depth=depth,
        max_vertex_multiplicity=int(counts.max()),
        distinct_distance_histogram=tuple(histogram),
    )
