import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treefield.errors import PreconditionError
from treefield.graphs import WeightedTree, random_tree
from treefield.separator import pivot_decompose


def assert_valid_decomposition(t, decomp):
    n = t.n
    left = decomp.left_vertices.tolist()
    right = decomp.right_vertices.tolist()
    assert left[0] == decomp.pivot and right[0] == decomp.pivot
    ls, rs = set(left), set(right)
    assert len(ls) == len(left) and len(rs) == len(right)
    assert ls | rs == set(range(n))
    assert ls & rs == {decomp.pivot}
    quarter = math.ceil(n / 4)
    assert len(ls) >= quarter and len(rs) >= quarter
    for side in (ls, rs):
        assert_connected(t, side)


def assert_connected(t, vertices):
    vertices = set(vertices)
    start = next(iter(vertices))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for u, _ in t.adjacency[v]:
            if u in vertices and u not in seen:
                seen.add(u)
                stack.append(u)
    assert seen == vertices


class TestPivotDecompose:
    def test_star_six_vertices(self):
        t = WeightedTree.from_edges(6, [(0, i, 1.0) for i in range(1, 6)])
        d = pivot_decompose(t)
        assert d.pivot == 0
        assert_valid_decomposition(t, d)
        assert len(d.left_vertices) >= 2 and len(d.right_vertices) >= 2

    def test_path_eight_vertices(self):
        t = WeightedTree.from_edges(8, [(i, i + 1, 1.0) for i in range(7)])
        d = pivot_decompose(t)
        assert_valid_decomposition(t, d)
        assert 2 <= len(d.left_vertices) <= 7
        assert 2 <= len(d.right_vertices) <= 7

    def test_five_vertices_rejected(self):
        t = WeightedTree.from_edges(5, [(i, i + 1, 1.0) for i in range(4)])
        with pytest.raises(PreconditionError, match=">= 6"):
            pivot_decompose(t)

    def test_deterministic(self):
        t = random_tree(137, seed=4)
        a = pivot_decompose(t)
        b = pivot_decompose(t)
        assert a.pivot == b.pivot
        assert np.array_equal(a.left_vertices, b.left_vertices)
        assert np.array_equal(a.right_vertices, b.right_vertices)

    def test_bfs_order_sides(self):
        # side lists start at the pivot and never place a vertex before its
        # path predecessor
        t = random_tree(60, seed=8)
        d = pivot_decompose(t)
        for side in (d.left_vertices, d.right_vertices):
            seen = {d.pivot}
            for v in side[1:]:
                assert any(u in seen for u, _ in t.adjacency[v])
                seen.add(int(v))


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=6, max_value=400), st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_decomposition_invariants_random_trees(n, seed):
    t = random_tree(n, seed=seed)
    assert_valid_decomposition(t, pivot_decompose(t))


def test_decomposition_invariants_large_sample():
    rng = np.random.default_rng(123)
    for _ in range(60):
        n = int(rng.integers(6, 5001))
        t = random_tree(n, seed=int(rng.integers(0, 2 ** 31)))
        assert_valid_decomposition(t, pivot_decompose(t))
