import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treefield import maps
from treefield.engine import (
    IntegrationRequest,
    IntegrationSession,
    bgfi_integrate,
    btfi_integrate,
    ftfi_integrate,
)
from treefield.errors import NumericError, PreconditionError
from treefield.graphs import TensorField, WeightedGraph, WeightedTree, random_tree
from treefield.itree import build_integrator_tree

from conftest import naive_integrate, rel_frobenius, scalar_field

EXACT_FAMILIES = [
    maps.Polynomial([1.0, -0.5, 0.25]),
    maps.Exponential(-0.7),
    maps.ExpTimesPoly(-0.3, [1.0, 0.5, -0.25]),
    maps.Trigonometric("cos", 1.3),
    maps.Trigonometric("sin", 0.9),
    maps.ExpOverLinear(-0.2, 1.5),
    maps.Rational([1.0, 0.4, 0.3], [1.5, 0.2, 0.6]),
]


def quantized_random_tree(n, seed, q=8):
    rng = np.random.default_rng(seed)
    base = random_tree(n, seed=seed, unit_weights=True)
    edges = [(u, v, float(rng.integers(1, q + 1)) / q) for u, v, _ in base.edges()]
    return WeightedTree.from_edges(n, edges)


class TestFtfi:
    def test_constant_one_gives_column_sums(self, rng):
        t = random_tree(37, seed=1)
        X = rng.standard_normal((37, 4))
        it = build_integrator_tree(t, leaf_threshold=6)
        out = ftfi_integrate(IntegrationRequest(it, maps.Polynomial([1.0]),
                                                TensorField.from_array(X))).data
        assert np.allclose(out, np.tile(X.sum(axis=0), (37, 1)), atol=1e-10)

    def test_zero_map_gives_zero_field(self, rng):
        t = random_tree(25, seed=2)
        it = build_integrator_tree(t, leaf_threshold=6)
        out = ftfi_integrate(IntegrationRequest(it, maps.Polynomial([0.0]),
                                                TensorField.from_array(rng.standard_normal((25, 2))))).data
        assert (out == 0).all()

    def test_matches_btfi_500_vertices(self, rng):
        t = random_tree(500, seed=3)
        field = TensorField.from_array(rng.standard_normal((500, 3)))
        it = build_integrator_tree(t)
        f = maps.Polynomial([1.0, -0.5, 0.25])
        fast = ftfi_integrate(IntegrationRequest(it, f, field)).data
        brute = btfi_integrate(t, f, field).data
        assert rel_frobenius(fast, brute) <= 1e-10

    def test_every_family_matches_btfi(self, rng):
        for seed in range(6):
            n = int(rng.integers(10, 400))
            t = random_tree(n, seed=seed)
            field = TensorField.from_array(rng.standard_normal((n, 2)))
            session = IntegrationSession(build_integrator_tree(t, leaf_threshold=8))
            for f in EXACT_FAMILIES:
                fast = session.integrate(f, field).data
                brute = btfi_integrate(t, f, field).data
                assert rel_frobenius(fast, brute) <= 1e-9, (n, type(f).__name__)

    def test_quantized_tree_families(self, rng):
        t = quantized_random_tree(150, seed=5)
        field = TensorField.from_array(rng.standard_normal((150, 2)))
        it = build_integrator_tree(t, leaf_threshold=8, quantization=8)
        session = IntegrationSession(it)
        for f in (maps.ExpQuadratic(-0.05, 0.1, 0.2),
                  maps.Tabulated(lambda z: 1.0 / (1.0 + z * z))):
            fast = session.integrate(f, field).data
            brute = btfi_integrate(t, f, field).data
            assert rel_frobenius(fast, brute) <= 1e-9

    def test_linearity(self, rng):
        t = random_tree(120, seed=6)
        it = build_integrator_tree(t, leaf_threshold=8)
        session = IntegrationSession(it)
        f = maps.Exponential(-0.4)
        X = rng.standard_normal((120, 2))
        Y = rng.standard_normal((120, 2))
        a, b = 0.7, -1.3
        combined = session.integrate(f, TensorField.from_array(a * X + b * Y)).data
        separate = (a * session.integrate(f, TensorField.from_array(X)).data
                    + b * session.integrate(f, TensorField.from_array(Y)).data)
        assert rel_frobenius(combined, separate) <= 1e-10

    def test_operator_symmetry(self, rng):
        t = random_tree(90, seed=7)
        it = build_integrator_tree(t, leaf_threshold=8)
        session = IntegrationSession(it)
        f = maps.Rational([1.0], [1.0, 0.0, 0.5])
        x = rng.standard_normal(90)
        y = rng.standard_normal(90)
        lhs = float(session.integrate(f, scalar_field(x)).data[:, 0] @ y)
        rhs = float(x @ session.integrate(f, scalar_field(y)).data[:, 0])
        assert abs(lhs - rhs) <= 1e-9 * max(abs(lhs), abs(rhs))

    def test_strategy_hint_dense_same_result(self, rng):
        t = random_tree(64, seed=8)
        field = TensorField.from_array(rng.standard_normal((64, 1)))
        it = build_integrator_tree(t, leaf_threshold=8)
        f = maps.Exponential(-0.3)
        auto = IntegrationSession(it).integrate(f, field).data
        forced = IntegrationSession(it).integrate(f, field, strategy_hint="dense").data
        assert rel_frobenius(forced, auto) <= 1e-12

    def test_field_size_mismatch(self, rng):
        it = build_integrator_tree(random_tree(10, seed=0))
        with pytest.raises(PreconditionError):
            IntegrationRequest(it, maps.Polynomial([1.0]),
                               TensorField.from_array(np.ones((9, 1))))

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_pole_reported_with_distance(self):
        t = WeightedTree.from_edges(2, [(0, 1, 1.0)])
        it = build_integrator_tree(t)
        f = maps.Tabulated(lambda z: 1.0 / (z - 1.0))
        with pytest.raises(NumericError, match="distance"):
            ftfi_integrate(IntegrationRequest(it, f, scalar_field([1.0, 1.0])))


class TestBtfi:
    def test_two_vertex_identity_map(self):
        t = WeightedTree.from_edges(2, [(0, 1, 0.75)])
        out = btfi_integrate(t, maps.Polynomial([0.0, 1.0]), scalar_field([1.0, 0.0])).data
        assert out[:, 0].tolist() == [0.0, 0.75]

    def test_constant_map_column_sums(self, rng):
        t = random_tree(20, seed=9)
        X = rng.standard_normal((20, 3))
        out = btfi_integrate(t, maps.Polynomial([1.0]), TensorField.from_array(X)).data
        assert np.allclose(out, np.tile(X.sum(axis=0), (20, 1)), atol=1e-12)

    def test_matches_naive_loop(self, rng):
        for n in (5, 23, 64):
            t = random_tree(n, seed=n)
            X = rng.standard_normal((n, 2))
            f = maps.Exponential(-0.5)
            brute = btfi_integrate(t, f, TensorField.from_array(X)).data
            ref = naive_integrate(t, f, X)
            assert rel_frobenius(brute, ref) <= 1e-12

    def test_guard(self, rng):
        t = random_tree(11, seed=1)
        field = TensorField.from_array(np.ones((11, 1)))
        import treefield.engine as engine
        old = engine.DENSE_VERTEX_GUARD
        engine.DENSE_VERTEX_GUARD = 10
        try:
            with pytest.raises(PreconditionError, match="guard"):
                btfi_integrate(t, maps.Polynomial([1.0]), field)
            btfi_integrate(t, maps.Polynomial([1.0]), field, force=True)
        finally:
            engine.DENSE_VERTEX_GUARD = old


class TestBgfi:
    def test_tree_input_equals_btfi(self, rng):
        t = random_tree(45, seed=10)
        field = TensorField.from_array(rng.standard_normal((45, 2)))
        f = maps.Exponential(-0.2)
        a = bgfi_integrate(t.as_graph(), f, field).data
        b = btfi_integrate(t, f, field).data
        assert (a == b).all()

    def test_triangle_identity_map(self):
        g = WeightedGraph(3, ((0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)))
        out = bgfi_integrate(g, maps.Polynomial([0.0, 1.0]), scalar_field([1.0, 1.0, 1.0])).data
        assert np.allclose(out[:, 0], [4.0, 3.0, 5.0])

    def test_zero_map(self):
        g = WeightedGraph(3, ((0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)))
        out = bgfi_integrate(g, maps.Polynomial([0.0]), scalar_field([1.0, 2.0, 3.0])).data
        assert (out == 0).all()


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=120), st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_ftfi_btfi_agree_property(n, seed):
    t = random_tree(n, seed=seed)
    rng = np.random.default_rng(seed)
    field = TensorField.from_array(rng.standard_normal((n, 2)))
    f = maps.Polynomial([0.5, 1.0, -0.25])
    it = build_integrator_tree(t, leaf_threshold=6)
    fast = ftfi_integrate(IntegrationRequest(it, f, field)).data
    brute = btfi_integrate(t, f, field).data
    assert rel_frobenius(fast, brute) <= 1e-9
