import numpy as np
import pytest

from treefield.errors import NumericError, PreconditionError
from treefield.maps import gaussian
from treefield.rff import (
    RFFSampler,
    gaussian_sampler,
    rff_apply,
    rff_feature,
    sampler_for_map,
)

from conftest import dense_cross, rel_frobenius


class TestFeature:
    def test_zero_frequency_is_constant(self):
        sampler = RFFSampler(m=1, seed=0, frequencies=np.array([0.0]),
                             weights=np.array([1.0]))
        a = rff_feature(0.3, sampler)
        b = rff_feature(7.7, sampler)
        assert np.allclose(a, b)
        assert np.allclose(a, 1.0)

    def test_same_seed_identical(self):
        a = gaussian_sampler(1.0, 64, seed=5)
        b = gaussian_sampler(1.0, 64, seed=5)
        assert np.array_equal(a.frequencies, b.frequencies)
        assert np.array_equal(rff_feature(0.4, a), rff_feature(0.4, b))

    def test_different_seed_differs(self):
        a = gaussian_sampler(1.0, 64, seed=5)
        b = gaussian_sampler(1.0, 64, seed=6)
        assert not np.array_equal(a.frequencies, b.frequencies)

    def test_monte_carlo_matches_closed_form(self):
        # unit Gaussian map at (x, y) = (0.3, 0.4): mean within 3 SE
        sampler = gaussian_sampler(1.0, 100_000, seed=11)
        terms = rff_feature(0.3, sampler) * rff_feature(0.4, sampler) * sampler.m
        vals = terms.real
        exact = np.exp(-(0.7 ** 2) / 2.0)
        se = vals.std(ddof=1) / np.sqrt(sampler.m)
        assert abs(vals.mean() - exact) <= 3 * se

    def test_matched_proposal_has_unit_weights(self):
        sampler = gaussian_sampler(2.0, 128, seed=1)
        assert np.allclose(sampler.weights, 1.0)

    def test_negative_ratio_rejected(self):
        from treefield.maps import Tabulated

        with pytest.raises(NumericError, match="nonnegative"):
            sampler_for_map(
                Tabulated(lambda z: np.sinc(z)), 8, seed=0,
                density=lambda w: -np.ones_like(w),
                proposal_pdf=lambda w: np.ones_like(w),
                proposal_draw=lambda rng, size: rng.normal(0, 1, size),
            )

    def test_non_gaussian_needs_explicit_density(self):
        from treefield.maps import Exponential

        with pytest.raises(PreconditionError, match="explicit"):
            sampler_for_map(Exponential(-1.0), 8)


class TestApply:
    def test_zero_field_every_seed(self, rng):
        x = rng.uniform(0, 2, 10)
        y = rng.uniform(0, 2, 8)
        for seed in range(5):
            sampler = gaussian_sampler(1.0, 32, seed=seed)
            out = rff_apply(x, y, sampler, np.zeros((8, 3)))
            assert (out == 0).all()

    def test_median_error_at_4096_features(self, rng):
        n = 256
        f = gaussian(1.0)
        x = rng.uniform(0, 2, n)
        y = rng.uniform(0, 2, n)
        V = rng.standard_normal((n, 1))
        exact = dense_cross(x, y, f) @ V
        errs = []
        for seed in range(9):
            sampler = gaussian_sampler(1.0, 4096, seed=seed)
            errs.append(rel_frobenius(rff_apply(x, y, sampler, V), exact))
        assert np.median(errs) <= 0.05

    def test_error_decays_with_feature_count(self, rng):
        n = 256
        f = gaussian(1.0)
        x = rng.uniform(0, 2, n)
        y = rng.uniform(0, 2, n)
        V = rng.standard_normal((n, 1))
        exact = dense_cross(x, y, f) @ V

        def median_err(m):
            return float(np.median([
                rel_frobenius(rff_apply(x, y, gaussian_sampler(1.0, m, seed=s), V), exact)
                for s in range(9)
            ]))

        ratio = median_err(4096) / median_err(1024)
        assert 0.4 <= ratio <= 0.7

    def test_unbiased_entries(self, rng):
        # seed-averaged entry estimates stay within 4 standard errors
        f = gaussian(1.0)
        x = rng.uniform(0, 2, 6)
        y = rng.uniform(0, 2, 5)
        n_seeds = 2000
        m = 8
        samples = np.empty((n_seeds, 6, 5))
        for s in range(n_seeds):
            sampler = gaussian_sampler(1.0, m, seed=s)
            U = sampler.features(x)
            W = sampler.features(y)
            samples[s] = (U @ W.T).real
        exact = dense_cross(x, y, f)
        mean = samples.mean(axis=0)
        se = samples.std(axis=0, ddof=1) / np.sqrt(n_seeds)
        idx = rng.integers(0, 6, 20), rng.integers(0, 5, 20)
        assert (np.abs(mean - exact)[idx] <= 4 * se[idx]).all()
