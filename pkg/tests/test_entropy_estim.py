"""Tests for entropy estimators and metric conversions.

Independent oracles: exact sampler for exchangeable Gaussian laws (shared
factor plus idiosyncratic noise), dense Gaussian KL via slogdet, inverse-CDF
sampling of explicit densities, grid quadrature for total variation, and the
closed-form 1-D Gaussian transport distance.
"""

import math

import numpy as np
import pytest

from chaoslab import entropy_estim as ee
from chaoslab import gaussian_oracle as go
from chaoslab import meanfield_pde as pde
from chaoslab.dynamics import ParticleEnsemble
from chaoslab.models import Kuramoto, LinearGaussian

V10, C10, S10 = 19 / 56, 1 / 56, 1 / 3  # stationary (a=1, b=0.5, sigma=1, n=10)


def sample_exchangeable(v, c, R, n, rng):
    """Exact exchangeable Gaussian draws: sqrt(c) G + sqrt(v-c) Z_i."""
    assert c >= 0
    shared = rng.standard_normal((R, 1))
    idio = rng.standard_normal((R, n))
    return math.sqrt(c) * shared + math.sqrt(v - c) * idio


def make_ensemble(x, t=0.0):
    return ParticleEnsemble(positions=x[:, :, None], time=t, seed=0)


class TestGaussianMomentEntropy:
    def test_null_case_within_two_stderr(self):
        rng = np.random.default_rng(42)
        x = sample_exchangeable(S10, 0.0, 5000, 8, rng)
        rep = ee.gaussian_moment_entropy(make_ensemble(x), 2, S10)
        assert rep.H <= 2 * rep.stderr

    def test_stationary_law_within_three_stderr(self):
        rng = np.random.default_rng(7)
        x = sample_exchangeable(V10, C10, 20000, 10, rng)
        rep = ee.gaussian_moment_entropy(make_ensemble(x), 1, S10)
        oracle = go.marginal_relative_entropy(V10, C10, S10, 1)
        assert abs(rep.H - oracle) <= 3 * rep.stderr

    def test_full_vector_formula_matches_dense_kl(self):
        # moments fed exactly: closed form vs dense-matrix KL
        n = 10
        Sigma = (V10 - C10) * np.eye(n) + C10 * np.ones((n, n))
        sign, logdet = np.linalg.slogdet(Sigma)
        dense = 0.5 * (np.trace(Sigma / S10) - n
                       + n * math.log(S10) - logdet)
        ours = go.marginal_relative_entropy(V10, C10, S10, n)
        assert ours == pytest.approx(dense, abs=1e-10)

    def test_degenerate_moments_reported_with_values(self):
        x = np.ones((200, 6))
        with pytest.raises(ee.EstimationError) as err:
            ee.gaussian_moment_entropy(make_ensemble(x), 2, S10)
        assert err.value.v is not None and err.value.c is not None

    def test_needs_enough_replicas(self):
        with pytest.raises(ee.EstimationError):
            ee.gaussian_moment_entropy(make_ensemble(np.zeros((50, 4))), 1, 1.0)

    def test_stderr_shrinks_like_root_two_when_doubling(self):
        rng = np.random.default_rng(10)
        small, large = [], []
        for _ in range(20):
            x = sample_exchangeable(V10, C10, 4000, 10, rng)
            large.append(ee.gaussian_moment_entropy(make_ensemble(x), 1, S10).stderr)
            small.append(ee.gaussian_moment_entropy(make_ensemble(x[:2000]), 1, S10).stderr)
        ratio = np.mean(small) / np.mean(large)
        assert ratio == pytest.approx(math.sqrt(2.0), rel=0.20)

    def test_null_calibration_coverage(self):
        rng = np.random.default_rng(2024)
        hits = 0
        trials = 1000
        for _ in range(trials):
            x = sample_exchangeable(S10, 0.0, 200, 8, rng)
            rep = ee.gaussian_moment_entropy(make_ensemble(x), 2, S10)
            hits += rep.H <= 3 * rep.stderr
        assert hits / trials >= 0.99


class TestHistogramEntropy:
    def test_reference_samples_near_zero(self):
        rng = np.random.default_rng(5)
        ref = pde.cosine_density(256, 0.5)
        cdf = np.concatenate([[0.0], np.cumsum(ref.values) / ref.size])
        cdf /= cdf[-1]
        samples = np.interp(rng.random(100_000), cdf,
                            np.arange(ref.size + 1) / ref.size)
        rep = ee.histogram_entropy_1d(samples, ref, bins=64)
        assert rep.H <= 2 * rep.stderr

    def test_cosine_against_uniform_matches_quadrature(self):
        rng = np.random.default_rng(6)
        ref = pde.uniform_density(256)
        target = pde.cosine_density(256, 0.5)
        cdf = np.concatenate([[0.0], np.cumsum(target.values) / target.size])
        cdf /= cdf[-1]
        samples = np.interp(rng.random(400_000), cdf,
                            np.arange(target.size + 1) / target.size)
        rep = ee.histogram_entropy_1d(samples, ref, bins=64)
        assert rep.H == pytest.approx(0.064638132020, abs=3e-3)

    def test_absolute_continuity_failure_flagged(self):
        vals = np.zeros(64)
        vals[:32] = 2.0
        ref = pde.DensityGrid(vals)
        samples = np.full(64 * 50, 0.9)  # all mass in the zero half
        rep = ee.histogram_entropy_1d(samples, ref, bins=64)
        assert rep.is_infinite

    def test_bins_must_divide_grid(self):
        with pytest.raises(ee.EstimationError):
            ee.histogram_entropy_1d(np.full(5000, 0.5),
                                    pde.uniform_density(256), bins=100)

    def test_sample_floor(self):
        with pytest.raises(ee.EstimationError):
            ee.histogram_entropy_1d(np.full(100, 0.5),
                                    pde.uniform_density(256), bins=64)


class TestEstimateM:
    def _snapshots(self, v, c, R, n, times, rng):
        return [make_ensemble(sample_exchangeable(v, c, R, n, rng), t)
                for t in times]

    def test_no_interaction_gives_zero(self):
        model = LinearGaussian(a=1.0, b_strength=0.0, sigma=1.0)
        rng = np.random.default_rng(1)
        snaps = self._snapshots(V10, C10, 2000, 10, [0.5, 1.0], rng)
        refs = [go.MeanFieldGaussianFlow(m=0.0, s=S10)] * 2
        est = ee.estimate_M(model, snaps, refs)
        assert est.value == 0.0

    def test_linear_stationary_matches_closed_form(self):
        # integrand reduces to b^2 (x2 - mean)^2 with second moment b^2 v
        model = LinearGaussian(a=1.0, b_strength=0.5, sigma=1.0)
        rng = np.random.default_rng(2)
        snaps = self._snapshots(V10, C10, 60_000, 10, [1.0, 2.0], rng)
        refs = [go.MeanFieldGaussianFlow(m=0.0, s=S10)] * 2
        est = ee.estimate_M(model, snaps, refs)
        expect = model.b_strength ** 2 * V10
        worst = max(abs(v - expect) for v in est.per_time)
        assert worst <= 3 * max(est.stderr_per_time)
        assert est.horizon_truncated

    def test_bounded_kernel_envelope(self):
        model = Kuramoto(coupling=1.0)
        sup_b = model.coupling / (2 * math.pi)
        rng = np.random.default_rng(3)
        x = rng.random((3000, 8))
        snaps = [make_ensemble(x, t) for t in (0.0, 1.0)]
        refs = [pde.uniform_density(256)] * 2
        est = ee.estimate_M(model, snaps, refs)
        assert est.value <= 4 * sup_b ** 2

    def test_needs_two_snapshots(self):
        model = LinearGaussian(a=1.0, b_strength=0.5, sigma=1.0)
        with pytest.raises(ee.EstimationError):
            ee.estimate_M(model, [make_ensemble(np.zeros((200, 4)))],
                          [go.MeanFieldGaussianFlow(m=0.0, s=1.0)])


class TestMetricBounds:
    def test_w2_values(self):
        assert ee.w2_bound_from_entropy(0.0, 1.0) == 0.0
        assert ee.w2_bound_from_entropy(0.01, 1.0) == pytest.approx(0.2)
        with pytest.raises(ee.EstimationError):
            ee.w2_bound_from_entropy(-1e-3, 1.0)

    def test_w2_dominates_exact_gaussian_transport(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            v = rng.uniform(0.05, 2.0)
            s = rng.uniform(0.05, 2.0)
            H = 0.5 * (v / s - 1 - math.log(v / s))
            exact = abs(math.sqrt(v) - math.sqrt(s))
            assert exact <= ee.w2_bound_from_entropy(H, s / 2.0) + 1e-12

    def test_tv_values_and_cap(self):
        assert ee.tv_bound_from_entropy(0.0) == 0.0
        assert ee.tv_bound_from_entropy(2.0) == 1.0
        with pytest.raises(ee.EstimationError):
            ee.tv_bound_from_entropy(-0.1)

    def test_tv_dominates_quadrature_tv(self):
        rng = np.random.default_rng(9)
        x = np.linspace(-12, 12, 20001)
        for _ in range(50):
            v = rng.uniform(0.2, 2.0)
            s = rng.uniform(0.2, 2.0)
            H = 0.5 * (v / s - 1 - math.log(v / s))
            p = np.exp(-x ** 2 / (2 * v)) / math.sqrt(2 * math.pi * v)
            q = np.exp(-x ** 2 / (2 * s)) / math.sqrt(2 * math.pi * s)
            tv = 0.5 * np.trapezoid(np.abs(p - q), x)
            assert tv <= ee.tv_bound_from_entropy(H) + 1e-6
