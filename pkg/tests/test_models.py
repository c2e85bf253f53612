"""Tests for model families and their theorem-constant extraction."""

import math

import numpy as np
import pytest

from chaoslab import models
from chaoslab.models import (Kuramoto, LinearGaussian, ModelError, TorusKernel,
                             classify_regime, convex_constants,
                             kuramoto_admissible_max, kuramoto_constants,
                             kuramoto_rate_ratio, torus_constants)

INF = math.inf


class TestConvexConstants:
    def test_lipschitz_branch_substitution(self):
        rep = convex_constants(alpha=2.0, lipschitz=1.0, sup_grad=INF,
                               eta0=0.0, sigma=1.0)
        assert rep.eta == pytest.approx(1 / 8)
        assert rep.gamma == pytest.approx(1 / 2)
        assert rep.r_c == pytest.approx(3.0)
        assert rep.r_c == pytest.approx(2.0 ** 2 / 1.0 ** 2 - 1.0)
        assert rep.regime == models.REGIME_OPTIMAL

    def test_critical_convexity_boundary(self):
        rep = convex_constants(alpha=1.0, lipschitz=1.0, sup_grad=INF,
                               eta0=0.0, sigma=1.0)
        assert rep.r_c == pytest.approx(0.0, abs=1e-15)
        assert rep.regime == models.REGIME_NOT_APPLICABLE

    def test_tied_max_branches(self):
        sigma, alpha = 1.3, 0.7
        rep = convex_constants(alpha=alpha, lipschitz=2.0, sup_grad=INF,
                               eta0=sigma ** 2 / alpha, sigma=sigma)
        assert rep.eta == pytest.approx(sigma ** 2 / (4 * alpha))

    def test_expanded_minmax_formula(self):
        # r_c must match max(min(s^4/e0^2 L^2, a^2/L^2), min(s^4/2 e0 R^2, s^2 a/2R^2)) - 1
        rng = np.random.default_rng(7)
        for _ in range(300):
            alpha = rng.uniform(0.2, 3.0)
            sigma = rng.uniform(0.5, 2.0)
            eta0 = rng.uniform(0.0, 2.0)
            L = rng.uniform(0.2, 3.0) if rng.random() < 0.8 else INF
            R = rng.uniform(0.2, 3.0) if rng.random() < 0.8 else INF
            if L == INF and R == INF:
                continue
            rep = convex_constants(alpha, L, R, eta0, sigma)
            def lip_branch():
                if L == INF:
                    return -INF
                terms = [alpha ** 2 / L ** 2]
                if eta0 > 0:
                    terms.append(sigma ** 4 / (eta0 ** 2 * L ** 2))
                return min(terms)
            def sup_branch():
                if R == INF:
                    return -INF
                terms = [sigma ** 2 * alpha / (2 * R ** 2)]
                if eta0 > 0:
                    terms.append(sigma ** 4 / (2 * eta0 * R ** 2))
                return min(terms)
            expect = max(lip_branch(), sup_branch()) - 1.0
            assert rep.r_c == pytest.approx(expect, rel=1e-12)

    def test_bounded_interaction_gives_reversed_ratio(self):
        rep = convex_constants(alpha=1.0, lipschitz=INF, sup_grad=0.5,
                               eta0=0.0, sigma=1.0)
        assert rep.p_c == pytest.approx(1.0 / (8 * rep.eta * 0.25))

    def test_errors(self):
        with pytest.raises(ModelError):
            convex_constants(0.0, 1.0, INF, 0.0, 1.0)
        with pytest.raises(ModelError):
            convex_constants(1.0, INF, INF, 0.0, 1.0)


class TestTorusConstants:
    def test_divergence_free_simplification(self):
        rep = torus_constants(1.0, div_sup=0.0, diam=0.5, sigma=1.0)
        assert rep.r0 == 0.0
        assert rep.eta == pytest.approx(1.0)
        assert rep.gamma == pytest.approx(0.125)
        assert rep.r_c == pytest.approx(1.0)
        assert rep.regime == models.REGIME_SLOW

    def test_smallness_boundary_flat_start(self):
        s2pi2 = math.pi ** 2
        ok = torus_constants(1.0, div_sup=s2pi2 * 0.999, diam=1.0, sigma=1.0)
        assert ok.condition_flags["divergence_small"]
        bad = torus_constants(1.0, div_sup=s2pi2, diam=1.0, sigma=1.0)
        assert not bad.condition_flags["divergence_small"]
        assert bad.r_c is None and bad.eta is None

    def test_frozen_derived_example(self):
        lam = math.exp(0.5)
        rep = torus_constants(lam, div_sup=1.0, diam=0.4, sigma=1.0)
        # r0 = sqrt(2 log lam)/(pi^2 - 1) with 2 log lam = 1
        assert rep.r0 == pytest.approx(0.112744599960, abs=1e-11)
        assert rep.density_lower == pytest.approx(0.541861632915, abs=1e-11)
        assert rep.density_lower == pytest.approx(1 / (lam * math.exp(rep.r0)), rel=1e-14)
        assert rep.density_upper == pytest.approx(
            lam / (1 - rep.r0 * math.exp(rep.r0)), rel=1e-14)

    def test_errors(self):
        with pytest.raises(ModelError):
            torus_constants(0.5, 0.0, 1.0, 1.0)
        with pytest.raises(ModelError):
            torus_constants(1.0, 0.0, -1.0, 1.0)


class TestKuramotoConstants:
    def test_critical_couplings_flat_initialization(self):
        rep = kuramoto_constants(0.01, 1.0)
        assert rep.critical_coupling_0 == pytest.approx(math.sqrt(2) / (8 * math.pi),
                                                        abs=1e-12)
        assert rep.critical_coupling_1 == pytest.approx(1 / (8 * math.pi), abs=1e-12)

    def test_ratio_one_at_second_critical_coupling(self):
        assert kuramoto_rate_ratio(1 / (8 * math.pi), 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_frozen_substitution_value(self):
        # lambda = 1, K = 0.02: the (1 - 4K) factors cancel, leaving
        # 1/(32 pi^2 K^2) - 1; cross-checked by direct arithmetic.
        rep = kuramoto_constants(0.02, 1.0)
        assert rep.r_c == pytest.approx(6.915717472058, abs=1e-9)
        assert rep.r_c == pytest.approx(1 / (32 * math.pi ** 2 * 0.02 ** 2) - 1,
                                        rel=1e-13)

    def test_matches_torus_formula(self):
        for K, lam in ((0.01, 1.0), (0.02, 1.3), (0.03, 1.1)):
            rep = kuramoto_constants(K, lam)
            base = torus_constants(lam, div_sup=K, diam=K / math.pi,
                                   sigma=1 / (2 * math.pi))
            assert rep.r_c == pytest.approx(base.r_c, rel=1e-12)

    def test_monotonicity_in_coupling_and_ratio(self):
        for lam in (1.0, 1.2, 2.0):
            kmax = kuramoto_admissible_max(lam)
            grid = np.linspace(0.1 * kmax, 0.95 * kmax, 24)
            vals = [kuramoto_rate_ratio(float(k), lam) for k in grid]
            assert all(a > b for a, b in zip(vals, vals[1:]))
        for K in (0.01, 0.02, 0.03):
            lams = np.linspace(1.0, 1.8, 12)
            vals = [kuramoto_rate_ratio(K, float(l)) for l in lams]
            assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_inadmissible_coupling_flagged(self):
        rep = kuramoto_constants(0.3, 1.0)
        assert not rep.condition_flags["coupling_admissible"]
        assert rep.r_c is None
        assert rep.admissible_coupling_max == pytest.approx(0.25)

    def test_synchronizing_kernel_sign(self):
        # a particle just ahead of the crowd is pulled back
        m = Kuramoto(coupling=1.0)
        assert m.kernel(np.array([0.1]))[0] < 0
        assert m.sigma == pytest.approx(1 / (2 * math.pi))


class TestRegimeClassification:
    @pytest.mark.parametrize("r_c,regime", [
        (-0.5, models.REGIME_NOT_APPLICABLE),
        (0.0, models.REGIME_NOT_APPLICABLE),
        (0.5, models.REGIME_SLOW),
        (1.0, models.REGIME_SLOW),          # boundary maps downward
        (1.0 + 1e-12, models.REGIME_INTERMEDIATE),
        (2.0, models.REGIME_INTERMEDIATE),  # boundary maps downward
        (2.5, models.REGIME_OPTIMAL),
    ])
    def test_thresholds(self, r_c, regime):
        assert classify_regime(r_c) == regime


class TestKernelScan:
    def test_sine_kernel_constants(self):
        amp = 0.3
        tk = TorusKernel(kernel=lambda u: amp * np.sin(2 * math.pi * u), sigma=1.0)
        div_sup, diam = tk.scanned_constants()
        assert div_sup == pytest.approx(2 * math.pi * amp, rel=1e-6)
        assert diam == pytest.approx(2 * amp, rel=1e-6)

    def test_supplied_constants_win(self):
        tk = TorusKernel(kernel=lambda u: np.sin(2 * math.pi * u), sigma=1.0,
                         div_sup=7.0, diam=3.0)
        assert tk.scanned_constants() == (7.0, 3.0)


class TestModelValidation:
    def test_linear_gaussian(self):
        with pytest.raises(ModelError):
            LinearGaussian(a=0.0, b_strength=0.5, sigma=1.0)
        with pytest.raises(ModelError):
            LinearGaussian(a=1.0, b_strength=-0.1, sigma=1.0)

    def test_kuramoto(self):
        with pytest.raises(ModelError):
            Kuramoto(coupling=-1.0)
        with pytest.raises(ModelError):
            Kuramoto(coupling=1.0, lambda_ratio=0.5)
