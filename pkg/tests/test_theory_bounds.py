"""Tests for constants, iterated integrals, inequalities and bound assembly.

Independent oracles:
  * nested quadrature of the iterated-integral definitions by cumulative
    Simpson recursion on a dense grid (never touches the closed forms);
  * Monte Carlo over independent exponential waiting times for the
    supremum identity;
  * back-substitution for the hierarchy fixed point.
"""

import math

import numpy as np
import pytest
from scipy.integrate import cumulative_simpson

from chaoslab import gaussian_oracle as go
from chaoslab import theory_bounds as tb

GRID = 4097


def nested_B_oracle(k, ell, gamma_tilde, Z, T):
    """B~ by inside-out cumulative integration of its very definition."""
    t = np.linspace(0.0, T, GRID)
    F = np.exp(-(Z + gamma_tilde * ell) * t)
    for j in range(ell - 1, k - 1, -1):
        a = Z + gamma_tilde * j
        inner = cumulative_simpson(np.exp(a * t) * F, x=t, initial=0.0)
        F = np.exp(-a * t) * inner
    prefac = np.prod([gamma_tilde * j for j in range(k, ell)])
    return prefac * F[-1]


def nested_A_oracle(k, ell, gamma_tilde, Z, T):
    """A~ by the same recursion with one extra integration layer."""
    t = np.linspace(0.0, T, GRID)
    F = np.ones_like(t)
    for j in range(ell, k - 1, -1):
        a = Z + gamma_tilde * j
        inner = cumulative_simpson(np.exp(a * t) * F, x=t, initial=0.0)
        F = np.exp(-a * t) * inner
    prefac = np.prod([gamma_tilde * j for j in range(k, ell + 1)])
    return prefac * F[-1]


class TestRateConstants:
    def test_substitution(self):
        r_c, _ = tb.rate_constants(1.0, 0.05, 1.0)
        assert r_c == pytest.approx(4.0)

    def test_regime_boundary(self):
        sigma, gamma, eta = 1.0, 0.25, 0.5  # sigma^4 = 8 gamma eta
        r_c, _ = tb.rate_constants(sigma, gamma, eta)
        assert r_c == pytest.approx(1.0)

    def test_reversed_ratio_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            sigma, eta, bsq = rng.uniform(0.5, 2, 3)
            r_c, p_c = tb.rate_constants(sigma, 2 * bsq, eta, bsq_sup=bsq)
            assert p_c - (1 + r_c) == pytest.approx(0.0, abs=1e-15)


class TestExplicitConstants:
    def test_frozen_substitution(self):
        C1, C2 = tb.explicit_C1_C2(1.0, 1.0, 0.01, 1.0, 1.0)
        assert C1 == pytest.approx(1.291322314049587, rel=1e-14)

    def test_vanishing_interaction(self):
        C1, C2 = tb.explicit_C1_C2(0.0, 1.0, 0.01, 1.0, 2.0)
        assert C1 == 0.0
        assert C2 == pytest.approx(1250 * 2.0 * 1.0 / (0.01 ** 2 * 1.0))

    def test_boundary_rejected(self):
        with pytest.raises(tb.RegimeError):
            tb.explicit_C1_C2(1.0, 1.0, 1.0 / 12.0, 1.0, 1.0)


class TestTildeBClosed:
    def test_convention_at_equal_indices(self):
        assert tb.tilde_B_closed(1, 1, 1.0, 0.0, 1.0) \
            == pytest.approx(math.exp(-1.0), rel=1e-14)

    def test_frozen_first_offset(self):
        assert tb.tilde_B_closed(1, 2, 1.0, 0.0, 1.0) \
            == pytest.approx(math.exp(-1) * (1 - math.exp(-1)), rel=1e-13)

    def test_vanishes_at_long_time_with_decay(self):
        assert tb.tilde_B_closed(2, 5, 0.7, 0.4, 2000.0) == 0.0

    def test_matches_nested_quadrature(self):
        rng = np.random.default_rng(21)
        for _ in range(40):
            k = int(rng.integers(1, 7))
            ell = k + int(rng.integers(0, 4))
            gt = rng.uniform(0.1, 2.0)
            Z = rng.uniform(0.0, 2.0)
            T = rng.uniform(0.1, 3.0)
            closed = tb.tilde_B_closed(k, ell, gt, Z, T)
            assert abs(closed - nested_B_oracle(k, ell, gt, Z, T)) < 1e-8

    def test_log_space_survives_huge_ell(self):
        val = tb.tilde_B_closed(3, 10 ** 6, 1.0, 0.5, 0.5)
        assert math.isfinite(val) and val >= 0.0


class TestTildeASup:
    def test_single_factor(self):
        val, b1, b2 = tb.tilde_A_sup(1, 1, 1.0)
        assert val == pytest.approx(0.5, rel=1e-15)

    def test_frozen_product(self):
        val, b1, b2 = tb.tilde_A_sup(1, 3, 2.0)
        assert val == pytest.approx(0.1, rel=1e-13)

    def test_product_below_both_bounds(self):
        rng = np.random.default_rng(31)
        for _ in range(300):
            k = int(rng.integers(1, 20))
            ell = k + int(rng.integers(0, 50))
            alpha = rng.uniform(0.05, 6.0)
            val, b1, b2 = tb.tilde_A_sup(k, ell, alpha)
            assert val <= b1 * (1 + 1e-12)
            assert val <= b2 * (1 + 1e-12)

    def test_monte_carlo_exponential_oracle(self):
        rng = np.random.default_rng(17)
        for k, ell, gt, Z in ((1, 3, 0.8, 0.5), (2, 6, 1.3, 1.1)):
            alpha = Z / gt
            draws = 200_000
            rates = gt * np.arange(k, ell + 1)
            total = (rng.standard_exponential((draws, rates.size)) / rates).sum(axis=1)
            vals = np.exp(-Z * total)
            mc, se = vals.mean(), vals.std(ddof=1) / math.sqrt(draws)
            assert abs(tb.tilde_A_sup(k, ell, alpha)[0] - mc) <= 3 * se


class TestTildeATime:
    def test_zero_time(self):
        assert tb.tilde_A_time(1, 4, 1.0, 1.0, 0.0) == 0.0

    def test_frozen_single_level(self):
        expect = (1 - math.exp(-2.0)) / 2.0
        assert tb.tilde_A_time(1, 1, 1.0, 1.0, 1.0) == pytest.approx(expect, rel=1e-11)

    def test_beta_closed_form_agrees_with_quadrature(self):
        rng = np.random.default_rng(13)
        for _ in range(60):
            k = int(rng.integers(1, 6))
            ell = k + int(rng.integers(0, 30))
            gt = rng.uniform(0.1, 2.0)
            Z = rng.uniform(0.0, 3.0)
            T = rng.uniform(0.05, 5.0)
            quadrature = tb.tilde_A_time(k, ell, gt, Z, T)
            beta = float(tb._tilde_A_time_beta(k, ell, gt, Z, T))
            assert quadrature == pytest.approx(beta, abs=1e-9, rel=1e-9)

    def test_matches_nested_quadrature(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            k = int(rng.integers(1, 6))
            ell = k + int(rng.integers(0, 4))
            gt = rng.uniform(0.1, 1.5)
            Z = rng.uniform(0.0, 1.5)
            T = rng.uniform(0.1, 3.0)
            assert abs(tb.tilde_A_time(k, ell, gt, Z, T)
                       - nested_A_oracle(k, ell, gt, Z, T)) < 1e-6

    def test_long_time_reaches_supremum(self):
        for k, ell, gt, Z in ((1, 1, 1.0, 0.5), (2, 7, 0.6, 1.2)):
            sup = tb.tilde_A_sup(k, ell, Z / gt)[0]
            horizon = 1e6 / (Z + gt * k)
            assert tb.tilde_A_time(k, ell, gt, Z, horizon) \
                == pytest.approx(sup, abs=1e-6)

    def test_monotone_in_time(self):
        vals = [tb.tilde_A_time(1, 3, 0.9, 0.7, t) for t in (0.2, 0.5, 1.0, 3.0)]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestSummationInequalities:
    def test_example_draw(self):
        chk = tb.lemma_sum_bounds(1, 50, 2.0, 1.0, 5.0, 1.0)
        assert not chk.violated
        assert chk.lhs_B <= chk.rhs_B

    def test_branches(self):
        low = tb.lemma_sum_bounds(2, 40, 3.0, 1.0, 1.0, 1.0)   # p - alpha = 2 > -1
        assert low.branch == "p-alpha>-1"
        high = tb.lemma_sum_bounds(2, 40, 0.5, 0.5, 2.0, 1.0)  # p - alpha = -3.5
        assert high.branch == "p-alpha<-1"

    def test_excluded_exponent_skipped(self):
        chk = tb.lemma_sum_bounds(1, 30, 1.0, 1.0, 2.0, 1.0)  # p = alpha - 1
        assert chk.lhs_A_scaled is None and "skipped" in chk.note

    def test_randomized_no_violations(self):
        rng = np.random.default_rng(37)
        for _ in range(300):
            k = int(rng.integers(1, 8))
            n = k + 1 + int(rng.integers(1, 80))
            p = rng.uniform(0.0, 3.0)
            gt = rng.uniform(0.1, 2.0)
            Z = rng.uniform(0.0, 3.0)
            T = rng.uniform(0.0, 4.0)
            if abs(p - (Z / gt - 1.0)) < 1e-6:
                continue
            assert not tb.lemma_sum_bounds(k, n, p, gt, Z, T).violated

    def test_gamma_ratio_inequality_on_grid(self):
        for z in range(1, 1001, 7):
            for p in np.linspace(0.0, 3.0, 13):
                assert tb.gamma_ratio_inequality_gap(z, float(p)) >= 0.0


class TestHierarchyODE:
    def test_decoupled_exponential_decay(self):
        n = 6
        H0 = tb.HierarchyProfile(values=np.arange(1.0, n), n=n, t=0.0)
        out = tb.hierarchy_ode_solve(2.0, 0.0, 0.0, n, H0, 0.0, 1.5)
        expect = np.arange(1.0, n) * math.exp(-3.0)
        assert np.max(np.abs(out.values - expect)) < 1e-12

    def test_steady_state_matches_back_substitution(self):
        n, c1, c2, c3, top = 12, 5.0, 0.7, 0.3, 0.2
        H0 = tb.HierarchyProfile(values=np.zeros(n - 1), n=n, t=0.0)
        out = tb.hierarchy_ode_solve(c1, c2, c3, n, H0, top, 200.0)
        ref = tb.hierarchy_steady_state(c1, c2, c3, n, top)
        assert np.max(np.abs(out.values - ref)) < 1e-10

    def test_callable_boundary_matches_constant(self):
        n = 8
        H0 = tb.HierarchyProfile(values=np.full(n - 1, 0.1), n=n, t=0.0)
        const = tb.hierarchy_ode_solve(1.0, 0.2, 0.5, n, H0, 0.3, 2.0)
        call = tb.hierarchy_ode_solve(1.0, 0.2, 0.5, n, H0, lambda t: 0.3, 2.0,
                                      rtol=1e-11)
        assert np.max(np.abs(const.values - call.values)) < 1e-7

    def test_matched_constants_dominated_by_assembly(self):
        c = tb.TheoryConstants(sigma=1.0, gamma=1 / 6, eta=1 / 6, M=0.125,
                               C0=0.5, delta=1.0)
        for n in (16, 64):
            ks = np.arange(1.0, n)
            H0 = tb.HierarchyProfile(values=c.C0 * ks ** 2 / n ** 2, n=n, t=0.0)
            for T in (0.1, 1.0):
                top = (c.C0 * math.exp(-c.Z * T)
                       + 4 * n * c.M * c.eta / c.sigma ** 4)
                prof = tb.hierarchy_ode_solve(
                    c.Z, c.gamma_tilde * c.M / (c.delta * c.gamma),
                    c.gamma_tilde, n, H0, top, T)
                for k in range(1, n):
                    eb = tb.lemma33_bounds(c, 2.0, 2.0, k, n, T)
                    assert prof.values[k - 1] <= eb.bound_Hk * (1 + 1e-6)

    def test_strictly_below_with_smaller_boundary(self):
        c = tb.TheoryConstants(sigma=1.0, gamma=1 / 6, eta=1 / 6, M=0.125,
                               C0=0.5, delta=1.0)
        n, T = 16, 1.0
        ks = np.arange(1.0, n)
        H0 = tb.HierarchyProfile(values=0.5 * c.C0 * ks ** 2 / n ** 2, n=n, t=0.0)
        prof = tb.hierarchy_ode_solve(
            c.Z, c.gamma_tilde * c.M / (c.delta * c.gamma), c.gamma_tilde,
            n, H0, 0.0, T)
        for k in (1, 5, 10):
            eb = tb.lemma33_bounds(c, 2.0, 2.0, k, n, T)
            assert prof.values[k - 1] < eb.bound_Hk


class TestLemmaBoundsAssembly:
    CONST = tb.TheoryConstants(sigma=1.0, gamma=1 / 6, eta=1 / 6, M=0.125,
                               C0=0.5, delta=1.0)

    def test_zero_inputs_give_zero_bounds(self):
        c = tb.TheoryConstants(sigma=1.0, gamma=0.1, eta=0.5, M=0.0, C0=0.0)
        eb = tb.lemma33_bounds(c, 2.0, 2.0, 2, 16, 1.0)
        assert eb.bound_Hn == 0.0 and eb.bound_Hk == 0.0

    def test_long_time_limit_part1(self):
        c = self.CONST
        eb = tb.lemma33_bounds(c, 2.0, 2.0, 2, 32, 1e6)
        assert eb.bound_Hn == pytest.approx(4 * 32 * c.M * c.eta / c.sigma ** 4,
                                            rel=1e-12)

    def test_part2_sharpens_with_bootstrap_input(self):
        c = self.CONST
        p1 = tb.lemma33_bounds(c, 2.0, 2.0, 2, 64, 5.0)
        p2 = tb.lemma33_bounds(c, 2.0, 2.0, 2, 64, 5.0, p=2.0, C1=0.01)
        assert p2.label.startswith("part2")
        assert p2.bound_Hn < p1.bound_Hn  # n^0 vs n^1 growth at large T

    def test_bounded_mode_majorizes_exact(self):
        c = self.CONST
        for k, n, T in ((1, 64, 1.0), (3, 128, 0.5), (2, 200, 5.0)):
            exact = tb.lemma33_bounds(c, 2.0, 2.0, k, n, T)
            coarse = tb.lemma33_bounds(c, 2.0, 2.0, k, n, T, exact_limit=0)
            assert exact.exact_sums and not coarse.exact_sums
            assert "bounded, not exact" in coarse.label
            assert coarse.bound_Hk >= exact.bound_Hk * (1 - 1e-12)

    def test_gaussian_oracle_dominated(self):
        # stationary marginal entropies of the solvable model sit below the
        # assembled bound with its matched constants
        c = self.CONST
        for n in (16, 64, 256):
            v, cc, s = go.stationary_state(1.0, 0.5, 1.0, n)
            for k in (1, 2, 4, n // 2):
                H = go.marginal_relative_entropy(v, cc, s, k)
                eb = tb.lemma33_bounds(c, 2.0, 2.0, k, n, 1e5)
                assert H <= eb.bound_Hk

    def test_million_particles_without_overflow(self):
        for p, C1 in ((None, None), (2.0, 1.0)):
            eb = tb.lemma33_bounds(self.CONST, 2.0, 2.0, 3, 10 ** 6, 5.0,
                                   p=p, C1=C1)
            assert math.isfinite(eb.bound_Hn) and math.isfinite(eb.bound_Hk)
            assert not eb.exact_sums
            assert eb.bound_Hk > 0

    def test_input_validation(self):
        with pytest.raises(tb.BoundsError):
            tb.lemma33_bounds(self.CONST, 2.5, 2.0, 1, 8, 1.0)
        with pytest.raises(tb.BoundsError):
            tb.lemma33_bounds(self.CONST, 2.0, 2.0, 8, 8, 1.0)
        with pytest.raises(tb.BoundsError):
            tb.lemma33_bounds(self.CONST, 2.0, 2.0, 1, 8, 1.0, p=1.0)


class TestIterationSchedule:
    def test_exponent_sequence(self):
        sched = tb.iteration_schedule(1.2, 1.9)
        qs = [row[1] for row in sched.rows]
        assert qs == pytest.approx([1.0, 1.5, 1.75])

    def test_finite_termination_above_one(self):
        sched = tb.iteration_schedule(1.2, 1.9)
        assert sched.m_star == 3
        assert sched.rows[-1][2] == 2.0

    def test_slow_regime_stopping_rule(self):
        sched = tb.iteration_schedule(0.9, 0.95, eps=0.01)
        assert sched.m_star is None
        assert sched.rows[-1][0] == 8
        assert sched.rows[-1][2] >= 2 * 0.9 - 0.01
        assert sched.limit_exponent == pytest.approx(1.8)

    def test_exact_hit_rejected(self):
        with pytest.raises(tb.ScheduleError):
            tb.iteration_schedule(4.0 / 3.0, 1.9)

    def test_requires_eps_below_one(self):
        with pytest.raises(tb.ScheduleError):
            tb.iteration_schedule(0.5, 0.9)


class TestTheoremBound:
    CERT = tb.TheoryConstants(sigma=1.0, gamma=1 / 6, eta=1 / 6, M=0.125,
                              C0=1.0, delta=1.0)  # r_c = 8, sigma^4 = 36 g e

    def test_certified_long_time_limit(self):
        C1, C2 = tb.explicit_C1_C2(0.125, 1.0, 1 / 6, 1 / 6, 1.0)
        tb_far = tb.theorem_bound(1, 2, 64, 1e9, self.CERT)
        assert tb_far.certified
        assert tb_far.value == pytest.approx(C1 * (2 / 64) ** 2, rel=1e-12)

    def test_full_marginal_ratio_one(self):
        C1, C2 = tb.explicit_C1_C2(0.125, 1.0, 1 / 6, 1 / 6, 1.0)
        out = tb.theorem_bound(1, 64, 64, 0.0, self.CERT)
        assert out.value == pytest.approx(C1 + C2, rel=1e-12)

    def test_untracked_regime_shape(self):
        c = tb.TheoryConstants(sigma=1.0, gamma=0.05, eta=1.0, M=1.0, C0=1.0)
        # r_c = 4 but sigma^4 = 20 gamma eta < 12 gamma eta is false: tracked.
        c2 = tb.TheoryConstants(sigma=1.0, gamma=0.1, eta=1.0, M=1.0, C0=1.0)
        out = tb.theorem_bound(1, 2, 16, 1.0, c2)  # sigma^4 = 10 g e <= 12 g e
        assert not out.certified
        assert out.value == pytest.approx((2 / 16) ** 2)

    def test_case2_shape(self):
        c = tb.TheoryConstants(sigma=1.0, gamma=0.5, eta=0.3, M=1.0, C0=1.0)
        assert 0 < c.r_c <= 1
        out = tb.theorem_bound(2, 3, 27, 1.0, c, eps=(0.1, 0.2))
        assert out.value == pytest.approx(
            3 ** (1 + c.r_c - 0.1) / 27 ** (2 * c.r_c - 0.2))

    def test_reverse_shapes(self):
        fast = tb.TheoryConstants(sigma=2.0, gamma=1.0, eta=0.2, M=1.0, C0=1.0,
                                  bsq_sup=0.5)
        assert fast.p_c > 2
        out = tb.theorem_bound("reverse", 2, 10, 1.0, fast)
        assert out.value == pytest.approx(0.04) and not out.certified
        slow = tb.TheoryConstants(sigma=1.0, gamma=1.0, eta=0.5, M=1.0, C0=1.0,
                                  bsq_sup=0.5)
        assert slow.p_c <= 2
        out = tb.theorem_bound("reverse", 2, 10, 1.0, slow, eps=0.1)
        assert out.value == pytest.approx((0.2) ** (slow.p_c - 0.1))

    def test_regime_mismatch(self):
        slow = tb.TheoryConstants(sigma=1.0, gamma=0.5, eta=0.3, M=1.0, C0=1.0)
        with pytest.raises(tb.RegimeError):
            tb.theorem_bound(1, 1, 8, 1.0, slow)


class TestGronwallEnvelope:
    def test_exact_solution_no_violations(self):
        c = 1.7
        t = np.linspace(0, 4, 600)
        g = 0.5 + 0.3 * np.sin(t)
        # H solving H' = -cH + g via exact integrating factor on a fine grid
        fine = np.linspace(0, 4, 60001)
        gf = 0.5 + 0.3 * np.sin(fine)
        integ = cumulative_simpson(np.exp(c * fine) * gf, x=fine, initial=0.0)
        Hf = np.exp(-c * fine) * (2.0 + integ)
        H = np.interp(t, fine, Hf)
        rep = tb.gronwall_envelope(t, H, g, c)
        assert rep.violations == ()

    def test_detector_flags_inflated_sample(self):
        c = 1.0
        t = np.linspace(0, 2, 100)
        g = np.ones_like(t)
        H = (1 - np.exp(-t))  # exact solution of H' = -H + 1, H0 = 0
        H[40] += 1.0
        rep = tb.gronwall_envelope(t, H, g, c)
        assert rep.violations == (40,)

    def test_gaussian_entropy_respects_envelope(self):
        # product initialization at the limiting stationary law; the top
        # marginal inequality holds with the stationary LSI constant
        a, b, sig, n, k = 1.0, 0.5, 1.0, 10, 2
        s_inf = sig ** 2 / (2 * (a + b))
        eta = s_inf / 2.0
        c = sig ** 2 / (4 * eta)
        t = np.linspace(0.0, 6.0, 400)
        H = np.empty_like(t)
        g = np.empty_like(t)
        eye, ones = np.eye(k), np.ones((k, k))
        for i, ti in enumerate(t):
            part = go.evolve_particle_covariance(a, b, sig, n,
                                                 (0.0, s_inf, 0.0), ti)
            H[i] = go.marginal_relative_entropy(part.v, part.c, s_inf, k)
            G1, g1 = go._marginal_drift_affine(a, b, n, k, part.v, part.c, 0.0)
            G2, g2 = go._meanfield_drift_affine(a, b, k, 0.0)
            G = G1 - G2
            cov = (part.v - part.c) * eye + part.c * ones
            g[i] = k / sig ** 2 * float((G @ cov @ G.T)[0, 0])
        rep = tb.gronwall_envelope(t, H, g, c)
        assert rep.violations == ()

    def test_domain_errors(self):
        t = np.linspace(0, 1, 10)
        with pytest.raises(tb.BoundsError):
            tb.gronwall_envelope(t, np.ones(10), np.ones(10), 0.0)
        with pytest.raises(tb.BoundsError):
            tb.gronwall_envelope(t, np.ones(10), -np.ones(10), 1.0)


class TestDeltaHelpers:
    def test_default_delta_regimes(self):
        d_hi = tb.default_delta(8.0)
        assert (1 + 8.0) / (1 + d_hi) == pytest.approx(3.2)
        d_lo = tb.default_delta(1.0)
        assert (1 + 1.0) / (1 + d_lo) == pytest.approx(1.75)

    def test_optimize_delta_beats_default_or_ties(self):
        c0 = tb.TheoryConstants(sigma=1.0, gamma=1 / 6, eta=1 / 6, M=0.125,
                                C0=0.5, delta=1.0)
        def assemble(delta):
            c = tb.TheoryConstants(sigma=1.0, gamma=1 / 6, eta=1 / 6, M=0.125,
                                   C0=0.5, delta=delta)
            return tb.lemma33_bounds(c, 2.0, 2.0, 2, 64, 10.0).bound_Hk
        best_delta, best_val = tb.optimize_delta(assemble, c0.r_c)
        assert best_val <= assemble(1.0) * (1 + 1e-9)
