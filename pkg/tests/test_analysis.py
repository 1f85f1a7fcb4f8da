import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from comac.analysis import (cond_var_delta, conditional_outage_arithmetic,
                            conditional_outage_geometric, conditional_stats, gamma_normal_ks,
                            gaussian_approx_check, geo_params, lambda_limit, lambda_m, log_xi,
                            markov_bound_arithmetic, mean_log_xi, outage_analytic, outage_arithmetic,
                            outage_geometric, pair_index, pair_products, power_moments, var_delta)
from comac.channel import batch_frames
from comac.model import (ConfigurationError, LambdaExistenceError, NomographicFunction, PhaseMode,
                         ReadingRange, reading_powers)
from comac.readings import PointMass, UniformIID

from conftest import TEMP_SENSING, arith, geo, network

# Frozen oracle values. Each was computed outside the package from the
# closed forms with scipy.stats.norm and scipy.integrate.quad.
# lambda_M = E{2^(Delta_3 / (alpha K M))}, Delta_3 ~ Gamma(M, sigma^2), by quadrature
LAMBDA_ORACLE = {  # (K = M, sigma^2, s_prime) -> value
    (5, 0.1, 0.5): 1.119037713815162,
    (25, 0.1, 0.5): 1.0225020636522855,
    (250, 0.1, 0.5): 1.0022267580987196,
    (25, 2.0, 1.0): 1.4806294632675607,
}
# 2 * norm.sf(eps M K P_max / sd) for x = (10, 20, 30), M = 4, sigma^2 = 0.5
ARITH_OUTAGE_ORACLE = {0.01: 0.9694006111124317, 0.05: 0.8478986658381993, 0.2: 0.4429619902426839}
# log-normal tails for x = (2, 8, 16), M = 30, sigma^2 = 0.5, s' = 0.5 (beta ~ 0.049)
GEO_OUTAGE_ORACLE = {0.01: 0.7150178323083645, 0.05: 0.10262169785436842, 0.2: 0.0018982280503661716}


class TestPairs:
    def test_pair_index_is_a_bijection(self):
        K = 7
        idx = [pair_index(k, l, K) for k, l in itertools.combinations(range(1, K + 1), 2)]
        assert sorted(idx) == list(range(1, K * (K - 1) // 2 + 1))

    def test_pair_index_rejects(self):
        with pytest.raises(ValueError):
            pair_index(2, 2, 3)

    def test_pair_products(self):
        assert pair_products([1.0, 2.0, 3.0]).tolist() == [2.0, 3.0, 6.0]


class TestConditionalVariance:
    def test_examples(self):
        assert cond_var_delta([1.0, 1.0], 1, 1.0) == 7.0
        assert cond_var_delta([0.0, 0.0, 0.0], 9, 0.3) == pytest.approx(9 * 0.09)
        assert cond_var_delta([0.2, 0.7], 5, 0.0) == pytest.approx(2 * 5 * 0.14)
        assert cond_var_delta([0.1, 0.3, 0.5], 4, 0.2) == pytest.approx(3.44)

    def test_orthogonal_drops_pair_term(self):
        assert cond_var_delta([1.0, 1.0], 1, 1.0, orthogonal=True) == 5.0

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=12), st.integers(1, 100), st.floats(0, 5))
    def test_permutation_symmetric_and_bounded(self, p, M, s2):
        v = cond_var_delta(p, M, s2)
        assert v == pytest.approx(cond_var_delta(p[::-1], M, s2), rel=1e-12, abs=1e-15)
        assert v >= M * s2 * s2 * (1 - 1e-12)

    def test_batch(self):
        p = np.array([[1.0, 1.0], [0.0, 0.0]])
        assert cond_var_delta(p, 1, 1.0).tolist() == [7.0, 1.0]

    def test_monte_carlo_oracle(self, rng):
        cfg = network(2, 1, sigma_N_sq=1.0)
        fr = batch_frames(cfg, np.array([1.0, 1.0]), rng, 1_000_000)
        d = fr["delta1"] + fr["delta2"] + fr["delta3"]
        assert np.var(d) == pytest.approx(7.0, rel=0.02)

    def test_conditional_stats(self):
        cfg = network(3, 10, sigma_N_sq=0.2)
        st_ = conditional_stats(cfg, arith(3), [1.0, 2.0, 3.0], UniformIID(1, 30))
        assert st_.mean == pytest.approx(2.0)
        assert st_.var_cond >= 10 * 0.04
        assert st_.var_marginal > 0


class TestMarginalVariance:
    def test_point_mass_equals_conditional(self):
        cfg = network(4, 12, sigma_N_sq=0.3)
        fn = arith(4)
        x = [1.0, 5.0, 7.0, 29.0]
        assert var_delta(cfg, fn, PointMass(x)) == pytest.approx(
            cond_var_delta(reading_powers(fn, x), 12, 0.3), rel=1e-12)

    def test_noiseless_single_node(self):
        assert var_delta(network(1, 5, sigma_N_sq=0.0), arith(1), UniformIID(1, 30)) == 0.0

    def test_closed_form_matches_sampling(self):
        fn = arith(5)
        ep_closed, pair_closed = power_moments(fn, UniformIID(1, 30))
        x = np.random.default_rng(3).uniform(1, 30, (200_000, 5))
        p = reading_powers(fn, x)
        assert ep_closed[0] == pytest.approx(p.mean(), rel=2e-3)
        s = p.sum(1)
        assert pair_closed == pytest.approx(np.mean(0.5 * (s * s - (p * p).sum(1))), rel=5e-3)

    def test_geometric_mean_phi_closed_form(self):
        fn = NomographicFunction.geometric_mean(1, TEMP_SENSING, 1.0, ReadingRange(5, 30), 2.0, 1.0)
        ep, _ = power_moments(fn, UniformIID(5, 30))
        assert ep[0] == pytest.approx(0.5669295828506119, rel=1e-12)


class TestLambda:
    @pytest.mark.parametrize("key", sorted(LAMBDA_ORACLE))
    def test_matches_quadrature(self, key):
        KM, s2, sp = key
        fn = geo(KM, s_prime=sp, readings=ReadingRange(1, 30))
        assert lambda_m(network(KM, KM, sigma_N_sq=s2), fn) == pytest.approx(LAMBDA_ORACLE[key], rel=1e-10)

    def test_zero_noise(self):
        assert lambda_m(network(3, 3, sigma_N_sq=0.0), geo(3)) == 1.0

    def test_half_point(self):
        fn = geo(4)
        M = 6
        s2 = fn.alpha * 4 * M / (2 * math.log(2))
        assert lambda_m(network(4, M, sigma_N_sq=s2), fn) == pytest.approx(2.0**M, rel=1e-12)

    def test_limit(self):
        cfg = network(10, 1_000_000, sigma_N_sq=3.0)
        fn = geo(10)
        assert abs(lambda_m(cfg, fn) / lambda_limit(cfg, fn) - 1) < 1e-4

    def test_existence(self):
        fn = geo(2)
        s2 = fn.alpha * 2 * 3 / math.log(2)
        with pytest.raises(LambdaExistenceError):
            lambda_m(network(2, 3, sigma_N_sq=s2), fn)

    @given(st.integers(1, 400), st.floats(0.0, 5.0))
    def test_bounded_below_by_limit(self, M, s2):
        fn = geo(5)
        cfg = network(5, M, sigma_N_sq=s2)
        if s2 * math.log(2) >= fn.alpha * 5 * M:
            return
        assert lambda_m(cfg, fn) >= lambda_limit(cfg, fn) * (1 - 1e-12)

    def test_monotone(self):
        fn = geo(5)
        lam_s = [lambda_m(network(5, 20, sigma_N_sq=s), fn) for s in (0.1, 0.5, 1.0)]
        lam_m = [lambda_m(network(5, M, sigma_N_sq=0.5), fn) for M in (5, 20, 200)]
        assert lam_s == sorted(lam_s)
        assert lam_m == sorted(lam_m, reverse=True)


class TestConditionalOutage:
    def test_arithmetic_oracle(self):
        cfg = network(3, 4, sigma_N_sq=0.5)
        fn = arith(3)
        eps = sorted(ARITH_OUTAGE_ORACLE)
        got = conditional_outage_arithmetic(cfg, fn, eps, reading_powers(fn, [10.0, 20.0, 30.0]))[0]
        assert got == pytest.approx([ARITH_OUTAGE_ORACLE[e] for e in eps], rel=1e-10)

    def test_geometric_oracle(self):
        cfg = network(3, 30, sigma_N_sq=0.5)
        fn = geo(3)
        eps = sorted(GEO_OUTAGE_ORACLE)
        got = conditional_outage_geometric(cfg, fn, eps, [2.0, 8.0, 16.0])[0]
        assert got == pytest.approx([GEO_OUTAGE_ORACLE[e] for e in eps], rel=1e-9)

    def test_geo_params(self):
        cfg = network(3, 30, sigma_N_sq=0.5)
        fn = geo(3)
        g = geo_params(cfg, fn, [2.0, 8.0, 16.0])
        assert g.gamma == pytest.approx(g.lambda_m / g.beta)
        assert g.mu_xi == pytest.approx(mean_log_xi(cfg, fn))
        assert g.lambda_m >= 1.0

    def test_log_xi_identity(self):
        fn = geo(4)
        d = np.array([-3.0, 0.0, 12.5])
        assert log_xi(fn, d, 9) == pytest.approx(np.log(2.0 ** (d / (fn.alpha * 4 * 9))), rel=1e-12)

    def test_noiseless_orthogonal_is_zero(self):
        cfg = network(3, 4, sigma_N_sq=0.0, phase_mode=PhaseMode("orthogonal"))
        assert np.all(conditional_outage_arithmetic(cfg, arith(3), [1e-3, 0.1], [[0.2, 0.3, 0.4]]) == 0)
        assert np.all(conditional_outage_geometric(cfg, geo(3), [1e-3, 0.1], [[2.0, 3.0, 4.0]]) == 0)


class TestIntegratedOutage:
    def test_arithmetic_limits(self):
        cfg = network(5, 5)
        fn = arith(5)
        assert float(outage_arithmetic(cfg, fn, 1e3, UniformIID(1, 30), 2000)) <= 1e-12
        assert float(outage_arithmetic(cfg, fn, 1e-12, UniformIID(1, 30), 2000)) == pytest.approx(1.0, abs=1e-9)

    def test_geometric_limits(self):
        cfg = network(5, 5)
        fn = geo(5)
        tail = outage_geometric(cfg, fn, np.array([1.0, 2.0, 5.0]), UniformIID(1, 30), 2000)[0]
        assert np.all((tail >= 0) & (tail <= 0.5))
        assert np.all(np.diff(tail) <= 0)
        assert float(outage_geometric(cfg, fn, 1e-12, UniformIID(1, 30), 2000)) == pytest.approx(1.0, abs=1e-6)

    def test_scalar_returns_interval(self):
        v = outage_arithmetic(network(5, 5), arith(5), 0.05, UniformIID(1, 30), 5000)
        assert 0 < v.value < 1 and v.half_width > 0

    def test_point_mass_has_no_sampling_error(self):
        cfg = network(3, 4, sigma_N_sq=0.5)
        v = outage_arithmetic(cfg, arith(3), 0.05, PointMass([10.0, 20.0, 30.0]))
        assert v.value == pytest.approx(ARITH_OUTAGE_ORACLE[0.05], rel=1e-10)
        assert v.half_width == 0.0

    @pytest.mark.parametrize("make_fn", [arith, geo])
    def test_monotone_in_eps_and_M(self, make_fn):
        eps = np.logspace(-3, -0.5, 10)
        curves = []
        for M in (25, 50, 150):
            cfg = network(25, M)
            curves.append(outage_analytic(cfg, make_fn(25), eps, UniformIID(1, 30), 4000, seed=1)[0])
        for c in curves:
            assert np.all(np.diff(c) <= 1e-12)
        for a, b in zip(curves, curves[1:]):
            assert np.all(b <= a + 1e-12)

    def test_rejects_bad_inputs(self):
        cfg = network(3, 3)
        with pytest.raises(ConfigurationError):
            outage_arithmetic(cfg, arith(3), 0.0, UniformIID(1, 30), 10)
        with pytest.raises(ConfigurationError):
            outage_arithmetic(cfg, geo(3), 0.1, UniformIID(1, 30), 10)
        with pytest.raises(ConfigurationError):
            outage_analytic(cfg, NomographicFunction.node_count(3, TEMP_SENSING, 1.0), 0.1, UniformIID(1, 30))

    def test_markov_bound_is_looser(self):
        cfg = network(25, 25)
        fn = arith(25)
        eps = np.array([0.01, 0.05])
        v = var_delta(cfg, fn, UniformIID(1, 30))
        approx = outage_arithmetic(cfg, fn, eps, UniformIID(1, 30), 5000)[0]
        assert np.all(markov_bound_arithmetic(cfg, fn, eps, v) >= approx - 1e-3)


class TestDistributionChecks:
    def test_gaussian_approx_large_M(self, rng):
        cfg = network(250, 250)
        x = rng.uniform(1, 30, 250)
        assert gaussian_approx_check(cfg, arith(250), x, 10_000, rng) < 0.02

    def test_gaussian_approx_small_is_diagnostic(self, rng):
        cfg = network(2, 1)
        d = gaussian_approx_check(cfg, arith(2), [3.0, 9.0], 1000, rng)
        assert 0 <= d <= 1

    def test_gaussian_approx_needs_enough_frames(self, rng):
        with pytest.raises(ConfigurationError):
            gaussian_approx_check(network(2, 2), arith(2), [3.0, 9.0], 999, rng)

    def test_gamma_ks_decreasing(self):
        ks = [gamma_normal_ks(M) for M in (1, 5, 25, 250)]
        assert ks == sorted(ks, reverse=True)
