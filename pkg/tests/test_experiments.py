import numpy as np
import pytest

from comac.experiments import (ExperimentSpec, dominance_violations, outage_from_errors,
                               run_comparison, run_outage, run_trials, wilson_interval)
from comac.model import ConfigurationError, LambdaExistenceError, PhaseMode, ReadingRange
from comac.readings import PointMass, UniformIID
from comac.tdma import TdmaConfig

from conftest import arith, geo, network

EX3_READINGS = ReadingRange(5.0, 30.0)
GRID = tuple(np.logspace(-3, np.log10(0.3), 12))


def small_spec(**kw):
    base = dict(network=network(5, 10, seed=11), function=arith(5), readings=UniformIID(1, 30),
                epsilon_grid=GRID, n_trials=600, analytic_samples=4000)
    base.update(kw)
    return ExperimentSpec(**base)


class TestWilson:
    def test_textbook_value(self):
        lo, hi = wilson_interval(5, 100)
        assert float(lo) == pytest.approx(0.02154, abs=5e-5)
        assert float(hi) == pytest.approx(0.11175, abs=5e-5)

    def test_edges(self):
        lo, hi = wilson_interval(np.array([0, 50]), 50)
        assert lo[0] == 0.0 and hi[0] > 0.0
        assert hi[1] == 1.0 and lo[1] < 1.0

    def test_coverage_with_injected_corruption(self):
        # Noiseless runs have |E| = 0; corrupting each trial with probability p
        # makes the true outage exactly p at every eps <= 1.
        p, n, runs = 0.07, 400, 200
        rng = np.random.default_rng(2)
        covered = 0
        for _ in range(runs):
            err = np.where(rng.random(n) < p, 1.0, 0.0)
            _, counts = outage_from_errors(err, [0.5])
            lo, hi = wilson_interval(counts, n)
            covered += bool(lo[0] <= p <= hi[0])
        assert covered / runs >= 0.90


class TestOutageFromErrors:
    def test_inclusive_threshold(self):
        out, counts = outage_from_errors(np.array([0.1, 0.2, 0.3]), [0.1, 0.25, 0.5])
        assert counts.tolist() == [3, 1, 0]
        assert out.tolist() == [1.0, 1 / 3, 0.0]


class TestSpecValidation:
    @pytest.mark.parametrize("changes, match", [
        (dict(epsilon_grid=()), "epsilon_grid"),
        (dict(epsilon_grid=(0.1, 0.05)), "increasing"),
        (dict(epsilon_grid=(0.0, 0.1)), "positive"),
        (dict(n_trials=0), "n_trials"),
        (dict(scheme="fdma"), "scheme"),
        (dict(snr_db=3.0), "tdma"),
        (dict(scheme="tdma"), "tdma"),
        (dict(scheme="comac_unbiased_ref"), "geometric"),
        (dict(function=arith(4)), "K="),
    ])
    def test_rejects(self, changes, match):
        with pytest.raises(ConfigurationError, match=match):
            run_outage(small_spec(**changes))

    def test_tdma_fairness_enforced(self):
        with pytest.raises(ConfigurationError, match="fairness"):
            run_outage(small_spec(scheme="tdma", tdma=TdmaConfig(3)))

    def test_lambda_condition_checked_before_trials(self):
        spec = small_spec(network=network(5, 10, sigma_N_sq=1e5), function=geo(5))
        with pytest.raises(LambdaExistenceError):
            run_outage(spec)


class TestRunOutage:
    def test_noiseless_orthogonal_is_zero(self):
        cfg = network(3, 4, sigma_N_sq=0.0, phase_mode=PhaseMode("orthogonal"))
        for fn in (arith(3), geo(3)):
            curve = run_outage(small_spec(network=cfg, function=fn, n_trials=10_000))
            assert np.all(curve.outage == 0.0)
            assert np.all(curve.analytic == 0.0)

    def test_curve_shape_and_bounds(self):
        curve = run_outage(small_spec())
        assert len(curve.outage) == len(GRID)
        assert np.all((curve.outage >= 0) & (curve.outage <= 1))
        assert np.all(np.diff(curve.outage) <= 0)
        assert np.all(curve.ci_lo <= curve.outage) and np.all(curve.outage <= curve.ci_hi)
        assert curve.analytic is not None and curve.n_trials == 600 and curve.seed == 11

    def test_worker_count_does_not_change_results(self):
        spec = small_spec(n_trials=700)
        a = run_outage(spec, workers=1)
        b = run_outage(spec, workers=3)
        assert np.array_equal(a.outage, b.outage)
        assert np.array_equal(a.analytic, b.analytic)

    def test_seed_changes_results(self):
        a = run_trials(small_spec())
        b = run_trials(small_spec(network=network(5, 10, seed=12)))
        assert not np.array_equal(a.abs_error, b.abs_error)

    def test_matches_analytic_at_fixed_readings(self):
        x = np.linspace(2, 29, 25)
        spec = small_spec(network=network(25, 25, seed=4), function=arith(25), readings=PointMass(x),
                          n_trials=3000)
        curve = run_outage(spec)
        tol = np.maximum(0.02, 2 * curve.ci_half_width)
        assert np.all(np.abs(curve.outage - curve.analytic) <= tol)

    def test_reference_scheme_uses_same_frames(self):
        spec = small_spec(network=network(25, 25, seed=5), function=geo(25), n_trials=400)
        practical = run_trials(spec)
        ref = run_trials(spec.replace(scheme="comac_unbiased_ref"))
        ratio = (practical.abs_error + 1e-300) / (ref.abs_error + 1e-300)
        assert np.corrcoef(practical.abs_error, ref.abs_error)[0, 1] > 0.9
        assert not np.allclose(ratio, 1.0)

    def test_no_analytic_for_tdma(self):
        spec = small_spec(network=network(5, 50, seed=3, readings=EX3_READINGS), readings=UniformIID(5, 30),
                          scheme="tdma", tdma=TdmaConfig(10), snr_db=6.0)
        curve = run_outage(spec)
        assert curve.analytic is None and curve.scheme == "tdma"


class TestComparison:
    def _specs(self, K=5, phase=PhaseMode()):
        t = TdmaConfig(10)
        cfg = network(K, t.fair_M(K), seed=21, readings=EX3_READINGS, phase_mode=phase)
        a = ExperimentSpec(cfg, arith(K), UniformIID(5, 30), epsilon_grid=GRID, n_trials=400,
                           tdma=t, analytic_samples=2000)
        return a, a.replace(scheme="tdma")

    def test_single_point(self):
        a, b = self._specs()
        pts = run_comparison(a, b, [4.0])
        assert len(pts) == 1
        p = pts[0]
        assert p.snr_db == 4.0 and p.comac.scheme == "comac" and p.tdma.scheme == "tdma"
        assert p.sigma_N_sq == pytest.approx(a.replace(snr_db=4.0).resolved_network().sigma_N_sq)

    def test_inconsistent_specs(self):
        a, b = self._specs()
        with pytest.raises(ConfigurationError):
            run_comparison(a, b.replace(function=geo(5, readings=EX3_READINGS)), [0.0])
        with pytest.raises(ConfigurationError):
            run_comparison(a, b.replace(readings=UniformIID(5, 20)), [0.0])
        with pytest.raises(ConfigurationError):
            run_comparison(a, b.replace(tdma=TdmaConfig(9)), [0.0])

    def test_noiseless_limit(self):
        # At 80 dB the TDMA error is pure quantization (|E| <= 1/2048) while
        # CoMAC with orthogonal sequences is essentially exact.
        a, b = self._specs(K=25, phase=PhaseMode("orthogonal"))
        eps = (1e-5, 1e-4, 6e-4, 1e-3)
        a, b = a.replace(epsilon_grid=eps), b.replace(epsilon_grid=eps)
        p = run_comparison(a, b, [80.0])[0]
        assert p.tdma.outage[0] > 0.5
        assert p.tdma.outage[2] == 0.0 and p.tdma.outage[3] == 0.0
        assert np.all(p.comac.outage[1:] == 0.0)

    def test_dominance_helper(self):
        a, _ = self._specs()
        c = run_outage(a.replace(epsilon_grid=(0.1,), n_trials=50, snr_db=0.0))
        t = run_outage(a.replace(scheme="tdma", epsilon_grid=(0.1,), n_trials=50, snr_db=0.0))
        c.outage[:] = 0.2
        t.outage[:] = 0.3
        assert dominance_violations(c, t) == []
        t.outage[:] = 0.005
        assert dominance_violations(c, t) == []  # TDMA outage below the 0.01 floor
        t.outage[:] = 0.2
        assert len(dominance_violations(c, t)) == 1
