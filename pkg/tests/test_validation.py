import pytest

from comac.validation import ValidationConfig, run_validation_suite

from conftest import network

IDENTITIES = {"energy_identity", "orthogonality", "noiseless_exactness_arithmetic_mean",
              "noiseless_exactness_geometric_mean", "fairness_energy"}


def small(seed=0, sigma=0.1):
    return ValidationConfig(network(6, 12, sigma_N_sq=sigma, seed=seed), 1.0, 30.0,
                            n_frames=20_000, n_lambda=200_000, n_ks=2000, n_bits=200_000)


def by_name(report):
    return {c.name: c for c in report.checks}


def test_default_passes():
    report = run_validation_suite(small())
    assert report.passed, report.text()
    assert report.text().endswith(f"{len(report.checks)}/{len(report.checks)} checks passed")


def test_lambda_violation_reported():
    report = by_name(run_validation_suite(small(sigma=1e4)))
    assert not report["lambda_oracle"].passed
    assert "sigma_N^2 * ln(a) < alpha_geo * K * M" in report["lambda_oracle"].detail


def test_seed_changes_statistics_not_identities():
    a = by_name(run_validation_suite(small(seed=1)))
    b = by_name(run_validation_suite(small(seed=2)))
    assert a["var_delta"].statistic != b["var_delta"].statistic
    for name in IDENTITIES:
        assert a[name].passed and b[name].passed


def test_report_dict():
    d = run_validation_suite(small()).to_dict()
    assert d["passed"] is True
    assert {"name", "passed", "statistic", "threshold", "detail"} <= set(d["checks"][0])
