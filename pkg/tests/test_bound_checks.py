"""
Tests for the numerical verification suite
"""
import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from fbmpersist.core.bound_checks import (
    CHECK_REGISTRY,
    bz_comparison_cov,
    check_bz_comparison,
    check_bz_slepian,
    check_discretization_error,
    check_expected_max_bounds,
    check_extreme_value_limit,
    check_mgf_bound,
    check_negative_barrier_bound,
    check_rkhs,
    check_slepian_monotonicity,
    check_small_barrier_sandwich,
    check_statement1,
    count_records,
    count_right_to_left_records,
    extreme_value_constants,
    max_bound_formulas,
    mills_ratio_check,
    probe_monotonicity_conjecture,
    rkhs_shift_quantities,
    run_checks,
    sample_bz_process,
    select_checks,
)
from fbmpersist.core.errors import (
    ConfigValidationError,
    DomainError,
    PreconditionViolated,
    SizeExceeded,
)
from fbmpersist.core.gaussian_paths import fbm_covariance_matrix
from fbmpersist.types.models import BoundCheck, UniformLaw


class TestBoundCheck:
    def test_pass_within_noise(self):
        check = BoundCheck.evaluate("x", lhs=1.1, rhs=1.0, lhs_se=0.05)
        assert check.margin == pytest.approx(-0.1)
        assert check.passed

    def test_fail_beyond_noise(self):
        assert not BoundCheck.evaluate("x", lhs=1.5, rhs=1.0, lhs_se=0.05).passed

    def test_serialized_flag(self):
        data = BoundCheck.evaluate("x", lhs=0.0, rhs=1.0).model_dump(by_alias=True)
        assert data["pass"] is True


class TestExpectedMax:
    def test_formulas(self):
        lower, upper = max_bound_formulas(0.5)
        assert lower == pytest.approx(1 / (2 * math.sqrt(0.5 * math.pi * math.e * math.log(2))))
        assert upper == pytest.approx(16.3 / math.sqrt(0.5))

    def test_bounds_hold(self, small_cfg):
        lower, upper = check_expected_max_bounds(0.5, small_cfg)
        assert lower.passed and upper.passed
        assert lower.rhs == upper.lhs

    def test_mgf(self, small_cfg):
        assert check_mgf_bound(0.5, 1.0, small_cfg).passed
        with pytest.raises(DomainError):
            check_mgf_bound(0.5, 0.0, small_cfg)
        with pytest.raises(DomainError):
            check_mgf_bound(0.5, 4.5, small_cfg)


class TestDiscretization:
    def test_precondition(self, small_cfg):
        # 2^(1/0.3) is about 10.08
        with pytest.raises(PreconditionViolated):
            check_discretization_error(0.3, 8, small_cfg)

    def test_gap_is_pathwise_nonnegative(self, small_cfg):
        check = check_discretization_error(0.5, 16, small_cfg)
        assert check.passed
        assert check.details["min_pathwise_gap"] >= 0.0
        assert check.lhs > 0


class TestRecords:
    def test_scan_matches_brute_force(self, rng):
        for _ in range(50):
            length = int(rng.integers(2, 200))
            n_candidates = int(rng.integers(1, length + 1))
            values = rng.standard_normal((3, length))
            fast = count_records(values, n_candidates)
            for row, got in zip(values, fast):
                slow = sum(
                    1 for j in range(n_candidates)
                    if j == length - 1 or row[j] > row[j + 1:].max()
                )
                assert got == slow

    def test_ties_are_not_records(self):
        assert count_records(np.array([[1.0, 1.0, 0.0]]), 2)[0] == 1

    def test_inequality(self, small_cfg):
        stats = count_right_to_left_records(0.5, 5, small_cfg)
        assert stats.n == 5
        assert stats.expected_records.p_hat >= 0
        assert stats.check.passed

    def test_size_cap(self, small_cfg):
        with pytest.raises(SizeExceeded):
            count_right_to_left_records(0.5, 200, small_cfg)

    def test_decreasing_paths_are_all_records(self, small_cfg):
        def decreasing(hurst, grid, n_paths, rng):
            return np.tile(-grid.times(), (n_paths, 1))

        stats = count_right_to_left_records(0.5, 4, small_cfg, sampler=decreasing)
        assert stats.expected_records.p_hat == 16
        assert stats.persistence_n2.p_hat == 1.0
        assert stats.check.passed

    def test_increasing_paths_have_no_records(self, small_cfg):
        def increasing(hurst, grid, n_paths, rng):
            return np.tile(grid.times(), (n_paths, 1))

        stats = count_right_to_left_records(0.5, 4, small_cfg, sampler=increasing)
        assert stats.expected_records.p_hat == 0
        assert stats.persistence_n2.p_hat == 0.0


class TestNegativeBarrier:
    def test_bound_and_domain(self, small_cfg):
        assert check_negative_barrier_bound(0.5, 2, 1, small_cfg).passed
        with pytest.raises(DomainError):
            check_negative_barrier_bound(0.5, 1, 1, small_cfg)

    @pytest.mark.parametrize("hurst", [0.3, 0.5])
    def test_two_point_event_matches_bivariate_normal(self, small_cfg, hurst):
        # n = 2, m = 1: the event is {B_1 <= -1, B_2 <= -1}
        cov = fbm_covariance_matrix(hurst, np.array([1.0, 2.0]))
        exact = multivariate_normal(mean=[0.0, 0.0], cov=cov).cdf([-1.0, -1.0])
        check = check_negative_barrier_bound(hurst, 2, 1, small_cfg)
        assert abs(check.lhs - exact) < 5 * check.lhs_se, f"{check.lhs:.4f} vs {exact:.4f}"

    def test_nonnegative_paths_never_hit(self, small_cfg):
        def zeros(hurst, grid, n_paths, rng):
            return np.zeros((n_paths, grid.n_points + 1))

        check = check_negative_barrier_bound(0.5, 3, 2, small_cfg, sampler=zeros)
        assert check.lhs == 0.0
        assert check.passed


class TestComparisonProcess:
    def test_equal_variances(self):
        fbm, x = bz_comparison_cov(0.3, 10, 4, 4)
        assert fbm == pytest.approx(x)

    def test_off_diagonal(self):
        fbm, x = bz_comparison_cov(0.5, 4, 1, 3)
        assert fbm == pytest.approx(0.25)
        assert x == pytest.approx(0.125)

    @pytest.mark.parametrize("hurst", [0.1, 0.5, 0.9])
    def test_exhaustive_covariance_check(self, hurst):
        assert check_bz_comparison(hurst, 64).passed

    def test_index_range(self):
        with pytest.raises(DomainError):
            bz_comparison_cov(0.5, 4, 0, 1)

    def test_sampled_covariance(self, rng):
        x = sample_bz_process(0.3, 8, 40_000, rng)
        s = (np.arange(1, 9) / 8) ** 0.6
        assert np.allclose(np.var(x, axis=0), s, atol=0.05)
        assert np.cov(x[:, 1], x[:, 5])[0, 1] == pytest.approx(0.5 * s[1], abs=0.03)

    def test_slepian_comparison(self, small_cfg):
        assert check_bz_slepian(0.3, 16, 0.0, small_cfg).passed


class TestExtremeValue:
    def test_constants(self):
        a, b = extreme_value_constants(10_000)
        assert a == pytest.approx(1 / math.sqrt(2 * math.log(10_000)))
        assert b == pytest.approx(3.7384, abs=1e-3)
        with pytest.raises(DomainError):
            extreme_value_constants(2)

    def test_exact_finite_n_value(self, small_cfg):
        check = check_extreme_value_limit(10_000, small_cfg)
        assert check.passed
        assert check.details["exact"] == pytest.approx(0.395, abs=0.01)
        assert check.details["distance_to_limit"] > 0.01


class TestDeterministic:
    def test_mills(self):
        report = mills_ratio_check([0.0, 0.1, 1.0, 5.0, 20.0])
        assert report.passed
        assert report.rows[0]["upper"] is None
        assert report.rows[-1]["bound_ratio"] == pytest.approx(1.0, abs=0.01)
        with pytest.raises(DomainError):
            mills_ratio_check([-1.0])

    def test_rkhs_brownian(self):
        q = rkhs_shift_quantities(0.5, 4, 2)
        assert q.kappa == pytest.approx(1.0)
        assert q.f_min == pytest.approx(2.0)
        assert q.f_norm_sq == pytest.approx(4.0)
        assert q.f_norm_sq_dense == pytest.approx(4.0, rel=1e-6)
        assert q.grid_size == 7

    @pytest.mark.parametrize("hurst", [0.1, 0.5, 0.8, 0.95])
    def test_rkhs_bounds(self, hurst):
        assert all(c.passed for c in check_rkhs(hurst, 16, 4))

    def test_rkhs_cap(self):
        with pytest.raises(SizeExceeded):
            rkhs_shift_quantities(0.5, 5000, 1)


class TestMonteCarloReports:
    def test_slepian(self, small_cfg):
        report = check_slepian_monotonicity(0.5, [0.3, 0.5, 0.7], small_cfg)
        assert report.passed
        assert len(report.rows) == 3
        assert len(report.checks) == 2

    def test_slepian_grid_must_ascend(self, small_cfg):
        with pytest.raises(DomainError):
            check_slepian_monotonicity(0.5, [0.7, 0.3], small_cfg)

    def test_monotonicity_table_never_fails(self, small_cfg):
        report = probe_monotonicity_conjecture(4.0, [0.3, 0.6, 0.9], small_cfg)
        assert report.passed
        assert [row["hurst"] for row in report.rows] == [0.3, 0.6, 0.9]

    def test_sandwich(self, small_cfg):
        assert check_small_barrier_sandwich(UniformLaw(a=0.4, b=0.8), 0.25, small_cfg).passed

    def test_statement1_table(self, small_cfg):
        report = check_statement1(0.5, [4.0, 16.0], small_cfg)
        assert [row["T"] for row in report.rows] == [4.0, 16.0]
        for row in report.rows:
            assert math.isfinite(row["g_hat"]) and math.isfinite(row["g_weighted"])
            assert 0 < row["inverse_integral"]
        assert [c.name for c in report.checks] == ["statement1_shrinkage"]
        assert report.passed == report.checks[0].passed


def _zero_paths(hurst, grid, n_paths, rng):
    return np.zeros((n_paths, grid.n_points + 1))


def _patch_inverse_integral(monkeypatch, hurst, offset):
    """Make E[(int e^B)^-1] equal H T^(H-1) (E[grid max] + offset(T)) + 1/T"""

    def fake(values, step, scale=1.0):
        t = scale ** (1.0 / hurst)
        inverse = hurst * t ** (hurst - 1.0) * (values.max(axis=1) + offset(t)) + 1.0 / t
        return -np.log(inverse) - math.log(t)

    monkeypatch.setattr("fbmpersist.core.bound_checks.log_trapezoid_exp", fake)


class TestStatement1:
    def test_zero_paths_give_zero_correction(self, small_cfg):
        report = check_statement1(0.4, [4.0, 64.0], small_cfg, sampler=_zero_paths)
        for row in report.rows:
            assert abs(row["g_hat"]) < 1e-12, row
            assert row["g_weighted"] == 0.0
            assert row["inverse_integral"] == pytest.approx(1.0 / row["T"])

    def test_flat_correction_fails(self, monkeypatch, small_cfg):
        _patch_inverse_integral(monkeypatch, 0.5, lambda t: 1.0)
        report = check_statement1(0.5, [4.0, 64.0], small_cfg)
        check = report.checks[0]
        assert not check.passed, check.details
        assert not report.passed
        assert report.findings

    def test_decaying_correction_passes(self, monkeypatch, small_cfg):
        _patch_inverse_integral(monkeypatch, 0.5, lambda t: 10.0 / t)
        report = check_statement1(0.5, [4.0, 64.0], small_cfg)
        assert report.rows[0]["g_hat"] > report.rows[-1]["g_hat"] + 1.0
        assert report.passed, report.checks[0].details
        assert not report.findings


class TestRegistry:
    def test_filter(self):
        assert select_checks(["mills"]) == ["mills"]
        assert select_checks(None) == list(CHECK_REGISTRY)

    def test_unknown_name(self):
        with pytest.raises(ConfigValidationError, match="valid names"):
            select_checks(["nope"])

    def test_deterministic_checks_run(self, small_cfg):
        reports = run_checks(["rkhs", "mills", "bz_covariance"], small_cfg.with_updates(workers=3))
        assert [r.name for r in reports] == ["bz_covariance", "mills", "rkhs"]
        assert all(r.passed for r in reports)
        assert all(r.wall_time >= 0 for r in reports)
