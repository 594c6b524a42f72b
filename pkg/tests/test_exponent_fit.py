"""
Tests for log-log exponent fitting
"""
import math

import pytest

from fbmpersist.core.errors import DegenerateDesign, DomainError
from fbmpersist.core.exponent_fit import (
    fit_exponent,
    fit_points_from_estimates,
    fit_report,
    predicted_exponent,
)
from fbmpersist.types.models import (
    FitPoint,
    McEstimate,
    PointLaw,
    PredictionKind,
    UniformLaw,
)


def _power_law(slope: float, xs) -> list:
    return [FitPoint(x=x, p_hat=0.5 * x**slope, std_err=0.01 * 0.5 * x**slope) for x in xs]


class TestFit:
    def test_exact_power_law(self):
        fit = fit_exponent(_power_law(-0.5, [16, 32, 64, 128, 256]))
        assert fit.slope == pytest.approx(-0.5)
        assert fit.intercept == pytest.approx(math.log(0.5))
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.n_points == 5
        # equal relative errors of 1%: se = 0.01 / sqrt(Sxx)
        xs = [math.log(x) for x in (16, 32, 64, 128, 256)]
        mean = sum(xs) / len(xs)
        sxx = sum((x - mean) ** 2 for x in xs)
        assert fit.slope_se == pytest.approx(0.01 / math.sqrt(sxx))

    def test_order_does_not_matter(self):
        points = _power_law(0.25, [0.5, 0.25, 0.125, 0.0625])
        a = fit_exponent(points)
        b = fit_exponent(list(reversed(points)))
        assert a.slope == b.slope

    def test_unweighted_exact(self):
        fit = fit_exponent(_power_law(-0.2, [1, 10, 100]), weighted=False)
        assert fit.slope == pytest.approx(-0.2)
        assert fit.slope_se == pytest.approx(0.0, abs=1e-9)

    def test_zero_error_points(self):
        points = [FitPoint(x=x, p_hat=x**-1.0, std_err=0.0) for x in (2, 4, 8)]
        assert fit_exponent(points).slope == pytest.approx(-1.0)

    def test_too_few_points(self):
        with pytest.raises(DegenerateDesign):
            fit_exponent(_power_law(-0.5, [1, 2]))

    def test_affine_equivariance(self):
        base = _power_law(-0.5, [16, 32, 64, 128, 256])
        fit = fit_exponent(base)
        scaled_p = [FitPoint(x=p.x, p_hat=3.0 * p.p_hat, std_err=3.0 * p.std_err) for p in base]
        scaled_x = [FitPoint(x=10.0 * p.x, p_hat=p.p_hat, std_err=p.std_err) for p in base]

        by_p = fit_exponent(scaled_p)
        assert by_p.slope == pytest.approx(fit.slope, abs=1e-12)
        assert by_p.intercept == pytest.approx(fit.intercept + math.log(3.0), abs=1e-12)

        by_x = fit_exponent(scaled_x)
        assert by_x.slope == pytest.approx(fit.slope, abs=1e-12)
        assert by_x.intercept == pytest.approx(fit.intercept - fit.slope * math.log(10.0), abs=1e-12)

    def test_small_perturbation_moves_slope_little(self):
        base = _power_law(-0.5, [16, 32, 64, 128, 256])
        shaken = [
            FitPoint(x=p.x, p_hat=p.p_hat * (1.01 if i % 2 else 0.99), std_err=p.std_err)
            for i, p in enumerate(base)
        ]
        assert abs(fit_exponent(shaken).slope - (-0.5)) < 0.01

    def test_noisy_outlier_is_downweighted(self):
        points = _power_law(-0.5, [16, 32, 64, 128])
        outlier = 0.5 * 256**-0.5 * 5.0
        points.append(FitPoint(x=256, p_hat=outlier, std_err=outlier))
        weighted = fit_exponent(points)
        unweighted = fit_exponent(points, weighted=False)
        assert abs(weighted.slope + 0.5) < 0.01
        assert abs(unweighted.slope + 0.5) > 5 * abs(weighted.slope + 0.5), (
            f"weighted {weighted.slope:.4f} vs unweighted {unweighted.slope:.4f}"
        )

    def test_repeated_abscissa(self):
        with pytest.raises(DegenerateDesign):
            fit_exponent(_power_law(-0.5, [4, 4, 4]))


def _estimate(x: float, n_hits: int, n_paths: int = 10_000) -> McEstimate:
    p = n_hits / n_paths
    se = math.sqrt(p * (1 - p) / n_paths)
    return McEstimate(
        quantity="persistence_fixed", p_hat=p, std_err=se, ci_lo=max(0.0, p - 2 * se),
        ci_hi=min(1.0, p + 2 * se), n_paths=n_paths, n_hits=n_hits, x=x,
    )


def test_sparse_points_are_dropped():
    points = fit_points_from_estimates([_estimate(1, 5000), _estimate(2, 9), _estimate(4, 0)])
    assert [p.x for p in points] == [1]


class TestPrediction:
    def test_fixed(self):
        assert predicted_exponent(PredictionKind.FIXED_H, hurst=0.3) == pytest.approx(0.7)

    def test_annealed(self):
        law = UniformLaw(a=0.4, b=0.8)
        assert predicted_exponent(PredictionKind.ANNEALED, law=law) == pytest.approx(0.2)

    def test_small_barrier(self):
        assert predicted_exponent("small_barrier", law=PointLaw(h=0.8)) == pytest.approx(0.25)
        assert predicted_exponent("small_barrier", law=PointLaw(h=0.5)) == pytest.approx(1.0)

    def test_missing_inputs(self):
        with pytest.raises(DomainError):
            predicted_exponent(PredictionKind.FIXED_H)
        with pytest.raises(DomainError):
            predicted_exponent(PredictionKind.ANNEALED)


def test_discrepancy_sign_convention():
    decay = fit_exponent(_power_law(-0.5, [16, 32, 64]))
    report = fit_report("persistence_fixed", "point(0.5)", decay, PredictionKind.FIXED_H, 0.5)
    assert report.discrepancy == pytest.approx(0.0, abs=1e-9)

    growth = fit_exponent(_power_law(1.0, [0.5, 0.25, 0.125]))
    report = fit_report("small_barrier", "point(0.5)", growth, PredictionKind.SMALL_BARRIER, 1.0)
    assert report.discrepancy == pytest.approx(0.0, abs=1e-9)
