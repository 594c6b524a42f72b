"""
Log-log regression of persistence estimates and predicted exponents
"""
import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from ..types.models import (
    ExponentFit,
    FitPoint,
    FitReport,
    HurstLaw,
    McEstimate,
    PredictionKind,
)
from .errors import DegenerateDesign, DomainError
from .hurst_law import ess_sup

logger = logging.getLogger(__name__)

MIN_FIT_HITS = 10
# Variance floor for ln p_hat; exact points get the largest finite weight.
_VAR_FLOOR = 1e-30


def fit_points_from_estimates(
    estimates: Sequence[McEstimate],
    min_hits: int = MIN_FIT_HITS,
) -> List[FitPoint]:
    """Turn probability estimates into fit points, dropping near-empty ones"""
    points = []
    for est in estimates:
        hits = est.n_hits if est.n_hits is not None else est.n_paths
        if est.p_hat <= 0 or hits < min_hits:
            logger.warning(
                f"Excluding x={est.x:g} from fit: {hits} hits (< {min_hits})"
            )
            continue
        points.append(FitPoint(x=est.x, p_hat=est.p_hat, std_err=est.std_err, n_hits=est.n_hits))
    return points


def fit_exponent(points: Sequence[FitPoint], weighted: bool = True) -> ExponentFit:
    """Weighted least squares of ln p_hat on ln x.

    Weights are 1 / var(ln p_hat) with var(ln p_hat) = (std_err / p_hat)^2 by
    the delta method. Points are summed in ascending x.
    """
    if len(points) < 3:
        raise DegenerateDesign(f"need at least 3 points, got {len(points)}")

    ordered = sorted(points, key=lambda p: p.x)
    x = np.log(np.array([p.x for p in ordered], dtype=float))
    y = np.log(np.array([p.p_hat for p in ordered], dtype=float))
    if np.unique(x).size != x.size:
        raise DegenerateDesign("x values coincide after log transform")

    if weighted:
        rel = np.array([p.std_err / p.p_hat for p in ordered], dtype=float)
        w = 1.0 / np.maximum(rel**2, _VAR_FLOOR)
    else:
        w = np.ones_like(x)

    w_sum = np.sum(w)
    x_mean = np.sum(w * x) / w_sum
    y_mean = np.sum(w * y) / w_sum
    dx = x - x_mean
    dy = y - y_mean
    sxx = np.sum(w * dx * dx)
    if sxx <= 0:
        raise DegenerateDesign("x values have no spread")

    slope = float(np.sum(w * dx * dy) / sxx)
    intercept = float(y_mean - slope * x_mean)

    if weighted:
        slope_se = math.sqrt(1.0 / sxx)
    else:
        resid = y - intercept - slope * x
        dof = max(len(ordered) - 2, 1)
        slope_se = math.sqrt(float(np.sum(resid * resid)) / dof / sxx)

    ss_res = float(np.sum(w * (y - intercept - slope * x) ** 2))
    ss_tot = float(np.sum(w * dy * dy))
    r_squared = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot

    return ExponentFit(
        slope=slope,
        slope_se=slope_se,
        intercept=intercept,
        r_squared=min(max(r_squared, 0.0), 1.0),
        n_points=len(ordered),
    )


def predicted_exponent(
    kind: PredictionKind,
    hurst: Optional[float] = None,
    law: Optional[HurstLaw] = None,
) -> float:
    """Positive decay exponent: 1-H, 1-H0, or (1-H0)/H0"""
    kind = PredictionKind(kind)
    if kind == PredictionKind.FIXED_H:
        if hurst is None or not (0.0 < hurst <= 1.0):
            raise DomainError(f"fixed_h needs a Hurst exponent in (0, 1], got {hurst}")
        return 1.0 - hurst
    if law is None:
        raise DomainError(f"{kind.value} needs a Hurst law")
    h0 = ess_sup(law).h0
    if kind == PredictionKind.ANNEALED:
        return 1.0 - h0
    return (1.0 - h0) / h0


def fit_report(
    quantity: str,
    law_label: str,
    fit: ExponentFit,
    kind: PredictionKind,
    predicted: float,
) -> FitReport:
    """Compare a fitted slope with the predicted exponent.

    Horizon fits decay, so their slope is -theta; barrier fits grow as
    eps^theta, so their slope is +theta.
    """
    if PredictionKind(kind) == PredictionKind.SMALL_BARRIER:
        discrepancy = abs(fit.slope - predicted)
    else:
        discrepancy = abs(fit.slope + predicted)
    return FitReport(
        quantity=quantity,
        law=law_label,
        fit=fit,
        predicted=predicted,
        discrepancy=discrepancy,
    )
