"""
Exact simulation of fractional Brownian motion on uniform grids
"""
import logging
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from ..types.models import CirculantPlan, GridSpec, Path, PathFunctionals
from .errors import DomainError, EmbeddingNotPSD, FactorizationFailed, SizeExceeded

logger = logging.getLogger(__name__)

HURST_MIN = 1e-3
HURST_MAX = 1.0 - 1e-9
EPS_EIG = 1e-9
N_CHOL_MAX = 4096
PLAN_CACHE_SIZE = 512
PLAN_CACHE_MAX_INCREMENTS = 8192

# Upper bound on complex normals drawn per FFT call; keeps a chunk of long
# paths from allocating gigabytes at once.
MAX_BATCH_ELEMENTS = 2**22

ArrayLike = Union[float, int, np.ndarray]


def _check_open_hurst(hurst: float) -> None:
    if not (0.0 < hurst < 1.0):
        raise DomainError(f"Hurst exponent must lie in (0, 1), got {hurst}")


def fgn_autocov(hurst: float, lag: ArrayLike) -> ArrayLike:
    """Autocovariance of unit-step fractional Gaussian noise"""
    _check_open_hurst(hurst)
    k = np.asarray(lag, dtype=float)
    if np.any(k < 0):
        raise DomainError("lag must be nonnegative")
    two_h = 2.0 * hurst
    gamma = 0.5 * (np.abs(k + 1) ** two_h - 2.0 * k**two_h + np.abs(k - 1) ** two_h)
    if gamma.ndim == 0:
        return float(gamma)
    return gamma


def fbm_covariance(hurst: float, s: ArrayLike, t: ArrayLike) -> ArrayLike:
    """E[B_s B_t] = (s^2H + t^2H - |t-s|^2H) / 2, valid for H in (0, 1]"""
    if not (0.0 < hurst <= 1.0):
        raise DomainError(f"Hurst exponent must lie in (0, 1], got {hurst}")
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    two_h = 2.0 * hurst
    cov = 0.5 * (np.abs(s) ** two_h + np.abs(t) ** two_h - np.abs(t - s) ** two_h)
    if cov.ndim == 0:
        return float(cov)
    return cov


def fbm_covariance_matrix(hurst: float, times: np.ndarray) -> np.ndarray:
    """Dense covariance matrix of B at the given times"""
    times = np.asarray(times, dtype=float)
    return fbm_covariance(hurst, times[:, None], times[None, :])


# --------------------------------------------------------------------------
# Circulant embedding
# --------------------------------------------------------------------------


def build_circulant_plan(hurst: float, n_increments: int) -> CirculantPlan:
    """Eigenvalues of the size-2n circulant embedding of the fGn covariance"""
    if not (HURST_MIN <= hurst <= HURST_MAX):
        raise DomainError(
            f"Circulant sampler supports H in [{HURST_MIN}, {HURST_MAX}], got {hurst}"
        )
    if n_increments < 1:
        raise DomainError(f"n_increments must be >= 1, got {n_increments}")

    n = int(n_increments)
    gamma = fgn_autocov(hurst, np.arange(n + 1))
    ring = np.concatenate([gamma, gamma[n - 1:0:-1]])
    eigenvalues = np.fft.fft(ring).real

    tol = EPS_EIG * eigenvalues.max()
    negative = eigenvalues < 0
    clipped_mass = float(-eigenvalues[negative].sum())
    if eigenvalues.min() < -tol or clipped_mass > tol:
        raise EmbeddingNotPSD(hurst, n, float(eigenvalues.min()))
    if clipped_mass > 0:
        logger.debug(f"Clipped {clipped_mass:.2e} negative eigenvalue mass (H={hurst}, n={n})")
    eigenvalues[negative] = 0.0

    return CirculantPlan(
        hurst=hurst,
        n_increments=n,
        eigenvalues=eigenvalues,
        clipped_mass=clipped_mass,
    )


@lru_cache(maxsize=PLAN_CACHE_SIZE)
def _cached_plan(hurst: float, n_increments: int) -> CirculantPlan:
    return build_circulant_plan(hurst, n_increments)


def get_circulant_plan(hurst: float, n_increments: int) -> CirculantPlan:
    """Plan for (H, n); plans are immutable and shared read-only.

    Plans up to PLAN_CACHE_MAX_INCREMENTS are cached, so the cache stays
    under PLAN_CACHE_SIZE * 16 * PLAN_CACHE_MAX_INCREMENTS bytes of
    eigenvalues. Longer plans cost one FFT each and are rebuilt per call.
    """
    if n_increments > PLAN_CACHE_MAX_INCREMENTS:
        return build_circulant_plan(hurst, n_increments)
    return _cached_plan(hurst, n_increments)


def clear_plan_cache() -> None:
    """Release cached circulant plans and Cholesky factors"""
    _cached_plan.cache_clear()
    _cholesky_factor.cache_clear()


def sample_fgn_batch(plan: CirculantPlan, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-step fGn samples, shape (n_paths, n_increments).

    Each complex draw yields two independent samples: the real and the
    imaginary part of the transformed vector.
    """
    n = plan.n_increments
    size = plan.embedding_size
    scale = np.sqrt(plan.eigenvalues / size)

    n_draws = (n_paths + 1) // 2
    rows_per_batch = max(1, MAX_BATCH_ELEMENTS // size)
    out = np.empty((2 * n_draws, n), dtype=float)

    for start in range(0, n_draws, rows_per_batch):
        rows = min(rows_per_batch, n_draws - start)
        z = rng.standard_normal((rows, size)) + 1j * rng.standard_normal((rows, size))
        w = np.fft.fft(z * scale, axis=1)[:, :n]
        out[2 * start:2 * (start + rows):2] = w.real
        out[2 * start + 1:2 * (start + rows):2] = w.imag

    return out[:n_paths]


# --------------------------------------------------------------------------
# Path samplers
# --------------------------------------------------------------------------


def sample_degenerate_batch(grid: GridSpec, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    """Paths t -> t * xi of the H = 1 process, one standard normal xi per path"""
    xi = rng.standard_normal(n_paths)
    return xi[:, None] * grid.times()[None, :]


def sample_fbm_batch(
    hurst: float,
    grid: GridSpec,
    n_paths: int,
    rng: np.random.Generator,
    plan: Optional[CirculantPlan] = None,
) -> np.ndarray:
    """FBM paths on the grid, shape (n_paths, n_points + 1), first column 0"""
    if hurst == 1.0:
        return sample_degenerate_batch(grid, n_paths, rng)
    _check_open_hurst(hurst)

    n = grid.n_points
    if plan is None:
        plan = get_circulant_plan(hurst, n)
    elif plan.hurst != hurst or plan.n_increments != n:
        raise DomainError(
            f"Plan (H={plan.hurst}, n={plan.n_increments}) does not match "
            f"request (H={hurst}, n={n})"
        )

    increments = sample_fgn_batch(plan, n_paths, rng)
    increments *= grid.step**hurst

    values = np.zeros((n_paths, n + 1), dtype=float)
    np.cumsum(increments, axis=1, out=values[:, 1:])
    return values


def sample_fbm_path(hurst: float, grid: GridSpec, rng: np.random.Generator) -> Path:
    """One circulant-embedding path wrapped as an immutable Path"""
    values = sample_fbm_batch(hurst, grid, 1, rng)[0]
    return Path(hurst=hurst, grid=grid, values=values)


def sample_degenerate_h1(grid: GridSpec, rng: np.random.Generator) -> Path:
    """One path t -> t * xi"""
    values = sample_degenerate_batch(grid, 1, rng)[0]
    return Path(hurst=1.0, grid=grid, values=values)


# a factor at N_CHOL_MAX points is 128 MB
@lru_cache(maxsize=4)
def _cholesky_factor(hurst: float, n_points: int, points_per_unit: int) -> np.ndarray:
    times = np.arange(1, n_points + 1, dtype=float) / points_per_unit
    cov = fbm_covariance_matrix(hurst, times)
    try:
        factor = scipy.linalg.cholesky(cov, lower=True)
    except np.linalg.LinAlgError as e:
        raise FactorizationFailed(
            f"FBM covariance not numerically PD for H={hurst}, n={n_points}: {e}"
        )
    factor.flags.writeable = False
    return factor


def sample_fbm_cholesky_batch(
    hurst: float,
    grid: GridSpec,
    n_paths: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Dense-factorization sampler with the same law as sample_fbm_batch"""
    _check_open_hurst(hurst)
    if grid.n_points > N_CHOL_MAX:
        raise SizeExceeded("Cholesky sampler", grid.n_points, N_CHOL_MAX)

    factor = _cholesky_factor(hurst, grid.n_points, grid.points_per_unit)
    z = rng.standard_normal((n_paths, grid.n_points))
    values = np.zeros((n_paths, grid.n_points + 1), dtype=float)
    values[:, 1:] = z @ factor.T
    return values


def sample_fbm_cholesky(hurst: float, grid: GridSpec, rng: np.random.Generator) -> Path:
    """One path from the dense Cholesky oracle"""
    values = sample_fbm_cholesky_batch(hurst, grid, 1, rng)[0]
    return Path(hurst=hurst, grid=grid, values=values)


# --------------------------------------------------------------------------
# Path functionals
# --------------------------------------------------------------------------


def _trapezoid_weights(n_points: int, step: float) -> np.ndarray:
    weights = np.full(n_points, step, dtype=float)
    weights[0] = weights[-1] = 0.5 * step
    return weights


def log_trapezoid_exp(values: np.ndarray, step: float, scale: float = 1.0) -> np.ndarray:
    """log of the trapezoid rule for the integral of exp(scale * B), per row"""
    values = np.atleast_2d(values)
    if values.shape[1] < 2:
        raise DomainError("trapezoid rule needs at least two grid points")
    weights = _trapezoid_weights(values.shape[1], step)
    return logsumexp(scale * values, b=weights, axis=1)


def exp_weighted_mean(values: np.ndarray, step: float, scale: float) -> np.ndarray:
    """Trapezoid ratio of int B exp(scale B) to int exp(scale B), per row"""
    values = np.atleast_2d(values)
    log_weights = np.log(_trapezoid_weights(values.shape[1], step)) + scale * values
    log_weights -= logsumexp(log_weights, axis=1, keepdims=True)
    return np.sum(np.exp(log_weights) * values, axis=1)


def batch_functionals(
    values: np.ndarray,
    step: float,
    n_keep: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-row max, abs max and log exponential integral over the first n_keep points"""
    values = np.atleast_2d(values)
    if n_keep is not None:
        values = values[:, :n_keep]
    running_max = values.max(axis=1)
    abs_max = np.abs(values).max(axis=1)
    return running_max, abs_max, log_trapezoid_exp(values, step)


def path_functionals(path: Path, sub_horizon: float) -> PathFunctionals:
    """Max, abs max and trapezoid integral of exp(B) over grid points <= sub_horizon"""
    if sub_horizon < 0:
        raise DomainError(f"sub_horizon must be nonnegative, got {sub_horizon}")
    n_keep = path.grid.n_within(sub_horizon)
    running_max, abs_max, log_integral = batch_functionals(
        path.values, path.grid.step, n_keep
    )
    return PathFunctionals(
        max=float(running_max[0]),
        abs_max=float(abs_max[0]),
        exp_integral=float(np.exp(log_integral[0])),
    )
