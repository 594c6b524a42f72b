"""
Monte Carlo estimators for persistence probabilities and path expectations
"""
import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import norm

from ..types.models import (
    Functional,
    FunctionalKind,
    GridRule,
    GridRuleKind,
    GridSpec,
    HurstLaw,
    McConfig,
    McEstimate,
    PointLaw,
    QuantityKind,
)
from .errors import DomainError
from .gaussian_paths import HURST_MIN, log_trapezoid_exp, sample_fbm_batch
from .hurst_law import ess_sup, is_continuous, sample_h_batch
from .streams import DOMAIN_HURST, DOMAIN_PATHS, Chunk, derive_seed, map_chunks, substream

logger = logging.getLogger(__name__)

# Annealed runs over continuous laws reuse circulant plans on this H lattice.
HURST_QUANTUM = 1e-3
# Finest grid used by barrier-adapted small-barrier runs.
SMALL_BARRIER_M_CAP = 65536

PathSampler = Callable[[float, GridSpec, int, np.random.Generator], np.ndarray]
GridFor = Callable[[float], GridSpec]
Evaluator = Callable[[np.ndarray, GridSpec, float], np.ndarray]


def grid_points_per_unit(hurst: float, rule: GridRule) -> int:
    """Grid points per unit time: fixed m, or clamp(ceil(1/sqrt(H))^2, m_min, m_max)"""
    if not (0.0 < hurst <= 1.0):
        raise DomainError(f"Hurst exponent must lie in (0, 1], got {hurst}")
    if rule.kind == GridRuleKind.FIXED:
        return rule.m
    m = math.ceil(round(1.0 / math.sqrt(hurst), 9)) ** 2
    return int(min(max(m, rule.m_min), rule.m_max))


def quantize_hurst(hursts: np.ndarray) -> np.ndarray:
    """Round exponents to the plan-cache lattice, staying inside the sampler's range"""
    q = np.round(np.round(hursts / HURST_QUANTUM) * HURST_QUANTUM, 6)
    return np.clip(q, max(HURST_QUANTUM, HURST_MIN), 1.0 - HURST_QUANTUM)


# --------------------------------------------------------------------------
# Interval helpers
# --------------------------------------------------------------------------


def _z_value(ci_level: float) -> float:
    return float(norm.ppf(0.5 + 0.5 * ci_level))


def wilson_interval(n_hits: int, n_paths: int, ci_level: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion"""
    if n_paths == 0:
        return (0.0, 1.0)
    z = _z_value(ci_level)
    p_hat = n_hits / n_paths

    denominator = 1 + z**2 / n_paths
    center = (p_hat + z**2 / (2 * n_paths)) / denominator
    margin = (z / denominator) * math.sqrt(
        p_hat * (1 - p_hat) / n_paths + z**2 / (4 * n_paths**2)
    )

    lower = min(max(0.0, center - margin), p_hat)
    upper = max(min(1.0, center + margin), p_hat)
    return (lower, upper)


def probability_estimate(
    quantity: str,
    hits: np.ndarray,
    cfg: McConfig,
    law: str = "",
    x: float = 0.0,
    m: Union[int, str] = "",
) -> McEstimate:
    """Proportion estimate with a Wilson interval"""
    n_paths = int(hits.shape[0])
    n_hits = int(np.count_nonzero(hits))
    p_hat = n_hits / n_paths
    ci_lo, ci_hi = wilson_interval(n_hits, n_paths, cfg.ci_level)
    return McEstimate(
        quantity=quantity,
        p_hat=p_hat,
        std_err=math.sqrt(p_hat * (1 - p_hat) / n_paths),
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        n_paths=n_paths,
        n_hits=n_hits,
        law=law,
        x=x,
        m=m,
        seed=cfg.seed,
    )


def mean_estimate(
    quantity: str,
    samples: np.ndarray,
    cfg: McConfig,
    law: str = "",
    x: float = 0.0,
    m: Union[int, str] = "",
) -> McEstimate:
    """Sample mean with a normal-approximation interval"""
    n_paths = int(samples.shape[0])
    mean = float(np.mean(samples))
    std_err = float(np.std(samples, ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
    half = _z_value(cfg.ci_level) * std_err
    return McEstimate(
        quantity=quantity,
        p_hat=mean,
        std_err=std_err,
        ci_lo=mean - half,
        ci_hi=mean + half,
        n_paths=n_paths,
        law=law,
        x=x,
        m=m,
        seed=cfg.seed,
    )


# --------------------------------------------------------------------------
# Simulation engine
# --------------------------------------------------------------------------


def simulate_statistics(
    law: HurstLaw,
    cfg: McConfig,
    grid_for: GridFor,
    evaluate: Evaluator,
    sampler: PathSampler = sample_fbm_batch,
    quantize: Optional[bool] = None,
) -> np.ndarray:
    """Per-path statistics, shape (n_paths, k), for exponents drawn from law.

    Paths i*B..(i+1)*B-1 use substream i of the master seed, exponents and
    paths from separate domains. Within a chunk, paths are grouped by exponent
    in ascending order, so the output does not depend on cfg.workers.
    """
    if quantize is None:
        quantize = is_continuous(law)

    def run_chunk(chunk: Chunk) -> np.ndarray:
        h_rng = substream(cfg.seed, DOMAIN_HURST, chunk.index)
        path_rng = substream(cfg.seed, DOMAIN_PATHS, chunk.index)

        hursts = sample_h_batch(law, h_rng, chunk.count)
        if quantize:
            hursts = quantize_hurst(hursts)

        out: Optional[np.ndarray] = None
        for hurst in np.unique(hursts):
            idx = np.flatnonzero(hursts == hurst)
            grid = grid_for(float(hurst))
            values = sampler(float(hurst), grid, idx.size, path_rng)
            stats = np.asarray(evaluate(values, grid, float(hurst)), dtype=float)
            if stats.ndim == 1:
                stats = stats[:, None]
            if out is None:
                out = np.empty((chunk.count, stats.shape[1]), dtype=float)
            out[idx] = stats
        return out

    parts = map_chunks(run_chunk, cfg.n_paths, cfg.chunk_size, cfg.workers)
    return np.concatenate(parts, axis=0)


def _m_label(law: HurstLaw, rule: GridRule) -> Union[int, str]:
    if isinstance(law, PointLaw) or rule.kind == GridRuleKind.FIXED:
        return grid_points_per_unit(ess_sup(law).h0, rule)
    return rule.label()


# --------------------------------------------------------------------------
# Persistence estimators
# --------------------------------------------------------------------------


def estimate_persistence_curve(
    law: HurstLaw,
    horizons: Sequence[float],
    cfg: McConfig,
    quantity: str = QuantityKind.PERSISTENCE_ANNEALED.value,
    sampler: PathSampler = sample_fbm_batch,
) -> List[McEstimate]:
    """P(max over grid on [0, T] <= barrier) for every T, from one set of paths.

    Each path is simulated to the largest horizon and every T reads a prefix,
    so the estimates are nonincreasing in T.
    """
    if not horizons:
        raise DomainError("horizons must be nonempty")
    order = sorted(float(t) for t in horizons)
    if order[0] < 1:
        raise DomainError(f"horizons must be >= 1, got {order[0]}")
    t_max = order[-1]

    def grid_for(hurst: float) -> GridSpec:
        return GridSpec(horizon=t_max, points_per_unit=grid_points_per_unit(hurst, cfg.grid_rule))

    def evaluate(values: np.ndarray, grid: GridSpec, hurst: float) -> np.ndarray:
        running_max = np.maximum.accumulate(values, axis=1)
        cols = [grid.n_within(t) - 1 for t in order]
        return running_max[:, cols] <= cfg.barrier

    hits = simulate_statistics(law, cfg, grid_for, evaluate, sampler)
    label = law.label()
    m = _m_label(law, cfg.grid_rule)
    estimates = {
        t: probability_estimate(quantity, hits[:, j], cfg, label, t, m)
        for j, t in enumerate(order)
    }
    return [estimates[float(t)] for t in horizons]


def estimate_persistence_annealed(law: HurstLaw, horizon: float, cfg: McConfig) -> McEstimate:
    """Annealed P(max over [0, T] <= barrier) with the exponent drawn per path"""
    return estimate_persistence_curve(law, [horizon], cfg)[0]


def estimate_persistence_fixed(hurst: float, horizon: float, cfg: McConfig) -> McEstimate:
    """Persistence probability for a fixed exponent; H = 1 uses t * xi paths"""
    return estimate_persistence_curve(
        PointLaw(h=hurst), [horizon], cfg, QuantityKind.PERSISTENCE_FIXED.value
    )[0]


def small_barrier_points_per_unit(hurst: float, eps_min: float, rule: GridRule) -> int:
    """Grid density on [0, 1] resolving the barrier eps_min.

    By self-similarity the event {max over [0,1] <= eps} is the persistence
    event on [0, eps^(-1/H)]; the base rule is applied in those units.
    """
    base = grid_points_per_unit(hurst, rule)
    if rule.kind == GridRuleKind.FIXED or eps_min >= 1:
        return base
    # eps^(-1/H) overflows a float for tiny H; compare in log space first
    log_stretch = -math.log(eps_min) / hurst
    if log_stretch > math.log(SMALL_BARRIER_M_CAP / base):
        m = SMALL_BARRIER_M_CAP + 1
    else:
        m = base * math.ceil(round(math.exp(log_stretch), 9))
    if m > SMALL_BARRIER_M_CAP:
        logger.warning(
            f"Small-barrier grid for H={hurst:g}, eps={eps_min:g} capped at "
            f"{SMALL_BARRIER_M_CAP} points per unit"
        )
        m = SMALL_BARRIER_M_CAP
    return int(m)


def estimate_small_barrier_curve(
    law: HurstLaw,
    epsilons: Sequence[float],
    cfg: McConfig,
    sampler: PathSampler = sample_fbm_batch,
) -> List[McEstimate]:
    """Annealed P(max over grid on [0, 1] <= eps) for every eps, from one set of paths"""
    if not epsilons:
        raise DomainError("epsilons must be nonempty")
    eps = np.array([float(e) for e in epsilons])
    if np.any(eps <= 0):
        raise DomainError("epsilons must be positive")
    eps_min = float(eps.min())

    def grid_for(hurst: float) -> GridSpec:
        m = small_barrier_points_per_unit(hurst, eps_min, cfg.grid_rule)
        return GridSpec(horizon=1.0, points_per_unit=m)

    def evaluate(values: np.ndarray, grid: GridSpec, hurst: float) -> np.ndarray:
        return values.max(axis=1)[:, None] <= eps[None, :]

    hits = simulate_statistics(law, cfg, grid_for, evaluate, sampler)
    label = law.label()
    if isinstance(law, PointLaw):
        m: Union[int, str] = small_barrier_points_per_unit(law.h, eps_min, cfg.grid_rule)
    else:
        m = cfg.grid_rule.label()
    return [
        probability_estimate(QuantityKind.SMALL_BARRIER.value, hits[:, j], cfg, label, float(e), m)
        for j, e in enumerate(eps)
    ]


def estimate_small_barrier(law: HurstLaw, epsilon: float, cfg: McConfig) -> McEstimate:
    """Annealed P(max over [0, 1] <= epsilon)"""
    return estimate_small_barrier_curve(law, [epsilon], cfg)[0]


# --------------------------------------------------------------------------
# Expectations
# --------------------------------------------------------------------------


def functional_samples(
    functional: Functional,
    values: np.ndarray,
    grid: GridSpec,
    hurst: float,
) -> np.ndarray:
    """Per-path value of the functional for paths on [0, 1]"""
    if functional.kind == FunctionalKind.MAX01:
        return values.max(axis=1)
    if functional.kind == FunctionalKind.ABSMAX01:
        return np.abs(values).max(axis=1)
    if functional.kind == FunctionalKind.MGF:
        return np.exp(functional.theta * np.abs(values).max(axis=1))
    if functional.kind == FunctionalKind.EXP_NEG_INTEGRAL:
        # int_0^T e^B ds has the law of T * int_0^1 e^{T^H B_u} du
        t = functional.horizon
        log_integral = math.log(t) + log_trapezoid_exp(values, grid.step, scale=t**hurst)
        return np.exp(-log_integral)
    raise DomainError(f"Unknown functional {functional.kind}")


def estimate_expectation(
    functional: Functional,
    hurst: float,
    cfg: McConfig,
    refinement: int = 1,
    sampler: PathSampler = sample_fbm_batch,
) -> McEstimate:
    """Monte Carlo mean of a path functional on [0, 1]"""
    if not (0.0 < hurst <= 1.0):
        raise DomainError(f"Hurst exponent must lie in (0, 1], got {hurst}")
    if refinement < 1:
        raise DomainError("refinement must be >= 1")
    m = grid_points_per_unit(hurst, cfg.grid_rule) * refinement
    grid = GridSpec(horizon=1.0, points_per_unit=m)

    def evaluate(values: np.ndarray, grid: GridSpec, h: float) -> np.ndarray:
        return functional_samples(functional, values, grid, h)

    samples = simulate_statistics(PointLaw(h=hurst), cfg, lambda h: grid, evaluate, sampler)
    return mean_estimate(
        f"{QuantityKind.EXPECTATION.value}:{functional.label()}",
        samples[:, 0],
        cfg,
        law=PointLaw(h=hurst).label(),
        x=functional.horizon,
        m=m,
    )


# --------------------------------------------------------------------------
# Pilot sizing
# --------------------------------------------------------------------------


def pilot_expected_hits(
    law: HurstLaw,
    cfg: McConfig,
    pilot_paths: int,
    horizons: Optional[Sequence[float]] = None,
    epsilons: Optional[Sequence[float]] = None,
) -> float:
    """Expected hits at the rarest grid point for a full run, from a small pilot"""
    pilot = cfg.with_updates(
        n_paths=min(pilot_paths, cfg.n_paths),
        seed=derive_seed(cfg.seed, 0),
    )
    if horizons is not None:
        estimates = estimate_persistence_curve(law, horizons, pilot)
    elif epsilons is not None:
        estimates = estimate_small_barrier_curve(law, epsilons, pilot)
    else:
        raise DomainError("pilot needs horizons or epsilons")
    p_min = min(e.p_hat for e in estimates)
    expected = p_min * cfg.n_paths
    logger.debug(f"Pilot with {pilot.n_paths} paths: min p={p_min:.3g}, expected hits {expected:.0f}")
    return expected
