"""
Numerical verification of FBM maximum, persistence and comparison bounds
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.special import log_ndtr
from scipy.stats import norm

from ..types.models import (
    BoundCheck,
    CheckReport,
    Functional,
    FunctionalKind,
    GridSpec,
    HurstLaw,
    McConfig,
    PointLaw,
    RecordStats,
    RkhsQuantities,
    UniformLaw,
)
from .errors import ConfigValidationError, DomainError, PreconditionViolated, SizeExceeded
from .gaussian_paths import (
    exp_weighted_mean,
    fbm_covariance,
    fbm_covariance_matrix,
    log_trapezoid_exp,
    sample_fbm_batch,
)
from .hurst_law import ess_sup
from .persistence_mc import (
    PathSampler,
    estimate_expectation,
    estimate_persistence_fixed,
    estimate_small_barrier,
    grid_points_per_unit,
    mean_estimate,
    probability_estimate,
    simulate_statistics,
)
from .streams import DOMAIN_PATHS, Chunk, derive_seed, map_chunks, substream

logger = logging.getLogger(__name__)

K_SIGMA = 4.0
# The "continuous" maximum is taken on a grid this many times finer.
REFINEMENT = 16
RECORD_PATH_CAP = 20_000
DENSE_SIZE_CAP = 4096
MAX_BOUND_CONSTANT = 16.3


def _sub(cfg: McConfig, *key: int) -> McConfig:
    return cfg.with_updates(seed=derive_seed(cfg.seed, *key))


def _check_open_hurst(hurst: float) -> None:
    if not (0.0 < hurst < 1.0):
        raise DomainError(f"Hurst exponent must lie in (0, 1), got {hurst}")


def _z95() -> float:
    return float(norm.ppf(0.975))


# --------------------------------------------------------------------------
# Expected maximum and exponential moments
# --------------------------------------------------------------------------


def max_bound_formulas(hurst: float) -> Tuple[float, float]:
    """Lower and upper bounds on E[max_[0,1] B^H]"""
    lower = 1.0 / (2.0 * math.sqrt(hurst * math.pi * math.e * math.log(2.0)))
    upper = MAX_BOUND_CONSTANT / math.sqrt(hurst)
    return lower, upper


def check_expected_max_bounds(
    hurst: float,
    cfg: McConfig,
    sampler: PathSampler = sample_fbm_batch,
) -> Tuple[BoundCheck, BoundCheck]:
    """Lower and upper checks of E[max_[0,1] B^H] on a refined grid"""
    _check_open_hurst(hurst)
    est = estimate_expectation(
        Functional(kind=FunctionalKind.MAX01), hurst, cfg, REFINEMENT, sampler
    )
    lower, upper = max_bound_formulas(hurst)
    details = {"expected_max": est.p_hat, "grid_m": est.m}
    return (
        BoundCheck.evaluate(
            "expected_max_lower", lhs=lower, rhs=est.p_hat, rhs_se=est.std_err,
            k_sigma=K_SIGMA, details=details, hurst=hurst,
        ),
        BoundCheck.evaluate(
            "expected_max_upper", lhs=est.p_hat, rhs=upper, lhs_se=est.std_err,
            k_sigma=K_SIGMA, details=details, hurst=hurst,
        ),
    )


def mgf_bound(hurst: float, theta: float) -> float:
    """2 exp(16.3 theta / sqrt(H) + 4 theta^2)"""
    return 2.0 * math.exp(MAX_BOUND_CONSTANT * theta / math.sqrt(hurst) + 4.0 * theta**2)


def check_mgf_bound(
    hurst: float,
    theta: float,
    cfg: McConfig,
    sampler: PathSampler = sample_fbm_batch,
) -> BoundCheck:
    """E[exp(theta * max_[0,1] |B^H|)] against 2 exp(16.3 theta / sqrt(H) + 4 theta^2)"""
    _check_open_hurst(hurst)
    if not (0.0 < theta <= 4.0):
        raise DomainError(f"theta must lie in (0, 4], got {theta}")
    est = estimate_expectation(
        Functional(kind=FunctionalKind.MGF, theta=theta), hurst, cfg, REFINEMENT, sampler
    )
    return BoundCheck.evaluate(
        "mgf_bound", lhs=est.p_hat, rhs=mgf_bound(hurst, theta), lhs_se=est.std_err,
        k_sigma=K_SIGMA, hurst=hurst, theta=theta,
    )


# --------------------------------------------------------------------------
# Discretization error
# --------------------------------------------------------------------------


def discretization_bound(hurst: float, n_grid: int) -> float:
    """12 sqrt(ln n) / n^H, valid for n >= 2^(1/H)"""
    return 12.0 * math.sqrt(math.log(n_grid)) / n_grid**hurst


def check_discretization_error(
    hurst: float,
    n_grid: int,
    cfg: McConfig,
    refinement: int = REFINEMENT,
    sampler: PathSampler = sample_fbm_batch,
) -> BoundCheck:
    """E[fine max] - E[max over {k/n}] on common paths against 12 sqrt(ln n) / n^H.

    The coarse grid {k/n : k = 0..n} is a subset of the fine grid, so the
    per-path gap is nonnegative.
    """
    _check_open_hurst(hurst)
    if n_grid < 2.0 ** (1.0 / hurst):
        raise PreconditionViolated(
            f"need n >= 2^(1/H) = {2.0 ** (1.0 / hurst):.3f}, got n={n_grid}"
        )
    grid = GridSpec(horizon=1.0, points_per_unit=n_grid * refinement)

    def evaluate(values: np.ndarray, grid: GridSpec, h: float) -> np.ndarray:
        return values.max(axis=1) - values[:, ::refinement].max(axis=1)

    gaps = simulate_statistics(PointLaw(h=hurst), cfg, lambda h: grid, evaluate, sampler)[:, 0]
    est = mean_estimate("discretization_gap", gaps, cfg, x=n_grid, m=grid.points_per_unit)
    return BoundCheck.evaluate(
        "discretization_error", lhs=est.p_hat, rhs=discretization_bound(hurst, n_grid),
        lhs_se=est.std_err, k_sigma=K_SIGMA,
        details={"min_pathwise_gap": float(gaps.min())},
        hurst=hurst, n_grid=n_grid, refinement=refinement,
    )


# --------------------------------------------------------------------------
# Slepian monotonicity and the open monotonicity question
# --------------------------------------------------------------------------


def _check_ascending(h_grid: Sequence[float]) -> None:
    if not h_grid:
        raise DomainError("h_grid must be nonempty")
    for k, h in zip(h_grid, h_grid[1:]):
        if not h > k:
            raise DomainError("h_grid must be strictly ascending")
    for h in h_grid:
        _check_open_hurst(h)


def check_slepian_monotonicity(
    epsilon: float,
    h_grid: Sequence[float],
    cfg: McConfig,
) -> CheckReport:
    """H -> P(max_[0,1] B^H <= eps) must be nondecreasing up to noise"""
    _check_ascending(h_grid)
    estimates = [
        estimate_small_barrier(PointLaw(h=h), epsilon, _sub(cfg, 1, i))
        for i, h in enumerate(h_grid)
    ]
    rows = [
        {"hurst": h, "p_hat": e.p_hat, "std_err": e.std_err, "ci_lo": e.ci_lo, "ci_hi": e.ci_hi}
        for h, e in zip(h_grid, estimates)
    ]
    checks = [
        BoundCheck.evaluate(
            f"slepian[{k:g}<={h:g}]", lhs=ek.p_hat, rhs=eh.p_hat,
            lhs_se=ek.std_err, rhs_se=eh.std_err, k_sigma=K_SIGMA,
            epsilon=epsilon, low=k, high=h,
        )
        for (k, ek), (h, eh) in zip(zip(h_grid, estimates), zip(h_grid[1:], estimates[1:]))
    ]
    findings = [f"violation: {c.name} margin {c.margin:.3g}" for c in checks if not c.passed]
    return CheckReport(
        name="slepian",
        passed=all(c.passed for c in checks),
        checks=checks,
        rows=rows,
        findings=findings,
        inputs={"epsilon": epsilon, "h_grid": list(h_grid)},
    )


def probe_monotonicity_conjecture(
    horizon: float,
    h_grid: Sequence[float],
    cfg: McConfig,
) -> CheckReport:
    """Table of H -> P(max_[0,T] B^H <= barrier); never fails.

    Consecutive pairs whose confidence intervals are disjoint against the
    overall trend are reported as findings.
    """
    if horizon < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon}")
    _check_ascending(h_grid)
    estimates = [
        estimate_persistence_fixed(h, horizon, _sub(cfg, 1, i)) for i, h in enumerate(h_grid)
    ]
    rows = [
        {"hurst": h, "p_hat": e.p_hat, "std_err": e.std_err, "ci_lo": e.ci_lo, "ci_hi": e.ci_hi}
        for h, e in zip(h_grid, estimates)
    ]
    findings = []
    if len(estimates) > 1:
        trend = np.sign(estimates[-1].p_hat - estimates[0].p_hat)
        for (k, ek), (h, eh) in zip(zip(h_grid, estimates), zip(h_grid[1:], estimates[1:])):
            if trend >= 0 and eh.ci_hi < ek.ci_lo:
                findings.append(f"significant decrease between H={k:g} and H={h:g}")
            if trend < 0 and eh.ci_lo > ek.ci_hi:
                findings.append(f"significant increase between H={k:g} and H={h:g}")
    return CheckReport(
        name="monotonicity_probe",
        passed=True,
        rows=rows,
        findings=findings,
        inputs={"horizon": horizon, "h_grid": list(h_grid), "barrier": cfg.barrier},
    )


def check_small_barrier_sandwich(law: HurstLaw, epsilon: float, cfg: McConfig) -> BoundCheck:
    """Annealed small-barrier probability is at most the one at H0"""
    h0 = ess_sup(law).h0
    annealed = estimate_small_barrier(law, epsilon, _sub(cfg, 1))
    at_h0 = estimate_small_barrier(PointLaw(h=h0), epsilon, _sub(cfg, 2))
    return BoundCheck.evaluate(
        "small_barrier_sandwich", lhs=annealed.p_hat, rhs=at_h0.p_hat,
        lhs_se=annealed.std_err, rhs_se=at_h0.std_err, k_sigma=K_SIGMA,
        law=law.label(), epsilon=epsilon,
    )


# --------------------------------------------------------------------------
# Asymptotics of E[(int_0^T e^B)^-1]
# --------------------------------------------------------------------------


def check_statement1(
    hurst: float,
    t_grid: Sequence[float],
    cfg: McConfig,
    sampler: PathSampler = sample_fbm_batch,
) -> CheckReport:
    """Estimate g(T, H) in E[(int_0^T e^B)^-1] = (E[M_1] + g) H T^(H-1) + 1/T.

    The integral is evaluated as T * int_0^1 exp(T^H B_u) du on [0, 1] with
    ceil(T) * m(H) points per unit, the resolution of the rule on [0, T].
    g_weighted uses the equivalent ratio int B e^{T^H B} / int e^{T^H B}.
    """
    _check_open_hurst(hurst)
    if not t_grid:
        raise DomainError("t_grid must be nonempty")
    if min(t_grid) < 1:
        raise DomainError("all horizons must be >= 1")

    max_est = estimate_expectation(
        Functional(kind=FunctionalKind.MAX01), hurst, _sub(cfg, 1), REFINEMENT, sampler
    )
    m_base = grid_points_per_unit(hurst, cfg.grid_rule)

    rows = []
    for j, t in enumerate(t_grid):
        grid = GridSpec(horizon=1.0, points_per_unit=m_base * math.ceil(t))
        scale = t**hurst

        def evaluate(values: np.ndarray, grid: GridSpec, h: float, t=t, scale=scale) -> np.ndarray:
            log_integral = math.log(t) + log_trapezoid_exp(values, grid.step, scale=scale)
            return np.column_stack(
                [np.exp(-log_integral), exp_weighted_mean(values, grid.step, scale)]
            )

        stats = simulate_statistics(
            PointLaw(h=hurst), _sub(cfg, 2, j), lambda h, grid=grid: grid, evaluate, sampler
        )
        inv = mean_estimate("inverse_exp_integral", stats[:, 0], cfg, x=t, m=grid.points_per_unit)
        weighted = mean_estimate("exp_weighted_mean", stats[:, 1], cfg, x=t, m=grid.points_per_unit)

        norm_factor = hurst * t ** (hurst - 1.0)
        g_hat = (inv.p_hat - 1.0 / t) / norm_factor - max_est.p_hat
        g_se = math.hypot(inv.std_err / norm_factor, max_est.std_err)
        g_weighted = weighted.p_hat - max_est.p_hat
        g_weighted_se = math.hypot(weighted.std_err, max_est.std_err)
        rows.append({
            "T": t,
            "inverse_integral": inv.p_hat,
            "inverse_integral_se": inv.std_err,
            "g_hat": g_hat,
            "g_se": g_se,
            "g_weighted": g_weighted,
            "g_weighted_se": g_weighted_se,
        })

    checks = []
    findings = []
    if len(rows) > 1:
        first, last = rows[0], rows[-1]
        half_widths = _z95() * (first["g_se"] + last["g_se"])
        shrink = abs(first["g_hat"]) - abs(last["g_hat"])
        # negative k_sigma: |g| must drop by more than the combined 95% half-widths
        check = BoundCheck.evaluate(
            "statement1_shrinkage", lhs=abs(last["g_hat"]), rhs=abs(first["g_hat"]),
            lhs_se=last["g_se"], rhs_se=first["g_se"], k_sigma=-_z95(),
            details={
                "expected_max": max_est.p_hat,
                "shrink": shrink,
                "half_widths": half_widths,
                "grows_significantly": bool(-shrink > K_SIGMA * (first["g_se"] + last["g_se"])),
            },
            hurst=hurst, t_first=first["T"], t_last=last["T"],
        )
        checks.append(check)
        if not check.passed:
            findings.append(
                f"|g| shrinkage {shrink:.3g} from T={first['T']:g} to T={last['T']:g} "
                f"within the combined 95% half-widths {half_widths:.3g}"
            )

    return CheckReport(
        name="statement1",
        passed=all(c.passed for c in checks),
        checks=checks,
        rows=rows,
        findings=findings,
        inputs={"hurst": hurst, "t_grid": list(t_grid)},
    )


# --------------------------------------------------------------------------
# Right-to-left records
# --------------------------------------------------------------------------


def count_records(values: np.ndarray, n_candidates: int) -> np.ndarray:
    """Per row, count indices j < n_candidates with values[j] > max(values[j+1:]).

    One right-to-left running-maximum scan per row.
    """
    values = np.atleast_2d(values)
    suffix_max = np.maximum.accumulate(values[:, ::-1], axis=1)[:, ::-1]
    later_max = np.full_like(values, -np.inf)
    later_max[:, :-1] = suffix_max[:, 1:]
    return np.count_nonzero(values[:, :n_candidates] > later_max[:, :n_candidates], axis=1)


def count_right_to_left_records(
    hurst: float,
    n: int,
    cfg: McConfig,
    sampler: PathSampler = sample_fbm_batch,
) -> RecordStats:
    """E[T_n] against n^2 P(S_n < 0) on unit-step paths of length n + n^2"""
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    total = n + n * n
    if total > RECORD_PATH_CAP:
        raise SizeExceeded("record path length", total, RECORD_PATH_CAP)
    grid = GridSpec(horizon=total, points_per_unit=1)

    def evaluate(values: np.ndarray, grid: GridSpec, h: float) -> np.ndarray:
        path = values[:, 1:]
        records = count_records(path, n * n)
        below = path[:, :n].max(axis=1) < 0
        return np.column_stack([records, below])

    stats = simulate_statistics(PointLaw(h=hurst), cfg, lambda h: grid, evaluate, sampler)
    records = mean_estimate("expected_records", stats[:, 0], cfg, x=n, m=1)
    persistence = probability_estimate("persistence_n", stats[:, 1] > 0.5, cfg, x=n, m=1)

    n2 = n * n
    check = BoundCheck.evaluate(
        "record_inequality", lhs=records.p_hat, rhs=n2 * persistence.p_hat,
        lhs_se=records.std_err, rhs_se=n2 * persistence.std_err, k_sigma=K_SIGMA,
        hurst=hurst, n=n,
    )
    return RecordStats(n=n, expected_records=records, persistence_n2=persistence, check=check)


# --------------------------------------------------------------------------
# Negative barrier
# --------------------------------------------------------------------------


def check_negative_barrier_bound(
    hurst: float,
    n: int,
    m: int,
    cfg: McConfig,
    sampler: PathSampler = sample_fbm_batch,
) -> BoundCheck:
    """P(max over {1 + k/m : k = 0..(n-1)m} <= -1) <= 4 n^(H-1) E[max_[0,1] B] / m"""
    _check_open_hurst(hurst)
    if n < 2 or m < 1:
        raise DomainError(f"need n >= 2 and m >= 1, got n={n}, m={m}")
    grid = GridSpec(horizon=n, points_per_unit=m)

    def evaluate(values: np.ndarray, grid: GridSpec, h: float) -> np.ndarray:
        return values[:, m:n * m + 1].max(axis=1) <= -1.0

    hits = simulate_statistics(PointLaw(h=hurst), _sub(cfg, 1), lambda h: grid, evaluate, sampler)
    lhs = probability_estimate("negative_barrier", hits[:, 0] > 0.5, cfg, x=n, m=m)
    max_est = estimate_expectation(
        Functional(kind=FunctionalKind.MAX01), hurst, _sub(cfg, 2), REFINEMENT, sampler
    )
    factor = 4.0 * n ** (hurst - 1.0) / m
    return BoundCheck.evaluate(
        "negative_barrier", lhs=lhs.p_hat, rhs=factor * max_est.p_hat,
        lhs_se=lhs.std_err, rhs_se=factor * max_est.std_err, k_sigma=K_SIGMA,
        hurst=hurst, n=n, m=m,
    )


# --------------------------------------------------------------------------
# Comparison process and extreme values
# --------------------------------------------------------------------------


def bz_comparison_cov(hurst: float, n: int, k: int, l: int) -> Tuple[float, float]:
    """Cov(B_{k/n}, B_{l/n}) and Cov(X_k, X_l) of the comparison process"""
    if not (1 <= k <= n and 1 <= l <= n):
        raise DomainError(f"need 1 <= k, l <= n, got k={k}, l={l}, n={n}")
    fbm = fbm_covariance(hurst, k / n, l / n)
    var_k = (k / n) ** (2 * hurst)
    var_l = (l / n) ** (2 * hurst)
    x_cov = var_k if k == l else 0.5 * min(var_k, var_l)
    return float(fbm), float(x_cov)


def check_bz_comparison(hurst: float, n: int) -> BoundCheck:
    """Exhaustive check of equal variances and Cov_fbm >= Cov_X over all pairs"""
    s = np.arange(1, n + 1) / n
    fbm = fbm_covariance_matrix(hurst, s)
    var = s ** (2 * hurst)
    x_cov = 0.5 * np.minimum(var[:, None], var[None, :])
    np.fill_diagonal(x_cov, var)
    worst = float(np.max(x_cov - fbm))
    diag_err = float(np.max(np.abs(np.diag(fbm) - var)))
    return BoundCheck.evaluate(
        "bz_covariance", lhs=max(worst, diag_err), rhs=1e-12,
        details={"max_cov_excess": worst, "max_variance_error": diag_err},
        hurst=hurst, n=n,
    )


def sample_bz_process(hurst: float, n: int, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    """X_k = ((k/n)^H N_k - W_{(k/n)^{2H}}) / sqrt(2), shape (n_paths, n)"""
    s = (np.arange(1, n + 1) / n) ** (2 * hurst)
    noise = rng.standard_normal((n_paths, n))
    steps = np.sqrt(np.diff(np.concatenate([[0.0], s])))
    brownian = np.cumsum(rng.standard_normal((n_paths, n)) * steps, axis=1)
    return (np.sqrt(s) * noise - brownian) / math.sqrt(2.0)


def check_bz_slepian(hurst: float, n: int, level: float, cfg: McConfig) -> BoundCheck:
    """P(max_k B_{k/n} <= x) >= P(max_k X_k <= x) by Monte Carlo"""
    _check_open_hurst(hurst)
    grid = GridSpec(horizon=1.0, points_per_unit=n)

    def evaluate(values: np.ndarray, grid: GridSpec, h: float) -> np.ndarray:
        return values[:, 1:].max(axis=1) <= level

    fbm_hits = simulate_statistics(PointLaw(h=hurst), _sub(cfg, 1), lambda h: grid, evaluate)
    fbm_est = probability_estimate("bz_fbm", fbm_hits[:, 0] > 0.5, cfg, x=level, m=n)

    x_seed = derive_seed(cfg.seed, 2)

    def run_chunk(chunk: Chunk) -> np.ndarray:
        rng = substream(x_seed, DOMAIN_PATHS, chunk.index)
        return sample_bz_process(hurst, n, chunk.count, rng).max(axis=1) <= level

    x_hits = np.concatenate(map_chunks(run_chunk, cfg.n_paths, cfg.chunk_size, cfg.workers))
    x_est = probability_estimate("bz_comparison", x_hits, cfg, x=level, m=n)
    return BoundCheck.evaluate(
        "bz_slepian", lhs=x_est.p_hat, rhs=fbm_est.p_hat,
        lhs_se=x_est.std_err, rhs_se=fbm_est.std_err, k_sigma=K_SIGMA,
        hurst=hurst, n=n, level=level,
    )


def extreme_value_constants(n: int) -> Tuple[float, float]:
    """Normalizing constants (a_n, b_n) for the max of n iid standard normals"""
    if n < 3:
        raise DomainError(f"need n >= 3, got {n}")
    root = math.sqrt(2.0 * math.log(n))
    a_n = 1.0 / root
    b_n = root - (math.log(math.log(n)) + math.log(4.0 * math.pi)) / (2.0 * root)
    return a_n, b_n


def check_extreme_value_limit(n: int, cfg: McConfig) -> BoundCheck:
    """Monte Carlo P(max of n iid normals <= b_n) against the exact Phi(b_n)^n.

    Maxima are drawn exactly as Phi^-1(U^(1/n)); the distance of the exact
    value to the Gumbel limit exp(-1) is reported alongside.
    """
    _, b_n = extreme_value_constants(n)
    exact = math.exp(n * float(log_ndtr(b_n)))

    def run_chunk(chunk: Chunk) -> np.ndarray:
        u = substream(cfg.seed, DOMAIN_PATHS, chunk.index).random(chunk.count)
        maxima = norm.isf(-np.expm1(np.log(u) / n))
        return maxima <= b_n

    hits = np.concatenate(map_chunks(run_chunk, cfg.n_paths, cfg.chunk_size, cfg.workers))
    est = probability_estimate("extreme_value", hits, cfg, x=n)
    return BoundCheck.evaluate(
        "extreme_value", lhs=abs(est.p_hat - exact), rhs=0.0, lhs_se=est.std_err,
        k_sigma=K_SIGMA,
        details={"p_hat": est.p_hat, "exact": exact, "gumbel_limit": math.exp(-1.0),
                 "distance_to_limit": abs(exact - math.exp(-1.0))},
        n=n,
    )


# --------------------------------------------------------------------------
# Deterministic checks
# --------------------------------------------------------------------------


def mills_ratio_check(x_grid: Sequence[float]) -> CheckReport:
    """phi(x) / (x + 1/x) <= Phi(-x) <= phi(x) / x on the grid (upper bound for x > 0)"""
    rows = []
    for x in x_grid:
        if x < 0:
            raise DomainError(f"Mills ratio grid must be nonnegative, got {x}")
        density = float(norm.pdf(x))
        tail = float(norm.sf(x))
        # at x = 0 only the (trivial) lower bound applies
        lower = density / (x + 1.0 / x) if x > 0 else 0.0
        upper = density / x if x > 0 else None
        rows.append({
            "x": x,
            "lower": lower,
            "tail": tail,
            "upper": upper,
            "ok": bool(lower <= tail and (upper is None or tail <= upper)),
            "bound_ratio": upper / lower if upper is not None else None,
        })
    failed = [r["x"] for r in rows if not r["ok"]]
    return CheckReport(
        name="mills",
        passed=not failed,
        rows=rows,
        findings=[f"Mills inequality fails at x={x:g}" for x in failed],
        inputs={"x_grid": list(x_grid)},
    )


def rkhs_shift_quantities(hurst: float, n: int, m: int) -> RkhsQuantities:
    """kappa = min K(1, t), f = 2 K(1, .) / kappa, and ||f||^2 on {1 + k/m}"""
    if not (0.0 < hurst <= 1.0):
        raise DomainError(f"Hurst exponent must lie in (0, 1], got {hurst}")
    if n < 2 or m < 1:
        raise DomainError(f"need n >= 2 and m >= 1, got n={n}, m={m}")
    size = (n - 1) * m + 1
    if size > DENSE_SIZE_CAP:
        raise SizeExceeded("RKHS grid", size, DENSE_SIZE_CAP)

    times = 1.0 + np.arange(size) / m
    k_one = np.asarray(fbm_covariance(hurst, 1.0, times), dtype=float)
    kappa = float(k_one.min())
    f = 2.0 * k_one / kappa
    f_norm_sq = (2.0 / kappa) ** 2 * float(k_one[0])

    dense: Optional[float] = None
    try:
        gram = fbm_covariance_matrix(hurst, times)
        factor = scipy.linalg.cho_factor(gram, lower=True)
        dense = float(f @ scipy.linalg.cho_solve(factor, f))
    except np.linalg.LinAlgError:
        logger.debug(f"Gram matrix not PD for H={hurst}, n={n}, m={m}; skipping dense norm")

    return RkhsQuantities(
        kappa=kappa,
        f_min=float(f.min()),
        f_norm_sq=f_norm_sq,
        f_norm_sq_dense=dense,
        grid_size=size,
    )


def check_rkhs(hurst: float, n: int, m: int) -> List[BoundCheck]:
    """kappa >= 1/2, min f >= 2 and |f|^2 <= 16 as exact formula checks"""
    q = rkhs_shift_quantities(hurst, n, m)
    inputs = {"hurst": hurst, "n": n, "m": m}
    return [
        BoundCheck.evaluate("rkhs_kappa", lhs=0.5 - 1e-12, rhs=q.kappa, **inputs),
        BoundCheck.evaluate("rkhs_f_min", lhs=2.0 - 1e-12, rhs=q.f_min, **inputs),
        BoundCheck.evaluate(
            "rkhs_norm", lhs=q.f_norm_sq, rhs=16.0 + 1e-9,
            details={"dense": q.f_norm_sq_dense}, **inputs,
        ),
    ]


# --------------------------------------------------------------------------
# Verification suite
# --------------------------------------------------------------------------


def _report(name: str, checks: List[BoundCheck], **inputs) -> CheckReport:
    return CheckReport(
        name=name,
        passed=all(c.passed for c in checks),
        checks=checks,
        findings=[f"failed: {c.name} {c.inputs}" for c in checks if not c.passed],
        inputs=inputs,
    )


def _run_expected_max(cfg: McConfig) -> CheckReport:
    hursts = [round(0.1 * k, 1) for k in range(1, 10)]
    checks = []
    for i, h in enumerate(hursts):
        checks.extend(check_expected_max_bounds(h, _sub(cfg, i)))
    return _report("expected_max", checks, hursts=hursts)


def _run_mgf(cfg: McConfig) -> CheckReport:
    cases = [(0.5, 1.0), (0.1, 2.0)]
    checks = [check_mgf_bound(h, theta, _sub(cfg, i)) for i, (h, theta) in enumerate(cases)]
    return _report("mgf", checks, cases=cases)


def _run_discretization(cfg: McConfig) -> CheckReport:
    cases = [(h, n) for h in (0.3, 0.5, 0.8) for n in (16, 64, 256) if n >= 2.0 ** (1.0 / h)]
    checks = [check_discretization_error(h, n, _sub(cfg, i)) for i, (h, n) in enumerate(cases)]
    report = _report("discretization", checks, cases=cases)
    negative = [c for c in checks if c.details["min_pathwise_gap"] < 0]
    if negative:
        report.passed = False
        report.findings.extend(f"negative pathwise gap: {c.inputs}" for c in negative)
    return report


def _run_slepian(cfg: McConfig) -> CheckReport:
    return check_slepian_monotonicity(0.5, [0.3, 0.5, 0.7], cfg)


def _run_statement1(cfg: McConfig) -> CheckReport:
    t_grid = [4.0, 16.0, 64.0, 256.0]
    parts = [check_statement1(h, t_grid, _sub(cfg, i)) for i, h in enumerate((0.4, 0.6))]
    return CheckReport(
        name="statement1",
        passed=all(p.passed for p in parts),
        checks=[c for p in parts for c in p.checks],
        rows=[{"hurst": p.inputs["hurst"], **row} for p in parts for row in p.rows],
        findings=[f"H={p.inputs['hurst']:g}: {f}" for p in parts for f in p.findings],
        inputs={"hursts": [0.4, 0.6], "t_grid": t_grid},
    )


def _run_records(cfg: McConfig) -> CheckReport:
    stats = count_right_to_left_records(0.5, 30, cfg)
    report = _report("records", [stats.check], hurst=0.5, n=30)
    report.rows = [{
        "n": stats.n,
        "expected_records": stats.expected_records.p_hat,
        "expected_records_se": stats.expected_records.std_err,
        "persistence_n": stats.persistence_n2.p_hat,
        "persistence_n_se": stats.persistence_n2.std_err,
    }]
    return report


def _run_negative_barrier(cfg: McConfig) -> CheckReport:
    cases = [(0.5, 16, 2), (0.5, 2, 1), (0.8, 16, 1)]
    checks = [check_negative_barrier_bound(h, n, m, _sub(cfg, i)) for i, (h, n, m) in enumerate(cases)]
    return _report("negative_barrier", checks, cases=cases)


def _run_bz_covariance(cfg: McConfig) -> CheckReport:
    hursts = [0.1, 0.5, 0.9]
    return _report("bz_covariance", [check_bz_comparison(h, 64) for h in hursts], hursts=hursts, n=64)


def _run_bz_slepian(cfg: McConfig) -> CheckReport:
    return _report("bz_slepian", [check_bz_slepian(0.3, 64, 0.0, cfg)], hurst=0.3, n=64, level=0.0)


def _run_extreme_value(cfg: McConfig) -> CheckReport:
    sizes = [100, 1000, 10_000]
    checks = [check_extreme_value_limit(n, _sub(cfg, i)) for i, n in enumerate(sizes)]
    report = _report("extreme_value", checks, sizes=sizes)
    report.rows = [{"n": c.inputs["n"], **c.details} for c in checks]
    return report


def _run_mills(cfg: McConfig) -> CheckReport:
    return mills_ratio_check([0.0, 0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 12.0, 20.0])


def _run_rkhs(cfg: McConfig) -> CheckReport:
    checks = []
    for h in (0.1, 0.5, 0.8, 0.95):
        for n in (4, 16):
            for m in (1, 2, 4):
                checks.extend(check_rkhs(h, n, m))
    return _report("rkhs", checks)


def _run_sandwich(cfg: McConfig) -> CheckReport:
    law = UniformLaw(a=0.4, b=0.8)
    return _report("small_barrier_sandwich", [check_small_barrier_sandwich(law, 0.25, cfg)])


def _run_monotonicity_probe(cfg: McConfig) -> CheckReport:
    return probe_monotonicity_conjecture(64.0, [round(0.1 * k, 1) for k in range(1, 10)], cfg)


class CheckSpec(NamedTuple):
    description: str
    run: Callable[[McConfig], CheckReport]


CHECK_REGISTRY: Dict[str, CheckSpec] = {
    "expected_max": CheckSpec("bounds on E[max_[0,1] B^H]", _run_expected_max),
    "mgf": CheckSpec("exponential moment of max |B^H|", _run_mgf),
    "discretization": CheckSpec("grid vs continuous maximum", _run_discretization),
    "slepian": CheckSpec("small-barrier monotonicity in H", _run_slepian),
    "statement1": CheckSpec("asymptotics of E[(int e^B)^-1]", _run_statement1),
    "records": CheckSpec("right-to-left record inequality", _run_records),
    "negative_barrier": CheckSpec("persistence below -1", _run_negative_barrier),
    "bz_covariance": CheckSpec("comparison process covariances", _run_bz_covariance),
    "bz_slepian": CheckSpec("comparison process persistence", _run_bz_slepian),
    "extreme_value": CheckSpec("normal maxima constants", _run_extreme_value),
    "mills": CheckSpec("Mills' ratio inequalities", _run_mills),
    "rkhs": CheckSpec("RKHS shift quantities", _run_rkhs),
    "small_barrier_sandwich": CheckSpec("annealed vs H0 small barrier", _run_sandwich),
    "monotonicity_probe": CheckSpec("H -> persistence probe (no assertion)", _run_monotonicity_probe),
}


def select_checks(names: Optional[Sequence[str]]) -> List[str]:
    """Resolve a name filter against the registry"""
    if not names:
        return list(CHECK_REGISTRY)
    unknown = [n for n in names if n not in CHECK_REGISTRY]
    if unknown:
        raise ConfigValidationError(
            f"Unknown check(s) {', '.join(unknown)}; valid names: {', '.join(CHECK_REGISTRY)}"
        )
    return [n for n in CHECK_REGISTRY if n in names]


def run_checks(
    names: Optional[Sequence[str]],
    cfg: McConfig,
    on_done: Optional[Callable[[CheckReport], None]] = None,
) -> List[CheckReport]:
    """Run selected checks concurrently on disjoint substreams, in registry order"""
    selected = select_checks(names)
    index = {name: i for i, name in enumerate(CHECK_REGISTRY)}

    def job(name: str) -> CheckReport:
        start = time.perf_counter()
        report = CHECK_REGISTRY[name].run(_sub(cfg, 100, index[name]))
        report.wall_time = time.perf_counter() - start
        if on_done is not None:
            on_done(report)
        return report

    if cfg.workers <= 1:
        return [job(name) for name in selected]
    with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
        return list(executor.map(job, selected))
