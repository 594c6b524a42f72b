"""
Type definitions for fbmpersist paths, laws, estimates and checks
"""
import math
from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    TypeAdapter,
    computed_field,
    field_validator,
    model_validator,
)

# Relative slack used when comparing interval endpoints built from floats.
_ORDER_TOL = 1e-12


class GridRuleKind(str, Enum):
    FIXED = "fixed"
    INVERSE_SQRT = "inverse_sqrt"


class QuantityKind(str, Enum):
    PERSISTENCE_FIXED = "persistence_fixed"
    PERSISTENCE_ANNEALED = "persistence_annealed"
    SMALL_BARRIER = "small_barrier"
    EXPECTATION = "expectation"


class FunctionalKind(str, Enum):
    MAX01 = "max01"
    ABSMAX01 = "absmax01"
    EXP_NEG_INTEGRAL = "exp_neg_integral"
    MGF = "mgf"


class PredictionKind(str, Enum):
    FIXED_H = "fixed_h"
    ANNEALED = "annealed"
    SMALL_BARRIER = "small_barrier"


# --------------------------------------------------------------------------
# Grids and paths
# --------------------------------------------------------------------------


class GridSpec(BaseModel):
    """Uniform grid {k/m : k = 0..n_points} covering [0, horizon]"""

    model_config = ConfigDict(frozen=True)

    horizon: float = Field(gt=0)
    points_per_unit: int = Field(ge=1)

    @computed_field
    @property
    def n_points(self) -> int:
        # round first so that e.g. 0.1 * 10 does not become 2 points
        return max(1, math.ceil(round(self.horizon * self.points_per_unit, 9)))

    @property
    def includes_origin(self) -> bool:
        return True

    @property
    def step(self) -> float:
        return 1.0 / self.points_per_unit

    @property
    def last_time(self) -> float:
        return self.n_points / self.points_per_unit

    def times(self) -> np.ndarray:
        return np.arange(self.n_points + 1, dtype=float) / self.points_per_unit

    def n_within(self, sub_horizon: float) -> int:
        """Number of grid points with time <= sub_horizon, origin included"""
        k = math.floor(round(sub_horizon * self.points_per_unit, 9))
        return int(min(max(k, 0), self.n_points)) + 1


class Path(BaseModel):
    """A sampled trajectory on a uniform grid"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    hurst: float = Field(gt=0, le=1)
    grid: GridSpec
    values: np.ndarray

    @model_validator(mode="after")
    def _check_values(self) -> "Path":
        values = self.values
        if values.ndim != 1 or values.shape[0] != self.grid.n_points + 1:
            raise ValueError(
                f"values length {values.shape} does not match grid with "
                f"{self.grid.n_points + 1} points"
            )
        if values[0] != 0.0:
            raise ValueError("path must start at 0")
        if not np.all(np.isfinite(values)):
            raise ValueError("path values must be finite")
        values.flags.writeable = False
        return self

    def times(self) -> np.ndarray:
        return self.grid.times()


class CirculantPlan(BaseModel):
    """Eigenvalues of the circulant embedding of the fGn covariance"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    hurst: float = Field(gt=0, lt=1)
    n_increments: int = Field(ge=1)
    eigenvalues: np.ndarray
    clipped_mass: float = Field(ge=0)

    @model_validator(mode="after")
    def _check_eigenvalues(self) -> "CirculantPlan":
        if self.eigenvalues.shape != (2 * self.n_increments,):
            raise ValueError("eigenvalue array must have length 2 * n_increments")
        if np.any(self.eigenvalues < 0):
            raise ValueError("stored eigenvalues must be nonnegative")
        self.eigenvalues.flags.writeable = False
        return self

    @property
    def embedding_size(self) -> int:
        return 2 * self.n_increments


class PathFunctionals(BaseModel):
    max: float
    abs_max: float = Field(ge=0)
    exp_integral: float = Field(gt=0)

    @model_validator(mode="after")
    def _check_order(self) -> "PathFunctionals":
        if self.abs_max < self.max:
            raise ValueError("abs_max must dominate max")
        return self


# --------------------------------------------------------------------------
# Hurst laws
# --------------------------------------------------------------------------


def _check_interval(a: float, b: float) -> None:
    if not (0 < a < b <= 1):
        raise ValueError(f"need 0 < a < b <= 1, got a={a}, b={b}")


class PointLaw(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: Literal["point"] = "point"
    h: float = Field(gt=0, le=1)

    def label(self) -> str:
        return f"point({self.h:g})"


class UniformLaw(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: Literal["uniform"] = "uniform"
    a: float
    b: float

    @model_validator(mode="after")
    def _check_support(self) -> "UniformLaw":
        _check_interval(self.a, self.b)
        return self

    def label(self) -> str:
        return f"uniform({self.a:g},{self.b:g})"


class ScaledBetaLaw(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: Literal["scaled_beta"] = "scaled_beta"
    alpha: float = Field(gt=0)
    beta: float = Field(gt=0)
    a: float
    b: float

    @model_validator(mode="after")
    def _check_support(self) -> "ScaledBetaLaw":
        _check_interval(self.a, self.b)
        return self

    def label(self) -> str:
        return f"scaled_beta({self.alpha:g},{self.beta:g},{self.a:g},{self.b:g})"


class DiscreteLaw(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: Literal["discrete"] = "discrete"
    atoms: Tuple[Tuple[float, float], ...]

    @field_validator("atoms")
    @classmethod
    def _check_atoms(cls, atoms: Tuple[Tuple[float, float], ...]):
        if not atoms:
            raise ValueError("discrete law needs at least one atom")
        for h, p in atoms:
            if not (0 < h <= 1):
                raise ValueError(f"atom location {h} outside (0, 1]")
            if p <= 0:
                raise ValueError(f"atom weight {p} must be positive")
        total = math.fsum(p for _, p in atoms)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"atom weights sum to {total}, expected 1")
        return atoms

    @property
    def locations(self) -> np.ndarray:
        return np.array([h for h, _ in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        p = np.array([p for _, p in self.atoms], dtype=float)
        return p / p.sum()

    def label(self) -> str:
        inner = ";".join(f"{h:g}:{p:g}" for h, p in self.atoms)
        return f"discrete({inner})"


HurstLaw = Annotated[
    Union[PointLaw, UniformLaw, ScaledBetaLaw, DiscreteLaw],
    Field(discriminator="type"),
]

HURST_LAW_ADAPTER: TypeAdapter = TypeAdapter(HurstLaw)


class EssSup(BaseModel):
    model_config = ConfigDict(frozen=True)

    h0: float = Field(gt=0, le=1)


# --------------------------------------------------------------------------
# Monte Carlo configuration and results
# --------------------------------------------------------------------------


class GridRule(BaseModel):
    """Fixed(m) or the (m_min, m_max)-clamped rule m = ceil(1/sqrt(H))^2"""

    model_config = ConfigDict(frozen=True)

    kind: GridRuleKind = GridRuleKind.INVERSE_SQRT
    m: int = Field(default=1, ge=1)
    m_min: int = Field(default=1, ge=1)
    m_max: int = Field(default=4096, ge=1)

    @model_validator(mode="after")
    def _check_bounds(self) -> "GridRule":
        if self.m_max < self.m_min:
            raise ValueError("m_max must be >= m_min")
        return self

    @classmethod
    def fixed(cls, m: int) -> "GridRule":
        return cls(kind=GridRuleKind.FIXED, m=m)

    @classmethod
    def inverse_sqrt(cls, m_min: int = 1, m_max: int = 4096) -> "GridRule":
        return cls(kind=GridRuleKind.INVERSE_SQRT, m_min=m_min, m_max=m_max)

    def label(self) -> str:
        if self.kind == GridRuleKind.FIXED:
            return str(self.m)
        return f"inverse_sqrt({self.m_min},{self.m_max})"


class McConfig(BaseModel):
    n_paths: int = Field(default=100_000, ge=100)
    seed: int = Field(ge=0, lt=2**64)
    grid_rule: GridRule = GridRule()
    barrier: float = 1.0
    ci_level: float = Field(default=0.95, gt=0, lt=1)
    chunk_size: int = Field(default=4096, ge=1)
    workers: int = Field(default=1, ge=1)

    def with_updates(self, **changes: Any) -> "McConfig":
        return self.model_copy(update=changes)


class McEstimate(BaseModel):
    quantity: str
    p_hat: float
    std_err: float = Field(ge=0)
    ci_lo: float
    ci_hi: float
    n_paths: int
    n_hits: Optional[int] = None
    law: str = ""
    x: float = 0.0
    m: Union[int, str] = ""
    seed: int = 0

    @model_validator(mode="after")
    def _check_interval(self) -> "McEstimate":
        slack = _ORDER_TOL * max(1.0, abs(self.p_hat))
        if not (self.ci_lo - slack <= self.p_hat <= self.ci_hi + slack):
            raise ValueError(
                f"interval [{self.ci_lo}, {self.ci_hi}] does not contain {self.p_hat}"
            )
        if self.n_hits is not None and self.n_paths > 0:
            if abs(self.p_hat - self.n_hits / self.n_paths) > _ORDER_TOL:
                raise ValueError("p_hat must equal n_hits / n_paths")
        return self


class Functional(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: FunctionalKind
    horizon: float = Field(default=1.0, ge=1)
    theta: float = 0.0

    def label(self) -> str:
        if self.kind == FunctionalKind.EXP_NEG_INTEGRAL:
            return f"exp_neg_integral({self.horizon:g})"
        if self.kind == FunctionalKind.MGF:
            return f"mgf({self.theta:g})"
        return self.kind.value


# --------------------------------------------------------------------------
# Exponent fitting
# --------------------------------------------------------------------------


class FitPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float = Field(gt=0)
    p_hat: float = Field(gt=0, le=1)
    std_err: float = Field(default=0.0, ge=0)
    n_hits: Optional[int] = None


class ExponentFit(BaseModel):
    slope: float
    slope_se: float = Field(ge=0)
    intercept: float
    r_squared: float = Field(ge=0, le=1)
    n_points: int = Field(ge=3)

    @field_validator("slope_se")
    @classmethod
    def _finite_se(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("slope_se must be finite")
        return value


class FitReport(BaseModel):
    quantity: str
    law: str
    fit: ExponentFit
    predicted: float
    discrepancy: float


# --------------------------------------------------------------------------
# Verification checks
# --------------------------------------------------------------------------


class BoundCheck(BaseModel):
    """lhs <= rhs up to k_sigma standard errors of the Monte Carlo sides"""

    model_config = ConfigDict(populate_by_name=True)

    name: str
    lhs: float
    rhs: float
    lhs_se: float = Field(default=0.0, ge=0)
    rhs_se: float = Field(default=0.0, ge=0)
    k_sigma: float = 4.0
    margin: float
    passed: bool = Field(serialization_alias="pass")
    inputs: Dict[str, Any] = Field(default_factory=dict)
    details: Dict[str, Any] = Field(default_factory=dict)
    wall_time: float = 0.0

    @classmethod
    def evaluate(
        cls,
        name: str,
        lhs: float,
        rhs: float,
        lhs_se: float = 0.0,
        rhs_se: float = 0.0,
        k_sigma: float = 4.0,
        details: Optional[Dict[str, Any]] = None,
        **inputs: Any,
    ) -> "BoundCheck":
        margin = rhs - lhs
        return cls(
            name=name,
            lhs=lhs,
            rhs=rhs,
            lhs_se=lhs_se,
            rhs_se=rhs_se,
            k_sigma=k_sigma,
            margin=margin,
            passed=bool(margin >= -k_sigma * (lhs_se + rhs_se)),
            inputs=inputs,
            details=details or {},
        )

    @model_validator(mode="after")
    def _check_pass(self) -> "BoundCheck":
        expected = self.margin >= -self.k_sigma * (self.lhs_se + self.rhs_se)
        if bool(expected) != self.passed:
            raise ValueError("pass flag inconsistent with margin")
        return self


class RecordStats(BaseModel):
    n: int = Field(ge=2)
    expected_records: McEstimate
    persistence_n2: McEstimate
    check: BoundCheck

    @field_validator("expected_records")
    @classmethod
    def _nonnegative(cls, value: McEstimate) -> McEstimate:
        if value.p_hat < 0:
            raise ValueError("expected record count must be nonnegative")
        return value


class RkhsQuantities(BaseModel):
    kappa: float
    f_min: float
    f_norm_sq: float
    f_norm_sq_dense: Optional[float] = None
    grid_size: int


class CheckReport(BaseModel):
    """Outcome of one named verification job"""

    name: str
    passed: bool
    checks: List[BoundCheck] = Field(default_factory=list)
    rows: List[Dict[str, Any]] = Field(default_factory=list)
    findings: List[str] = Field(default_factory=list)
    inputs: Dict[str, Any] = Field(default_factory=dict)
    wall_time: float = 0.0


class RunManifest(BaseModel):
    command: str
    version: str
    config: Dict[str, Any]
    stage_times: Dict[str, float] = Field(default_factory=dict)
    digests: Dict[str, str] = Field(default_factory=dict)
