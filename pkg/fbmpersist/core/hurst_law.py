"""
Distributions for the random Hurst exponent
"""
from typing import Union

import numpy as np
from scipy import stats

from ..types.models import (
    HURST_LAW_ADAPTER,
    DiscreteLaw,
    EssSup,
    HurstLaw,
    PointLaw,
    ScaledBetaLaw,
    UniformLaw,
)
from .errors import DomainError


def parse_law(data: Union[dict, str]) -> HurstLaw:
    """Build a law from its tagged JSON object (dict or JSON text)"""
    if isinstance(data, str):
        return HURST_LAW_ADAPTER.validate_json(data)
    return HURST_LAW_ADAPTER.validate_python(data)


def sample_h_batch(law: HurstLaw, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw `size` independent exponents from the law"""
    if isinstance(law, PointLaw):
        return np.full(size, law.h, dtype=float)
    if isinstance(law, UniformLaw):
        return np.minimum(rng.uniform(law.a, law.b, size), law.b)
    if isinstance(law, ScaledBetaLaw):
        draws = law.a + (law.b - law.a) * rng.beta(law.alpha, law.beta, size)
        return np.minimum(draws, law.b)
    if isinstance(law, DiscreteLaw):
        return rng.choice(law.locations, size=size, p=law.weights)
    raise DomainError(f"Unknown Hurst law {law!r}")


def sample_h(law: HurstLaw, rng: np.random.Generator) -> float:
    """One exponent draw; callers pass a stream from the HURST domain"""
    return float(sample_h_batch(law, rng, 1)[0])


def ess_sup(law: HurstLaw) -> EssSup:
    """Exact essential supremum H0 of the law"""
    if isinstance(law, PointLaw):
        return EssSup(h0=law.h)
    if isinstance(law, (UniformLaw, ScaledBetaLaw)):
        return EssSup(h0=law.b)
    if isinstance(law, DiscreteLaw):
        return EssSup(h0=float(law.locations.max()))
    raise DomainError(f"Unknown Hurst law {law!r}")


def ess_inf(law: HurstLaw) -> float:
    """Smallest exponent the law can produce"""
    if isinstance(law, PointLaw):
        return law.h
    if isinstance(law, (UniformLaw, ScaledBetaLaw)):
        return law.a
    if isinstance(law, DiscreteLaw):
        return float(law.locations.min())
    raise DomainError(f"Unknown Hurst law {law!r}")


def mass_above(law: HurstLaw, level: float) -> float:
    """Analytic probability that the exponent exceeds level"""
    if isinstance(law, PointLaw):
        return 1.0 if law.h > level else 0.0
    if isinstance(law, UniformLaw):
        return float(np.clip((law.b - level) / (law.b - law.a), 0.0, 1.0))
    if isinstance(law, ScaledBetaLaw):
        u = (level - law.a) / (law.b - law.a)
        return float(stats.beta.sf(np.clip(u, 0.0, 1.0), law.alpha, law.beta))
    if isinstance(law, DiscreteLaw):
        return float(law.weights[law.locations > level].sum())
    raise DomainError(f"Unknown Hurst law {law!r}")


def is_continuous(law: HurstLaw) -> bool:
    return isinstance(law, (UniformLaw, ScaledBetaLaw))
