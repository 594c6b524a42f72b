"""
Tests for Hurst exponent laws
"""
import numpy as np
import pytest
from scipy import stats

from fbmpersist.core.hurst_law import (
    ess_inf,
    ess_sup,
    is_continuous,
    mass_above,
    parse_law,
    sample_h,
    sample_h_batch,
)
from fbmpersist.types.models import DiscreteLaw, PointLaw, ScaledBetaLaw, UniformLaw


def test_parse_tagged_json():
    law = parse_law('{"type": "uniform", "a": 0.4, "b": 0.8}')
    assert isinstance(law, UniformLaw)
    assert law.label() == "uniform(0.4,0.8)"

    law = parse_law({"type": "discrete", "atoms": [[0.5, 0.5], [1.0, 0.5]]})
    assert isinstance(law, DiscreteLaw)
    assert ess_sup(law).h0 == 1.0


@pytest.mark.parametrize(
    "data",
    [
        {"type": "uniform", "a": 0.8, "b": 0.4},
        {"type": "uniform", "a": 0.0, "b": 0.5},
        {"type": "point", "h": 1.5},
        {"type": "discrete", "atoms": [[0.5, 0.3]]},
        {"type": "scaled_beta", "alpha": -1, "beta": 1, "a": 0.1, "b": 0.9},
        {"type": "gamma"},
    ],
)
def test_invalid_laws(data):
    with pytest.raises(ValueError):
        parse_law(data)


def test_ess_sup_and_inf():
    law = ScaledBetaLaw(alpha=2, beta=3, a=0.2, b=0.7)
    assert ess_sup(law).h0 == 0.7
    assert ess_inf(law) == 0.2
    assert ess_sup(PointLaw(h=0.3)).h0 == 0.3


def test_samples_stay_in_support(rng):
    law = UniformLaw(a=0.4, b=0.8)
    draws = sample_h_batch(law, rng, 10_000)
    assert draws.min() >= 0.4
    assert draws.max() <= 0.8
    assert abs(draws.mean() - 0.6) < 5 * (0.4 / np.sqrt(12)) / 100

    beta = ScaledBetaLaw(alpha=0.5, beta=0.5, a=0.1, b=0.9)
    draws = sample_h_batch(beta, rng, 10_000)
    assert draws.min() >= 0.1 and draws.max() <= 0.9


def test_discrete_frequencies(rng):
    law = DiscreteLaw(atoms=((0.3, 0.25), (0.6, 0.75)))
    draws = sample_h_batch(law, rng, 20_000)
    assert set(np.unique(draws)) <= {0.3, 0.6}
    frac = np.mean(draws == 0.6)
    assert abs(frac - 0.75) < 5 * np.sqrt(0.75 * 0.25 / 20_000)


def test_point_law_is_constant(rng):
    assert sample_h(PointLaw(h=0.45), rng) == 0.45


def test_mass_above():
    assert mass_above(UniformLaw(a=0.4, b=0.8), 0.6) == pytest.approx(0.5)
    assert mass_above(UniformLaw(a=0.4, b=0.8), 0.9) == 0.0
    assert mass_above(PointLaw(h=0.5), 0.4) == 1.0
    assert mass_above(DiscreteLaw(atoms=((0.5, 0.5), (1.0, 0.5))), 0.7) == pytest.approx(0.5)

    law = ScaledBetaLaw(alpha=2, beta=5, a=0.2, b=0.6)
    assert mass_above(law, 0.3) == pytest.approx(stats.beta.sf(0.25, 2, 5))


def test_continuity():
    assert is_continuous(UniformLaw(a=0.1, b=0.2))
    assert not is_continuous(PointLaw(h=0.1))


@pytest.mark.parametrize(
    "law",
    [
        UniformLaw(a=0.4, b=0.8),
        ScaledBetaLaw(alpha=2, beta=1, a=0.2, b=0.6),
        DiscreteLaw(atoms=((0.3, 0.9), (0.7, 0.1))),
        PointLaw(h=0.5),
    ],
)
@pytest.mark.parametrize("eps", [0.01, 0.05])
def test_mass_near_ess_sup(rng, law, eps):
    level = ess_sup(law).h0 - eps
    mass = mass_above(law, level)
    assert mass > 0, f"no mass above {level} for {law.label()}"

    n = 100_000
    freq = np.mean(sample_h_batch(law, rng, n) > level)
    assert freq > 0
    assert abs(freq - mass) < 5 * np.sqrt(mass * (1 - mass) / n) + 1e-12, (
        f"empirical {freq:.5f} vs analytic {mass:.5f}"
    )
