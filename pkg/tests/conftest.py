"""
Shared fixtures for the fbmpersist test suite
"""
import numpy as np
import pytest

from fbmpersist.types.models import GridRule, McConfig


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def small_cfg() -> McConfig:
    """Few thousand paths in several chunks; enough for 4-sigma checks"""
    return McConfig(n_paths=4000, seed=12345, chunk_size=1000, workers=1)


@pytest.fixture
def fine_cfg() -> McConfig:
    return McConfig(
        n_paths=4000,
        seed=777,
        chunk_size=1000,
        grid_rule=GridRule.fixed(256),
    )
