"""
Configuration management for fbmpersist
"""
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from .. import __version__
from ..core.errors import ConfigValidationError
from ..types.models import GridRule, HurstLaw, McConfig, PointLaw

load_dotenv()


class OutputConfig(BaseModel):
    out_dir: str = "./runs"


class RuntimeConfig(BaseModel):
    workers: int = Field(default=1, ge=1)
    chunk_size: int = Field(default=4096, ge=1)


class LoggingConfig(BaseModel):
    level: str = "INFO"


class Config(BaseModel):
    output: OutputConfig = OutputConfig()
    runtime: RuntimeConfig = RuntimeConfig()
    logging: LoggingConfig = LoggingConfig()

    @classmethod
    def from_env(cls) -> "Config":
        """Create config from environment variables"""
        return cls(
            output=OutputConfig(
                out_dir=os.getenv("FBMPERSIST_OUT_DIR", "./runs")
            ),
            runtime=RuntimeConfig(
                workers=int(os.getenv("FBMPERSIST_WORKERS", "1")),
                chunk_size=int(os.getenv("FBMPERSIST_CHUNK_SIZE", "4096"))
            ),
            logging=LoggingConfig(
                level=os.getenv("LOG_LEVEL", "INFO")
            )
        )


def _default_horizons() -> List[float]:
    return [float(2**k) for k in range(4, 11)]


def _default_epsilons() -> List[float]:
    return [2.0**-k for k in range(1, 7)]


class BenchConfig(BaseModel):
    hursts: List[float] = Field(default_factory=lambda: [0.2, 0.5, 0.8])
    sizes: List[int] = Field(default_factory=lambda: [8, 64, 512, 4096, 16384])
    n_paths: int = Field(default=64, ge=1)
    repeats: int = Field(default=3, ge=1)


class RunConfig(BaseModel):
    """Serializable source of truth for one run"""

    master_seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    version_stamp: str = __version__

    law: HurstLaw = PointLaw(h=0.5)
    horizons: List[float] = Field(default_factory=_default_horizons)
    epsilons: List[float] = Field(default_factory=_default_epsilons)

    n_paths: int = Field(default=100_000, ge=100)
    grid_rule: GridRule = GridRule()
    barrier: float = 1.0
    ci_level: float = Field(default=0.95, gt=0, lt=1)
    chunk_size: Optional[int] = Field(default=None, ge=1)
    workers: Optional[int] = Field(default=None, ge=1)

    # Pilot sizing for rare-event runs
    pilot_paths: int = Field(default=4096, ge=100)
    min_expected_hits: int = Field(default=50, ge=0)

    checks: List[str] = Field(default_factory=list)
    bench: BenchConfig = BenchConfig()
    simulate_horizon: float = Field(default=1.0, gt=0)
    simulate_paths: int = Field(default=16, ge=1)

    out_dir: Optional[str] = None

    def mc_config(self) -> McConfig:
        if self.master_seed is None:
            raise ConfigValidationError("master_seed is required; pass --seed or set it in the config")
        return McConfig(
            n_paths=self.n_paths,
            seed=self.master_seed,
            grid_rule=self.grid_rule,
            barrier=self.barrier,
            ci_level=self.ci_level,
            chunk_size=self.chunk_size or config.runtime.chunk_size,
            workers=self.workers or config.runtime.workers,
        )

    def output_dir(self) -> Path:
        return Path(self.out_dir or config.output.out_dir)


def load_run_config(path: Optional[str] = None, **overrides: Any) -> RunConfig:
    """Read a JSON run document and apply CLI overrides on top"""
    data: Dict[str, Any] = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigValidationError(f"Cannot read config {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigValidationError(f"Config {path} must hold a JSON object")

    for key, value in overrides.items():
        if value is not None:
            data[key] = value

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigValidationError(f"Invalid run configuration: {e}")


def validate_run_config(run_config: RunConfig, command: str) -> None:
    """Validate configuration for a command"""
    if run_config.master_seed is None:
        raise ConfigValidationError("master_seed is required; pass --seed or set it in the config")
    if command == "persist":
        if not run_config.horizons:
            raise ConfigValidationError("horizons must be a nonempty list")
        if min(run_config.horizons) < 1:
            raise ConfigValidationError("all horizons must be >= 1")
    if command == "small-barrier":
        if not run_config.epsilons:
            raise ConfigValidationError("epsilons must be a nonempty list")
        if not all(0 < eps <= 1 for eps in run_config.epsilons):
            raise ConfigValidationError("epsilons must lie in (0, 1]")
    if command == "verify":
        from ..core.bound_checks import select_checks

        select_checks(run_config.checks)
    if command == "bench":
        if not run_config.bench.hursts or not run_config.bench.sizes:
            raise ConfigValidationError("bench needs nonempty hursts and sizes")


# Global config instance
config = Config.from_env()
