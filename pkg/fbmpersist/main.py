"""
Main CLI interface for fbmpersist
"""
import functools
import logging
import sys
from typing import Callable, Optional

import click
from rich.console import Console

from . import __version__
from .config.config import load_run_config
from .core.errors import FbmPersistError, NumericalError
from .core.logger import setup_logging
from .core.runner import execute

console = Console(stderr=True)
logger = logging.getLogger(__name__)


def _split_checks(ctx: click.Context, param: click.Parameter, value: Optional[str]):
    if value is None:
        return None
    return [name.strip() for name in value.split(",") if name.strip()]


def run_options(fn: Callable) -> Callable:
    """Options shared by every subcommand"""

    @click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                  help="JSON run configuration")
    @click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="Master seed (overrides config)")
    @click.option("--workers", type=click.IntRange(min=1), help="Path-parallel worker threads")
    @click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Output directory")
    @click.option(
        "--log-level",
        default="INFO",
        type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
        help="Set logging level",
    )
    @click.option("--log-file", type=click.Path(), help="Log file path (optional)")
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        return fn(*args, **kwargs)

    return wrapper


def _run(
    command: str,
    config_path: Optional[str],
    seed: Optional[int],
    workers: Optional[int],
    out_dir: Optional[str],
    log_level: str,
    log_file: Optional[str],
    **overrides,
) -> None:
    setup_logging(log_level, log_file)
    try:
        run_config = load_run_config(
            config_path,
            master_seed=seed,
            workers=workers,
            out_dir=out_dir,
            **overrides,
        )
        execute(command, run_config)
    except FbmPersistError as e:
        console.print(f"❌ [bold red]{type(e).__name__}:[/bold red] {e}")
        logger.debug("Command failed", exc_info=True)
        sys.exit(e.exit_code)
    except KeyboardInterrupt:
        console.print("\n🛑 [yellow]Interrupted[/yellow]")
        sys.exit(130)
    except Exception as e:
        console.print(f"❌ [bold red]Unexpected error:[/bold red] {type(e).__name__}: {e}")
        logger.debug("Command failed", exc_info=True)
        sys.exit(NumericalError.exit_code)


@click.group()
@click.version_option(__version__, prog_name="fbmpersist")
def main() -> None:
    """fbmpersist - persistence probabilities of fractional Brownian motion"""


@main.command()
@run_options
def persist(**options) -> None:
    """Estimate P(max over [0,T] <= barrier) over the T grid and fit the exponent"""
    _run("persist", **options)


@main.command("small-barrier")
@run_options
def small_barrier(**options) -> None:
    """Estimate P(max over [0,1] <= eps) over the eps grid and fit the exponent"""
    _run("small-barrier", **options)


@main.command()
@run_options
@click.option("--checks", callback=_split_checks, help="Comma-separated check names (default: all)")
def verify(checks, **options) -> None:
    """Run the numerical verification suite and write a JSON check report"""
    _run("verify", checks=checks, **options)


@main.command()
@run_options
def bench(**options) -> None:
    """Time the circulant and Cholesky samplers"""
    _run("bench", **options)


@main.command()
@run_options
def simulate(**options) -> None:
    """Dump raw sampled paths"""
    _run("simulate", **options)


if __name__ == "__main__":
    main()
