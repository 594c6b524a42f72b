"""
Logging configuration for fbmpersist
"""
import logging
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

from ..config.config import config
from ..types.models import CheckReport, McEstimate

FILE_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"


def _console_handler(level: int) -> logging.Handler:
    # stderr keeps stdout free for result tables
    handler = RichHandler(
        console=Console(stderr=True),
        show_time=True,
        show_path=False,
        markup=True,
        rich_tracebacks=True
    )
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter("%(message)s"))
    return handler


def _file_handler(log_file: str, level: int) -> logging.Handler:
    path = Path(log_file)
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, encoding="utf-8")
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(FILE_FORMAT))
    return handler


def setup_logging(
    level: Optional[str] = None,
    log_file: Optional[str] = None
) -> logging.Logger:
    """Route fbmpersist logs to a Rich console handler and an optional log file"""

    numeric_level = getattr(logging, (level or config.logging.level).upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    root_logger.addHandler(_console_handler(numeric_level))
    if log_file:
        root_logger.addHandler(_file_handler(log_file, numeric_level))

    app_logger = logging.getLogger("fbmpersist")
    app_logger.setLevel(numeric_level)
    return app_logger


class RunLogger:
    """Stage timings, Monte Carlo estimates and check outcomes of one run"""

    def __init__(self, logger: logging.Logger):
        self.logger = logger

    def log_stage_start(self, stage: str) -> None:
        self.logger.info(f"Stage {stage} started")

    def log_stage_complete(self, stage: str, success: bool, duration: float) -> None:
        status = "completed" if success else "failed"
        self.logger.info(f"Stage {stage} {status} in {duration:.2f}s")

    def log_estimate(self, estimate: McEstimate) -> None:
        hits = "" if estimate.n_hits is None else f", hits={estimate.n_hits}"
        self.logger.debug(
            f"{estimate.quantity} [{estimate.law}, x={estimate.x:g}]: "
            f"{estimate.p_hat:.6g} ± {estimate.std_err:.2g}{hits}"
        )

    def log_check(self, report: CheckReport) -> None:
        """One line per report; failing comparisons at warning level"""
        self.logger.info(
            f"Check {report.name}: {'passed' if report.passed else 'FAILED'} "
            f"({len(report.checks)} comparisons, {report.wall_time:.1f}s)"
        )
        for check in report.checks:
            if not check.passed:
                self.logger.warning(
                    f"{report.name}/{check.name} {check.inputs}: "
                    f"lhs={check.lhs:.6g} rhs={check.rhs:.6g} margin={check.margin:.3g}"
                )

    def log_error(self, context: str, error: Exception) -> None:
        """Log error with context"""
        self.logger.error(f"Error in {context}: {error}", exc_info=True)


run_logger = RunLogger(logging.getLogger("fbmpersist"))
