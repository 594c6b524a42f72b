"""
Command execution engine for fbmpersist
"""
import hashlib
import logging
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Optional

import numpy as np
import pandas as pd
from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Table

from .. import __version__
from ..config.config import RunConfig, validate_run_config
from ..types.models import (
    CheckReport,
    FitReport,
    GridSpec,
    McConfig,
    McEstimate,
    PointLaw,
    PredictionKind,
    QuantityKind,
    RunManifest,
)
from .bound_checks import run_checks, select_checks
from .errors import CheckFailed, ConfigValidationError, DegenerateDesign
from .exponent_fit import fit_exponent, fit_points_from_estimates, fit_report, predicted_exponent
from .gaussian_paths import (
    N_CHOL_MAX,
    clear_plan_cache,
    sample_fbm_batch,
    sample_fbm_cholesky_batch,
)
from .hurst_law import ess_inf
from .logger import run_logger
from .persistence_mc import (
    estimate_persistence_curve,
    estimate_small_barrier_curve,
    grid_points_per_unit,
    pilot_expected_hits,
    simulate_statistics,
)
from .reporting import (
    build_manifest,
    check_report_document,
    write_estimates_csv,
    write_fit_csv,
    write_json,
    write_manifest,
    write_paths,
)
from .streams import DOMAIN_PATHS, substream

logger = logging.getLogger(__name__)
console = Console()

# Below this size the two samplers are in the crossover regime.
BENCH_ASSERT_MIN_N = 4096


class Runner:
    """Runs one command for a validated run configuration"""

    def __init__(self, run_config: RunConfig, command: str):
        validate_run_config(run_config, command)
        self.run_config = run_config
        self.command = command
        self.out_dir = run_config.output_dir()
        self.stage_times: Dict[str, float] = {}
        self.outputs: List[Path] = []

    @contextmanager
    def _stage(self, name: str) -> Iterator[None]:
        run_logger.log_stage_start(name)
        start = time.perf_counter()
        success = False
        try:
            yield
            success = True
        except Exception as e:
            run_logger.log_error(f"stage {name}", e)
            raise
        finally:
            duration = time.perf_counter() - start
            self.stage_times[name] = duration
            run_logger.log_stage_complete(name, success, duration)

    @contextmanager
    def _spinner(self, description: str) -> Iterator[None]:
        with Progress(
            SpinnerColumn(),
            TextColumn("[cyan]{task.description}"),
            TimeElapsedColumn(),
            console=console,
            transient=True,
        ) as progress:
            progress.add_task(description, total=None)
            yield

    def _finish(self) -> RunManifest:
        manifest = build_manifest(
            self.command,
            __version__,
            self.run_config.model_dump(mode="json"),
            self.stage_times,
            self.outputs,
            self.out_dir,
        )
        path = write_manifest(manifest, self.out_dir / f"{self.command}_manifest.json")
        console.print(f"📁 [blue]Manifest:[/blue] {path}")
        return manifest

    def _check_pilot(self, cfg: McConfig, **grid) -> None:
        rc = self.run_config
        with self._stage("pilot"):
            expected = pilot_expected_hits(rc.law, cfg, rc.pilot_paths, **grid)
        if expected < rc.min_expected_hits:
            raise ConfigValidationError(
                f"Pilot run predicts about {expected:.0f} hits at the rarest grid point "
                f"(< {rc.min_expected_hits}); lower the largest T / raise the smallest eps "
                f"or raise n_paths"
            )

    def _fit(
        self,
        estimates: List[McEstimate],
        quantity: str,
        kind: PredictionKind,
    ) -> Optional[FitReport]:
        law = self.run_config.law
        hurst = law.h if isinstance(law, PointLaw) else None
        predicted = predicted_exponent(kind, hurst=hurst, law=law)
        with self._stage("fit"):
            points = fit_points_from_estimates(estimates)
            try:
                fit = fit_exponent(points)
            except DegenerateDesign as e:
                logger.warning(f"No exponent fit: {e}")
                return None
        return fit_report(quantity, law.label(), fit, kind, predicted)

    def _print_estimates(self, title: str, column: str, estimates: List[McEstimate]) -> None:
        table = Table(title=title)
        for name in (column, "p_hat", "std_err", "95% CI", "hits"):
            table.add_column(name, justify="right")
        for e in estimates:
            table.add_row(
                f"{e.x:g}",
                f"{e.p_hat:.5g}",
                f"{e.std_err:.2g}",
                f"[{e.ci_lo:.4g}, {e.ci_hi:.4g}]",
                str(e.n_hits),
            )
        console.print(table)

    def _print_fit(self, report: Optional[FitReport], sign: str) -> None:
        if report is None:
            console.print("⚠️  [yellow]Too few usable points for an exponent fit[/yellow]")
            return
        fit = report.fit
        console.print(
            f"📈 [bold]slope[/bold] {fit.slope:+.4f} ± {fit.slope_se:.4f} "
            f"(R² {fit.r_squared:.4f}); predicted {sign}{report.predicted:.4f}, "
            f"discrepancy {report.discrepancy:.4f}"
        )

    def _write_curve(self, estimates: List[McEstimate], report: Optional[FitReport]) -> None:
        self.outputs.append(write_estimates_csv(estimates, self.out_dir / f"{self.command}.csv"))
        if report is not None:
            self.outputs.append(write_fit_csv([report], self.out_dir / f"{self.command}_fit.csv"))

    # ----------------------------------------------------------------------
    # Commands
    # ----------------------------------------------------------------------

    def cmd_persist(self) -> RunManifest:
        """Persistence curve over the T grid, exponent fit, CSV and manifest"""
        rc = self.run_config
        cfg = rc.mc_config()
        point = isinstance(rc.law, PointLaw)
        quantity = (QuantityKind.PERSISTENCE_FIXED if point else QuantityKind.PERSISTENCE_ANNEALED).value
        kind = PredictionKind.FIXED_H if point else PredictionKind.ANNEALED

        console.print(f"\n🎲 [bold blue]Persistence[/bold blue] {rc.law.label()}, {cfg.n_paths} paths")
        self._check_pilot(cfg, horizons=rc.horizons)
        with self._stage("simulate"), self._spinner("Simulating paths..."):
            estimates = estimate_persistence_curve(rc.law, rc.horizons, cfg, quantity)
        for e in estimates:
            run_logger.log_estimate(e)

        report = self._fit(estimates, quantity, kind)
        with self._stage("write"):
            self._write_curve(estimates, report)
        self._print_estimates(f"P(max over [0,T] <= {cfg.barrier:g})", "T", estimates)
        self._print_fit(report, "-")
        return self._finish()

    def cmd_small_barrier(self) -> RunManifest:
        """Small-barrier curve over the eps grid, exponent fit, CSV and manifest"""
        rc = self.run_config
        cfg = rc.mc_config()
        quantity = QuantityKind.SMALL_BARRIER.value

        console.print(f"\n🎲 [bold blue]Small barrier[/bold blue] {rc.law.label()}, {cfg.n_paths} paths")
        self._check_pilot(cfg, epsilons=rc.epsilons)
        with self._stage("simulate"), self._spinner("Simulating paths..."):
            estimates = estimate_small_barrier_curve(rc.law, rc.epsilons, cfg)
        for e in estimates:
            run_logger.log_estimate(e)

        report = self._fit(estimates, quantity, PredictionKind.SMALL_BARRIER)
        with self._stage("write"):
            self._write_curve(estimates, report)
        self._print_estimates("P(max over [0,1] <= eps)", "eps", estimates)
        self._print_fit(report, "+")
        return self._finish()

    def cmd_verify(self) -> List[CheckReport]:
        """Run the verification suite and write the JSON check report.

        Raises CheckFailed after the report is written if any check failed.
        """
        rc = self.run_config
        cfg = rc.mc_config()
        names = select_checks(rc.checks)

        console.print(f"\n🔎 [bold blue]Verifying[/bold blue] {len(names)} check(s)")
        with self._stage("verify"), Progress(console=console) as progress:
            task = progress.add_task("[cyan]Running checks...", total=len(names))

            def on_done(report: CheckReport) -> None:
                run_logger.log_check(report)
                mark = "✅" if report.passed else "❌"
                progress.console.print(f"{mark} {report.name} ({report.wall_time:.1f}s)")
                progress.update(task, advance=1)

            reports = run_checks(names, cfg, on_done=on_done)

        document = check_report_document(reports, cfg.seed, __version__)
        self.outputs.append(write_json(document, self.out_dir / "verify.json"))
        self._print_checks(reports)
        self._finish()

        failed = [r.name for r in reports if not r.passed]
        if failed:
            raise CheckFailed(failed)
        return reports

    def _print_checks(self, reports: List[CheckReport]) -> None:
        table = Table(title="Verification")
        table.add_column("check")
        table.add_column("result")
        table.add_column("items", justify="right")
        table.add_column("time", justify="right")
        for r in reports:
            result = "[green]pass[/green]" if r.passed else "[red]FAIL[/red]"
            table.add_row(r.name, result, str(len(r.checks) or len(r.rows)), f"{r.wall_time:.1f}s")
        console.print(table)
        for r in reports:
            for finding in r.findings:
                console.print(f"  • [yellow]{r.name}[/yellow]: {finding}")

    def cmd_bench(self) -> pd.DataFrame:
        """Paths per second for the circulant and Cholesky samplers over the (H, n) grid"""
        rc = self.run_config
        bench = rc.bench
        seed = rc.master_seed
        rows = []

        console.print(f"\n⏱️  [bold blue]Benchmark[/bold blue] {bench.n_paths} paths x {bench.repeats} repeats")
        with self._stage("bench"), Progress(console=console) as progress:
            task = progress.add_task("[cyan]Timing samplers...", total=len(bench.hursts) * len(bench.sizes))
            case = 0
            for hurst in bench.hursts:
                for n in bench.sizes:
                    grid = GridSpec(horizon=n, points_per_unit=1)
                    circ, digest = _time_sampler(sample_fbm_batch, hurst, grid, bench.n_paths, seed, case, bench.repeats)
                    chol = None
                    if n <= N_CHOL_MAX:
                        chol, _ = _time_sampler(
                            sample_fbm_cholesky_batch, hurst, grid, bench.n_paths, seed, case, bench.repeats
                        )
                    rows.append({
                        "hurst": hurst,
                        "n": n,
                        "circulant_paths_per_s": circ,
                        "cholesky_paths_per_s": chol,
                        "speedup": None if chol is None else circ / chol,
                        "sample_digest": digest,
                    })
                    case += 1
                    progress.update(task, advance=1)

        frame = pd.DataFrame(rows)
        path = self.out_dir / "bench.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
        self.outputs.append(path)
        self._print_bench(frame)
        self._finish()

        slower = [
            f"H={r['hurst']:g}, n={r['n']}"
            for r in rows
            if r["n"] >= BENCH_ASSERT_MIN_N and r["speedup"] is not None and r["speedup"] <= 1.0
        ]
        if slower:
            raise CheckFailed([f"circulant not faster at {label}" for label in slower])
        return frame

    def _print_bench(self, frame: pd.DataFrame) -> None:
        table = Table(title="Sampler throughput (paths/s)")
        for name in ("H", "n", "circulant", "cholesky", "speedup"):
            table.add_column(name, justify="right")
        for r in frame.itertuples(index=False):
            chol = "-" if pd.isna(r.cholesky_paths_per_s) else f"{r.cholesky_paths_per_s:.4g}"
            speed = "-" if pd.isna(r.speedup) else f"{r.speedup:.2f}x"
            table.add_row(f"{r.hurst:g}", str(r.n), f"{r.circulant_paths_per_s:.4g}", chol, speed)
        console.print(table)

    def cmd_simulate(self) -> RunManifest:
        """Dump raw paths of the law on [0, simulate_horizon].

        All paths share the grid the rule assigns to the smallest exponent the
        law can produce.
        """
        rc = self.run_config
        cfg = rc.mc_config().with_updates(n_paths=rc.simulate_paths)
        grid = GridSpec(
            horizon=rc.simulate_horizon,
            points_per_unit=grid_points_per_unit(ess_inf(rc.law), cfg.grid_rule),
        )

        def evaluate(values: np.ndarray, grid: GridSpec, hurst: float) -> np.ndarray:
            return np.column_stack([np.full(values.shape[0], hurst), values])

        console.print(f"\n🎲 [bold blue]Simulating[/bold blue] {cfg.n_paths} paths of {rc.law.label()}")
        with self._stage("simulate"):
            stats = simulate_statistics(rc.law, cfg, lambda h: grid, evaluate, quantize=False)
        with self._stage("write"):
            self.outputs.extend(
                write_paths(self.out_dir / "simulate", grid.times(), stats[:, 1:], stats[:, 0])
            )
        console.print(f"💾 [green]Wrote {cfg.n_paths} paths with {grid.n_points + 1} points each[/green]")
        return self._finish()


def _time_sampler(sampler, hurst, grid, n_paths, seed, case, repeats):
    """Best-of-repeats throughput and a digest of the first draw"""
    best = float("inf")
    digest = ""
    for r in range(repeats):
        rng = substream(seed, DOMAIN_PATHS, case)
        start = time.perf_counter()
        values = sampler(hurst, grid, n_paths, rng)
        best = min(best, time.perf_counter() - start)
        if r == 0:
            digest = hashlib.sha256(np.ascontiguousarray(values).tobytes()).hexdigest()[:16]
    return n_paths / max(best, 1e-12), digest


COMMANDS = {
    "persist": Runner.cmd_persist,
    "small-barrier": Runner.cmd_small_barrier,
    "verify": Runner.cmd_verify,
    "bench": Runner.cmd_bench,
    "simulate": Runner.cmd_simulate,
}


def execute(command: str, run_config: RunConfig):
    """Validate the configuration and run one command"""
    runner = Runner(run_config, command)
    try:
        return COMMANDS[command](runner)
    finally:
        clear_plan_cache()
