"""
Output artifacts: estimate CSVs, fit reports, check reports and run manifests
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..types.models import CheckReport, FitPoint, FitReport, McEstimate, RunManifest

logger = logging.getLogger(__name__)

# Downstream scripts bind to these names; do not reorder.
CSV_COLUMNS = [
    "quantity",
    "H_or_law",
    "T_or_eps",
    "m",
    "n_paths",
    "n_hits",
    "p_hat",
    "std_err",
    "ci_lo",
    "ci_hi",
    "seed",
]

FIT_COLUMNS = [
    "quantity",
    "law",
    "slope",
    "slope_se",
    "intercept",
    "r_squared",
    "n_points",
    "predicted",
    "discrepancy",
]


def estimates_frame(estimates: Sequence[McEstimate]) -> pd.DataFrame:
    rows = [
        {
            "quantity": e.quantity,
            "H_or_law": e.law,
            "T_or_eps": e.x,
            "m": e.m,
            "n_paths": e.n_paths,
            "n_hits": e.n_hits,
            "p_hat": e.p_hat,
            "std_err": e.std_err,
            "ci_lo": e.ci_lo,
            "ci_hi": e.ci_hi,
            # seeds are full 64-bit; keep them exact as text
            "seed": str(e.seed),
        }
        for e in estimates
    ]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
    return path


def write_estimates_csv(estimates: Sequence[McEstimate], path: Path) -> Path:
    """Write estimate rows in input order"""
    logger.debug(f"Writing {len(estimates)} estimate rows to {path}")
    return _write_frame(estimates_frame(estimates), Path(path))


def read_estimates_csv(path: Path) -> pd.DataFrame:
    """Estimate CSV with seeds and grid labels kept as text; rejects missing columns"""
    frame = pd.read_csv(path, dtype={"seed": str, "m": str, "H_or_law": str})
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"{path} is missing columns {missing}")
    return frame


def fit_points_from_csv(path: Path, quantity: Optional[str] = None) -> List[FitPoint]:
    """Fit points from an estimate CSV, optionally restricted to one quantity"""
    frame = read_estimates_csv(path)
    if quantity is not None:
        frame = frame[frame["quantity"] == quantity]
    points = []
    for row in frame.itertuples(index=False):
        if row.p_hat <= 0:
            logger.warning(f"Skipping x={row.T_or_eps:g}: p_hat = 0")
            continue
        n_hits = None if pd.isna(row.n_hits) else int(row.n_hits)
        points.append(
            FitPoint(x=float(row.T_or_eps), p_hat=float(row.p_hat), std_err=float(row.std_err), n_hits=n_hits)
        )
    return points


def fit_frame(reports: Sequence[FitReport]) -> pd.DataFrame:
    rows = [
        {
            "quantity": r.quantity,
            "law": r.law,
            "slope": r.fit.slope,
            "slope_se": r.fit.slope_se,
            "intercept": r.fit.intercept,
            "r_squared": r.fit.r_squared,
            "n_points": r.fit.n_points,
            "predicted": r.predicted,
            "discrepancy": r.discrepancy,
        }
        for r in reports
    ]
    return pd.DataFrame(rows, columns=FIT_COLUMNS)


def write_fit_csv(reports: Sequence[FitReport], path: Path) -> Path:
    return _write_frame(fit_frame(reports), Path(path))


def check_report_document(
    reports: Sequence[CheckReport],
    seed: int,
    version: str,
) -> Dict[str, Any]:
    return {
        "version": version,
        "seed": str(seed),
        "passed": all(r.passed for r in reports),
        "reports": [r.model_dump(mode="json", by_alias=True) for r in reports],
    }


def write_json(document: Dict[str, Any], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2, sort_keys=False) + "\n")
    return path


def write_paths(
    out_dir: Path,
    times: np.ndarray,
    values: np.ndarray,
    hursts: np.ndarray,
) -> List[Path]:
    """Raw sampled paths as times.npy (n+1,), values.npy (n_paths, n+1), hurst.npy (n_paths,).

    Plain .npy files carry no timestamps, so equal arrays give equal bytes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, array in (("times", times), ("values", values), ("hurst", hursts)):
        path = out_dir / f"{name}.npy"
        np.save(path, np.ascontiguousarray(array, dtype=float))
        written.append(path)
    return written


def file_digest(path: Path) -> str:
    """sha256 hex digest of a file's bytes"""
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def build_manifest(
    command: str,
    version: str,
    config: Dict[str, Any],
    stage_times: Dict[str, float],
    outputs: Sequence[Path],
    base_dir: Path,
) -> RunManifest:
    """Manifest whose digests are keyed by output path relative to base_dir"""
    return RunManifest(
        command=command,
        version=version,
        config=config,
        stage_times=stage_times,
        digests={Path(p).relative_to(base_dir).as_posix(): file_digest(p) for p in outputs},
    )


def write_manifest(manifest: RunManifest, path: Path) -> Path:
    return write_json(manifest.model_dump(mode="json"), path)


def verify_manifest(manifest_path: Path) -> Dict[str, bool]:
    """Recompute output digests next to a manifest; True where they match"""
    manifest_path = Path(manifest_path)
    manifest = RunManifest.model_validate_json(manifest_path.read_text())
    base = manifest_path.parent
    return {
        name: (base / name).exists() and file_digest(base / name) == digest
        for name, digest in manifest.digests.items()
    }
