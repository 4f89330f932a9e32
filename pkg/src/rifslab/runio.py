"""Run directory output: manifests, reports, summaries, batches.

Report files never carry timestamps, so rerunning with the same master seed
reproduces them byte for byte; wall-clock metadata lives in the manifest
only.  CSV floats are written with repr() (shortest round-trip form) to keep
the delimited output deterministic too.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_to_yaml
from .exceptions import ConfigError
from .experiments import ExperimentConfig, ExperimentReport, SweepResult
from .projection import SampleBatch

SCHEMA_VERSION = 1


def _sanitize(obj):
    # JSON has no NaN/inf; failed estimates become null rather than breaking parsers.
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_sanitize(obj), sort_keys=True, separators=(",", ":"))


def config_digest(config_mapping: dict) -> str:
    """Content hash of a configuration mapping (stable key order)."""
    return hashlib.sha256(canonical_json(config_mapping).encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    command: str
    digest: str
    master_seed: int
    package_version: str = __version__
    schema_version: int = SCHEMA_VERSION
    created_utc: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )
    outputs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "digest": self.digest,
            "master_seed": self.master_seed,
            "package_version": self.package_version,
            "schema_version": self.schema_version,
            "created_utc": self.created_utc,
            "outputs": list(self.outputs),
        }


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_sanitize(payload), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ""
    return str(value)


def write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def summary_row(report: ExperimentReport) -> dict:
    agg = report.aggregates
    corr = agg.get("correlation_dimension", {})
    iqr = corr.get("iqr") or [None, None]
    fourier = agg.get("fourier", {})
    return {
        "label": report.label,
        "regime": report.regime,
        "entropy": report.entropy,
        "chi": report.chi,
        "ratio": report.ratio,
        "predicted_dimension": report.predicted_dimension,
        "median_dimension": corr.get("median"),
        "mean_dimension": corr.get("mean"),
        "iqr_low": iqr[0],
        "iqr_high": iqr[1],
        "stable_fraction": corr.get("stable_fraction"),
        "local_median_dimension": agg.get("local_dimension", {}).get("median"),
        "ac_true_fraction": agg.get("ac_flag", {}).get("true_fraction"),
        "failed_replicas": agg.get("failed"),
        "support_bound": report.support_bound,
        "observed_min": agg.get("observed_min"),
        "sobolev_median": fourier.get("sobolev_median"),
        "sobolev_theory_bound": fourier.get("theory_bound"),
        "fourier_density_discordance": fourier.get("density_discordance_rate"),
    }


def replica_rows(report: ExperimentReport) -> tuple[list, list]:
    header = [
        "index", "error", "depth", "tail_bound", "certified", "value_min", "value_max",
        "corr_dimension", "corr_stderr", "corr_r2", "corr_stable", "window_lo", "window_hi",
        "local_dimension", "local_stable",
        "density_ratio", "ac_flag", "support_decay", "sobolev_estimate", "e1_converged",
    ]
    rows = []
    for r in report.replicas:
        corr = r.correlation
        rows.append([
            r.index, r.error, r.depth, r.tail_bound, r.certified, r.value_min, r.value_max,
            corr.value if corr else None,
            corr.stderr if corr else None,
            corr.r2 if corr else None,
            corr.stable if corr else None,
            corr.scale_window[0] if corr else None,
            corr.scale_window[1] if corr else None,
            r.local.value if r.local else None,
            r.local.stable if r.local else None,
            r.density.ratio if r.density else None,
            r.density.ac_flag if r.density else None,
            r.support_decay,
            r.fourier.get("sobolev_estimate") if r.fourier else None,
            r.fourier.get("e1_converged") if r.fourier else None,
        ])
    return header, rows


def write_experiment_outputs(
    out_dir,
    report: ExperimentReport,
    cfg: ExperimentConfig,
    fmt: str = "both",
    figures: bool = True,
    command: str = "simulate",
) -> list[str]:
    """Write the full run directory; returns the relative paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    (out / "config.resolved.yaml").write_text(config_to_yaml(cfg), encoding="utf-8")
    written.append("config.resolved.yaml")

    if fmt in ("json", "both"):
        write_json(out / "report.json", report.to_dict())
        written.append("report.json")
    if fmt in ("csv", "both"):
        row = summary_row(report)
        write_csv(out / "summary.csv", list(row), [list(row.values())])
        written.append("summary.csv")
        header, rows = replica_rows(report)
        write_csv(out / "replicas.csv", header, rows)
        written.append("replicas.csv")

    if figures:
        from . import figures as figmod

        for name in figmod.render_experiment_figures(report, out / "figures"):
            written.append(f"figures/{name}")

    manifest = RunManifest(
        command=command,
        digest=config_digest(report.config),
        master_seed=cfg.seed,
        outputs=written,
    )
    write_json(out / "manifest.json", manifest.to_dict())
    written.append("manifest.json")
    return written


def write_sweep_outputs(
    out_dir,
    result: SweepResult,
    fmt: str = "both",
    figures: bool = True,
) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    rows = [p.summary() for p in result.points]
    if fmt in ("json", "both"):
        write_json(out / "sweep.json", result.to_dict())
        written.append("sweep.json")
    if fmt in ("csv", "both") and rows:
        header = list(rows[0])
        write_csv(out / "sweep.csv", header, [[row.get(k) for k in header] for row in rows])
        written.append("sweep.csv")
    if figures:
        from . import figures as figmod

        for name in figmod.render_sweep_figures(result, out / "figures"):
            written.append(f"figures/{name}")
    manifest = RunManifest(
        command="sweep",
        digest=config_digest(result.to_dict() | {"kind": "sweep"}),
        master_seed=result.master_seed,
        outputs=written,
    )
    write_json(out / "manifest.json", manifest.to_dict())
    written.append("manifest.json")
    return written


def write_failure(out_dir, exc: BaseException, exit_code: int) -> None:
    """Best-effort failure marker so partial output directories are unambiguous."""
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        payload = {
            "error": {
                "type": type(exc).__name__,
                "message": str(exc),
                "exit_code": exit_code,
                "problems": getattr(exc, "problems", None),
            }
        }
        write_json(out / "error.json", payload)
        (out / "FAILED").write_text("see error.json\n", encoding="utf-8")
    except OSError:
        pass


def write_batch_csv(batch: SampleBatch, path) -> None:
    """One 'value' column; a JSON side-car with the same stem carries metadata."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value"])
        for v in batch.values:
            writer.writerow([repr(float(v))])
    write_json(path.with_suffix(path.suffix + ".meta.json"), batch.metadata())


def write_batch_npy(batch: SampleBatch, path) -> None:
    path = Path(path)
    np.save(path, batch.values)
    write_json(path.with_suffix(".npy.meta.json"), batch.metadata())


def read_values(path) -> np.ndarray:
    """Load a flat value column from .csv (optional header) or .npy."""
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"values file {path} does not exist"])
    if path.suffix == ".npy":
        return np.asarray(np.load(path), dtype=float).ravel()
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip()]
    if not rows:
        raise ConfigError([f"values file {path} is empty"])
    start = 0
    try:
        float(rows[0].split(",")[0])
    except ValueError:
        start = 1
    try:
        return np.array([float(line.split(",")[0]) for line in rows[start:]], dtype=float)
    except ValueError as exc:
        raise ConfigError([f"values file {path} has non-numeric entries: {exc}"]) from exc
