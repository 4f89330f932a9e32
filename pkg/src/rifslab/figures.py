"""Matplotlib renderings of run reports.

Everything draws through the Agg backend into PNG files next to the
delimited output; nothing here ever opens a window.  Figures are a reading
aid, the CSV/JSON files remain the machine contract.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import ExperimentReport, SweepResult

_DPI = 150


def _finite(xs, ys):
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    return x[keep], y[keep]


def _save(fig, out_dir: Path, name: str) -> str:
    out_dir.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_dir / name, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return name


def render_correlation_figure(report: ExperimentReport, out_dir) -> str | None:
    rows = [r for r in report.replicas if r.corr_curve_r is not None]
    if not rows:
        return None
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for r in rows:
        x, y = _finite(r.corr_curve_r, r.corr_curve_c)
        if x.size:
            ax.loglog(x, y, lw=0.8, alpha=0.6)
    ax.set_xlabel("r")
    ax.set_ylabel("correlation sum C(r)")
    title = report.label or "experiment"
    ax.set_title(f"{title}: pair-count scaling, {len(rows)} replicas")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, Path(out_dir), "correlation_curves.png")


def render_dimension_figure(report: ExperimentReport, out_dir) -> str | None:
    pts = [
        (r.index, r.correlation.value, r.correlation.stderr, r.correlation.stable)
        for r in report.replicas
        if r.correlation is not None and np.isfinite(r.correlation.value)
    ]
    if not pts:
        return None
    idx = [p[0] for p in pts]
    val = [p[1] for p in pts]
    err = [p[2] if np.isfinite(p[2]) else 0.0 for p in pts]
    colors = ["tab:blue" if p[3] else "tab:red" for p in pts]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.errorbar(idx, val, yerr=err, fmt="none", ecolor="0.6", elinewidth=0.8, capsize=2)
    ax.scatter(idx, val, c=colors, s=24, zorder=3)
    if np.isfinite(report.predicted_dimension):
        ax.axhline(report.predicted_dimension, color="k", lw=1.0, ls="--",
                   label=f"predicted {report.predicted_dimension:.4f}")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("replica")
    ax.set_ylabel("correlation dimension")
    ax.set_title(f"{report.label or 'experiment'}: per-replica slope (red = unstable fit)")
    ax.grid(True, alpha=0.3)
    return _save(fig, Path(out_dir), "dimensions.png")


def render_support_figure(report: ExperimentReport, out_dir) -> str | None:
    rows = [r for r in report.replicas if r.support_curve is not None]
    if not rows:
        return None
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for r in rows:
        curve = np.asarray(r.support_curve, dtype=float)
        x, y = _finite(curve[:, 0], curve[:, 1])
        if x.size:
            ax.loglog(x, y, lw=0.8, alpha=0.6)
    ax.set_xlabel("delta")
    ax.set_ylabel("measure of delta-fattened sample set")
    ax.set_title(f"{report.label or 'experiment'}: support thickness")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, Path(out_dir), "support.png")


def render_energy_figure(report: ExperimentReport, out_dir) -> str | None:
    rows = [r for r in report.replicas if r.fourier]
    if not rows:
        return None
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for r in rows:
        alphas = np.asarray(r.fourier["alphas"], dtype=float)
        energies = np.asarray(r.fourier["energies"], dtype=float)
        keep = np.isfinite(energies) & (energies > 0)
        if keep.any():
            ax.semilogy(alphas[keep], energies[keep], lw=0.8, alpha=0.6)
    bound = rows[0].fourier.get("theory_bound")
    if bound is not None and np.isfinite(bound):
        ax.axvline(bound, color="k", lw=1.0, ls="--", label=f"predicted cutoff {bound:.3f}")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("alpha")
    ax.set_ylabel("truncated energy integral")
    ax.set_title(f"{report.label or 'experiment'}: frequency-decay energies")
    ax.grid(True, alpha=0.3)
    return _save(fig, Path(out_dir), "energy.png")


def render_experiment_figures(report: ExperimentReport, out_dir) -> list[str]:
    names = [
        render_correlation_figure(report, out_dir),
        render_dimension_figure(report, out_dir),
        render_support_figure(report, out_dir),
        render_energy_figure(report, out_dir),
    ]
    return [n for n in names if n is not None]


def render_sweep_figures(result: SweepResult, out_dir) -> list[str]:
    rows = [p.summary() for p in result.points if p.report is not None]
    if not rows:
        return []
    x = np.array([row["value"] for row in rows], dtype=float)
    med = np.array([row["median_dimension"] if row["median_dimension"] is not None else np.nan
                    for row in rows], dtype=float)
    pred = np.array([row["predicted_dimension"] for row in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(x, pred, "k--", lw=1.0, label="predicted")
    ax.plot(x, med, "o-", lw=1.0, ms=4, label="estimated median")
    ax.set_xlabel(result.parameter)
    ax.set_ylabel("dimension")
    ax.set_title(f"sweep over {result.parameter}")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    return [_save(fig, Path(out_dir), "sweep.png")]


def render_values_figure(r_grid, corr_curve, fit, out_path) -> str | None:
    """Single log-log diagnostic for the standalone estimator entry point."""
    x, y = _finite(r_grid, corr_curve)
    if not x.size:
        return None
    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(x, y, "o", ms=3, alpha=0.7, label="pair counts")
    if fit is not None and np.isfinite(fit.value):
        lo, hi = fit.scale_window
        if np.isfinite(lo) and np.isfinite(hi) and lo > 0:
            xs = np.geomspace(lo, hi, 50)
            anchor = np.interp(np.log(xs[0]), np.log(x), np.log(y))
            ax.loglog(xs, np.exp(anchor + fit.value * np.log(xs / xs[0])),
                      "r-", lw=1.2, label=f"slope {fit.value:.3f}")
    ax.set_xlabel("r")
    ax.set_ylabel("correlation sum C(r)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return out_path.name
