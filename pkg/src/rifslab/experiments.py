"""Experiment presets, replica orchestration and parameter sweeps.

An experiment fixes a system, a symbol process and an error law, then runs
replicas: each replica draws a fresh error sequence (a new conditional
measure), samples it with the words stream, and runs the estimator stack.
Aggregation is deterministic: every stream is derived from the master seed
and the replica index alone, so reports are byte-stable and adding replicas
never changes earlier rows.
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import seeds
from .error_laws import ErrorLaw, PerturbedUniform, PowerLaw
from .estimators import (
    DensityDiagnostics,
    DimensionEstimate,
    correlation_dimension,
    correlation_sum,
    default_r_grid,
    density_diagnostics,
    geometric_grid,
    local_dimension,
    robust_scale,
    support_measure,
)
from .exceptions import ConfigError, NotContractingError
from .fourier import DEFAULT_ALPHA_GRID, sobolev_dimension_estimate
from .projection import FAMILY_RATIOS, ErrorRealization, IfsSpec, lyapunov, sample_measure
from .symbolic import Bernoulli, MaxEntropySFT, ShiftMeasure

SCHEMA_VERSION = 1

REGIME_AC = "absolutely-continuous"
REGIME_SINGULAR = "singular"
REGIME_CRITICAL = "critical"
CRITICAL_TOL = 1e-12

CRITICAL_CAVEAT = (
    "entropy equals |chi| to within tolerance: on the critical line the "
    "conditional measures are singular even though the dimension formula gives 1"
)


def classify_regime(entropy: float, chi: float) -> tuple[str, float, Optional[str]]:
    """Regime label, predicted dimension and an optional caveat from h vs |chi|."""
    if chi >= 0:
        raise NotContractingError(chi)
    gap = entropy - abs(chi)
    if abs(gap) <= CRITICAL_TOL:
        return REGIME_CRITICAL, 1.0, CRITICAL_CAVEAT
    if gap > 0:
        return REGIME_AC, 1.0, None
    return REGIME_SINGULAR, entropy / abs(chi), None


@dataclass(frozen=True)
class EstimatorSettings:
    r_points: int = 32
    r_span: float = 3e-5  # grid starts at diameter * r_span
    bins_coarse: Optional[int] = None  # None: pick from the sample count
    bins_fine: Optional[int] = None
    support_points: int = 12
    support_span: float = 1e-5

    def describe(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class FourierSettings:
    mode: str = "auto"  # auto | on | off
    xi_max: float = 1.0e3
    nodes: int = 20_000
    alpha_grid: tuple = DEFAULT_ALPHA_GRID

    def describe(self) -> dict:
        d = dataclasses.asdict(self)
        d["alpha_grid"] = [float(a) for a in self.alpha_grid]
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    ifs: IfsSpec
    measure: ShiftMeasure
    law: ErrorLaw
    replicas: int = 20
    samples: int = 20_000
    tol: float = 1e-9
    seed: int = 7
    estimators: EstimatorSettings = field(default_factory=EstimatorSettings)
    fourier: FourierSettings = field(default_factory=FourierSettings)
    label: str = ""

    def __post_init__(self):
        problems = []
        if self.replicas < 1:
            problems.append("replicas must be >= 1")
        if self.samples < 2:
            problems.append("samples must be >= 2")
        if self.tol <= 0:
            problems.append("tol must be positive")
        if self.measure.m != self.ifs.m:
            problems.append(
                f"symbol process has {self.measure.m} symbols, system has {self.ifs.m} maps"
            )
        if self.fourier.mode not in ("auto", "on", "off"):
            problems.append("fourier mode must be auto, on or off")
        if self.fourier.mode == "on" and not self.fourier_applicable:
            problems.append(
                "fourier mode 'on' needs a homogeneous system with i.i.d. symbols"
            )
        if problems:
            raise ConfigError(problems)
        chi = lyapunov(self.ifs, self.measure, self.law)
        if chi >= 0:
            raise NotContractingError(chi)

    @property
    def fourier_applicable(self) -> bool:
        return self.ifs.is_homogeneous and self.measure.variant == "bernoulli"

    @property
    def fourier_enabled(self) -> bool:
        if self.fourier.mode == "off":
            return False
        if self.fourier.mode == "on":
            return True
        return self.fourier_applicable

    def entropy(self) -> float:
        return self.measure.entropy()

    def chi(self) -> float:
        return lyapunov(self.ifs, self.measure, self.law)

    def describe(self) -> dict:
        return {
            "label": self.label,
            "ifs": self.ifs.describe(),
            "measure": self.measure.describe(),
            "law": self.law.describe(),
            "replicas": int(self.replicas),
            "samples": int(self.samples),
            "tol": float(self.tol),
            "seed": int(self.seed),
            "estimators": self.estimators.describe(),
            "fourier": self.fourier.describe(),
        }


def sinai_preset(a: float, eps1: float = 0.1, **overrides) -> ExperimentConfig:
    """Two maps with digit 1 and ratios 1 -/+ a, balanced uniform error.

    Entropy is log 2 and chi = log(1 - a^2) / 2, so the predicted transition
    sits at a = sqrt(3)/2 and the singular-side dimension is
    2 log 2 / log(1 / (1 - a^2)).
    """
    if not 0 < a < 1:
        raise ConfigError(["the ratio spread a must lie in (0, 1)"])
    overrides.setdefault("label", f"sinai(a={a:g})")
    return ExperimentConfig(
        ifs=IfsSpec([1.0, 1.0], [1.0 - a, 1.0 + a], FAMILY_RATIOS),
        measure=Bernoulli([0.5, 0.5]),
        law=PerturbedUniform(eps1),
        **overrides,
    )


def arratia_preset(theta: float, **overrides) -> ExperimentConfig:
    """Digits {0, 1}, both ratios 1, power-law error with E[log Y] = -1/theta.

    The dimension formula gives theta log 2; square-integrable densities are
    predicted above theta = 1/log 2 and continuous ones above 2/log 2.
    """
    overrides.setdefault("label", f"arratia(theta={theta:g})")
    return ExperimentConfig(
        ifs=IfsSpec([0.0, 1.0], [1.0, 1.0]),
        measure=Bernoulli([0.5, 0.5]),
        law=PowerLaw(theta),
        **overrides,
    )


FIBONACCI_ADJACENCY = ((1, 1), (1, 0))


def fibonacci_preset(theta: float, **overrides) -> ExperimentConfig:
    """Arratia digits driven by the golden-mean subshift (no digit 1 twice in a row)."""
    overrides.setdefault("label", f"fibonacci(theta={theta:g})")
    return ExperimentConfig(
        ifs=IfsSpec([0.0, 1.0], [1.0, 1.0]),
        measure=MaxEntropySFT(FIBONACCI_ADJACENCY),
        law=PowerLaw(theta),
        **overrides,
    )


@dataclass
class ReplicaResult:
    index: int
    error: Optional[str] = None
    depth: int = 0
    tail_bound: float = float("nan")
    certified: bool = False
    value_min: float = float("nan")
    value_max: float = float("nan")
    correlation: Optional[DimensionEstimate] = None
    local: Optional[DimensionEstimate] = None
    corr_curve_r: Optional[list] = None
    corr_curve_c: Optional[list] = None
    density: Optional[DensityDiagnostics] = None
    support_curve: Optional[list] = None
    support_decay: Optional[float] = None
    fourier: Optional[dict] = None


def _estimate_dict(est: Optional[DimensionEstimate]) -> Optional[dict]:
    if est is None:
        return None
    return {
        "value": float(est.value),
        "stderr": float(est.stderr),
        "method": est.method,
        "scale_window": [float(est.scale_window[0]), float(est.scale_window[1])],
        "points_used": int(est.points_used),
        "fit_points": int(est.fit_points),
        "r2": float(est.r2),
        "stable": bool(est.stable),
    }


def _density_dict(d: Optional[DensityDiagnostics]) -> Optional[dict]:
    if d is None:
        return None
    return {
        "bins_coarse": d.bins_coarse,
        "bins_fine": d.bins_fine,
        "l2_coarse": d.l2_coarse,
        "l2_fine": d.l2_fine,
        "ratio": d.ratio,
        "ac_flag": d.ac_flag,
    }


def support_lower_bound(ifs: IfsSpec, law: ErrorLaw) -> Optional[float]:
    """Deterministic lower bound for every projected value, where one exists.

    With non-negative digits and r_min * y_min < 1 the full series is at
    least d_min / (1 - r_min y_min).  Reported for reference only: sampled
    batches are truncated and errors are perturbed, so it is not asserted.
    """
    if np.min(ifs.digits) < 0:
        return None
    y_lo = law.support()[0]
    r_lo = float(np.min(ifs.ratios))
    if r_lo * y_lo >= 1.0:
        return None
    return float(np.min(ifs.digits) / (1.0 - r_lo * y_lo))


def run_replica(cfg: ExperimentConfig, index: int) -> ReplicaResult:
    """One replica: fresh error sequence, sampled batch, estimator stack."""
    out = ReplicaResult(index=index)
    try:
        y = ErrorRealization.from_seed(
            cfg.law, seeds.seed_sequence(cfg.seed, seeds.ROLE_ERRORS, index)
        )
        words_rng = seeds.stream(cfg.seed, seeds.ROLE_WORDS, index)
        batch = sample_measure(
            cfg.ifs, cfg.measure, cfg.law, y, cfg.samples, cfg.tol, words_rng
        )
        out.depth = batch.depth
        out.tail_bound = batch.tail_bound
        out.certified = batch.certified
        values = batch.values
        out.value_min = float(values.min())
        out.value_max = float(values.max())

        es = cfg.estimators
        r_grid = default_r_grid(values, es.r_points, es.r_span)
        out.correlation = correlation_dimension(values, r_grid)
        out.local = local_dimension(values)
        out.corr_curve_r = [float(r) for r in r_grid]
        out.corr_curve_c = [float(c) for c in correlation_sum(values, r_grid)]
        out.density = density_diagnostics(values, es.bins_coarse, es.bins_fine)

        scale = min(robust_scale(values), (out.value_max - out.value_min) / 4.0)
        support = support_measure(
            values, geometric_grid(scale * es.support_span, scale, es.support_points)
        )
        out.support_curve = [[float(a), float(b)] for a, b in support]
        half = max(2, support.shape[0] // 2)
        logd, logm = np.log(support[:half, 0]), np.log(support[:half, 1])
        out.support_decay = float(np.polyfit(logd, logm, 1)[0]) if half >= 2 else None

        if cfg.fourier_enabled:
            fs = cfg.fourier
            alphas = tuple(sorted({1.0, *(float(a) for a in fs.alpha_grid)}))
            sob = sobolev_dimension_estimate(
                cfg.ifs, cfg.measure.symbol_marginal(), cfg.law, y,
                alpha_grid=alphas, depth=batch.depth, xi_max=fs.xi_max, nodes=fs.nodes,
            )
            e1 = next(e for e in sob.estimates if e.alpha == 1.0)
            out.fourier = {
                "sobolev_estimate": float(sob.value),
                "converged_any": bool(sob.converged_any),
                "theory_bound": float(sob.theory_bound),
                "e1_value": float(e1.value),
                "e1_converged": bool(e1.converged),
                "alphas": [float(e.alpha) for e in sob.estimates],
                "energies": [float(e.value) for e in sob.estimates],
                "converged": [bool(e.converged) for e in sob.estimates],
            }
    except Exception as exc:  # recorded, never fatal for the experiment
        out.error = f"{type(exc).__name__}: {exc}"
    return out


@dataclass
class ExperimentReport:
    schema_version: int
    label: str
    config: dict
    entropy: float
    chi: float
    ratio: float
    regime: str
    predicted_dimension: float
    caveat: Optional[str]
    support_bound: Optional[float]
    replicas: list
    aggregates: dict

    def to_dict(self) -> dict:
        rows = []
        for r in self.replicas:
            rows.append(
                {
                    "index": r.index,
                    "error": r.error,
                    "depth": r.depth,
                    "tail_bound": r.tail_bound,
                    "certified": r.certified,
                    "value_min": r.value_min,
                    "value_max": r.value_max,
                    "correlation": _estimate_dict(r.correlation),
                    "local": _estimate_dict(r.local),
                    "corr_curve_r": r.corr_curve_r,
                    "corr_curve_c": r.corr_curve_c,
                    "density": _density_dict(r.density),
                    "support_curve": r.support_curve,
                    "support_decay": r.support_decay,
                    "fourier": r.fourier,
                }
            )
        return {
            "schema_version": self.schema_version,
            "label": self.label,
            "config": self.config,
            "entropy": self.entropy,
            "chi": self.chi,
            "ratio": self.ratio,
            "regime": self.regime,
            "predicted_dimension": self.predicted_dimension,
            "caveat": self.caveat,
            "support_bound": self.support_bound,
            "replicas": rows,
            "aggregates": self.aggregates,
        }


def _aggregate(rows: Sequence[ReplicaResult]) -> dict:
    ok = [r for r in rows if r.error is None]
    dims = np.array(
        [r.correlation.value for r in ok if r.correlation and np.isfinite(r.correlation.value)]
    )
    agg: dict = {
        "replicas": len(rows),
        "failed": len(rows) - len(ok),
    }
    if dims.size:
        q25, q50, q75 = np.percentile(dims, [25, 50, 75])
        agg["correlation_dimension"] = {
            "median": float(q50),
            "mean": float(dims.mean()),
            "iqr": [float(q25), float(q75)],
            "stable_fraction": float(
                np.mean([bool(r.correlation.stable) for r in ok if r.correlation])
            ),
        }
    loc = np.array([r.local.value for r in ok if r.local and np.isfinite(r.local.value)])
    if loc.size:
        l25, l50, l75 = np.percentile(loc, [25, 50, 75])
        agg["local_dimension"] = {
            "median": float(l50),
            "mean": float(loc.mean()),
            "iqr": [float(l25), float(l75)],
            "stable_fraction": float(np.mean([bool(r.local.stable) for r in ok if r.local])),
        }
    flags = [r.density.ac_flag for r in ok if r.density is not None]
    if flags:
        agg["ac_flag"] = {
            "true_fraction": float(np.mean([f is True for f in flags])),
            "false_fraction": float(np.mean([f is False for f in flags])),
            "indeterminate_fraction": float(np.mean([f is None for f in flags])),
        }
    decays = [r.support_decay for r in ok if r.support_decay is not None]
    if decays:
        agg["support_decay_median"] = float(np.median(decays))
    four = [r for r in ok if r.fourier is not None]
    if four:
        judged = [r for r in four if r.fourier["e1_converged"]]
        discord = [
            r for r in judged if r.density is not None and r.density.ac_flag is False
        ]
        agg["fourier"] = {
            "sobolev_median": float(np.median([r.fourier["sobolev_estimate"] for r in four])),
            "theory_bound": float(four[0].fourier["theory_bound"]),
            "e1_converged_fraction": float(np.mean([r.fourier["e1_converged"] for r in four])),
            # Finite 1-energy predicts a square-integrable density; how often
            # does the histogram diagnostic disagree?  Reported, not asserted.
            "density_discordance_rate": (
                float(len(discord) / len(judged)) if judged else None
            ),
        }
    mins = [r.value_min for r in ok if np.isfinite(r.value_min)]
    if mins:
        agg["observed_min"] = float(min(mins))
    return agg


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Run every replica and aggregate.  Deterministic for a fixed config."""
    indices = range(cfg.replicas)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda i: run_replica(cfg, i), indices))
    else:
        rows = [run_replica(cfg, i) for i in indices]
    rows.sort(key=lambda r: r.index)
    h = cfg.entropy()
    chi = cfg.chi()
    regime, predicted, caveat = classify_regime(h, chi)
    return ExperimentReport(
        schema_version=SCHEMA_VERSION,
        label=cfg.label,
        config=cfg.describe(),
        entropy=float(h),
        chi=float(chi),
        ratio=float(h / abs(chi)),
        regime=regime,
        predicted_dimension=float(predicted),
        caveat=caveat,
        support_bound=support_lower_bound(cfg.ifs, cfg.law),
        replicas=rows,
        aggregates=_aggregate(rows),
    )


@dataclass
class SweepPoint:
    parameter: float
    seed: int
    error: Optional[str] = None
    report: Optional[ExperimentReport] = None

    def summary(self) -> dict:
        row: dict = {"value": self.parameter, "seed": self.seed, "error": self.error}
        if self.report is not None:
            agg = self.report.aggregates
            corr = agg.get("correlation_dimension", {})
            row.update(
                {
                    "regime": self.report.regime,
                    "entropy": self.report.entropy,
                    "chi": self.report.chi,
                    "predicted_dimension": self.report.predicted_dimension,
                    "median_dimension": corr.get("median"),
                    "local_median_dimension": agg.get("local_dimension", {}).get("median"),
                    "iqr_low": (corr.get("iqr") or [None, None])[0],
                    "iqr_high": (corr.get("iqr") or [None, None])[1],
                    "stable_fraction": corr.get("stable_fraction"),
                    "ac_true_fraction": agg.get("ac_flag", {}).get("true_fraction"),
                    "failed_replicas": agg.get("failed"),
                }
            )
        return row


@dataclass
class SweepResult:
    parameter: str
    master_seed: int
    points: list

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "parameter": self.parameter,
            "master_seed": self.master_seed,
            "points": [p.summary() for p in self.points],
        }


def sweep(
    build: Callable[[float], ExperimentConfig],
    values: Sequence[float],
    master_seed: int,
    parameter: str = "parameter",
    threads: int = 1,
) -> SweepResult:
    """Run one experiment per grid value with seeds split by grid index.

    Point g runs under the sub-master seed derived from (master_seed, g), so
    inserting or removing grid values never disturbs the other points.  A
    failing point is recorded and the sweep continues.
    """
    points = []
    for g, v in enumerate(values):
        sub = seeds.submaster(master_seed, seeds.ROLE_SWEEP, g)
        point = SweepPoint(parameter=float(v), seed=sub)
        try:
            cfg = dataclasses.replace(build(float(v)), seed=sub)
            point.report = run_experiment(cfg, threads=threads)
        except Exception as exc:
            point.error = f"{type(exc).__name__}: {exc}"
        points.append(point)
    return SweepResult(parameter=parameter, master_seed=int(master_seed), points=points)
