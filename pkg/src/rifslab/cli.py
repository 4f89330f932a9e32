"""Command line front end.

Subcommands: simulate, sweep, estimate, fourier, validate.  Exit codes:
0 success, 2 configuration problems, 3 numerical failure, 4 I/O failure.
Failures also land as machine-readable JSON on stderr, and when an output
directory is known a FAILED marker plus error.json is left there.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import estimators, experiments, fourier, runio, seeds
from .config import load_config, parse_config
from .exceptions import ConfigError, NumericError, RifsLabError
from .projection import ErrorRealization

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _add_common(p: argparse.ArgumentParser, needs_config: bool = True) -> None:
    if needs_config:
        p.add_argument("--config", required=True, help="YAML experiment configuration")
    p.add_argument("--out", default=None, help="output directory (default: ./runs/<label>)")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both",
                   help="which report serializations to write")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True,
                   help="render PNG figures alongside the delimited output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rifslab",
        description="simulate contracting random-factor iterated maps and "
                    "estimate the dimension of the realized value distributions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run replicated sampling and estimation")
    _add_common(sim)
    sim.add_argument("--replicas", type=int, default=None, help="override replica count")
    sim.add_argument("--samples", type=int, default=None, help="override samples per replica")
    sim.add_argument("--threads", type=int, default=1, help="worker threads across replicas")

    sw = sub.add_parser("sweep", help="repeat an experiment over a parameter grid")
    _add_common(sw)
    sw.add_argument("--threads", type=int, default=1)

    est = sub.add_parser("estimate", help="run the estimators on an existing value file")
    est.add_argument("--values", required=True, help="input .csv (value column) or .npy")
    _add_common(est, needs_config=False)

    fr = sub.add_parser("fourier", help="frequency-decay diagnostics for one error draw")
    _add_common(fr)
    fr.add_argument("--replica", type=int, default=0, help="error-sequence index to analyze")
    fr.add_argument("--depth", type=int, default=64, help="number of product factors")
    fr.add_argument("--xi-max", type=float, default=None, help="override frequency cutoff")
    fr.add_argument("--nodes", type=int, default=None, help="override quadrature node count")

    val = sub.add_parser("validate", help="parse a configuration and report the resolved run")
    val.add_argument("--config", required=True)
    return parser


def _load(args):
    parsed = parse_config(load_config(args.config))
    cfg = parsed.experiment
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "replicas", None) is not None:
        overrides["replicas"] = args.replicas
    if getattr(args, "samples", None) is not None:
        overrides["samples"] = args.samples
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg, parsed


def _out_dir(args, fallback: str) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path("runs") / fallback


def _cmd_simulate(args) -> int:
    cfg, _ = _load(args)
    report = experiments.run_experiment(cfg, threads=args.threads)
    out = _out_dir(args, cfg.label or "experiment")
    runio.write_experiment_outputs(out, report, cfg, fmt=args.format,
                                   figures=args.figures, command="simulate")
    agg = report.aggregates
    corr = agg.get("correlation_dimension", {})
    print(f"label: {report.label or '(unlabeled)'}")
    print(f"regime: {report.regime} (entropy {report.entropy:.6f}, "
          f"drift {report.chi:.6f}, predicted dimension {report.predicted_dimension:.6f})")
    med = corr.get("median")
    print(f"replicas: {len(report.replicas)} ({agg.get('failed', 0)} failed), "
          f"median estimated dimension: {'n/a' if med is None else f'{med:.4f}'}")
    if report.caveat:
        print(f"note: {report.caveat}")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    parsed = parse_config(load_config(args.config))
    if parsed.sweep is None or parsed.builder is None:
        raise ConfigError(["sweep: configuration has no sweep section"])
    master = args.seed if args.seed is not None else parsed.experiment.seed
    result = experiments.sweep(parsed.builder, parsed.sweep.values, master,
                               parameter=parsed.sweep.parameter, threads=args.threads)
    out = _out_dir(args, f"sweep-{parsed.sweep.parameter}")
    runio.write_sweep_outputs(out, result, fmt=args.format, figures=args.figures)
    done = sum(1 for p in result.points if p.report is not None)
    print(f"sweep over {result.parameter}: {done}/{len(result.points)} points completed")
    for point in result.points:
        row = point.summary()
        med = row.get("median_dimension")
        msg = row.get("error")
        tail = f"error: {msg}" if msg else (
            f"median {med:.4f} vs predicted {row['predicted_dimension']:.4f}"
            if med is not None else "no estimate")
        print(f"  {result.parameter}={row['value']:g}: {tail}")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    values = runio.read_values(args.values)
    if values.size < 2:
        raise ConfigError(["estimate: need at least two values"])
    r_grid = estimators.default_r_grid(values)
    corr_curve = estimators.correlation_sum(values, r_grid)
    corr = estimators.correlation_dimension(values, r_grid)
    box = estimators.box_dimension(values)
    density = estimators.density_diagnostics(values)
    support = estimators.support_measure(
        values,
        estimators.geometric_grid(
            max(np.ptp(values), 1e-12) * 1e-5, max(np.ptp(values), 1e-12) / 4, 12),
    )
    out = _out_dir(args, "estimate")
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "input": str(args.values),
        "count": int(values.size),
        "correlation": _estimate_dict(corr),
        "box": _estimate_dict(box),
        "density": {
            "bins": [density.bins_coarse, density.bins_fine],
            "l2_norms": [density.l2_coarse, density.l2_fine],
            "ratio": density.ratio,
            "ac_flag": density.ac_flag,
        },
        "support_curve": support.tolist(),
    }
    written = []
    if args.format in ("json", "both"):
        runio.write_json(out / "estimates.json", payload)
        written.append("estimates.json")
    if args.format in ("csv", "both"):
        runio.write_csv(
            out / "estimates.csv",
            ["method", "value", "stderr", "r2", "stable", "window_lo", "window_hi"],
            [
                ["correlation", corr.value, corr.stderr, corr.r2, corr.stable,
                 corr.scale_window[0], corr.scale_window[1]],
                ["box", box.value, box.stderr, box.r2, box.stable,
                 box.scale_window[0], box.scale_window[1]],
            ],
        )
        written.append("estimates.csv")
    if args.figures:
        from . import figures as figmod

        name = figmod.render_values_figure(r_grid, corr_curve, corr, out / "figures" / "correlation.png")
        if name:
            written.append(f"figures/{name}")
    digest = hashlib.sha256(Path(args.values).read_bytes()).hexdigest()
    manifest = runio.RunManifest(command="estimate", digest=digest, master_seed=0, outputs=written)
    runio.write_json(out / "manifest.json", manifest.to_dict())
    print(f"correlation dimension: {corr.value:.4f} (stderr {corr.stderr:.4f}, "
          f"r2 {corr.r2:.4f}, {'stable' if corr.stable else 'unstable'})")
    print(f"box dimension: {box.value:.4f}")
    flag = {True: "consistent with a density", False: "density-like mass absent",
            None: "inconclusive"}[density.ac_flag]
    print(f"histogram refinement: ratio {density.ratio:.3f}, {flag}")
    print(f"wrote {out}")
    return EXIT_OK


def _estimate_dict(est) -> dict:
    return {
        "value": est.value,
        "stderr": est.stderr,
        "method": est.method,
        "scale_window": list(est.scale_window),
        "fit_points": est.fit_points,
        "r2": est.r2,
        "stable": est.stable,
    }


def _cmd_fourier(args) -> int:
    cfg, _ = _load(args)
    if not cfg.fourier_applicable:
        raise ConfigError([
            "fourier: diagnostics need a single contraction ratio and independent symbols"
        ])
    fs = cfg.fourier
    xi_max = args.xi_max if args.xi_max is not None else fs.xi_max
    nodes = args.nodes if args.nodes is not None else fs.nodes
    y = ErrorRealization.from_seed(
        cfg.law, seeds.seed_sequence(cfg.seed, seeds.ROLE_ERRORS, args.replica))
    p = cfg.measure.symbol_marginal()
    result = fourier.sobolev_dimension_estimate(
        cfg.ifs, p, cfg.law, y,
        alpha_grid=fs.alpha_grid, depth=args.depth, xi_max=xi_max, nodes=nodes)
    out = _out_dir(args, f"fourier-{cfg.label or 'experiment'}")
    out.mkdir(parents=True, exist_ok=True)
    rows = [[e.alpha, e.value, e.converged, e.last_decade_fraction] for e in result.estimates]
    written = []
    if args.format in ("csv", "both"):
        runio.write_csv(out / "energy.csv",
                         ["alpha", "energy", "converged", "last_decade_fraction"], rows)
        written.append("energy.csv")
    if args.format in ("json", "both"):
        runio.write_json(out / "energy.json", {
            "label": cfg.label,
            "replica": args.replica,
            "depth": args.depth,
            "xi_max": xi_max,
            "nodes": nodes,
            "sobolev_estimate": result.value,
            "converged_any": result.converged_any,
            "theory_bound": result.theory_bound,
            "energies": [
                {"alpha": e.alpha, "value": e.value, "converged": e.converged,
                 "last_decade_fraction": e.last_decade_fraction}
                for e in result.estimates
            ],
        })
        written.append("energy.json")
    if args.figures:
        import matplotlib.pyplot as plt

        figdir = out / "figures"
        figdir.mkdir(parents=True, exist_ok=True)
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        alphas = [e.alpha for e in result.estimates]
        vals = [e.value for e in result.estimates]
        ax.semilogy(alphas, vals, "o-", ms=4)
        ax.axvline(result.theory_bound, color="k", ls="--", lw=1.0,
                   label=f"predicted cutoff {result.theory_bound:.3f}")
        ax.set_xlabel("alpha")
        ax.set_ylabel("truncated energy")
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize=8)
        fig.savefig(figdir / "energy.png", dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append("figures/energy.png")
    manifest = runio.RunManifest(
        command="fourier",
        digest=runio.config_digest({"label": cfg.label, "replica": args.replica,
                                    "depth": args.depth, "xi_max": xi_max, "nodes": nodes}),
        master_seed=cfg.seed, outputs=written)
    runio.write_json(out / "manifest.json", manifest.to_dict())
    print(f"largest converged smoothness order: {result.value:.3f} "
          f"(theory bound {result.theory_bound:.3f}, "
          f"{'converged' if result.converged_any else 'no order converged'})")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    parsed = parse_config(load_config(args.config))
    cfg = parsed.experiment
    regime, predicted, caveat = experiments.classify_regime(cfg.entropy(), cfg.chi())
    print("configuration ok")
    print(f"label: {cfg.label or '(unlabeled)'}")
    print(f"entropy: {cfg.entropy():.12f}")
    print(f"contraction drift: {cfg.chi():.12f}")
    print(f"regime: {regime}, predicted dimension {predicted:.12f}")
    if caveat:
        print(f"note: {caveat}")
    print(f"frequency diagnostics applicable: {'yes' if cfg.fourier_applicable else 'no'}")
    if parsed.sweep is not None:
        vals = ", ".join(f"{v:g}" for v in parsed.sweep.values)
        print(f"sweep: {parsed.sweep.parameter} over [{vals}]")
    return EXIT_OK


_DISPATCH = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "estimate": _cmd_estimate,
    "fourier": _cmd_fourier,
    "validate": _cmd_validate,
}


def _emit_error(exc: BaseException, code: int) -> None:
    payload = {"error": {
        "type": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }}
    problems = getattr(exc, "problems", None)
    if problems:
        payload["error"]["problems"] = list(problems)
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = getattr(args, "out", None)
    try:
        return _DISPATCH[args.command](args)
    except ConfigError as exc:
        _emit_error(exc, EXIT_CONFIG)
        if out_dir:
            runio.write_failure(out_dir, exc, EXIT_CONFIG)
        return EXIT_CONFIG
    except NumericError as exc:
        _emit_error(exc, EXIT_NUMERIC)
        if out_dir:
            runio.write_failure(out_dir, exc, EXIT_NUMERIC)
        return EXIT_NUMERIC
    except OSError as exc:
        _emit_error(exc, EXIT_IO)
        return EXIT_IO
    except RifsLabError as exc:
        _emit_error(exc, EXIT_NUMERIC)
        if out_dir:
            runio.write_failure(out_dir, exc, EXIT_NUMERIC)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
