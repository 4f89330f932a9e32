"""Declarative experiment configuration: YAML in, validated objects out.

A config either names a preset (with its scalar parameters at top level) or
spells out the three components in ``system`` / ``symbols`` / ``errors``
sections.  Validation is exhaustive: every problem in the file is reported
at once and unknown keys are rejected rather than ignored.  Serialisation
always emits the explicit form, and parse(serialize(config)) == config.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import yaml

from .error_laws import law_from_dict
from .exceptions import ConfigError
from .experiments import (
    EstimatorSettings,
    ExperimentConfig,
    FourierSettings,
    arratia_preset,
    fibonacci_preset,
    sinai_preset,
)
from .projection import ifs_from_dict
from .symbolic import measure_from_dict

_TOP_KEYS = {
    "label", "preset", "a", "theta", "eps1",
    "system", "symbols", "errors", "run", "estimators", "fourier", "sweep",
}
_RUN_KEYS = {"replicas", "samples", "tol", "seed"}
_EST_KEYS = {"r_points", "r_span", "bins_coarse", "bins_fine", "support_points", "support_span"}
_FOURIER_KEYS = {"mode", "xi_max", "nodes", "alpha_grid"}
_SWEEP_KEYS = {"parameter", "values"}

_PRESETS = {"sinai": ("a",), "arratia": ("theta",), "fibonacci": ("theta",)}
_SWEEPABLE = {"sinai": {"a", "eps1"}, "arratia": {"theta"}, "fibonacci": {"theta"}}


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple


@dataclass
class ParsedConfig:
    experiment: ExperimentConfig
    sweep: Optional[SweepSpec]
    # Rebuilds the experiment at another value of the sweep parameter; only
    # available for preset configs, which have named scalar parameters.
    builder: Optional[Callable[[float], ExperimentConfig]]


def _reject_unknown(section: dict, allowed: set, where: str, problems: list) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        problems.append(f"{where}: unknown keys {unknown}")


def _section(data: dict, key: str) -> dict:
    value = data.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError([f"section {key!r} must be a mapping"])
    return dict(value)


def _number(section: dict, key: str, where: str, problems: list, default, integer=False):
    if key not in section:
        return default
    value = section[key]
    if integer and not isinstance(value, int):
        problems.append(f"{where}.{key}: expected an integer, got {value!r}")
        return default
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        problems.append(f"{where}.{key}: expected a number, got {value!r}")
        return default
    return value


def parse_config(data: dict) -> ParsedConfig:
    """Validate a configuration mapping and build the experiment it describes."""
    if not isinstance(data, dict):
        raise ConfigError(["configuration must be a mapping"])
    problems: list[str] = []
    _reject_unknown(data, _TOP_KEYS, "top level", problems)

    run = _section(data, "run")
    _reject_unknown(run, _RUN_KEYS, "run", problems)
    overrides = {
        "replicas": _number(run, "replicas", "run", problems, 20, integer=True),
        "samples": _number(run, "samples", "run", problems, 20_000, integer=True),
        "tol": _number(run, "tol", "run", problems, 1e-9),
        "seed": _number(run, "seed", "run", problems, 7, integer=True),
    }
    if overrides["replicas"] is not None and overrides["replicas"] < 1:
        problems.append("run.replicas: must be >= 1")
    if overrides["samples"] is not None and overrides["samples"] < 2:
        problems.append("run.samples: must be >= 2")
    if overrides["tol"] is not None and overrides["tol"] <= 0:
        problems.append("run.tol: must be positive")

    est = _section(data, "estimators")
    _reject_unknown(est, _EST_KEYS, "estimators", problems)
    est_kwargs = {}
    for key, integer in (
        ("r_points", True), ("r_span", False), ("bins_coarse", True),
        ("bins_fine", True), ("support_points", True), ("support_span", False),
    ):
        if key in est:
            if est[key] is None:
                est_kwargs[key] = None
            else:
                est_kwargs[key] = _number(est, key, "estimators", problems, None, integer=integer)
    try:
        overrides["estimators"] = EstimatorSettings(**est_kwargs)
    except ConfigError as exc:
        problems.extend(exc.problems)

    fou = _section(data, "fourier")
    _reject_unknown(fou, _FOURIER_KEYS, "fourier", problems)
    fou_kwargs = {}
    if "mode" in fou:
        fou_kwargs["mode"] = str(fou["mode"])
    if "xi_max" in fou:
        fou_kwargs["xi_max"] = _number(fou, "xi_max", "fourier", problems, 1e3)
    if "nodes" in fou:
        fou_kwargs["nodes"] = _number(fou, "nodes", "fourier", problems, 20_000, integer=True)
    if "alpha_grid" in fou:
        grid = fou["alpha_grid"]
        if not isinstance(grid, (list, tuple)) or not grid:
            problems.append("fourier.alpha_grid: expected a non-empty list of numbers")
        else:
            fou_kwargs["alpha_grid"] = tuple(float(a) for a in grid)
    overrides["fourier"] = FourierSettings(**fou_kwargs)

    if "label" in data:
        overrides["label"] = str(data["label"])

    preset = data.get("preset")
    explicit = [k for k in ("system", "symbols", "errors") if k in data]
    builder: Optional[Callable[[float], ExperimentConfig]] = None
    experiment: Optional[ExperimentConfig] = None

    if preset is not None and explicit:
        problems.append(
            f"give either a preset or explicit sections, not both (found {explicit})"
        )
    elif preset is not None:
        if preset not in _PRESETS:
            problems.append(f"unknown preset {preset!r} (choose from {sorted(_PRESETS)})")
        else:
            params = {}
            for key in ("a", "theta", "eps1"):
                if key in data:
                    params[key] = _number(data, key, "top level", problems, None)
            required = _PRESETS[preset]
            for key in required:
                if params.get(key) is None:
                    problems.append(f"preset {preset!r} needs parameter {key!r}")
            stray = set(params) - set(required) - ({"eps1"} if preset == "sinai" else set())
            if stray:
                problems.append(f"preset {preset!r} does not take {sorted(stray)}")
            if not problems:
                builder = _preset_builder(preset, params, overrides)
                try:
                    experiment = builder(params[required[0]])
                except ConfigError as exc:
                    problems.extend(exc.problems)
                    experiment = None
    else:
        missing = [k for k in ("system", "symbols", "errors") if k not in data]
        if missing:
            problems.append(f"explicit configuration is missing sections {missing}")
        else:
            parts = {}
            for key, build in (
                ("system", ifs_from_dict),
                ("symbols", measure_from_dict),
                ("errors", law_from_dict),
            ):
                try:
                    parts[key] = build(dict(data[key]))
                except ConfigError as exc:
                    problems.extend(f"{key}: {p}" for p in exc.problems)
                except (KeyError, TypeError, ValueError) as exc:
                    problems.append(f"{key}: {exc}")
            if len(parts) == 3 and not problems:
                try:
                    experiment = ExperimentConfig(
                        ifs=parts["system"], measure=parts["symbols"], law=parts["errors"],
                        **overrides,
                    )
                except ConfigError as exc:
                    problems.extend(exc.problems)

    sweep_spec: Optional[SweepSpec] = None
    if "sweep" in data:
        sw = _section(data, "sweep")
        _reject_unknown(sw, _SWEEP_KEYS, "sweep", problems)
        parameter = sw.get("parameter")
        values = sw.get("values")
        if preset is None:
            problems.append("sweep requires a preset config (named scalar parameter)")
        elif preset in _SWEEPABLE and parameter not in _SWEEPABLE[preset]:
            problems.append(
                f"sweep.parameter must be one of {sorted(_SWEEPABLE[preset])} for preset {preset!r}"
            )
        if not isinstance(values, (list, tuple)) or not values:
            problems.append("sweep.values must be a non-empty list of numbers")
        elif not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
            problems.append("sweep.values must all be numbers")
        if not problems and parameter is not None:
            if parameter != _PRESETS[preset][0]:
                # sweeping a secondary parameter: rebind the builder to it
                builder = _preset_builder(preset, dict(_params_of(data)), overrides, parameter)
            sweep_spec = SweepSpec(str(parameter), tuple(float(v) for v in values))

    if problems:
        raise ConfigError(problems)
    assert experiment is not None
    return ParsedConfig(experiment=experiment, sweep=sweep_spec, builder=builder)


def _params_of(data: dict) -> dict:
    return {k: data[k] for k in ("a", "theta", "eps1") if k in data}


def _preset_builder(preset: str, params: dict, overrides: dict, vary: Optional[str] = None):
    factory = {"sinai": sinai_preset, "arratia": arratia_preset, "fibonacci": fibonacci_preset}[preset]
    main = _PRESETS[preset][0]
    vary = vary or main

    def build(value: float) -> ExperimentConfig:
        kwargs = dict(params)
        kwargs[vary] = value
        if preset != "sinai":
            kwargs.pop("eps1", None)
        arg = kwargs.pop(main)
        return factory(arg, **kwargs, **overrides)

    return build


def serialize_config(cfg: ExperimentConfig) -> dict:
    """Explicit-form mapping that parses back to an equal configuration."""
    return {
        "label": cfg.label,
        "system": cfg.ifs.describe(),
        "symbols": cfg.measure.describe(),
        "errors": cfg.law.describe(),
        "run": {
            "replicas": int(cfg.replicas),
            "samples": int(cfg.samples),
            "tol": float(cfg.tol),
            "seed": int(cfg.seed),
        },
        "estimators": cfg.estimators.describe(),
        "fourier": cfg.fourier.describe(),
    }


def config_to_yaml(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(serialize_config(cfg), sort_keys=True)


def load_config(path) -> dict:
    """Read a YAML configuration file; returns the raw mapping for parse_config."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError([f"could not parse YAML: {exc}"]) from exc
    if data is None:
        raise ConfigError(["configuration file is empty"])
    return data
