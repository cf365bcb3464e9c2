"""Model configuration files.

A config is a small YAML document with fixed sections::

    schema: 1
    model:      {c: 2.0, sigma: 0.0, lambda: 1.0}
    compounder: {kind: geometric, rho: 0.5}
    claims:     {kind: exponential, rate: 1.0}
    control:    {q: 0.1, x_max: 20.0, n: 2048}     # x_max, n optional
    simulate:   {replications: 100000, dt: 0.01, seed: 42, t_max: 140.0}

The simulate section is optional.  Unknown keys anywhere are rejected
with the offending key path; numeric constraints are enforced by the
owning types and re-reported under the same path convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import yaml

from .distributions import (
    Degenerate,
    EmpiricalDensity,
    Erlang,
    ExplicitPmf,
    Exponential,
    GeneralizedLogarithmic,
    Geometric,
    HyperExponential,
    Logarithmic,
    MixtureOfErlangs,
)
from .errors import ConfigError, ParameterError
from .exponent import RiskModel
from .simulate import SimulationConfig

SCHEMA_VERSION = 1

_COMPOUNDER_KINDS = {
    "degenerate": (Degenerate, ()),
    "geometric": (Geometric, ("rho",)),
    "logarithmic": (Logarithmic, ("theta",)),
    "generalized_logarithmic": (GeneralizedLogarithmic, ("beta", "theta")),
    "explicit": (ExplicitPmf, ("probs", "tail_bound")),
}

_CLAIM_KINDS = {
    "exponential": (Exponential, ("rate",)),
    "hyperexponential": (HyperExponential, ("weights", "rates")),
    "erlang": (Erlang, ("shape", "rate")),
    "erlang_mixture": (MixtureOfErlangs, ("weights", "shapes", "rates")),
    "empirical": (EmpiricalDensity, ("z", "f")),
}

_OPTIONAL_PARAMS = {"tail_bound"}


@dataclass
class ModelConfig:
    """Validated configuration: the risk model plus run settings."""

    model: RiskModel
    q: float
    x_max: float | None
    grid_n: int
    simulation: SimulationConfig | None


def _require_mapping(obj, path):
    if not isinstance(obj, dict):
        raise ConfigError(path, "must be a mapping")
    return obj


def _take(section, path, key, required=True, default=None):
    if key not in section:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required key")
        return default
    return section.pop(key)


def _reject_unknown(section, path):
    if section:
        key = sorted(section)[0]
        raise ConfigError(f"{path}.{key}", "unknown key")


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, "must be a number")
    return float(value)


def _integer(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, "must be an integer")
    return value


def _build_kind(section, path, registry):
    section = dict(_require_mapping(section, path))
    kind = _take(section, path, "kind")
    if kind not in registry:
        raise ConfigError(f"{path}.kind", f"unknown kind {kind!r}; expected one of {sorted(registry)}")
    cls, params = registry[kind]
    kwargs = {}
    for p in params:
        if p in _OPTIONAL_PARAMS:
            if p in section:
                kwargs[p] = section.pop(p)
        else:
            kwargs[p] = _take(section, path, p)
    _reject_unknown(section, path)
    # tuple-ify sequence parameters for the frozen dataclasses
    for key in ("weights", "rates", "shapes"):
        if key in kwargs:
            if not isinstance(kwargs[key], (list, tuple)):
                raise ConfigError(f"{path}.{key}", "must be a sequence")
            kwargs[key] = tuple(kwargs[key])
    try:
        return cls(**kwargs)
    except ParameterError as exc:
        raise ConfigError(f"{path}.{exc.field}", str(exc).split(": ", 1)[-1]) from exc


def load_config(path_or_stream):
    """Parse and validate a configuration file (path or open stream)."""
    if hasattr(path_or_stream, "read"):
        doc = yaml.safe_load(path_or_stream)
    else:
        with open(path_or_stream, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    doc = dict(_require_mapping(doc, "config"))

    schema = _take(doc, "config", "schema")
    if schema != SCHEMA_VERSION:
        raise ConfigError("schema", f"unsupported schema version {schema!r}; this build reads {SCHEMA_VERSION}")

    model_sec = dict(_require_mapping(_take(doc, "config", "model"), "model"))
    c = _number(_take(model_sec, "model", "c"), "model.c")
    sigma = _number(_take(model_sec, "model", "sigma"), "model.sigma")
    lam = _number(_take(model_sec, "model", "lambda"), "model.lambda")
    _reject_unknown(model_sec, "model")

    compounder = _build_kind(_take(doc, "config", "compounder"), "compounder", _COMPOUNDER_KINDS)
    claim = _build_kind(_take(doc, "config", "claims"), "claims", _CLAIM_KINDS)

    control = dict(_require_mapping(_take(doc, "config", "control"), "control"))
    q = _number(_take(control, "control", "q"), "control.q")
    x_max = _take(control, "control", "x_max", required=False)
    if x_max is not None:
        x_max = _number(x_max, "control.x_max")
        if x_max <= 0:
            raise ConfigError("control.x_max", "must be positive")
    grid_n = _take(control, "control", "n", required=False, default=2048)
    grid_n = _integer(grid_n, "control.n")
    if grid_n < 64:
        raise ConfigError("control.n", "must be at least 64")
    if q <= 0:
        raise ConfigError("control.q", "must be positive")
    _reject_unknown(control, "control")

    sim_sec = _take(doc, "config", "simulate", required=False)
    simulation = None
    if sim_sec is not None:
        sim_sec = dict(_require_mapping(sim_sec, "simulate"))
        reps = _integer(_take(sim_sec, "simulate", "replications"), "simulate.replications")
        dt = _number(_take(sim_sec, "simulate", "dt"), "simulate.dt")
        seed = _integer(_take(sim_sec, "simulate", "seed"), "simulate.seed")
        t_max = _number(_take(sim_sec, "simulate", "t_max"), "simulate.t_max")
        _reject_unknown(sim_sec, "simulate")
        simulation = SimulationConfig(replications=reps, dt=dt, t_max=t_max, seed=seed, q=q)

    _reject_unknown(doc, "config")

    try:
        model = RiskModel(c=c, sigma=sigma, lam=lam, compounder=compounder, claim=claim)
    except ParameterError as exc:
        field = {"lam": "lambda"}.get(exc.field, exc.field)
        raise ConfigError(f"model.{field}", str(exc).split(": ", 1)[-1]) from exc

    return ModelConfig(model=model, q=q, x_max=x_max, grid_n=grid_n, simulation=simulation)
