"""Scenario configuration files (TOML).

Equilibrium scenario (single oscillator)::

    [model]
    kind = "single_oscillator"
    eps = 1.0
    omega = 1.5            # oscillator frequency, or a list of them
    g = 1.0

    [grid]
    lambda = {start = 0.0, stop = 2.0, num = 41}
    beta = [0.5, 2.0]

    [run]
    methods = ["exact", "mfg_weak", "hmf_weak", "hmf_high_t", "bare_gibbs"]
    tol = 1e-10

Dynamics scenario (Drude-Lorentz)::

    [model]
    kind = "drude_lorentz"
    eps = 1.0
    cutoff = 0.5
    reorg = [0.1, 0.4]
    beta = [0.5, 1.0]

    [time]
    t_max = 50.0
    dt = 0.1

    [run]
    heom_tol = 1e-6

A grid is a number, an increasing list, or ``{start, stop, num}``. An optional
``[plot]`` table is passed to the plotting layer unchanged. Everything is in
units of the qubit splitting.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EQUILIBRIUM_METHODS = ("exact", "mfg_weak", "hmf_weak", "hmf_exponential", "hmf_high_t", "bare_gibbs")
REFINED_KINDS = ("mfg_numerator", "weak", "high_t")
DYNAMICS_METHODS = ("heom", "br_full_bare", "br_secular_bare") + tuple(
    f"br_{mode}_refined_{x}" for x in REFINED_KINDS for mode in ("full", "secular")
)


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass(frozen=True)
class EquilibriumConfig:
    eps: float
    omegas: tuple
    g: float
    lambdas: tuple
    betas: tuple
    methods: tuple = EQUILIBRIUM_METHODS
    tol: float = 1e-10
    n_max: int = 1000
    plot: dict = field(default_factory=dict)
    name: str = "equilibrium"


@dataclass(frozen=True)
class DynamicsConfig:
    eps: float
    cutoff: float
    reorgs: tuple
    betas: tuple
    t_grid: np.ndarray
    methods: tuple = DYNAMICS_METHODS
    heom_tol: float = 1e-6
    k_max: int = 40
    plot: dict = field(default_factory=dict)
    name: str = "dynamics"


def parse_grid(value, name: str) -> tuple:
    if isinstance(value, dict):
        try:
            start, stop, num = float(value["start"]), float(value["stop"]), int(value["num"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"grid {name!r} needs numeric start, stop and num") from exc
        if num < 1:
            raise ConfigError(f"grid {name!r} must have at least one point")
        pts = np.linspace(start, stop, num)
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        pts = np.array([float(value)])
    elif isinstance(value, list):
        try:
            pts = np.array([float(v) for v in value])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grid {name!r} must contain numbers") from exc
    else:
        raise ConfigError(f"grid {name!r} must be a number, a list or a {{start, stop, num}} table")
    if pts.size == 0:
        raise ConfigError(f"grid {name!r} is empty")
    if not np.all(np.isfinite(pts)):
        raise ConfigError(f"grid {name!r} contains non-finite values")
    if np.any(np.diff(pts) <= 0):
        raise ConfigError(f"grid {name!r} must be strictly increasing")
    return tuple(float(p) for p in pts)


def _number(table, key, default=None, positive=False):
    if key not in table:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key!r} must be a number")
    if positive and not v > 0:
        raise ConfigError(f"{key!r} must be positive")
    return float(v)


def _methods(run, allowed):
    methods = run.get("methods", list(allowed))
    if not isinstance(methods, list) or not methods:
        raise ConfigError("run.methods must be a non-empty list")
    bad = [m for m in methods if m not in allowed]
    if bad:
        raise ConfigError(f"unknown method(s) {bad}; choose from {list(allowed)}")
    # keep the canonical order so output is independent of how the list was written
    return tuple(m for m in allowed if m in methods)


def _positive_grid(values, name):
    if any(v <= 0 for v in values):
        raise ConfigError(f"grid {name!r} must be positive")
    return values


def load_config(path):
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {str(path)!r} not found") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw, name=path.stem)


def config_from_dict(raw: dict, name: str = "scenario"):
    if not raw:
        raise ConfigError("empty configuration")
    model = raw.get("model")
    if not isinstance(model, dict) or "kind" not in model:
        raise ConfigError("config needs a [model] table with a 'kind' key")
    run = raw.get("run", {})
    plot = raw.get("plot", {})
    if not isinstance(run, dict) or not isinstance(plot, dict):
        raise ConfigError("[run] and [plot] must be tables")
    kind = model["kind"]
    if kind == "single_oscillator":
        grid = raw.get("grid")
        if not isinstance(grid, dict):
            raise ConfigError("single_oscillator scenarios need a [grid] table")
        if "lambda" not in grid or "beta" not in grid:
            raise ConfigError("[grid] needs both 'lambda' and 'beta'")
        lambdas = parse_grid(grid["lambda"], "lambda")
        if lambdas[0] < 0:
            raise ConfigError("lambda grid must be non-negative")
        return EquilibriumConfig(
            eps=_number(model, "eps", 1.0, positive=True),
            omegas=_positive_grid(parse_grid(model.get("omega", 1.5), "omega"), "omega"),
            g=_number(model, "g", 1.0),
            lambdas=lambdas,
            betas=_positive_grid(parse_grid(grid["beta"], "beta"), "beta"),
            methods=_methods(run, EQUILIBRIUM_METHODS),
            tol=_number(run, "tol", 1e-10, positive=True),
            n_max=int(_number(run, "n_max", 1000, positive=True)),
            plot=plot,
            name=name,
        )
    if kind == "drude_lorentz":
        time = raw.get("time")
        if not isinstance(time, dict):
            raise ConfigError("drude_lorentz scenarios need a [time] table")
        t_max = _number(time, "t_max", positive=True)
        dt = _number(time, "dt", positive=True)
        n = int(round(t_max / dt))
        if n < 1 or abs(n * dt - t_max) > 1e-9 * t_max:
            raise ConfigError("t_max must be a positive integer multiple of dt")
        reorgs = parse_grid(model.get("reorg", 0.1), "reorg")
        if reorgs[0] < 0:
            raise ConfigError("reorg grid must be non-negative")
        return DynamicsConfig(
            eps=_number(model, "eps", 1.0, positive=True),
            cutoff=_number(model, "cutoff", 0.5, positive=True),
            reorgs=reorgs,
            betas=_positive_grid(parse_grid(model.get("beta", 0.5), "beta"), "beta"),
            t_grid=np.arange(n + 1) * dt,
            methods=_methods(run, DYNAMICS_METHODS),
            heom_tol=_number(run, "heom_tol", 1e-6, positive=True),
            k_max=int(_number(run, "k_max", 40, positive=True)),
            plot=plot,
            name=name,
        )
    raise ConfigError(f"unknown model kind {kind!r} (single_oscillator or drude_lorentz)")
