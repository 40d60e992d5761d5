"""Experiment configuration files.

Flat ``key = value`` lines grouped under ``[section]`` headers. Every key is
listed in ``SCHEMA``; unknown sections or keys are errors, so typos never pass
silently. Example::

    [experiment]
    kind = graph_dim
    n_points = 1048576
    n_replicas = 8

    [process]
    alpha = 2.0
    d = 1
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import ParameterError
from .rng import parse_seed
from .stable_sim import StableParams

KINDS = ("graph_dim", "range_dim", "parabolic_dim", "kernel_sweep",
         "energy_threshold", "formula_table", "hitcount")


class ConfigError(ParameterError):
    """Malformed or inconsistent configuration."""


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.replace(",", " ").split())


def _opt_int(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else int(text)


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


# section -> key -> parser
SCHEMA = {
    "experiment": {"kind": str, "n_points": int, "n_replicas": int, "seed": parse_seed,
                   "out": str, "tolerance": float, "threads": int},
    "process": {"alpha": float, "d": int},
    "time_set": {"kind": str, "level": int, "ratio": float, "T_max": float},
    "drift": {"kind": str, "constant": _floats, "beta": float, "base": float, "scale": float},
    "levels": {"cells": str, "k_min": int, "k_max": _opt_int, "saturation": float},
    "kernel": {"kernel": str, "beta": float, "sweep": str, "tau": float,
               "delta": float, "scales": _ints, "n_mc": int},
    "energy": {"measure": str, "refinement": _ints, "beta_grid": _floats},
}


@dataclass(frozen=True)
class TimeSetConfig:
    kind: str = "interval"
    level: int = 10
    ratio: float = 1 / 3
    T_max: float = 1.0


@dataclass(frozen=True)
class DriftConfig:
    kind: str = "zero"
    constant: tuple = ()
    beta: float | None = None
    base: float = 2.0
    scale: float = 1.0


@dataclass(frozen=True)
class LevelConfig:
    cells: str = "euclidean"  # or "parabolic"
    k_min: int = 2
    k_max: int | None = None
    saturation: float = 0.25


@dataclass(frozen=True)
class KernelConfig:
    kernel: str = "K"
    beta: float = 0.5
    sweep: str = "tau"
    tau: float = 2.0**-16
    delta: float = 0.0
    scales: tuple = tuple(range(2, 11))
    n_mc: int = 100_000


@dataclass(frozen=True)
class EnergyConfig:
    measure: str = "graph"  # or "time_set"
    refinement: tuple = (2, 8, 14)
    beta_grid: tuple = (0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    params: StableParams = field(default_factory=lambda: StableParams(2.0, 1))
    time_set: TimeSetConfig = field(default_factory=TimeSetConfig)
    drift: DriftConfig = field(default_factory=DriftConfig)
    levels: LevelConfig = field(default_factory=LevelConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)
    n_points: int = 2**18
    n_replicas: int = 4
    seed: int = 0
    out: str = "results"
    tolerance: float = 0.1
    threads: int = 1

    def __post_init__(self):
        validate(self)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("threads")  # neither changes results
        return d

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def validate(cfg: ExperimentConfig) -> None:
    if cfg.kind not in KINDS:
        raise ConfigError(f"experiment.kind must be one of {KINDS}, got {cfg.kind!r}")
    if cfg.n_replicas < 1:
        raise ConfigError("experiment.n_replicas must be >= 1")
    if cfg.n_points < 2:
        raise ConfigError("experiment.n_points must be >= 2")
    if cfg.threads < 1:
        raise ConfigError("experiment.threads must be >= 1")
    if cfg.tolerance <= 0:
        raise ConfigError("experiment.tolerance must be positive")
    if cfg.time_set.kind not in ("interval", "cantor"):
        raise ConfigError(f"time_set.kind must be interval or cantor, got {cfg.time_set.kind!r}")
    if cfg.time_set.kind == "cantor" and not 0 < cfg.time_set.ratio <= 0.5:
        raise ConfigError("time_set.ratio must lie in (0, 1/2]")
    if cfg.time_set.T_max <= 0:
        raise ConfigError("time_set.T_max must be positive")
    if cfg.drift.kind not in ("zero", "constant", "power", "weierstrass"):
        raise ConfigError(f"unknown drift.kind {cfg.drift.kind!r}")
    if cfg.levels.cells not in ("euclidean", "parabolic"):
        raise ConfigError("levels.cells must be euclidean or parabolic")
    if cfg.levels.k_min < 0:
        raise ConfigError("levels.k_min must be >= 0")
    if not 0 < cfg.levels.saturation <= 1:
        raise ConfigError("levels.saturation must lie in (0, 1]")
    if cfg.kernel.kernel not in ("K", "kappa"):
        raise ConfigError("kernel.kernel must be K or kappa")
    if cfg.kernel.sweep not in ("tau", "delta", "delta_coupled"):
        raise ConfigError("kernel.sweep must be tau, delta or delta_coupled")
    if len(cfg.kernel.scales) < 8:
        raise ConfigError("kernel.scales needs at least 8 scales")
    if cfg.kernel.kernel == "kappa" and cfg.kernel.beta >= cfg.params.d:
        raise ConfigError("kappa kernel needs kernel.beta < process.d")
    if cfg.energy.measure not in ("graph", "time_set"):
        raise ConfigError("energy.measure must be graph or time_set")
    if len(cfg.energy.refinement) < 3 or list(cfg.energy.refinement) != sorted(set(cfg.energy.refinement)):
        raise ConfigError("energy.refinement needs >= 3 increasing levels")
    if len(cfg.energy.beta_grid) < 5:
        raise ConfigError("energy.beta_grid needs >= 5 values")


_SUB = {"time_set": TimeSetConfig, "drift": DriftConfig, "levels": LevelConfig,
        "kernel": KernelConfig, "energy": EnergyConfig}


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str  # keys are case-sensitive (T_max)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    top, process, subs = {}, {}, {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        parsed = {}
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                parsed[key] = SCHEMA[section][key](raw.strip())
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from None
        if section == "experiment":
            top = parsed
        elif section == "process":
            process = parsed
        else:
            subs[section] = _SUB[section](**parsed)
    if "kind" not in top:
        raise ConfigError("[experiment] kind is required")
    try:
        params = StableParams(process.get("alpha", 2.0), process.get("d", 1))
    except ParameterError as exc:
        raise ConfigError(f"[process] {exc}") from None
    return ExperimentConfig(params=params, **subs, **top)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
