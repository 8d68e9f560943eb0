"""Experiment configuration files (JSON).

Layout::

    {
      "system":    {"p_h": 1.0, "p_max": 0.005, "bandwidth": 1e6,
                    "noise_psd": 1e-17, "beta": 1e-12},
      "path_loss": {"d0": 1.0, "pl_d0": 30.0, "alpha": 2.76, "sigma": 4.0},
      "topology":  {"n_users": 6, "d_min": 1.0, "d_max": 10.0,
                    "battery_min": 0.0, "battery_max": 0.0, "eta": 1.0},
      "sweep":     {"parameter": "p_max", "grid": [0.001, 0.002],
                    "realizations": 200, "algorithms": ["OPT", "MFSA", "ETA"],
                    "seed": 1, "tol": 1e-8, "opt_cap": 8,
                    "common_draws": true}
    }

Every section and key is optional; missing values take the defaults of the
corresponding dataclass. Unknown keys are rejected.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .channel import PathLossParams, TopologyParams
from .model import SystemParams


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemParams = field(default_factory=SystemParams)
    path_loss: PathLossParams = field(default_factory=PathLossParams)
    topology: TopologyParams = field(default_factory=TopologyParams)

    def to_dict(self) -> dict:
        return {
            "system": dataclasses.asdict(self.system),
            "path_loss": dataclasses.asdict(self.path_loss),
            "topology": dataclasses.asdict(self.topology),
        }


_SECTIONS = {"system": SystemParams, "path_loss": PathLossParams, "topology": TopologyParams}


def build_section(name: str, cls, raw) -> object:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{name}.{key}: unknown key")
    try:
        return cls(**raw)
    except ValueError as exc:
        raise ConfigError(f"{name}.{exc}") from None
    except TypeError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def experiment_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: must be a JSON object")
    unknown = set(raw) - set(_SECTIONS) - {"sweep"}
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown section")
    return ExperimentConfig(**{k: build_section(k, cls, raw.get(k)) for k, cls in _SECTIONS.items()})


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None


def load_experiment(path) -> ExperimentConfig:
    return experiment_from_dict(read_json(path))
