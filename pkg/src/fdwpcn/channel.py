"""Random network realizations: log-distance path loss with log-normal
shadowing and Rayleigh small-scale fading."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .model import SystemParams, UserParams, _require


@dataclass(frozen=True)
class PathLossParams:
    d0: float = 1.0
    pl_d0: float = 30.0
    alpha: float = 2.76
    sigma: float = 4.0

    def __post_init__(self):
        _require(self.d0 > 0, "d0", "must be > 0")
        _require(self.alpha > 0, "alpha", "must be > 0")
        _require(self.sigma >= 0, "sigma", "must be >= 0")


@dataclass(frozen=True)
class TopologyParams:
    """User placement, initial batteries and harvesting efficiency.

    Distances are uniform in ``[d_min, d_max]``. Batteries are uniform in
    ``[battery_min, battery_max]``; equal bounds give a constant. Every user
    gets efficiency ``eta``.
    """

    n_users: int = 6
    d_min: float = 1.0
    d_max: float = 10.0
    battery_min: float = 0.0
    battery_max: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        _require(isinstance(self.n_users, int) and self.n_users >= 1, "n_users", "must be an integer >= 1")
        _require(0 < self.d_min <= self.d_max, "d_min", "must satisfy 0 < d_min <= d_max")
        _require(0 <= self.battery_min <= self.battery_max, "battery_min",
                 "must satisfy 0 <= battery_min <= battery_max")
        _require(0 < self.eta <= 1, "eta", "must lie in (0, 1]")


@dataclass(frozen=True)
class NetworkInstance:
    sys: SystemParams
    users: tuple[UserParams, ...]
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "system": asdict(self.sys),
            "users": [asdict(u) for u in self.users],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkInstance":
        return cls(
            sys=SystemParams(**d["system"]),
            users=tuple(UserParams(**u) for u in d["users"]),
            seed=d.get("seed"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "NetworkInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))


def path_loss_db(d, p: PathLossParams, z=0.0):
    """Path loss in dB at distance ``d`` with shadowing ``z`` (dB)."""
    d = np.asarray(d, dtype=float)
    if np.any(d < p.d0):
        raise ValueError(f"distance below reference distance d0={p.d0}")
    out = p.pl_d0 + 10.0 * p.alpha * np.log10(d / p.d0) + z
    return float(out) if out.ndim == 0 else out


def draw_gain(d, p: PathLossParams, rng: np.random.Generator, z=None, size=None):
    """Linear power gain with Rayleigh fading around the shadowed path loss.

    The power of a Rayleigh amplitude is exponential, so the gain is the
    large-scale mean times an Exp(1) draw. ``z`` pins the shadowing; by
    default a fresh N(0, sigma^2) value is drawn per sample.
    """
    if z is None:
        z = rng.normal(0.0, p.sigma, size=size)
    mean = 10.0 ** (-np.asarray(path_loss_db(d, p, z)) / 10.0)
    out = mean * rng.exponential(1.0, size=size)
    return float(out) if np.ndim(out) == 0 else out


def generate(topo: TopologyParams, sys: SystemParams, plp: PathLossParams,
             seed: int) -> NetworkInstance:
    """Draw one network. Users are drawn one after another from a single
    stream, so a larger network with the same seed extends a smaller one."""
    rng = np.random.default_rng(seed)
    users = []
    for i in range(topo.n_users):
        d = rng.uniform(topo.d_min, topo.d_max)
        g = draw_gain(d, plp, rng)
        h = draw_gain(d, plp, rng)
        b = rng.uniform(topo.battery_min, topo.battery_max)
        users.append(UserParams(id=i + 1, g=g, h=h, eta=topo.eta, battery=b))
    return NetworkInstance(sys=sys, users=tuple(users), seed=seed)
