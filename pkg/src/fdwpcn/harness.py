"""Monte Carlo comparison of OPT, MFSA and ETA over a swept parameter.

Every (grid point, realization) cell draws its network from a seed derived
only from the master seed and the realization index, and all algorithms run
on that same network, so comparisons are paired. By default the grid index
is left out of the seed: realization ``r`` is the same network at every grid
point (common random numbers), which keeps sampling noise out of the shape
of each curve. ``common_draws=False`` mixes the grid index in as well.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exhaustive, ptap
from .channel import generate
from .config import ConfigError, ExperimentConfig, experiment_from_dict
from .schedulers import eta, mfsa

log = logging.getLogger(__name__)

ALGORITHMS = ("OPT", "MFSA", "ETA")
PARAMETERS = ("p_max", "p_h", "n_users")
CSV_COLUMNS = ("sweep_param", "value", "algorithm", "mean_throughput_bits_per_frame",
               "stddev", "n_realizations")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    grid: tuple[float, ...]
    realizations: int = 200
    algorithms: tuple[str, ...] = ALGORITHMS
    base: ExperimentConfig = field(default_factory=ExperimentConfig)
    master_seed: int = 1
    tol: float = ptap.DEFAULT_PTAP_TOL
    opt_cap: int = exhaustive.DEFAULT_CAP
    common_draws: bool = True

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(self.grid))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.parameter not in PARAMETERS:
            raise ValueError(f"parameter: must be one of {', '.join(PARAMETERS)}")
        if not self.grid:
            raise ValueError("grid: must be nonempty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid: must be strictly increasing")
        if self.parameter == "n_users":
            if any(int(v) != v or v < 1 for v in self.grid):
                raise ValueError("grid: user counts must be positive integers")
            object.__setattr__(self, "grid", tuple(int(v) for v in self.grid))
        if self.realizations < 1:
            raise ValueError("realizations: must be >= 1")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms or len(set(self.algorithms)) != len(self.algorithms):
            raise ValueError(f"algorithms: must be distinct entries of {', '.join(ALGORITHMS)}")
        if self.tol <= 0:
            raise ValueError("tol: must be > 0")
        if "OPT" in self.algorithms and self.max_users > self.opt_cap:
            raise exhaustive.InstanceTooLarge(
                f"algorithms: OPT needs at most {self.opt_cap} users, sweep reaches {self.max_users}")

    @property
    def max_users(self) -> int:
        if self.parameter == "n_users":
            return max(self.grid)
        return self.base.topology.n_users

    def config_at(self, gi: int) -> ExperimentConfig:
        v = self.grid[gi]
        if self.parameter == "n_users":
            return dataclasses.replace(self.base, topology=dataclasses.replace(self.base.topology, n_users=v))
        return dataclasses.replace(self.base, system=dataclasses.replace(self.base.system, **{self.parameter: v}))

    def to_dict(self) -> dict:
        out = self.base.to_dict()
        out["sweep"] = {
            "parameter": self.parameter,
            "grid": list(self.grid),
            "realizations": self.realizations,
            "algorithms": list(self.algorithms),
            "seed": self.master_seed,
            "tol": self.tol,
            "opt_cap": self.opt_cap,
            "common_draws": self.common_draws,
        }
        return out

    def seed(self, gi: int, ri: int) -> int:
        return cell_seed(self.master_seed, None if self.common_draws else gi, ri)


def sweep_from_dict(raw: dict) -> SweepSpec:
    base = experiment_from_dict(raw)
    sw = raw.get("sweep")
    if not isinstance(sw, dict):
        raise ConfigError("sweep: section required")
    keys = {"parameter", "grid", "realizations", "algorithms", "seed", "tol", "opt_cap",
            "common_draws"}
    for k in sw:
        if k not in keys:
            raise ConfigError(f"sweep.{k}: unknown key")
    for k in ("parameter", "grid"):
        if k not in sw:
            raise ConfigError(f"sweep.{k}: required")
    kwargs = {"parameter": sw["parameter"], "grid": sw["grid"], "base": base}
    for src, dst in (("realizations", "realizations"), ("algorithms", "algorithms"),
                     ("seed", "master_seed"), ("tol", "tol"), ("opt_cap", "opt_cap"),
                     ("common_draws", "common_draws")):
        if src in sw:
            kwargs[dst] = sw[src]
    try:
        return SweepSpec(**kwargs)
    except exhaustive.InstanceTooLarge:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"sweep.{exc}") from None


def cell_seed(master_seed: int, gi: int | None, ri: int) -> int:
    """Stable per-cell seed; independent of algorithms and execution order.
    ``gi=None`` gives the seed shared by all grid points."""
    key = [master_seed, ri] if gi is None else [master_seed, gi, ri]
    return int(np.random.SeedSequence(key).generate_state(1, dtype=np.uint64)[0])


def run_cell(spec: SweepSpec, gi: int, ri: int) -> tuple[dict[str, float], dict[str, float]]:
    """Throughput of each algorithm on one realization, plus runtimes."""
    cfg = spec.config_at(gi)
    inst = generate(cfg.topology, cfg.system, cfg.path_loss, spec.seed(gi, ri))
    values, times = {}, {}
    for algo in spec.algorithms:
        t0 = time.perf_counter()
        if algo == "OPT":
            _, report = exhaustive.solve_opt(inst.users, inst.sys, spec.tol, spec.opt_cap)
        elif algo == "MFSA":
            _, report = mfsa(inst.users, inst.sys)
        else:
            _, report = eta(inst.users, inst.sys)
        times[algo] = time.perf_counter() - t0
        values[algo] = report.sum_throughput
    return values, times


def _run_grid_point(spec: SweepSpec, gi: int):
    samples = {a: np.empty(spec.realizations) for a in spec.algorithms}
    runtime = dict.fromkeys(spec.algorithms, 0.0)
    for ri in range(spec.realizations):
        values, times = run_cell(spec, gi, ri)
        for a in spec.algorithms:
            samples[a][ri] = values[a]
            runtime[a] += times[a]
    return gi, samples, runtime


@dataclass
class SweepResult:
    spec: SweepSpec
    samples: dict[tuple[int, str], np.ndarray]   # (grid index, algorithm) -> per-realization values
    runtime: dict[str, float]

    def mean(self, gi: int, algo: str) -> float:
        return float(np.mean(self.samples[gi, algo]))

    def std(self, gi: int, algo: str) -> float:
        x = self.samples[gi, algo]
        return float(np.std(x, ddof=1)) if x.size > 1 else 0.0

    def curve(self, algo: str) -> np.ndarray:
        return np.array([self.mean(gi, algo) for gi in range(len(self.spec.grid))])

    def rows(self) -> list[tuple]:
        out = []
        for gi, v in enumerate(self.spec.grid):
            for a in self.spec.algorithms:
                out.append((self.spec.parameter, v, a, self.mean(gi, a), self.std(gi, a),
                            int(self.samples[gi, a].size)))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows():
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        spec = self.spec
        return {
            "config": spec.to_dict(),
            "seeds": [[spec.seed(gi, ri) for ri in range(spec.realizations)]
                      for gi in range(len(spec.grid))],
            "results": [
                {"sweep_param": p, "value": v, "algorithm": a,
                 "mean_throughput_bits_per_frame": m, "stddev": s, "n_realizations": n}
                for p, v, a, m, s, n in self.rows()
            ],
            "samples": {a: [self.samples[gi, a].tolist() for gi in range(len(spec.grid))]
                        for a in spec.algorithms},
            "runtime_seconds": self.runtime,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SweepResult":
        spec = sweep_from_dict(d["config"])
        samples = {(gi, a): np.asarray(vals[gi], dtype=float)
                   for a, vals in d["samples"].items() for gi in range(len(spec.grid))}
        return cls(spec, samples, dict(d.get("runtime_seconds", {})))

    def write(self, prefix) -> tuple[Path, Path]:
        prefix = Path(prefix)
        csv_path = prefix.with_name(prefix.name + ".csv")
        json_path = prefix.with_name(prefix.name + ".json")
        csv_path.write_text(self.to_csv())
        json_path.write_text(self.to_json())
        return csv_path, json_path


def run_sweep(spec: SweepSpec, jobs: int = 1, progress=None) -> SweepResult:
    """Run every cell of the sweep. ``jobs > 1`` spreads grid points over
    worker processes; results do not depend on ``jobs``."""
    samples, runtime = {}, dict.fromkeys(spec.algorithms, 0.0)

    def collect(gi, s, rt):
        for a in spec.algorithms:
            samples[gi, a] = s[a]
            runtime[a] += rt[a]
        msg = ", ".join(f"{a}={np.mean(s[a]):.6g}" for a in spec.algorithms)
        log.info("%s=%s: %s", spec.parameter, spec.grid[gi], msg)
        if progress is not None:
            progress(gi, spec.grid[gi], {a: float(np.mean(s[a])) for a in spec.algorithms})

    indices = range(len(spec.grid))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for gi, s, rt in pool.map(_run_grid_point, [spec] * len(spec.grid), indices):
                collect(gi, s, rt)
    else:
        for gi in indices:
            collect(*_run_grid_point(spec, gi))
    return SweepResult(spec, samples, runtime)


def default_sweeps(base: ExperimentConfig | None = None, realizations: int = 200,
                   master_seed: int = 1) -> dict[str, SweepSpec]:
    """The three standard studies: throughput versus P_max, P_h and N.

    The user-count grid starts at two; with one user every algorithm gives
    that user the whole frame, so there is nothing to compare.
    """
    base = base or ExperimentConfig()
    six = dataclasses.replace(base, topology=dataclasses.replace(base.topology, n_users=6))
    pmax_base = dataclasses.replace(six, system=dataclasses.replace(six.system, p_h=1.0))
    return {
        "p_max": SweepSpec("p_max", tuple(i * 1e-3 for i in range(1, 11)), realizations,
                           base=pmax_base, master_seed=master_seed),
        "p_h": SweepSpec("p_h", tuple(0.5 * i for i in range(1, 9)), realizations,
                         base=six, master_seed=master_seed),
        "n_users": SweepSpec("n_users", tuple(range(2, 7)), realizations,
                             base=base, master_seed=master_seed),
    }
