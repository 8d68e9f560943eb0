"""System model for a full-duplex wireless powered network.

Time is normalized to one scheduling frame, so an energy quantity (joules per
frame) is numerically a power and slot lengths are fractions of the frame.
Throughput is reported in bits per frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """Network-wide constants.

    p_h        HAP transmit power [W]
    p_max      per-user maximum transmit power [W]
    bandwidth  channel bandwidth [Hz]
    noise_psd  noise power spectral density [W/Hz]
    beta       residual self-interference coefficient at the HAP
    """

    p_h: float = 1.0
    p_max: float = 5e-3
    bandwidth: float = 1e6
    noise_psd: float = 1e-17
    beta: float = 1e-12
    frame_length: float = 1.0

    def __post_init__(self):
        _require(self.p_h >= 0, "p_h", "must be >= 0")
        _require(self.p_max > 0, "p_max", "must be > 0")
        _require(self.bandwidth > 0, "bandwidth", "must be > 0")
        _require(self.noise_psd >= 0, "noise_psd", "must be >= 0")
        _require(0 <= self.beta <= 1, "beta", "must lie in [0, 1]")
        _require(self.frame_length == 1, "frame_length", "is fixed at 1")

    @property
    def interference_plus_noise(self) -> float:
        return self.noise_psd * self.bandwidth + self.beta * self.p_h


@dataclass(frozen=True)
class UserParams:
    """Physical state of one user: uplink gain ``g``, downlink gain ``h``,
    harvesting efficiency ``eta`` and initial battery energy ``battery``."""

    id: int
    g: float
    h: float
    eta: float = 1.0
    battery: float = 0.0

    def __post_init__(self):
        _require(self.g > 0, "g", "must be > 0")
        _require(self.h > 0, "h", "must be > 0")
        _require(0 < self.eta <= 1, "eta", "must lie in (0, 1]")
        _require(self.battery >= 0, "battery", "must be >= 0")


@dataclass(frozen=True)
class Slot:
    user_id: int
    tau: float
    power: float


@dataclass(frozen=True)
class Schedule:
    """Slots in transmission (time) order, preceded by an idle prefix."""

    slots: tuple[Slot, ...] = ()
    idle_prefix: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))

    @property
    def order(self) -> list[int]:
        return [s.user_id for s in self.slots]

    @property
    def total_time(self) -> float:
        return self.idle_prefix + math.fsum(s.tau for s in self.slots)

    def slot_for(self, user_id: int) -> Slot | None:
        for s in self.slots:
            if s.user_id == user_id:
                return s
        return None


@dataclass(frozen=True)
class Violation:
    """A violated constraint. ``magnitude`` is the amount by which the
    constraint is exceeded, in the constraint's own units."""

    constraint: str
    user_id: int | None
    magnitude: float


@dataclass(frozen=True)
class ThroughputReport:
    per_user_rate: tuple[tuple[int, float], ...]
    sum_throughput: float
    feasible: bool
    violations: tuple[Violation, ...] = field(default_factory=tuple)


def _require(cond: bool, name: str, msg: str):
    if not cond:
        raise ValueError(f"{name}: {msg}")


def harvest_rate(user: UserParams, sys: SystemParams) -> float:
    """Energy harvesting rate ``eta * h * P_h`` [W]."""
    return user.eta * user.h * sys.p_h


def snr_coefficient(user: UserParams, sys: SystemParams) -> float:
    """Received SNR per watt of transmit power, ``g / (N_o W + beta P_h)``."""
    denom = sys.interference_plus_noise
    if denom <= 0:
        raise ValueError("noise-plus-interference power is zero; SNR coefficient undefined")
    return user.g / denom


def rate(tau: float, power: float, k: float, bandwidth: float) -> float:
    """Bits delivered in a slot of length ``tau`` at ``power``."""
    if tau == 0:
        return 0.0
    return bandwidth * tau * math.log2(1.0 + k * power)


def max_rate(user: UserParams, sys: SystemParams) -> float:
    """Rate at full transmit power, in bits per second."""
    return sys.bandwidth * math.log2(1.0 + snr_coefficient(user, sys) * sys.p_max)


def user_map(users: Iterable[UserParams]) -> dict[int, UserParams]:
    out = {}
    for u in users:
        if u.id in out:
            raise ValueError(f"duplicate user id {u.id}")
        out[u.id] = u
    return out


def rate_order(users: Sequence[UserParams], sys: SystemParams) -> list[UserParams]:
    """Users by decreasing maximum rate; ties broken by ascending id.

    Sorting on the SNR coefficient is equivalent to sorting on the max rate
    and avoids log rounding collapsing near-ties.
    """
    return sorted(users, key=lambda u: (-snr_coefficient(u, sys), u.id))


def constraint_violations(
    schedule: Schedule,
    users: dict[int, UserParams],
    sys: SystemParams,
    tol: float = DEFAULT_TOL,
) -> list[Violation]:
    """Check a schedule against energy causality, the power cap, the frame
    length and sign constraints.

    Tolerances are relative to each constraint's natural scale: available
    energy for causality, ``p_max`` for power, the frame for time.
    """
    out = []
    seen = set()
    elapsed = schedule.idle_prefix
    if schedule.idle_prefix < -tol:
        out.append(Violation("idle_nonnegative", None, -schedule.idle_prefix))
    for s in schedule.slots:
        if s.user_id not in users:
            raise KeyError(f"unknown user id {s.user_id}")
        if s.user_id in seen:
            out.append(Violation("single_slot", s.user_id, 1.0))
        seen.add(s.user_id)
        u = users[s.user_id]
        if s.tau < -tol:
            out.append(Violation("tau_nonnegative", s.user_id, -s.tau))
        if s.power < -tol * sys.p_max:
            out.append(Violation("power_nonnegative", s.user_id, -s.power))
        elapsed += max(s.tau, 0.0)
        available = u.battery + harvest_rate(u, sys) * elapsed
        consumed = s.power * s.tau
        if consumed - available > tol * max(available, consumed):
            out.append(Violation("energy_causality", s.user_id, consumed - available))
        if s.power - sys.p_max > tol * sys.p_max:
            out.append(Violation("max_power", s.user_id, s.power - sys.p_max))
    total = schedule.total_time
    if total - sys.frame_length > tol:
        out.append(Violation("frame_length", None, total - sys.frame_length))
    return out


def evaluate(
    schedule: Schedule,
    users: Sequence[UserParams],
    sys: SystemParams,
    tol: float = DEFAULT_TOL,
) -> ThroughputReport:
    """Per-user and total throughput of ``schedule`` plus its feasibility."""
    by_id = user_map(users)
    violations = constraint_violations(schedule, by_id, sys, tol)
    per_user = []
    for s in schedule.slots:
        k = snr_coefficient(by_id[s.user_id], sys)
        per_user.append((s.user_id, rate(max(s.tau, 0.0), max(s.power, 0.0), k, sys.bandwidth)))
    total = math.fsum(r for _, r in per_user)
    return ThroughputReport(
        per_user_rate=tuple(per_user),
        sum_throughput=total,
        feasible=not violations,
        violations=tuple(violations),
    )


def schedule_to_dict(schedule: Schedule) -> dict:
    return {
        "idle_prefix": schedule.idle_prefix,
        "slots": [{"user_id": s.user_id, "tau": s.tau, "power": s.power} for s in schedule.slots],
    }


def schedule_from_dict(d: dict) -> Schedule:
    try:
        slots = tuple(Slot(int(s["user_id"]), float(s["tau"]), float(s["power"])) for s in d["slots"])
        return Schedule(slots=slots, idle_prefix=float(d.get("idle_prefix", 0.0)))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"schedule: malformed ({exc})") from None
