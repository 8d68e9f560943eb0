"""Schedule auditing: constraint feasibility and the structural conditions
every throughput-optimal schedule satisfies.

Kept independent of ``model.evaluate`` so the two can cross-check each other.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Schedule, Slot, SystemParams, UserParams, Violation, snr_coefficient

FEASIBILITY_TOL = 1e-9
CONDITION_TOL = 1e-6


def _arrays(schedule: Schedule, users: Sequence[UserParams], sys: SystemParams):
    by_id = {u.id: u for u in users}
    ids = [s.user_id for s in schedule.slots]
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise KeyError(f"unknown user id {missing[0]}")
    tau = np.array([s.tau for s in schedule.slots], dtype=float)
    power = np.array([s.power for s in schedule.slots], dtype=float)
    battery = np.array([by_id[i].battery for i in ids], dtype=float)
    harvest = np.array([by_id[i].eta * by_id[i].h * sys.p_h for i in ids], dtype=float)
    end = schedule.idle_prefix + np.cumsum(np.clip(tau, 0.0, None))
    available = battery + harvest * end
    return ids, tau, power, available


def check_feasible(schedule: Schedule, users: Sequence[UserParams], sys: SystemParams,
                   tol: float = FEASIBILITY_TOL) -> list[Violation]:
    """All constraint violations of ``schedule``; empty means feasible.

    ``tol`` is relative: to available energy for causality, to ``p_max``
    for power, to the frame for time.
    """
    ids, tau, power, available = _arrays(schedule, users, sys)
    out = []
    if schedule.idle_prefix < -tol:
        out.append(Violation("idle_nonnegative", None, -schedule.idle_prefix))
    seen = set()
    consumed = power * tau
    for i, uid in enumerate(ids):
        if uid in seen:
            out.append(Violation("single_slot", uid, 1.0))
        seen.add(uid)
        if tau[i] < -tol:
            out.append(Violation("tau_nonnegative", uid, -tau[i]))
        if power[i] < -tol * sys.p_max:
            out.append(Violation("power_nonnegative", uid, -power[i]))
        excess = consumed[i] - available[i]
        if excess > tol * max(available[i], consumed[i]):
            out.append(Violation("energy_causality", uid, excess))
        if power[i] - sys.p_max > tol * sys.p_max:
            out.append(Violation("max_power", uid, power[i] - sys.p_max))
    over = schedule.idle_prefix + np.sum(tau) - sys.frame_length
    if over > tol:
        out.append(Violation("frame_length", None, float(over)))
    return out


@dataclass(frozen=True)
class Condition:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ConditionReport:
    conditions: tuple[Condition, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> list[str]:
        return [c.name for c in self.conditions if not c.passed]


def check_optimality_conditions(schedule: Schedule, users: Sequence[UserParams],
                                sys: SystemParams, tol: float = CONDITION_TOL) -> ConditionReport:
    """Necessary conditions of an optimal schedule.

    - no idle time before the first slot
    - the slots fill the whole frame
    - every active user runs at full power or spends all available energy
    - no inactive user has a strictly higher full-power rate than an active one
    - a maximum-rate user is active

    A user is active when its slot is longer than ``tol``. Power and energy
    tightness are judged relative to ``p_max`` and the available energy.
    """
    ids, tau, power, available = _arrays(schedule, users, sys)
    conds = []

    conds.append(Condition("idle_prefix", schedule.idle_prefix <= tol,
                           f"idle prefix {schedule.idle_prefix:.3g}"))

    total = float(np.sum(tau))
    conds.append(Condition("full_frame", abs(total - 1.0) <= tol, f"slot total {total:.12g}"))

    loose = []
    for i, uid in enumerate(ids):
        if tau[i] <= tol:
            continue
        at_cap = power[i] >= sys.p_max * (1.0 - tol)
        slack = available[i] - power[i] * tau[i]
        if not at_cap and slack > tol * available[i]:
            loose.append(uid)
    conds.append(Condition("power_or_energy_tight", not loose,
                           f"users neither at p_max nor energy-tight: {loose}" if loose else ""))

    active = {uid for i, uid in enumerate(ids) if tau[i] > tol}
    k = {u.id: snr_coefficient(u, sys) for u in users}
    if active:
        weakest_active = min(k[i] for i in active)
        skipped = sorted(u.id for u in users if u.id not in active and k[u.id] > weakest_active)
    else:
        skipped = sorted(k)
    conds.append(Condition("rate_support", not skipped,
                           f"inactive users outranking an active one: {skipped}" if skipped else ""))

    k_best = max(k.values())
    top = [uid for uid, kv in k.items() if kv == k_best]
    conds.append(Condition("max_rate_active", any(uid in active for uid in top),
                           f"maximum-rate users {top}"))
    return ConditionReport(tuple(conds))


def fold_idle_prefix(schedule: Schedule) -> Schedule:
    """Merge the idle prefix into the first slot, keeping that slot's energy."""
    if not schedule.slots or schedule.idle_prefix <= 0:
        return schedule
    first, rest = schedule.slots[0], schedule.slots[1:]
    tau = first.tau + schedule.idle_prefix
    merged = Slot(first.user_id, tau, first.power * first.tau / tau)
    return Schedule(slots=(merged, *rest), idle_prefix=0.0)


def extend_to_full_frame(schedule: Schedule) -> Schedule:
    """Give unused frame time to the first slot at constant energy."""
    spare = 1.0 - schedule.total_time
    if spare <= 0:
        return schedule
    return fold_idle_prefix(Schedule(slots=schedule.slots, idle_prefix=schedule.idle_prefix + spare))
