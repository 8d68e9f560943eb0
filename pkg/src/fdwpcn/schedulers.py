"""Heuristic schedulers: maximum-rate-first (MFSA) and equal time (ETA)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .model import (
    Schedule,
    Slot,
    SystemParams,
    ThroughputReport,
    UserParams,
    evaluate,
    harvest_rate,
    rate,
    rate_order,
    snr_coefficient,
)


@dataclass(frozen=True)
class PairwiseCase:
    """One candidate split of the available time between the higher-rate
    user ``high`` and the next user ``low``. Allocations are (tau, power)."""

    case_id: int
    high: tuple[float, float]
    low: tuple[float, float]
    pair_throughput: float


@dataclass(frozen=True)
class PairEvaluation:
    high_id: int
    low_id: int
    available: float
    cases: tuple[PairwiseCase, ...]
    chosen: int


@dataclass(frozen=True)
class MfsaRun:
    schedule: Schedule
    report: ThroughputReport
    evaluations: tuple[PairEvaluation, ...] = field(default_factory=tuple)

    @property
    def pair_evaluations(self) -> int:
        return len(self.evaluations)


def _pair_cases(hi: UserParams, lo: UserParams, t_a: float, tau_min: float,
                sys: SystemParams) -> list[PairwiseCase]:
    p_max = sys.p_max
    k_hi, k_lo = snr_coefficient(hi, sys), snr_coefficient(lo, sys)
    c_hi, c_lo = harvest_rate(hi, sys), harvest_rate(lo, sys)
    e_hi = hi.battery + c_hi * t_a

    def total(h, l):
        return rate(h[0], h[1], k_hi, sys.bandwidth) + rate(l[0], l[1], k_lo, sys.bandwidth)

    # case 1: high user at full power for tau_min, low user takes the rest
    tau_lo = t_a - tau_min
    case1 = ((tau_min, p_max), (tau_lo, min((lo.battery + c_lo * tau_lo) / tau_lo, p_max)))

    # case 2: low user at full power for as long as its energy lasts
    sustain = math.inf if p_max <= c_lo else lo.battery / (p_max - c_lo)
    tau_lo = min(sustain, t_a - tau_min)
    tau_hi = t_a - tau_lo
    case2 = ((tau_hi, e_hi / tau_hi if tau_hi > 0 else 0.0),
             (tau_lo, p_max if tau_lo > 0 else 0.0))

    # case 3: high user alone
    case3 = ((t_a, e_hi / t_a), (0.0, 0.0))

    return [PairwiseCase(i + 1, h, l, total(h, l)) for i, (h, l) in enumerate((case1, case2, case3))]


def mfsa_run(users: Sequence[UserParams], sys: SystemParams) -> MfsaRun:
    """Maximum-rate-first scheduling with the per-pair case trace.

    Users are taken in decreasing order of full-power rate and placed from
    the end of the frame backwards. Each step compares three ways of sharing
    the remaining time between the current user and the next one.
    """
    ranked = rate_order(users, sys)
    if not ranked:
        raise ValueError("users: must be nonempty")
    p_max = sys.p_max
    t_a = 1.0
    backward: list[Slot] = []   # latest slot first
    evaluations = []

    i = 0
    while True:
        hi = ranked[i]
        e_hi = hi.battery + harvest_rate(hi, sys) * t_a
        if i == len(ranked) - 1:
            # last candidate takes whatever time is left
            backward.append(Slot(hi.id, t_a, min(p_max, e_hi / t_a)))
            break
        tau_min = e_hi / p_max
        if tau_min >= t_a:
            backward.append(Slot(hi.id, t_a, p_max))
            break
        lo = ranked[i + 1]
        cases = _pair_cases(hi, lo, t_a, tau_min, sys)
        best = max(cases, key=lambda cs: (cs.pair_throughput, -cs.case_id))
        evaluations.append(PairEvaluation(hi.id, lo.id, t_a, tuple(cases), best.case_id))
        if best.case_id in (2, 3):
            backward.append(Slot(hi.id, *best.high))
            if best.low[0] > 0:
                backward.append(Slot(lo.id, *best.low))
            break
        backward.append(Slot(hi.id, *best.high))
        t_a -= best.high[0]
        if i + 1 == len(ranked) - 1:
            backward.append(Slot(lo.id, *best.low))
            break
        i += 1

    schedule = Schedule(slots=tuple(reversed(backward)))
    return MfsaRun(schedule, evaluate(schedule, users, sys), tuple(evaluations))


def mfsa(users: Sequence[UserParams], sys: SystemParams) -> tuple[Schedule, ThroughputReport]:
    run = mfsa_run(users, sys)
    return run.schedule, run.report


def eta(users: Sequence[UserParams], sys: SystemParams) -> tuple[Schedule, ThroughputReport]:
    """Equal time allocation with the highest-rate user transmitting last.

    Each user spends all the energy it has by the end of its own slot,
    capped at full power.
    """
    n = len(users)
    if n == 0:
        raise ValueError("users: must be nonempty")
    tau = 1.0 / n
    slots = []
    for m, u in enumerate(reversed(rate_order(users, sys)), start=1):
        energy = u.battery + harvest_rate(u, sys) * (m / n)
        slots.append(Slot(u.id, tau, min(sys.p_max, energy / tau)))
    schedule = Schedule(slots=tuple(slots))
    return schedule, evaluate(schedule, users, sys)
