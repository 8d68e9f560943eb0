"""Exact optimum by enumerating every transmission order."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import ptap
from .model import Schedule, SystemParams, ThroughputReport, UserParams, evaluate, user_map

DEFAULT_CAP = 8


class InstanceTooLarge(ValueError):
    pass


def order_count(n: int, cap: int | None = None) -> int:
    if n < 0:
        raise ValueError("n: must be >= 0")
    if cap is not None and n > cap:
        raise InstanceTooLarge(f"{n} users exceeds the enumeration cap of {cap}")
    return math.factorial(n)


@dataclass(frozen=True)
class OrderSearch:
    solution: ptap.PtapSolution
    orders: np.ndarray       # user ids, one row per order, lexicographic
    objectives: np.ndarray   # bits per frame, aligned with ``orders``
    ptap_solves: int


def search_orders(users: Sequence[UserParams], sys: SystemParams,
                  tol: float = ptap.DEFAULT_PTAP_TOL, cap: int = DEFAULT_CAP) -> OrderSearch:
    """Solve the allocation problem for all N! orders and keep the best.

    Orders whose objective is within ``tol`` (relative) of the maximum count
    as tied; the lexicographically smallest user-id sequence wins.
    """
    users = sorted(user_map(users).values(), key=lambda u: u.id)
    n = len(users)
    if n == 0:
        raise ValueError("users: must be nonempty")
    order_count(n, cap)
    a, b, c = ptap.normalized_arrays(users, sys)
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    status, obj, gap, iters, taus, us = ptap._solve_orders(
        a, b, c, perms, tol, ptap.MAX_NEWTON, ptap.SNAP_TAU)
    bad = np.flatnonzero(status != 0)
    if bad.size:
        ptap._raise_for(int(status[bad[0]]), int(iters[bad[0]]))

    best = obj.max()
    k = int(np.flatnonzero(obj >= best - tol * best)[0])
    ids = np.array([u.id for u in users])
    sol = ptap._solution(ids[perms[k]].tolist(), taus[k].copy(), us[k].copy(),
                         obj[k], gap[k], iters[k], sys)
    return OrderSearch(
        solution=sol,
        orders=ids[perms],
        objectives=obj * sys.bandwidth / ptap.LN2,
        ptap_solves=len(perms),
    )


def solve_opt(users: Sequence[UserParams], sys: SystemParams,
              tol: float = ptap.DEFAULT_PTAP_TOL,
              cap: int = DEFAULT_CAP) -> tuple[Schedule, ThroughputReport]:
    """Throughput-optimal schedule over all orders, slot lengths and powers."""
    search = search_orders(users, sys, tol, cap)
    schedule = ptap.to_schedule(search.solution)
    return schedule, evaluate(schedule, users, sys)
