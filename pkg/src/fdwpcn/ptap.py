"""Optimal power and time allocation for a fixed transmission order.

The problem is solved in slot lengths ``tau`` and normalized energies
``u = P * tau / P_max``. In these variables the throughput
``tau * log(1 + a * u / tau)`` (with ``a = k * P_max``) is a jointly concave
perspective function and every constraint is linear:

    u_i >= 0
    u_i <= tau_i                                  (power cap)
    u_i <= b_i + c_i * sum_{j <= i} tau_j         (energy causality)
    sum_i tau_i <= 1                              (frame length)

with ``b = B / P_max`` and ``c = C / P_max``. A log-barrier interior method
with damped Newton steps finds the optimum; the barrier parameter gives a
duality gap bound ``m / t`` that certifies the result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .model import Schedule, Slot, SystemParams, UserParams, harvest_rate, snr_coefficient

LN2 = math.log(2.0)
MAX_NEWTON = 500
SNAP_TAU = 1e-9
DEFAULT_PTAP_TOL = 1e-8

_OK, _MAX_ITER, _NUMERIC, _NO_INTERIOR = 0, 1, 2, 3
_MU = 20.0
_NEWTON_EPS = 1e-10


class PtapError(RuntimeError):
    pass


class PtapConvergenceError(PtapError):
    pass


@dataclass(frozen=True)
class PtapInstance:
    ordered_users: tuple[UserParams, ...]
    sys: SystemParams

    def __post_init__(self):
        object.__setattr__(self, "ordered_users", tuple(self.ordered_users))
        if not self.ordered_users:
            raise ValueError("ordered_users: must be nonempty")
        ids = [u.id for u in self.ordered_users]
        if len(set(ids)) != len(ids):
            raise ValueError("ordered_users: duplicate user ids")


@dataclass(frozen=True)
class PtapSolution:
    order: tuple[int, ...]
    taus: np.ndarray
    energies: np.ndarray
    powers: np.ndarray
    objective: float
    gap_certificate: float
    iterations: int


@njit(cache=True)
def _objective(a, tau, u):
    f = 0.0
    for p in range(tau.shape[0]):
        if tau[p] > 0.0:
            f += tau[p] * math.log1p(a[p] * u[p] / tau[p])
    return f


@njit(cache=True)
def _barrier_value(a, b, c, tau, u, t):
    """-t*f - sum(log slack), or +inf outside the domain."""
    n = tau.shape[0]
    val = 0.0
    prefix = 0.0
    for p in range(n):
        prefix += tau[p]
        s1 = u[p]
        s2 = tau[p] - u[p]
        s3 = b[p] + c[p] * prefix - u[p]
        if s1 <= 0.0 or s2 <= 0.0 or s3 <= 0.0:
            return np.inf
        val -= math.log(s1) + math.log(s2) + math.log(s3)
        val -= t * tau[p] * math.log1p(a[p] * u[p] / tau[p])
    s4 = 1.0 - prefix
    if s4 <= 0.0:
        return np.inf
    return val - math.log(s4)


@njit(cache=True)
def _cholesky_solve(H, rhs, out):
    """Solve H out = rhs in place for symmetric positive definite H.

    Returns False if H is not numerically positive definite.
    """
    m = H.shape[0]
    for j in range(m):
        d = H[j, j]
        for k in range(j):
            d -= H[j, k] * H[j, k]
        if d <= 0.0:
            return False
        d = math.sqrt(d)
        H[j, j] = d
        for i in range(j + 1, m):
            v = H[i, j]
            for k in range(j):
                v -= H[i, k] * H[j, k]
            H[i, j] = v / d
    for i in range(m):
        v = rhs[i]
        for k in range(i):
            v -= H[i, k] * out[k]
        out[i] = v / H[i, i]
    for i in range(m - 1, -1, -1):
        v = out[i]
        for k in range(i + 1, m):
            v -= H[k, i] * out[k]
        out[i] = v / H[i, i]
    return True


@njit(cache=True)
def _solve_order(a, b, c, tol, max_newton, snap, tau, u):
    """Solve one order in place. Returns (status, objective, gap, iterations),
    objective and gap in nats per frame for unit bandwidth."""
    n = a.shape[0]
    nv = 2 * n
    m = 3 * n + 1

    for p in range(n):
        tau[p] = 1.0 / (n + 1)
    prefix = 0.0
    for p in range(n):
        prefix += tau[p]
        cap = b[p] + c[p] * prefix
        if cap <= 0.0:
            return _NO_INTERIOR, 0.0, np.inf, 0
        u[p] = 0.5 * min(tau[p], cap)

    f0 = _objective(a, tau, u)
    t = m / max(f0, 1e-12)

    g = np.empty(nv)
    H = np.empty((nv, nv))
    dx = np.empty(nv)
    rhs = np.empty(nv)
    scale = np.empty(nv)
    s3 = np.empty(n)
    w3 = np.empty(n)
    suffix = np.empty(n + 1)
    tau_new = np.empty(n)
    u_new = np.empty(n)

    iters = 0
    status = _OK
    while True:
        # centering
        while True:
            if iters >= max_newton:
                status = _MAX_ITER
                break
            iters += 1
            g[:] = 0.0
            H[:, :] = 0.0
            prefix = 0.0
            for p in range(n):
                prefix += tau[p]
                s3[p] = b[p] + c[p] * prefix - u[p]
            s4 = 1.0 - prefix

            for p in range(n):
                ip = n + p
                # objective
                z = a[p] * u[p] / tau[p]
                opz = 1.0 + z
                g[p] -= t * (math.log1p(z) - z / opz)
                g[ip] -= t * a[p] / opz
                coef = t / (tau[p] * opz * opz)
                H[p, p] += coef * z * z
                H[p, ip] -= coef * a[p] * z
                H[ip, p] -= coef * a[p] * z
                H[ip, ip] += coef * a[p] * a[p]
                # u >= 0
                w = 1.0 / u[p]
                g[ip] -= w
                H[ip, ip] += w * w
                # u <= tau
                w = 1.0 / (tau[p] - u[p])
                g[p] -= w
                g[ip] += w
                w2 = w * w
                H[p, p] += w2
                H[ip, ip] += w2
                H[p, ip] -= w2
                H[ip, p] -= w2
                # energy causality
                w = 1.0 / s3[p]
                w3[p] = w
                g[ip] += w
                H[ip, ip] += w * w
                cw2 = c[p] * w * w
                for q in range(p + 1):
                    g[q] -= c[p] * w
                    H[q, ip] -= cw2
                    H[ip, q] -= cw2
            # tau-tau block of the causality and frame terms
            w4 = 1.0 / s4
            suffix[n] = w4 * w4
            for p in range(n - 1, -1, -1):
                suffix[p] = suffix[p + 1] + (c[p] * w3[p]) ** 2
            for q in range(n):
                g[q] += w4
                for r in range(n):
                    H[q, r] += suffix[max(q, r)]

            # symmetric diagonal scaling keeps the factorization accurate when
            # vanishing slots blow up a few diagonal entries
            for i in range(nv):
                scale[i] = 1.0 / math.sqrt(H[i, i])
            for i in range(nv):
                rhs[i] = -g[i] * scale[i]
                for j in range(nv):
                    H[i, j] *= scale[i] * scale[j]
            if not _cholesky_solve(H, rhs, dx):
                status = _NUMERIC
                break
            for i in range(nv):
                dx[i] *= scale[i]
            lam2 = 0.0
            for i in range(nv):
                lam2 -= g[i] * dx[i]
            if lam2 * 0.5 <= _NEWTON_EPS:
                break

            # largest step keeping every slack positive
            step = 1.0
            dprefix = 0.0
            for p in range(n):
                dt = dx[p]
                du = dx[n + p]
                dprefix += dt
                if du < 0.0:
                    step = min(step, -u[p] / du)
                d2 = dt - du
                if d2 < 0.0:
                    step = min(step, -(tau[p] - u[p]) / d2)
                d3 = c[p] * dprefix - du
                if d3 < 0.0:
                    step = min(step, -s3[p] / d3)
            if dprefix > 0.0:
                step = min(step, s4 / dprefix)
            if step < 1.0:
                step *= 0.99

            f_cur = _barrier_value(a, b, c, tau, u, t)
            accepted = False
            while step > 1e-14:
                for p in range(n):
                    tau_new[p] = tau[p] + step * dx[p]
                    u_new[p] = u[p] + step * dx[n + p]
                f_new = _barrier_value(a, b, c, tau_new, u_new, t)
                if f_new <= f_cur - 0.25 * step * lam2:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            for p in range(n):
                tau[p] = tau_new[p]
                u[p] = u_new[p]
            # centered as far as double precision allows
            if f_cur - f_new <= 1e-13 * max(1.0, abs(f_cur)):
                break
        if status != _OK:
            break
        f = _objective(a, tau, u)
        if m / t <= tol * f:
            break
        t *= _MU

    f_barrier = _objective(a, tau, u)
    upper = f_barrier + m / t

    # snap vanishing slots, hand the spare time to the earliest active slot,
    # then raise every energy to its tightest cap
    first = -1
    for p in range(n):
        if tau[p] < snap:
            tau[p] = 0.0
            u[p] = 0.0
        elif first < 0:
            first = p
    if first < 0:
        first = 0
    total = 0.0
    for p in range(n):
        total += tau[p]
    if total < 1.0:
        tau[first] += 1.0 - total
    prefix = 0.0
    for p in range(n):
        prefix += tau[p]
        if tau[p] > 0.0:
            u[p] = min(tau[p], b[p] + c[p] * prefix)
    f = _objective(a, tau, u)
    return status, f, max(0.0, upper - f), iters


@njit(cache=True)
def _solve_orders(a, b, c, perms, tol, max_newton, snap):
    n_perm, n = perms.shape
    taus = np.empty((n_perm, n))
    us = np.empty((n_perm, n))
    obj = np.empty(n_perm)
    gap = np.empty(n_perm)
    iters = np.empty(n_perm, dtype=np.int64)
    status = np.empty(n_perm, dtype=np.int64)
    ap = np.empty(n)
    bp = np.empty(n)
    cp = np.empty(n)
    for k in range(n_perm):
        for p in range(n):
            j = perms[k, p]
            ap[p] = a[j]
            bp[p] = b[j]
            cp[p] = c[j]
        st, f, gp, it = _solve_order(ap, bp, cp, tol, max_newton, snap, taus[k], us[k])
        status[k] = st
        obj[k] = f
        gap[k] = gp
        iters[k] = it
    return status, obj, gap, iters, taus, us


def normalized_arrays(users: Sequence[UserParams], sys: SystemParams):
    """Per-user ``(a, b, c)``: SNR at full power and battery and harvest
    rate in units of ``p_max``."""
    a = np.array([snr_coefficient(u, sys) * sys.p_max for u in users])
    b = np.array([u.battery / sys.p_max for u in users])
    c = np.array([harvest_rate(u, sys) / sys.p_max for u in users])
    return a, b, c


def _raise_for(status: int, iters: int):
    if status == _MAX_ITER:
        raise PtapConvergenceError(f"no convergence within {iters} Newton steps; tolerance too tight")
    if status == _NUMERIC:
        raise PtapError("Newton system lost positive definiteness")
    if status == _NO_INTERIOR:
        raise PtapError("a user has neither stored nor harvested energy")


def solve_arrays(a, b, c, tol: float = DEFAULT_PTAP_TOL, max_newton: int = MAX_NEWTON):
    """Solve one order given normalized per-position arrays.

    Positions with no energy at all (``b == c == 0``) are fixed at zero and
    left out of the barrier problem. Returns ``(taus, us, objective_nats,
    gap_nats, iterations)`` for unit bandwidth.
    """
    if tol <= 0:
        raise ValueError("tol: must be > 0")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.all(a == 0):
        raise PtapError("degenerate instance: every SNR coefficient is zero")
    n = a.shape[0]
    live = (b > 0) | (c > 0)
    taus = np.zeros(n)
    us = np.zeros(n)
    if not live.any():
        taus[0] = 1.0
        return taus, us, 0.0, 0.0, 0
    idx = np.flatnonzero(live)
    t_live = np.empty(idx.size)
    u_live = np.empty(idx.size)
    status, f, gap, iters = _solve_order(a[idx], b[idx], c[idx], tol, max_newton, SNAP_TAU,
                                         t_live, u_live)
    _raise_for(status, iters)
    taus[idx] = t_live
    us[idx] = u_live
    return taus, us, f, gap, iters


def _solution(order, taus, us, f, gap, iters, sys: SystemParams) -> PtapSolution:
    energies = us * sys.p_max
    powers = np.divide(energies, taus, out=np.zeros_like(energies), where=taus > 0)
    np.minimum(powers, sys.p_max, out=powers)
    scale = sys.bandwidth / LN2
    return PtapSolution(
        order=tuple(order),
        taus=taus,
        energies=energies,
        powers=powers,
        objective=f * scale,
        gap_certificate=gap * scale,
        iterations=int(iters),
    )


def solve(inst: PtapInstance, tol: float = DEFAULT_PTAP_TOL) -> PtapSolution:
    """Globally optimal slot lengths and powers for the given order.

    ``tol`` bounds the certified relative gap to the optimum.
    """
    a, b, c = normalized_arrays(inst.ordered_users, inst.sys)
    taus, us, f, gap, iters = solve_arrays(a, b, c, tol)
    return _solution([u.id for u in inst.ordered_users], taus, us, f, gap, iters, inst.sys)


def _grid_objective(a, b, c, taus):
    """Objective (nats) at each row of ``taus`` with every energy at its cap.

    Throughput grows with energy at fixed slot length, so the best energy on
    any energy grid that includes the cap is the cap itself.
    """
    prefix = np.cumsum(taus, axis=1)
    cap = np.minimum(taus, b + c * prefix)
    safe = np.where(taus > 0, taus, 1.0)
    return np.sum(np.where(taus > 0, taus * np.log1p(a * cap / safe), 0.0), axis=1)


def _simplex_grid(n: int, steps: int):
    """Yield blocks of integer grid points with nonnegative entries summing
    to at most ``steps``."""
    if n == 1:
        yield np.arange(steps + 1)[:, None]
        return
    if n == 2:
        i, j = np.meshgrid(np.arange(steps + 1), np.arange(steps + 1), indexing="ij")
        keep = i + j <= steps
        yield np.column_stack([i[keep], j[keep]])
        return
    for k in range(steps + 1):
        for block in _simplex_grid(n - 1, steps - k):
            yield np.column_stack([np.full(len(block), k), block])


def _grid_search(inst: PtapInstance, resolution: float):
    n = len(inst.ordered_users)
    if n > 3:
        raise ValueError("grid oracle supports at most 3 users")
    steps = int(round(1.0 / resolution))
    if steps < 1 or abs(steps * resolution - 1.0) > 1e-9:
        raise ValueError("resolution: must be 1/m for a positive integer m")
    a, b, c = normalized_arrays(inst.ordered_users, inst.sys)
    best, best_pt = -1.0, None
    for block in _simplex_grid(n, steps):
        vals = _grid_objective(a, b, c, block / steps)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, best_pt = float(vals[k]), block[k]
    return best, best_pt, steps, (a, b, c)


def grid_oracle(inst: PtapInstance, resolution: float) -> float:
    """Best objective over every feasible point of a regular grid.

    Slot lengths run over multiples of ``resolution`` with total at most one.
    A lower bound on the optimum; only practical for up to three users.
    """
    best, _, _, _ = _grid_search(inst, resolution)
    return best * inst.sys.bandwidth / LN2


def grid_oracle_bound(inst: PtapInstance, resolution: float) -> float:
    """Objective variation across the grid cells touching the best point.

    Used as the resolution-dependent slack when comparing against the oracle.
    """
    best, pt, steps, (a, b, c) = _grid_search(inst, resolution)
    n = len(pt)
    offsets = np.array(np.meshgrid(*[[-1, 0, 1]] * n, indexing="ij")).reshape(n, -1).T
    nbrs = pt + offsets
    ok = np.all(nbrs >= 0, axis=1) & (nbrs.sum(axis=1) <= steps)
    vals = _grid_objective(a, b, c, nbrs[ok] / steps)
    return float(np.max(np.abs(vals - best))) * inst.sys.bandwidth / LN2


def to_schedule(sol: PtapSolution) -> Schedule:
    """Schedule with zero-length slots dropped and no idle prefix."""
    slots = [
        Slot(user_id=uid, tau=float(t), power=float(p))
        for uid, t, p in zip(sol.order, sol.taus, sol.powers)
        if t > 0
    ]
    return Schedule(slots=tuple(slots), idle_prefix=0.0)
