import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdwpcn import exhaustive
from fdwpcn.model import Schedule, Slot, UserParams, evaluate
from fdwpcn.schedulers import eta, mfsa
from fdwpcn.verifier import (
    check_feasible,
    check_optimality_conditions,
    extend_to_full_frame,
    fold_idle_prefix,
)

from helpers import random_users, unit_sys

RICH = [UserParams(1, g=1.0, h=1.0, battery=10.0), UserParams(2, g=2.0, h=1.0, battery=10.0)]


def test_mfsa_output_is_clean():
    rng = np.random.default_rng(1)
    users = random_users(rng, 5)
    assert check_feasible(mfsa(users, unit_sys())[0], users, unit_sys()) == []


def test_frame_overrun_magnitude():
    sched = Schedule((Slot(1, 0.5, 0.1), Slot(2, 0.6, 0.1)))
    (v,) = check_feasible(sched, RICH, unit_sys())
    assert v.constraint == "frame_length" and v.magnitude == pytest.approx(0.1)


def test_power_overrun_magnitude():
    sched = Schedule((Slot(1, 0.5, 1.5), Slot(2, 0.5, 0.1)))
    (v,) = check_feasible(sched, RICH, unit_sys())
    assert (v.constraint, v.user_id) == ("max_power", 1) and v.magnitude == pytest.approx(0.5)


def test_sign_and_duplicate_violations():
    sched = Schedule((Slot(1, -0.1, 0.1), Slot(2, 0.5, -0.2), Slot(2, 0.1, 0.1)), idle_prefix=-0.05)
    names = sorted(v.constraint for v in check_feasible(sched, RICH, unit_sys()))
    assert names == ["idle_nonnegative", "power_nonnegative", "single_slot", "tau_nonnegative"]


def test_unknown_user():
    with pytest.raises(KeyError):
        check_feasible(Schedule((Slot(5, 0.5, 0.1),)), RICH, unit_sys())


def test_idle_prefix_fails_first_condition():
    sched = Schedule((Slot(2, 0.8, 0.5),), idle_prefix=0.2)
    conds = check_optimality_conditions(sched, RICH, unit_sys())
    assert not conds["idle_prefix"].passed
    assert conds["full_frame"].passed is False


def test_skipping_a_stronger_user_fails_rate_support():
    rng = np.random.default_rng(2)
    users = random_users(rng, 3)
    sys = unit_sys()
    sched, _ = eta(users, sys)
    # keep only the weakest user active and hand it the whole frame
    weakest = min(users, key=lambda u: u.g)
    slots = tuple(Slot(s.user_id, 1.0 if s.user_id == weakest.id else 0.0,
                       min(1.0, weakest.battery + weakest.h) if s.user_id == weakest.id else 0.0)
                  for s in sched.slots)
    conds = check_optimality_conditions(Schedule(slots), users, sys)
    assert not conds["rate_support"].passed
    assert not conds["max_rate_active"].passed
    assert set(conds.failed()) == {"rate_support", "max_rate_active"}


def test_loose_power_fails_tightness():
    sched = Schedule((Slot(1, 0.5, 0.2), Slot(2, 0.5, 0.2)))
    conds = check_optimality_conditions(sched, RICH, unit_sys())
    assert not conds["power_or_energy_tight"].passed
    assert "[1, 2]" in conds["power_or_energy_tight"].detail


@pytest.mark.parametrize("seed", range(8))
def test_optimal_schedules_pass_every_condition(seed):
    rng = np.random.default_rng(30 + seed)
    users = random_users(rng, int(rng.integers(2, 7)))
    sched, _ = exhaustive.solve_opt(users, unit_sys())
    report = check_optimality_conditions(sched, users, unit_sys())
    assert report.all_passed, report.failed()


def _random_schedule(rng, users):
    order = rng.permutation(len(users))
    taus = rng.dirichlet(np.ones(len(users) + 1)) * rng.uniform(0.8, 1.2)
    slots = tuple(Slot(users[i].id, float(taus[j]), float(rng.uniform(0, 1.3)))
                  for j, i in enumerate(order))
    return Schedule(slots, idle_prefix=float(taus[-1]))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_agrees_with_evaluate(seed, n):
    rng = np.random.default_rng(seed)
    users = random_users(rng, n)
    sched = _random_schedule(rng, users)
    found = check_feasible(sched, users, unit_sys())
    rep = evaluate(sched, users, unit_sys())
    assert rep.feasible == (not found)
    assert sorted((v.constraint, v.user_id) for v in found) == \
        sorted((v.constraint, v.user_id) for v in rep.violations)


def _shrunk_feasible(rng, users, sys, frame=1.0):
    """A feasible schedule filling ``frame``: random lengths, then powers
    scaled into the causality and power limits."""
    sched = _random_schedule(rng, users)
    scale = (sum(s.tau for s in sched.slots) + sched.idle_prefix) / frame
    start = sched.idle_prefix / scale
    slots = []
    for s in sched.slots:
        u = next(x for x in users if x.id == s.user_id)
        tau = s.tau / scale
        start += tau
        cap = min(sys.p_max, (u.battery + u.h * start) / tau) if tau > 0 else 0.0
        slots.append(Slot(s.user_id, tau, cap * rng.uniform(0.2, 1.0)))
    return Schedule(tuple(slots), idle_prefix=sched.idle_prefix / scale)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_folding_idle_time_improves_throughput(seed, n):
    rng = np.random.default_rng(seed)
    users = random_users(rng, n)
    sys = unit_sys()
    sched = _shrunk_feasible(rng, users, sys)
    assert not check_feasible(sched, users, sys)
    folded = fold_idle_prefix(sched)
    assert folded.idle_prefix == 0.0
    assert not check_feasible(folded, users, sys)
    before = evaluate(sched, users, sys).sum_throughput
    after = evaluate(folded, users, sys).sum_throughput
    if sched.idle_prefix > 1e-9 and sched.slots[0].power * sched.slots[0].tau > 0:
        assert after > before
    else:
        assert after >= before - 1e-12


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.floats(0.05, 0.9))
def test_extending_to_full_frame_never_hurts(seed, n, shrink):
    rng = np.random.default_rng(seed)
    users = random_users(rng, n)
    sys = unit_sys()
    short = _shrunk_feasible(rng, users, sys, frame=shrink)
    assert not check_feasible(short, users, sys)
    longer = extend_to_full_frame(short)
    assert longer.total_time == pytest.approx(1.0)
    assert not check_feasible(longer, users, sys)
    assert evaluate(longer, users, sys).sum_throughput >= evaluate(short, users, sys).sum_throughput - 1e-12
