import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdwpcn.channel import PathLossParams, TopologyParams, generate
from fdwpcn.model import SystemParams, UserParams
from fdwpcn.schedulers import eta, mfsa, mfsa_run
from fdwpcn.verifier import check_feasible, check_optimality_conditions

from helpers import random_users, unit_sys


def test_full_frame_when_energy_outlasts_it():
    sys = unit_sys(p_max=1.2)
    u = UserParams(1, g=2.0, h=0.5, battery=1.0)
    sched, rep = mfsa([u], sys)
    assert [(s.user_id, s.tau, s.power) for s in sched.slots] == [(1, 1.0, 1.2)]
    assert rep.feasible


def test_strong_user_takes_whole_frame():
    # the top user can hold full power all frame, so nobody else is scheduled
    sys = unit_sys(p_max=1.2)
    users = [UserParams(1, g=1.0, h=0.5, battery=0.2), UserParams(2, g=2.0, h=0.5, battery=1.0)]
    run = mfsa_run(users, sys)
    assert [(s.user_id, s.tau, s.power) for s in run.schedule.slots] == [(2, 1.0, 1.2)]
    assert run.pair_evaluations == 0


def _two_user_cases():
    """The three pair allocations evaluated by hand from their definitions."""
    k_u, b_u, c_u = 10.0, 0.2, 0.1
    k_v, b_v, c_v = 1.0, 0.1, 0.1
    t_min = (b_u + c_u) / 1.0
    r = lambda t, p, k: t * math.log2(1 + k * p)
    tv = 1 - t_min
    r1 = r(t_min, 1.0, k_u) + r(tv, min((b_v + c_v * tv) / tv, 1.0), k_v)
    tv = min(b_v / (1.0 - c_v), 1 - t_min)
    r2 = r(1 - tv, (b_u + c_u) / (1 - tv), k_u) + r(tv, 1.0, k_v)
    r3 = r(1.0, b_u + c_u, k_u)
    return r1, r2, r3


def test_two_user_case_selection():
    r1, r2, r3 = _two_user_cases()
    assert (round(r1, 4), round(r2, 4), r3) == (1.2574, 2.0038, 2.0)
    sys = unit_sys()
    u = UserParams(1, g=10.0, h=0.1, battery=0.2)
    v = UserParams(2, g=1.0, h=0.1, battery=0.1)
    run = mfsa_run([v, u], sys)
    (ev,) = run.evaluations
    assert (ev.high_id, ev.low_id, ev.available, ev.chosen) == (1, 2, 1.0, 2)
    got = [c.pair_throughput for c in ev.cases]
    assert got == pytest.approx([r1, r2, r3], rel=1e-12)
    first, last = run.schedule.slots
    assert first.user_id == 2 and last.user_id == 1
    assert (first.tau, first.power) == pytest.approx((1 / 9, 1.0))
    assert (last.tau, last.power) == pytest.approx((8 / 9, 0.3375))
    assert round(first.tau, 4) == 0.1111 and round(last.tau, 4) == 0.8889
    assert run.report.sum_throughput == pytest.approx(r2, rel=1e-12)
    assert run.report.feasible


def test_case_ties_pick_lowest_case():
    # no battery on the weaker user: case 2 collapses onto case 3
    sys = unit_sys()
    users = [UserParams(1, g=10.0, h=0.1, battery=0.2), UserParams(2, g=1.0, h=0.1)]
    (ev,) = mfsa_run(users, sys).evaluations
    assert ev.cases[1].pair_throughput == ev.cases[2].pair_throughput
    assert ev.chosen in (1, 2)
    assert ev.chosen == min(c.case_id for c in ev.cases
                            if c.pair_throughput == max(x.pair_throughput for x in ev.cases))


def test_weaker_user_that_never_runs_dry():
    # harvesting outpaces full power for the weaker user
    sys = unit_sys(p_max=0.05)
    users = [UserParams(1, g=50.0, h=0.01, battery=0.0), UserParams(2, g=5.0, h=0.2)]
    run = mfsa_run(users, sys)
    assert run.report.feasible
    assert run.schedule.total_time == pytest.approx(1.0)


def test_eta_example():
    sys = unit_sys()
    users = [UserParams(1, g=1.0, h=0.2, battery=0.1), UserParams(2, g=2.0, h=0.2, battery=0.1)]
    sched, rep = eta(users, sys)
    assert sched.order == [1, 2]
    assert [s.tau for s in sched.slots] == [0.5, 0.5]
    assert [s.power for s in sched.slots] == pytest.approx([0.4, 0.6])
    assert rep.feasible


@pytest.mark.parametrize("battery,p_max", [(1.0, 1.2), (0.1, 1.0), (0.0, 0.01)])
def test_eta_single_user_matches_mfsa(battery, p_max):
    sys = unit_sys(p_max=p_max)
    u = UserParams(1, g=3.0, h=0.5, battery=battery)
    assert eta([u], sys)[0] == mfsa([u], sys)[0]
    assert eta([u], sys)[0].slots[0].power == pytest.approx(min(p_max, battery + 0.5))


def test_empty_user_list_rejected():
    with pytest.raises(ValueError):
        mfsa([], unit_sys())
    with pytest.raises(ValueError):
        eta([], unit_sys())


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10), st.floats(0.05, 2.0))
def test_heuristics_feasible_and_linear(seed, n, p_max):
    rng = np.random.default_rng(seed)
    users = random_users(rng, n)
    sys = unit_sys(p_max=p_max)
    run = mfsa_run(users, sys)
    assert run.pair_evaluations <= n - 1
    assert not check_feasible(run.schedule, users, sys)
    assert run.schedule.total_time == pytest.approx(1.0, abs=1e-12)
    # every committed slot runs at full power or spends everything it has
    assert check_optimality_conditions(run.schedule, users, sys)["power_or_energy_tight"].passed
    # highest-rate user transmits last
    top = max(users, key=lambda u: (u.g, -u.id))
    assert run.schedule.slots[-1].user_id == top.id

    sched, rep = eta(users, sys)
    assert not check_feasible(sched, users, sys)
    assert math.fsum(s.tau for s in sched.slots) == pytest.approx(1.0, abs=1e-12)
    assert sched.slots[-1].user_id == top.id


def test_mfsa_beats_eta_on_average():
    rng = np.random.default_rng(21)
    diffs = []
    for _ in range(200):
        inst = generate(TopologyParams(), SystemParams(), PathLossParams(), int(rng.integers(2**32)))
        diffs.append(mfsa(inst.users, inst.sys)[1].sum_throughput - eta(inst.users, inst.sys)[1].sum_throughput)
    assert np.mean(diffs) > 0
