"""Explicit-state exploration and its fairness analysis."""

import numpy as np
import pytest

from minplusone import generate_graph
from minplusone.exhaustive import (
    _find_fair_cycle,
    check_instance,
    exhaustive_check,
)
from minplusone._kernels import USE_NUMBA


# ---------------------------------------------------------------------------
# fair-cycle detector on synthetic transition graphs
#
# States carry an "activatable" bitmask; edges carry the selected bitmask.
# A violation needs a cycle on which every process activatable anywhere
# along it is also selected somewhere along it.


def test_fair_self_loop_detected():
    members = np.array([0])
    src = np.array([0]); dst = np.array([0]); sel = np.array([0b01])
    act = np.array([0b01])
    assert _find_fair_cycle(members, src, dst, sel, act) is not None


def test_unfair_self_loop_not_detected():
    # process 1 is activatable at the looping state but never selected
    members = np.array([0])
    src = np.array([0]); dst = np.array([0]); sel = np.array([0b01])
    act = np.array([0b11])
    assert _find_fair_cycle(members, src, dst, sel, act) is None


def test_two_state_fair_cycle_detected():
    members = np.array([0, 1])
    src = np.array([0, 1]); dst = np.array([1, 0]); sel = np.array([0b01, 0b10])
    act = np.array([0b01, 0b10])
    assert _find_fair_cycle(members, src, dst, sel, act) is not None


def test_refinement_finds_fair_subcycle():
    # the big component is unfair as a whole (process 2 activatable at state
    # 1, never selected) but the self-loop at state 0 alone is fair
    members = np.array([0, 1])
    src = np.array([0, 0, 1])
    dst = np.array([0, 1, 0])
    sel = np.array([0b001, 0b001, 0b010])
    act = np.array([0b001, 0b110])
    found = _find_fair_cycle(members, src, dst, sel, act)
    assert found is not None
    assert found.tolist() == [0]


def test_dag_has_no_cycle():
    members = np.array([0, 1, 2])
    src = np.array([0, 1]); dst = np.array([1, 2]); sel = np.array([1, 1])
    act = np.array([1, 1, 0])
    assert _find_fair_cycle(members, src, dst, sel, act) is None


# ---------------------------------------------------------------------------
# explorer backends agree


@pytest.mark.skipif(not USE_NUMBA, reason="numba backend disabled")
@pytest.mark.parametrize("byz", [(), (2,)])
def test_python_and_numba_explorers_agree(byz):
    topo = generate_graph("path", n=3, byzantine=byz)
    fast = check_instance(topo, family="path")
    slow = check_instance(topo, family="path", force_python=True)
    assert fast.states == slow.states
    assert fast.edges == slow.edges
    assert fast.contained_states == slow.contained_states
    assert fast.reach_violations == slow.reach_violations
    assert fast.fair_cycle == slow.fair_cycle


# ---------------------------------------------------------------------------
# instance checks (small, fast)


def test_path3_fault_free_all_initial_configs_converge():
    r = check_instance(generate_graph("path", n=3), family="path")
    assert r.complete
    assert r.reach_violations == 0 and not r.fair_cycle
    assert r.contained_states >= 1


def test_path3_single_byzantine_contains():
    r = check_instance(generate_graph("path", n=3, byzantine=[2]), family="path")
    assert r.complete
    assert r.reach_violations == 0 and not r.fair_cycle
    assert r.contained_states >= 1


def test_star4_leaf_byzantine_contains():
    r = check_instance(generate_graph("star", n=4, byzantine=[3]), family="star")
    assert r.complete
    assert r.reach_violations == 0 and not r.fair_cycle


def test_budget_exhaustion_reported_not_skipped():
    topo = generate_graph("path", n=4, byzantine=[3])
    r = check_instance(topo, family="path", max_states=100)
    assert not r.complete
    assert r.exhausted == "state budget"
    assert r.violations == 0  # no claims either way
    r = check_instance(topo, family="path", max_edges=50)
    assert not r.complete and r.exhausted == "edge budget"


def test_exhaustive_check_small_sweep_dedupes_and_reports():
    rep = exhaustive_check(3, families=("path", "ring", "star", "complete"))
    assert rep.total_violations == 0
    assert rep.incomplete == 0
    keys = {(r.family, r.n, r.byzantine) for r in rep.instances}
    assert ("path", 2, ()) in keys
    assert ("ring", 3, ()) in keys
    # the 3-complete graph equals the 3-ring and must not be re-explored
    assert not any(r.family == "complete" and r.n == 3 for r in rep.instances)
    assert any(r.family == "complete" and r.n == 2 for r in rep.instances) is False
