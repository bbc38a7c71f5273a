"""The local correctness predicate, zone predicates, and trace analysis."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minplusone import (
    Configuration,
    ProcessState,
    Trace,
    analyze_trace,
    bfs_distances,
    compute_zones,
    containment_index,
    generate_graph,
    is_locally_correct,
    is_zone_legitimate,
    is_zone_stable,
    legitimate_configuration,
    step,
)
from minplusone.trace import CorruptTraceError, Step

from conftest import config, path_topo


# ---------------------------------------------------------------------------
# an independent oracle: enumerate anchored chains from the definition
#
# A candidate chain (v_0, ..., v_k) with k >= 1 witnesses v = v_k when
#   (i)   v_0 publishes (no parent, 0) and is the root or a Byzantine,
#   (ii)  every v_i points at v_{i-1} and sits one above it,
#   (iii) every v_{i-1}'s height is minimal in v_i's neighborhood.
# We enumerate every node sequence up to the maximum useful length and check
# the three clauses literally.


def brute_force_chain_witness(topo, cfg, v):
    if v == topo.root:
        return cfg.state(v) == ProcessState(None, 0)
    n = topo.n
    max_k = min(int(cfg.height[v]), n)  # (ii) forces k = height[v]; cap at n
    for k in range(1, max_k + 1):
        for seq in itertools.product(range(n), repeat=k):
            chain = list(seq) + [v]
            v0 = chain[0]
            if not (v0 == topo.root or v0 in topo.byzantine):
                continue
            if cfg.state(v0) != ProcessState(None, 0):
                continue
            ok = True
            for i in range(1, len(chain)):
                vi, prev = chain[i], chain[i - 1]
                if cfg.parent[vi] != prev or cfg.height[vi] != cfg.height[prev] + 1:
                    ok = False
                    break
                if cfg.height[prev] != min(cfg.height[q] for q in topo.neighbors(vi)):
                    ok = False
                    break
            if ok:
                return True
    return False


# ---------------------------------------------------------------------------
# is_locally_correct


def test_legitimate_tree_is_correct_everywhere():
    topo = path_topo(3)
    cfg = config((None, 0), (0, 1), (1, 2))
    assert all(is_locally_correct(topo, cfg, v) for v in range(3))


def test_broken_height_link_fails():
    topo = path_topo(3)
    cfg = config((None, 0), (0, 1), (1, 5))
    assert is_locally_correct(topo, cfg, 1)
    assert not is_locally_correct(topo, cfg, 2)


def test_byzantine_rooted_chain_is_accepted():
    # 0(root)-1-2-3(byz); 3 poses as a root, 2 hangs on it
    topo = path_topo(4, byz=[3])
    cfg = config((None, 0), (0, 1), (3, 1), (None, 0))
    assert is_locally_correct(topo, cfg, 2)
    assert is_locally_correct(topo, cfg, 1)


def test_byzantine_not_posing_breaks_chain():
    topo = path_topo(4, byz=[3])
    cfg = config((None, 0), (0, 1), (3, 3), (1, 2))
    assert not is_locally_correct(topo, cfg, 2)


def test_predicate_rejects_byzantine_argument():
    topo = path_topo(4, byz=[3])
    with pytest.raises(ValueError, match="Byzantine"):
        is_locally_correct(topo, config((None, 0), (0, 1), (1, 2), (2, 3)), 3)


def test_nonroot_without_parent_is_incorrect():
    topo = path_topo(3)
    assert not is_locally_correct(topo, config((None, 0), (None, 0), (1, 1)), 1)


@given(st.data())
@settings(max_examples=150, deadline=None)
def test_predicate_matches_brute_force_enumeration(data):
    kind = data.draw(st.sampled_from(["path", "ring", "star"]))
    n = data.draw(st.integers(3, 4)) if kind != "path" else data.draw(st.integers(2, 4))
    topo = generate_graph(kind, n=n)
    byz = data.draw(st.sets(st.integers(1, n - 1), max_size=1))
    topo = topo.replace_faults(byzantine=byz)
    states = []
    for v in range(n):
        opts = [None] + topo.neighbors(v).tolist()
        states.append((data.draw(st.sampled_from(opts)), data.draw(st.integers(0, 4))))
    cfg = Configuration.from_states(states)
    for v in range(n):
        if v in topo.byzantine:
            continue
        assert is_locally_correct(topo, cfg, v) == brute_force_chain_witness(topo, cfg, v)


def test_walk_terminates_within_height_plus_one_hops():
    # heights far above n must not loop: the chain breaks within n hops
    topo = generate_graph("ring", n=5)
    cfg = config((1, 50), (2, 49), (3, 48), (4, 47), (0, 46))
    for v in range(1, 5):
        assert not is_locally_correct(topo, cfg, v)


def test_legitimate_iff_heights_are_distances(small_family_graphs):
    # Byzantine-free: all-correct <=> heights equal BFS distances and each
    # parent sits exactly one hop closer (cross-validated construction)
    for _, topo in small_family_graphs:
        if topo.n > 6:
            continue
        dist = bfs_distances(topo, [topo.root])
        cfg = legitimate_configuration(topo)
        assert all(is_locally_correct(topo, cfg, v) for v in range(topo.n))
        assert np.array_equal(cfg.height, dist)
        # breaking any single height breaks correctness somewhere
        for v in range(topo.n):
            bad = cfg.copy()
            bad.height[v] += 1
            assert not all(is_locally_correct(topo, bad, u) for u in range(topo.n))


# ---------------------------------------------------------------------------
# zone predicates


def test_zone_legit_reduces_to_full_legitimacy_without_byzantines():
    topo = path_topo(3)
    zones = compute_zones(topo)
    good = config((None, 0), (0, 1), (1, 2))
    bad = config((None, 0), (0, 1), (1, 5))
    for zone in ("wide", "strict"):
        assert is_zone_legitimate(topo, zones, good, zone)
        assert not is_zone_legitimate(topo, zones, bad, zone)


def test_zone_legit_exempts_in_zone_processes():
    # 0(root)-1-2-3(byz): 2 is inside the wide zone, its garbage is exempt
    topo = path_topo(4, byz=[3])
    zones = compute_zones(topo)
    cfg = config((None, 0), (0, 1), (1, 7), (2, 3))
    assert is_zone_legitimate(topo, zones, cfg, "wide")
    assert is_zone_legitimate(topo, zones, cfg, "strict")


def test_zone_stable_cases():
    topo = path_topo(4, byz=[3])
    zones = compute_zones(topo)
    quiet = config((None, 0), (0, 1), (1, 2), (2, 3))
    assert is_zone_stable(topo, zones, quiet, "wide")
    # out-of-zone process 1 with a broken height link is enabled
    churn = config((None, 0), (2, 5), (1, 0), (2, 3))
    assert not is_zone_stable(topo, zones, churn, "wide")
    # only in-zone processes enabled: still stable
    inzone = config((None, 0), (0, 1), (1, 9), (2, 3))
    assert is_zone_stable(topo, zones, inzone, "wide")


# ---------------------------------------------------------------------------
# trace analysis on a hand-built trace
#
# Path 0(root)-1-2(byz)-3, strict zone = {3}: process 1 ties root and fault
# distances, so it is outside the strict zone but can still be disturbed.
# The trace below anchors at a legitimate-and-stable configuration in which 1
# hangs on the Byzantine posing as a root, lets the fault jump its height up,
# and watches 1 re-adopt the real root: one perturbation for the strict zone,
# none for the wide zone (1 is inside the wide zone).


def _perturbation_fixture():
    topo = path_topo(4, byz=[2])
    c0 = config((None, 0), (2, 1), (None, 0), (2, 1))
    s1 = step(topo, c0, [2], {2: ProcessState(None, 5)})
    s2 = step(topo, s1[0], [1])
    trace = Trace(
        topo=topo,
        initial=c0,
        steps=[Step((2,), tuple(s1[1])), Step((1,), tuple(s2[1]))],
        final=s2[0],
        truncated=False,
    )
    return topo, trace


def test_hand_built_perturbation_is_counted_once():
    topo, trace = _perturbation_fixture()
    zones = compute_zones(topo)
    rep = analyze_trace(trace, zones, "strict")
    assert rep.contained_at == 0
    assert rep.perturbation_count == 1
    assert rep.perturbations == ((0, 2),)
    assert rep.per_process_changes[1] == 1  # re-parent only, height unchanged
    # the wide zone exempts process 1 entirely
    rep_wide = analyze_trace(trace, zones, "wide")
    assert rep_wide.perturbation_count == 0


def test_strict_zone_counts_at_least_wide_zone_counts():
    topo, trace = _perturbation_fixture()
    zones = compute_zones(topo)
    assert (
        analyze_trace(trace, zones, "strict").perturbation_count
        >= analyze_trace(trace, zones, "wide").perturbation_count
    )


def test_trace_with_no_out_zone_change_has_no_perturbations():
    topo = path_topo(4, byz=[2])
    zones = compute_zones(topo)
    c0 = config((None, 0), (0, 1), (None, 0), (2, 1))
    s1 = step(topo, c0, [2], {2: ProcessState(None, 3)})
    trace = Trace(topo=topo, initial=c0, steps=[Step((2,), tuple(s1[1]))],
                  final=s1[0], truncated=False)
    rep = analyze_trace(trace, zones, "strict")
    assert rep.perturbation_count == 0
    assert rep.contained_at == 0


def test_corrupt_trace_detected():
    topo, trace = _perturbation_fixture()
    zones = compute_zones(topo)
    trace.steps[1] = Step(
        (1,),
        tuple(
            a.__class__(process=a.process, old=ProcessState(0, 9), new=a.new, rule=a.rule)
            for a in trace.steps[1].actions
        ),
    )
    with pytest.raises(CorruptTraceError, match="corrupt"):
        analyze_trace(trace, zones, "strict")


# ---------------------------------------------------------------------------
# containment index


def test_containment_index_on_hand_built_trace():
    topo, trace = _perturbation_fixture()
    zones = compute_zones(topo)
    # process 1 changes in step 1, so the suffix is silent from index 2 on
    assert containment_index(trace, zones, "strict") == 2
    assert containment_index(trace, zones, "wide") == 0


def test_containment_index_fail_when_trace_never_settles():
    # out-of-zone process 1 holds a broken state throughout the (truncated)
    # trace: no configuration in the silent suffix is legitimate
    topo = path_topo(4, byz=[2])
    zones = compute_zones(topo)
    c0 = config((None, 0), (0, 5), (None, 0), (2, 1))
    s1 = step(topo, c0, [2], {2: ProcessState(None, 3)})
    dangling = Trace(topo=topo, initial=c0, steps=[Step((2,), tuple(s1[1]))],
                     final=s1[0], truncated=True)
    assert containment_index(dangling, zones, "strict") is None
    assert dangling.truncated
