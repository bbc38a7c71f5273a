"""Daemons: activation policies under a bounded strong-fairness contract.

At every step the daemon must pick a nonempty subset of the activatable
processes (correct processes whose guard holds, plus all Byzantines, which
are activatable by convention).  Strong fairness is enforced as bounded
fairness: a process that has been activatable-but-unselected for
``fairness_bound - 1`` consecutive steps is forcibly included in the next
selection, so no process is ever passed over ``fairness_bound`` times in a
row.

Policies:

* ``round_robin``      - single process, rotating by ascending id
* ``randomized``       - each activatable process tossed in with p=1/2
* ``central_random``   - single uniformly random process
* ``adversarial_greedy`` - activates a Byzantine whenever a one-step
  lookahead shows its write would enable a currently-disabled correct
  process (lowest id wins); otherwise the lowest-id enabled correct process
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .adversary import AdversaryStrategy, byz_write
from .protocol import Configuration, RULE_BYZANTINE, step, validate_configuration
from .topology import Topology, ZONE_WIDE, compute_zones, out_zone_correct_mask
from .trace import Step, Trace

POLICY_KINDS = ("round_robin", "randomized", "central_random", "adversarial_greedy")


class DeadlockReached(RuntimeError):
    """No process is activatable.  Normal termination when nothing is Byzantine."""


@dataclass(frozen=True)
class SchedulerPolicy:
    kind: str
    seed: int = 0
    fairness_bound: Optional[int] = None  # None resolves to 2n at run time

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r} (expected one of {POLICY_KINDS})")
        if self.fairness_bound is not None and self.fairness_bound < 1:
            raise ValueError(f"fairness_bound must be >= 1, got {self.fairness_bound}")


@dataclass
class FairnessLedger:
    """Per-process count of consecutive steps spent activatable-but-unselected."""

    bound: int
    counts: np.ndarray
    last_pick: int = -1

    @classmethod
    def fresh(cls, n: int, bound: int) -> "FairnessLedger":
        if bound < 1:
            raise ValueError(f"fairness bound must be >= 1, got {bound}")
        return cls(bound=bound, counts=np.zeros(n, dtype=np.int64))


def select(
    policy: SchedulerPolicy,
    ledger: FairnessLedger,
    enabled_correct: np.ndarray,
    byzantines: np.ndarray,
    rng: np.random.Generator,
    *,
    lookahead: Optional[Callable[[int], bool]] = None,
) -> np.ndarray:
    """Pick this step's activation set and update the ledger.

    Returns a sorted array drawn from enabled_correct union byzantines; any
    process one step short of its fairness bound is forcibly included.
    """
    if byzantines.size == 0:
        pool = enabled_correct
    elif enabled_correct.size == 0:
        pool = byzantines
    else:
        # disjoint by construction: correct processes vs Byzantines
        pool = np.sort(np.concatenate((enabled_correct, byzantines)))
    if pool.size == 0:
        raise DeadlockReached("deadlock reached")

    if policy.kind == "round_robin":
        later = pool[pool > ledger.last_pick]
        pick = int(later[0]) if later.size else int(pool[0])
        ledger.last_pick = pick
        base = [pick]
    elif policy.kind == "central_random":
        base = [int(pool[rng.integers(0, pool.size)])]
    elif policy.kind == "randomized":
        mask = rng.random(pool.size) < 0.5
        base = pool[mask].tolist()
        if not base:
            base = [int(pool[rng.integers(0, pool.size)])]
    elif policy.kind == "adversarial_greedy":
        base = []
        if lookahead is not None:
            for b in np.sort(byzantines):
                if lookahead(int(b)):
                    base = [int(b)]
                    break
        if not base:
            if enabled_correct.size:
                base = [int(enabled_correct.min())]
            else:
                base = [int(byzantines.min())]
    else:
        raise AssertionError(f"unreachable policy {policy.kind}")

    starving = pool[ledger.counts[pool] >= ledger.bound - 1]
    if starving.size:
        selected = np.unique(np.concatenate((np.array(base, dtype=np.int64), starving)))
    else:
        selected = np.array(base, dtype=np.int64)  # policy picks are sorted already

    in_pool = np.zeros(ledger.counts.shape[0], dtype=np.bool_)
    in_pool[pool] = True
    chosen = np.zeros_like(in_pool)
    chosen[selected] = True
    ledger.counts[in_pool & ~chosen] += 1
    ledger.counts[~in_pool | chosen] = 0
    return selected


def _greedy_lookahead(topo, parent, height, enabled, adversary, step_index):
    """Would this Byzantine's next write enable a currently-disabled correct
    neighbor?  Only the neighbors can be affected: guards read heights."""

    cfg = Configuration(parent, height)

    def probe(b: int) -> bool:
        w = byz_write(adversary, topo, cfg, b, step_index)
        if w is None or w.height == height[b]:
            return False
        for u in topo.neighbors(b):
            u = int(u)
            if u in topo.byzantine or enabled[u] or u == topo.root:
                continue
            p = int(parent[u])
            if p == _kernels.NIL:
                return True
            m = None
            for q in topo.neighbors(u):
                h = int(w.height) if q == b else int(height[q])
                m = h if m is None or h < m else m
            hp = int(w.height) if p == b else int(height[p])
            if height[u] != hp + 1 or hp != m:
                return True
        return False

    return probe


def run(
    topo: Topology,
    initial: Configuration,
    policy: SchedulerPolicy,
    adversary: Optional[AdversaryStrategy] = None,
    max_steps: int = 100_000,
    *,
    zone: str = ZONE_WIDE,
    stop_padding: Optional[int] = None,
) -> Trace:
    """Drive the protocol until it settles, recording a full trace.

    Without Byzantines the run stops when no process is enabled.  With
    Byzantines it stops once a zone-legitimate-and-stable configuration has
    been followed by ``stop_padding`` adversary-active steps (default
    10 * n * max_degree) in which no out-of-zone correct process changed a
    variable.  Hitting ``max_steps`` first marks the trace truncated.
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    if zone not in ("wide", "strict"):
        raise ValueError(f"unknown zone {zone!r}")
    validate_configuration(topo, initial)

    n = topo.n
    byz_ids = np.array(sorted(topo.byzantine), dtype=np.int64)
    have_byz = byz_ids.size > 0
    if have_byz and adversary is None:
        raise ValueError("a Byzantine set needs an adversary strategy")
    silent = (adversary is None) or (adversary.kind == "silent")
    padding = stop_padding if stop_padding is not None else 10 * n * max(1, topo.max_degree)
    bound = policy.fairness_bound if policy.fairness_bound is not None else 2 * n

    zones = compute_zones(topo)
    out_zone = out_zone_correct_mask(topo, zones, zone)
    ledger = FairnessLedger.fresh(n, bound)
    rng = np.random.default_rng(policy.seed)

    parent = initial.parent.copy()
    height = initial.height.copy()
    steps: list[Step] = []
    anchored = False
    pad = 0
    truncated = True

    for step_index in range(max_steps):
        minh = _kernels.neighbor_min_heights(topo.indptr, topo.indices, height)
        enabled = _kernels.enabled_mask(parent, height, minh, topo.root, topo.byz_mask)
        enabled_ids = np.flatnonzero(enabled).astype(np.int64)

        if enabled_ids.size == 0 and (not have_byz or silent):
            truncated = False
            break
        if have_byz and not silent:
            if not anchored and not np.any(enabled & out_zone):
                ok = _kernels.chain_valid_all(topo.indptr, topo.indices, parent,
                                              height, minh, topo.byz_mask, topo.root)
                if np.all(ok[out_zone]):
                    anchored = True
                    pad = 0
            if anchored and pad >= padding:
                truncated = False
                break

        lookahead = None
        if policy.kind == "adversarial_greedy" and have_byz and not silent:
            lookahead = _greedy_lookahead(topo, parent, height, enabled, adversary, step_index)
        selected = select(policy, ledger, enabled_ids, byz_ids, rng, lookahead=lookahead)

        writes = {}
        if have_byz and not silent:
            cfg_view = Configuration(parent, height)
            for b in selected:
                b = int(b)
                if b in topo.byzantine:
                    w = byz_write(adversary, topo, cfg_view, b, step_index)
                    if w is not None:
                        writes[b] = w

        new_cfg, actions = step(
            topo, Configuration(parent, height), selected.tolist(), writes,
            _enabled=enabled, _minh_arr=minh,
        )
        if anchored:
            if any(a.rule != RULE_BYZANTINE and out_zone[a.process] for a in actions):
                anchored = False
            elif any(int(v) in topo.byzantine for v in selected):
                pad += 1
        steps.append(Step(tuple(int(v) for v in selected), tuple(actions)))
        parent = new_cfg.parent
        height = new_cfg.height
    else:
        truncated = True

    meta = {
        "policy": {"kind": policy.kind, "seed": policy.seed, "fairness_bound": bound},
        "adversary": None if adversary is None else {
            "kind": adversary.kind, "seed": adversary.seed, "height_cap": adversary.height_cap,
        },
        "zone": zone,
        "stop_padding": padding,
        "max_steps": max_steps,
    }
    return Trace(
        topo=topo,
        initial=initial.copy(),
        steps=steps,
        final=Configuration(parent, height),
        truncated=truncated,
        meta=meta,
    )
