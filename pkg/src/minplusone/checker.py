"""Trace predicates and perturbation accounting.

The local correctness predicate for a process asks for an anchored chain:
following parent pointers must reach a process that publishes (no parent,
height 0) and is either the real root or a Byzantine posing as one, with
every hop increasing the height by exactly one and every parent height
minimal among the child's neighborhood.  Because the chain is forced by the
parent pointers and heights strictly decrease along it, the walk terminates
within min(n, height+1) hops.

Zone-level notions build on that predicate: a configuration is
zone-legitimate when every correct process *outside* the containment zone is
locally correct, and zone-stable when no such process is enabled (sound
because every enabled rule, once fired, modifies at least one output
variable).

A perturbation is a maximal trace fragment that starts at a
zone-legitimate-and-stable configuration, contains at least one output
variable change by an out-of-zone correct process, and ends at the first
following zone-legitimate-and-stable configuration.  Variable changes are
counted per variable: one action that rewrites both parent and height counts
twice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .protocol import Configuration, RULE_BYZANTINE
from .topology import Topology, ZoneReport, out_zone_correct_mask
from .trace import CorruptTraceError, Trace


def is_locally_correct(topo: Topology, config: Configuration, v: int) -> bool:
    """Does v's published state hang on a valid anchored parent chain?

    Only meaningful (and only allowed) for correct processes; the root is
    simply required to publish (no parent, height 0).
    """
    if v in topo.byzantine:
        raise ValueError(f"process {v} is Byzantine; the predicate is not defined for it")
    minh = _kernels.neighbor_min_heights(topo.indptr, topo.indices, config.height)
    return bool(
        _kernels.chain_valid_one(
            topo.indptr, topo.indices, config.parent, config.height, minh,
            topo.byz_mask, topo.root, v,
        )
    )


def _local_correct_mask(topo: Topology, config: Configuration) -> np.ndarray:
    minh = _kernels.neighbor_min_heights(topo.indptr, topo.indices, config.height)
    return _kernels.chain_valid_all(
        topo.indptr, topo.indices, config.parent, config.height, minh,
        topo.byz_mask, topo.root,
    )


def is_zone_legitimate(topo: Topology, zones: ZoneReport, config: Configuration,
                       zone: str) -> bool:
    """Every correct process outside the zone is locally correct."""
    out = out_zone_correct_mask(topo, zones, zone)
    ok = _local_correct_mask(topo, config)
    return bool(np.all(ok[out]))


def is_zone_stable(topo: Topology, zones: ZoneReport, config: Configuration,
                   zone: str) -> bool:
    """No correct process outside the zone is enabled."""
    out = out_zone_correct_mask(topo, zones, zone)
    minh = _kernels.neighbor_min_heights(topo.indptr, topo.indices, config.height)
    enabled = _kernels.enabled_mask(config.parent, config.height, minh,
                                    topo.root, topo.byz_mask)
    return not bool(np.any(enabled & out))


@dataclass(frozen=True)
class PerturbationReport:
    """Perturbation intervals and per-process variable-change counts.

    ``contained_at`` is the index of the first zone-legitimate-and-stable
    configuration (None if the trace never reaches one); change counts run
    from that index to the end of the trace.  ``max_out_zone_changes`` is the
    largest count among correct processes outside the zone.
    """

    zone: str
    perturbations: tuple[tuple[int, int], ...]
    per_process_changes: np.ndarray
    contained_at: Optional[int]

    @property
    def perturbation_count(self) -> int:
        return len(self.perturbations)

    def max_out_zone_changes(self, topo: Topology, zones: ZoneReport) -> int:
        out = out_zone_correct_mask(topo, zones, self.zone)
        if not np.any(out):
            return 0
        return int(self.per_process_changes[out].max())


@dataclass(frozen=True)
class _TraceScan:
    legit: np.ndarray          # per configuration
    stable: np.ndarray         # per configuration
    out_zone_change: np.ndarray  # per step: any out-of-zone correct variable change
    adversary_active: np.ndarray  # per step: any Byzantine activated


def _scan_trace(trace: Trace, zones: ZoneReport, zone: str) -> _TraceScan:
    topo = trace.topo
    out = out_zone_correct_mask(topo, zones, zone)
    t = trace.num_steps
    legit = np.zeros(t + 1, dtype=np.bool_)
    stable = np.zeros(t + 1, dtype=np.bool_)
    out_change = np.zeros(t, dtype=np.bool_)
    adv_active = np.zeros(t, dtype=np.bool_)
    byz = topo.byzantine
    for i, cfg in enumerate(trace.iter_configs()):
        minh = _kernels.neighbor_min_heights(topo.indptr, topo.indices, cfg.height)
        enabled = _kernels.enabled_mask(cfg.parent, cfg.height, minh,
                                        topo.root, topo.byz_mask)
        stable[i] = not bool(np.any(enabled & out))
        ok = _kernels.chain_valid_all(topo.indptr, topo.indices, cfg.parent,
                                     cfg.height, minh, topo.byz_mask, topo.root)
        legit[i] = bool(np.all(ok[out]))
    for i, step in enumerate(trace.steps):
        adv_active[i] = any(v in byz for v in step.activated)
        out_change[i] = any(
            a.rule != RULE_BYZANTINE and out[a.process] and a.changed_vars() > 0
            for a in step.actions
        )
    return _TraceScan(legit, stable, out_change, adv_active)


def analyze_trace(trace: Trace, zones: ZoneReport, zone: str,
                  _scan: Optional[_TraceScan] = None) -> PerturbationReport:
    """Locate perturbation intervals and count per-process variable changes.

    Raises CorruptTraceError when the recorded actions do not replay.
    """
    topo = trace.topo
    scan = _scan if _scan is not None else _scan_trace(trace, zones, zone)
    anchors = np.flatnonzero(scan.legit & scan.stable)
    contained_at: Optional[int] = int(anchors[0]) if anchors.size else None

    perturbations: list[tuple[int, int]] = []
    if anchors.size:
        pos = 0
        cur = int(anchors[pos])
        while True:
            nxt_idx = np.searchsorted(anchors, cur + 1)
            if nxt_idx >= anchors.size:
                break
            nxt = int(anchors[nxt_idx])
            if np.any(scan.out_zone_change[cur:nxt]):
                perturbations.append((cur, nxt))
            cur = nxt

    changes = np.zeros(topo.n, dtype=np.int64)
    if contained_at is not None:
        for step in trace.steps[contained_at:]:
            for a in step.actions:
                if a.rule != RULE_BYZANTINE:
                    changes[a.process] += a.changed_vars()

    return PerturbationReport(
        zone=zone,
        perturbations=tuple(perturbations),
        per_process_changes=changes,
        contained_at=contained_at,
    )


def containment_index(trace: Trace, zones: ZoneReport, zone: str = "wide",
                      _scan: Optional[_TraceScan] = None) -> Optional[int]:
    """First index i such that configuration i is zone-legitimate and no
    out-of-zone correct process changes a variable from i to the end of the
    trace.  None means the trace never settles (a finite-trace FAIL verdict).
    """
    scan = _scan if _scan is not None else _scan_trace(trace, zones, zone)
    changed = np.flatnonzero(scan.out_zone_change)
    first_silent = int(changed[-1]) + 1 if changed.size else 0
    for i in range(first_silent, trace.num_steps + 1):
        if scan.legit[i]:
            return i
    return None
