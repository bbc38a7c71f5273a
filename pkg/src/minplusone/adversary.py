"""Byzantine write strategies.

A strategy decides, for each activated Byzantine process, which state it
publishes this step (or ``None`` for no write).  All strategies are pure
functions of (strategy, configuration, process, step index), so runs are
reproducible; ``random_writer`` derives a fresh generator from
(seed, process, step index) for every call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .protocol import Configuration, ProcessState
from .topology import Topology

ADVERSARY_KINDS = ("silent", "fake_root", "oscillator", "random_writer", "min_under_cutter")


@dataclass(frozen=True)
class AdversaryStrategy:
    kind: str
    seed: int = 0
    height_cap: int = 0

    def __post_init__(self):
        if self.kind not in ADVERSARY_KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r} (expected one of {ADVERSARY_KINDS})")
        if self.height_cap < 0:
            raise ValueError(f"height_cap must be >= 0, got {self.height_cap}")


def byz_write(
    strategy: AdversaryStrategy,
    topo: Topology,
    config: Configuration,
    b: int,
    step_index: int,
) -> Optional[ProcessState]:
    """State that Byzantine ``b`` publishes at this step, or None for no write."""
    if b not in topo.byzantine:
        raise ValueError(f"process {b} is not Byzantine")
    kind = strategy.kind
    if kind == "silent":
        return None
    if kind == "fake_root":
        return ProcessState(None, 0)
    if kind == "oscillator":
        return ProcessState(None, 0 if step_index % 2 == 0 else strategy.height_cap)
    if kind == "min_under_cutter":
        nbrs = topo.neighbors(b)
        m = int(config.height[nbrs].min()) if nbrs.size else 0
        h = min(max(0, m - 1), strategy.height_cap)
        return ProcessState(None, h)
    if kind == "random_writer":
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=strategy.seed, spawn_key=(b, step_index))
        )
        nbrs = topo.neighbors(b)
        pick = int(rng.integers(0, nbrs.size + 1))
        parent = None if pick == nbrs.size else int(nbrs[pick])
        height = int(rng.integers(0, strategy.height_cap + 1))
        return ProcessState(parent, height)
    raise AssertionError(f"unreachable kind {kind}")
