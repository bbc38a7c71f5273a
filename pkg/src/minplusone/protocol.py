"""The min+1 guarded-command protocol over shared process states.

Each process owns two output variables: a parent pointer (a neighbor id or
``None``) and a nonnegative height.  The root resets itself to ``(None, 0)``
whenever it deviates; every other process re-adopts a minimum-height neighbor
as parent and takes that neighbor's height plus one whenever its parent link
or the minimality of its parent's height is broken.

Steps are atomic and synchronous within the activated subset: every activated
process computes its action against the configuration as it stood at the
start of the step.  Byzantine processes do not follow the rules; the daemon
applies whatever state they choose to publish, verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from .topology import Topology


class ProcessState(NamedTuple):
    parent: Optional[int]
    height: int


RULE_ROOT = "root_rule"
RULE_NONROOT = "nonroot_rule"
RULE_BYZANTINE = "byzantine_write"


@dataclass(frozen=True)
class Action:
    process: int
    old: ProcessState
    new: ProcessState
    rule: str

    def changed_vars(self) -> int:
        """Number of output variables this action modified (0, 1 or 2)."""
        return int(self.old.parent != self.new.parent) + int(self.old.height != self.new.height)


@dataclass
class Configuration:
    """One global snapshot: parent and height arrays indexed by process id.

    ``parent`` uses -1 for "no parent"; use :meth:`state` for the
    ``ProcessState`` view.
    """

    parent: np.ndarray
    height: np.ndarray

    @property
    def n(self) -> int:
        return self.parent.shape[0]

    @classmethod
    def from_states(cls, states: Sequence[tuple[Optional[int], int]]) -> "Configuration":
        parent = np.array([_kernels.NIL if p is None else p for p, _ in states], dtype=np.int64)
        height = np.array([h for _, h in states], dtype=np.int64)
        if np.any(height < 0):
            raise ValueError("heights must be nonnegative")
        return cls(parent=parent, height=height)

    def state(self, v: int) -> ProcessState:
        p = int(self.parent[v])
        return ProcessState(None if p == _kernels.NIL else p, int(self.height[v]))

    def states(self) -> list[ProcessState]:
        return [self.state(v) for v in range(self.n)]

    def copy(self) -> "Configuration":
        return Configuration(self.parent.copy(), self.height.copy())

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return np.array_equal(self.parent, other.parent) and np.array_equal(
            self.height, other.height
        )


def validate_configuration(topo: Topology, config: Configuration) -> None:
    """Reject states outside the variable domains.

    Correct processes may only point at a neighbor or nowhere; Byzantine
    published parents may be any process id (they answer to no rule).
    """
    if config.n != topo.n:
        raise ValueError(f"configuration has {config.n} states, topology has {topo.n}")
    if np.any(config.height < 0):
        raise ValueError("heights must be nonnegative")
    if np.any(config.parent < _kernels.NIL) or np.any(config.parent >= topo.n):
        raise ValueError("parent ids out of range")
    for v in range(topo.n):
        p = int(config.parent[v])
        if p == _kernels.NIL or v in topo.byzantine:
            continue
        nbrs = topo.neighbors(v)
        pos = np.searchsorted(nbrs, p)
        if pos >= nbrs.shape[0] or nbrs[pos] != p:
            raise ValueError(f"process {v}: parent {p} is not a neighbor")


def _minh(topo: Topology, config: Configuration) -> np.ndarray:
    return _kernels.neighbor_min_heights(topo.indptr, topo.indices, config.height)


def guard_root(topo: Topology, config: Configuration, v: int) -> bool:
    """Root rule guard: fires unless the root reads (no parent, height 0)."""
    if v != topo.root:
        raise ValueError(f"guard_root called on non-root process {v}")
    return bool(config.parent[v] != _kernels.NIL or config.height[v] != 0)


def guard_nonroot(topo: Topology, config: Configuration, v: int) -> bool:
    """Non-root guard: no parent, broken height link, or non-minimal parent height."""
    if v == topo.root:
        raise ValueError(f"guard_nonroot called on root process {v}")
    p = int(config.parent[v])
    if p == _kernels.NIL:
        return True
    hp = int(config.height[p])
    if int(config.height[v]) != hp + 1:
        return True
    m = int(_kernels.neighbor_min_heights(topo.indptr, topo.indices, config.height)[v])
    return hp != m


def is_enabled(topo: Topology, config: Configuration, v: int) -> bool:
    if v in topo.byzantine:
        return False
    if v == topo.root:
        return guard_root(topo, config, v)
    return guard_nonroot(topo, config, v)


def enabled_set(topo: Topology, config: Configuration) -> frozenset:
    """Correct processes whose guard holds.

    Byzantine processes never appear here: by convention they are
    always activatable, see ``Topology.byzantine``.
    """
    mask = _kernels.enabled_mask(
        config.parent, config.height, _minh(topo, config), topo.root, topo.byz_mask
    )
    return frozenset(np.flatnonzero(mask).tolist())


def circular_successor(
    neighbors: Sequence[int],
    current_parent: Optional[int],
    candidates: Iterable[int],
) -> int:
    """First candidate found scanning the neighbor list in ascending circular
    order starting strictly after ``current_parent``.

    When ``current_parent`` is None or not a neighbor, the scan starts at the
    beginning, i.e. the smallest candidate wins.
    """
    nbrs = [int(x) for x in neighbors]
    cand = {int(c) for c in candidates}
    if not cand:
        raise ValueError("empty candidate set")
    if not cand.issubset(nbrs):
        raise ValueError(f"candidates {sorted(cand - set(nbrs))} are not neighbors")
    start = 0
    if current_parent is not None and current_parent in nbrs:
        start = nbrs.index(current_parent) + 1
    deg = len(nbrs)
    for off in range(deg):
        q = nbrs[(start + off) % deg]
        if q in cand:
            return q
    raise AssertionError("unreachable: candidate set was nonempty")


def apply_action(topo: Topology, config: Configuration, v: int) -> Action:
    """Execute v's rule against the given snapshot.  v must be correct and enabled."""
    if v in topo.byzantine:
        raise ValueError(f"process {v} is Byzantine, it has no rule to apply")
    old = config.state(v)
    if v == topo.root:
        if not guard_root(topo, config, v):
            raise ValueError(f"process {v} is not enabled")
        new = ProcessState(None, 0)
    else:
        if not guard_nonroot(topo, config, v):
            raise ValueError(f"process {v} is not enabled")
        nbrs = topo.neighbors(v)
        heights = config.height[nbrs]
        m = int(heights.min())
        candidates = [int(q) for q, h in zip(nbrs, heights) if h == m]
        p = circular_successor(nbrs, old.parent, candidates)
        new = ProcessState(p, m + 1)
    action = Action(process=v, old=old, new=new, rule=RULE_ROOT if v == topo.root else RULE_NONROOT)
    assert action.changed_vars() > 0, "an enabled rule must modify a variable"
    return action


def step(
    topo: Topology,
    config: Configuration,
    activated: Iterable[int],
    byz_writes: Optional[Mapping[int, ProcessState]] = None,
    *,
    _enabled: Optional[np.ndarray] = None,
    _minh_arr: Optional[np.ndarray] = None,
) -> tuple[Configuration, list[Action]]:
    """One atomic step: all activated processes act on the start-of-step snapshot.

    ``byz_writes`` maps activated Byzantine ids to the state they publish;
    activated Byzantines without an entry publish nothing this step.
    """
    act = sorted({int(v) for v in activated})
    if not act:
        raise ValueError("activated set must be nonempty")
    if act[0] < 0 or act[-1] >= topo.n:
        raise ValueError(f"invalid process id in activated set: {act}")
    writes = dict(byz_writes or {})

    minh = _minh_arr if _minh_arr is not None else _minh(topo, config)
    enabled = (
        _enabled
        if _enabled is not None
        else _kernels.enabled_mask(config.parent, config.height, minh, topo.root, topo.byz_mask)
    )

    for b, st in writes.items():
        if b not in topo.byzantine:
            raise ValueError(f"byzantine write for correct process {b}")
        if b not in act:
            raise ValueError(f"byzantine write for non-activated process {b}")
        if st.parent is not None and not (0 <= st.parent < topo.n):
            raise ValueError(f"byzantine write for {b}: parent {st.parent} out of range")
        if st.height < 0:
            raise ValueError(f"byzantine write for {b}: negative height")
    correct_actors = [v for v in act if v not in topo.byzantine]
    for v in correct_actors:
        if not enabled[v]:
            raise ValueError(f"process {v} is not enabled")

    actors = np.array(correct_actors, dtype=np.int64)
    new_parent = config.parent.copy()
    new_height = config.height.copy()
    actions: list[Action] = []
    if actors.size:
        np_new, nh_new = _kernels.compute_actions(
            topo.indptr, topo.indices, config.parent, config.height, minh, actors, topo.root
        )
        new_parent[actors] = np_new
        new_height[actors] = nh_new
        for i, v in enumerate(correct_actors):
            old = config.state(v)
            new = ProcessState(None if np_new[i] == _kernels.NIL else int(np_new[i]), int(nh_new[i]))
            rule = RULE_ROOT if v == topo.root else RULE_NONROOT
            action = Action(process=v, old=old, new=new, rule=rule)
            assert action.changed_vars() > 0, "an enabled rule must modify a variable"
            actions.append(action)
    for b in sorted(writes):
        st = writes[b]
        old = config.state(b)
        new_parent[b] = _kernels.NIL if st.parent is None else st.parent
        new_height[b] = st.height
        actions.append(Action(process=b, old=old, new=ProcessState(st.parent, st.height),
                              rule=RULE_BYZANTINE))
    actions.sort(key=lambda a: a.process)
    return Configuration(new_parent, new_height), actions
