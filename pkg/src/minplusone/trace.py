"""Execution traces: ordered step records over a fixed topology.

A trace stores the initial and final configurations plus, per step, the
activated set and the actions taken.  Intermediate configurations are not
materialized; they are reconstructed on demand by replaying actions, which
keeps multi-thousand-step campaign traces cheap to hold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .protocol import Action, Configuration
from .topology import Topology


class CorruptTraceError(ValueError):
    pass


@dataclass(frozen=True)
class Step:
    activated: tuple[int, ...]
    actions: tuple[Action, ...]


@dataclass
class Trace:
    topo: Topology
    initial: Configuration
    steps: list[Step]
    final: Configuration
    truncated: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    def iter_configs(self) -> Iterator[Configuration]:
        """Yield configurations 0..num_steps, replaying recorded actions.

        Raises CorruptTraceError when an action's old state does not match
        the configuration it claims to act on.
        """
        cur = self.initial.copy()
        yield cur.copy()
        for i, step in enumerate(self.steps):
            for a in step.actions:
                if cur.state(a.process) != a.old:
                    raise CorruptTraceError(
                        f"corrupt trace: step {i} action at {a.process} expects "
                        f"{a.old}, configuration holds {cur.state(a.process)}"
                    )
            for a in step.actions:
                cur.parent[a.process] = -1 if a.new.parent is None else a.new.parent
                cur.height[a.process] = a.new.height
            yield cur.copy()

    def config_at(self, index: int) -> Configuration:
        if not (0 <= index <= self.num_steps):
            raise IndexError(f"config index {index} out of range 0..{self.num_steps}")
        for i, cfg in enumerate(self.iter_configs()):
            if i == index:
                return cfg
        raise AssertionError("unreachable")

    def check_final(self) -> None:
        """Verify that replaying the actions lands exactly on `final`."""
        last = None
        for last in self.iter_configs():
            pass
        if last != self.final:
            raise CorruptTraceError("corrupt trace: replayed final configuration differs")
