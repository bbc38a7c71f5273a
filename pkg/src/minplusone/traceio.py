"""JSON-lines trace files.

One step record per line so huge campaign traces stream without full-file
parsing.  Layout: a header object (topology, initial configuration, run
metadata), then one step object per line, then a trailer with the final
configuration and the truncation flag.  Serialization is key-sorted and
compact, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from typing import Optional

from .protocol import Action, Configuration, ProcessState, step as protocol_step
from .topology import Topology
from .trace import CorruptTraceError, Step, Trace

FORMAT_VERSION = 1


def _state_dict(st: ProcessState) -> dict:
    return {"parent": st.parent, "height": st.height}


def _state_from_dict(d: dict) -> ProcessState:
    return ProcessState(d["parent"], d["height"])


def _config_dict(cfg: Configuration) -> dict:
    return {
        "parents": [None if p < 0 else int(p) for p in cfg.parent],
        "heights": [int(h) for h in cfg.height],
    }


def _config_from_dict(d: dict) -> Configuration:
    return Configuration.from_states(list(zip(d["parents"], d["heights"])))


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_trace(trace: Trace, path) -> None:
    topo = trace.topo
    header = {
        "type": "header",
        "format": FORMAT_VERSION,
        "n": topo.n,
        "root": topo.root,
        "byzantine": sorted(topo.byzantine),
        "edges": [[u, v] for u, v in topo.edges()],
        "initial": _config_dict(trace.initial),
        "meta": trace.meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dumps(header) + "\n")
        for i, st in enumerate(trace.steps):
            rec = {
                "type": "step",
                "step": i,
                "activated": list(st.activated),
                "actions": [
                    {
                        "process": a.process,
                        "rule": a.rule,
                        "old": _state_dict(a.old),
                        "new": _state_dict(a.new),
                    }
                    for a in st.actions
                ],
            }
            fh.write(_dumps(rec) + "\n")
        trailer = {
            "type": "end",
            "steps": trace.num_steps,
            "truncated": trace.truncated,
            "final": _config_dict(trace.final),
        }
        fh.write(_dumps(trailer) + "\n")


def read_trace(path) -> Trace:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CorruptTraceError(f"{path}: empty trace file")
    header = json.loads(lines[0])
    if header.get("type") != "header":
        raise CorruptTraceError(f"{path}: first line is not a header")
    if header.get("format") != FORMAT_VERSION:
        raise CorruptTraceError(f"{path}: unsupported format {header.get('format')}")
    topo = Topology.from_edges(
        header["n"],
        [tuple(e) for e in header["edges"]],
        root=header["root"],
        byzantine=header["byzantine"],
    )
    steps: list[Step] = []
    trailer: Optional[dict] = None
    for lineno, raw in enumerate(lines[1:], start=2):
        rec = json.loads(raw)
        kind = rec.get("type")
        if kind == "step":
            if rec.get("step") != len(steps):
                raise CorruptTraceError(f"{path}: line {lineno}: step index mismatch")
            actions = tuple(
                Action(
                    process=a["process"],
                    old=_state_from_dict(a["old"]),
                    new=_state_from_dict(a["new"]),
                    rule=a["rule"],
                )
                for a in rec["actions"]
            )
            steps.append(Step(tuple(rec["activated"]), actions))
        elif kind == "end":
            trailer = rec
        else:
            raise CorruptTraceError(f"{path}: line {lineno}: unknown record type {kind!r}")
    if trailer is None:
        raise CorruptTraceError(f"{path}: missing end record")
    if trailer["steps"] != len(steps):
        raise CorruptTraceError(f"{path}: end record claims {trailer['steps']} steps, file has {len(steps)}")
    return Trace(
        topo=topo,
        initial=_config_from_dict(header["initial"]),
        steps=steps,
        final=_config_from_dict(trailer["final"]),
        truncated=trailer["truncated"],
        meta=header.get("meta", {}),
    )


def verify_trace(trace: Trace) -> None:
    """Re-derive every configuration through the protocol's step function.

    This is the strong round-trip check: the recorded activated sets and
    Byzantine writes must reproduce every recorded action and land exactly on
    the recorded final configuration.
    """
    topo = trace.topo
    cur = trace.initial.copy()
    for i, st in enumerate(trace.steps):
        writes = {
            a.process: a.new for a in st.actions if a.rule == "byzantine_write"
        }
        try:
            nxt, actions = protocol_step(topo, cur, st.activated, writes)
        except ValueError as exc:
            raise CorruptTraceError(f"corrupt trace: step {i} does not replay: {exc}") from None
        if tuple(actions) != st.actions:
            raise CorruptTraceError(f"corrupt trace: step {i} actions differ on replay")
        cur = nxt
    if cur != trace.final:
        raise CorruptTraceError("corrupt trace: replayed final configuration differs")
