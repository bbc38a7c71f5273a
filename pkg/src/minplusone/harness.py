"""Experiment harness: configs, initial configurations, runs and campaigns.

Defaults mirror the protocol's natural scales: fairness bound 2n, Byzantine
height cap 4n, stop padding 10*n*max_degree.  With zone "strict" a run's
perturbation count is checked against the n*max_degree bound; zone "wide"
carries no count bound, so ``bound_respected`` is None there.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .adversary import ADVERSARY_KINDS, AdversaryStrategy
from .checker import PerturbationReport, analyze_trace, containment_index, _scan_trace
from .protocol import Configuration, validate_configuration
from .scheduler import POLICY_KINDS, SchedulerPolicy, run
from .topology import (
    Topology,
    ZONES,
    ZoneReport,
    bfs_distances,
    compute_zones,
    generate_graph,
    load_graph,
)
from .trace import Trace
from . import traceio


class ConfigError(ValueError):
    pass


INIT_KINDS = ("legitimate", "random", "file")


@dataclass(frozen=True)
class ExperimentConfig:
    # graph source: exactly one of graph_file / generate
    graph_file: Optional[str] = None
    generate: Optional[dict] = None  # {"kind": ..., "n"/"rows"/"cols"/"edge_prob"/"seed": ...}
    root: Optional[int] = None       # None: file header or 0
    byzantine: Optional[tuple[int, ...]] = None  # None: file header or empty

    init_kind: str = "random"
    init_seed: int = 0
    init_height_bound: Optional[int] = None  # None resolves to 2n
    init_file: Optional[str] = None

    policy_kind: str = "round_robin"
    policy_seed: int = 0
    fairness_bound: Optional[int] = None     # None resolves to 2n

    adversary_kind: str = "silent"
    adversary_seed: int = 0
    height_cap: Optional[int] = None         # None resolves to 4n

    max_steps: Optional[int] = None          # None resolves to 20n^2 + 40*padding
    zone: str = "wide"
    stop_padding: Optional[int] = None       # None resolves to 10*n*max_degree

    trace_out: Optional[str] = None
    report_out: Optional[str] = None
    zones_out: Optional[str] = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        bad = sorted(set(data) - known)
        if bad:
            raise ConfigError(f"unknown config fields: {bad}")
        kwargs = dict(data)
        if kwargs.get("byzantine") is not None:
            kwargs["byzantine"] = tuple(int(b) for b in kwargs["byzantine"])
        cfg = cls(**kwargs)
        cfg.validate_static()
        return cfg

    def validate_static(self) -> None:
        """Field-level validation that needs no topology; collects all problems."""
        problems = []
        if (self.graph_file is None) == (self.generate is None):
            problems.append("exactly one of graph_file / generate is required")
        if self.init_kind not in INIT_KINDS:
            problems.append(f"init_kind must be one of {INIT_KINDS}, got {self.init_kind!r}")
        if self.init_kind == "file" and not self.init_file:
            problems.append("init_kind 'file' needs init_file")
        if self.policy_kind not in POLICY_KINDS:
            problems.append(f"policy_kind must be one of {POLICY_KINDS}, got {self.policy_kind!r}")
        if self.adversary_kind not in ADVERSARY_KINDS:
            problems.append(
                f"adversary_kind must be one of {ADVERSARY_KINDS}, got {self.adversary_kind!r}")
        if self.zone not in ZONES:
            problems.append(f"zone must be one of {ZONES}, got {self.zone!r}")
        for name in ("fairness_bound", "height_cap", "max_steps", "stop_padding",
                     "init_height_bound"):
            val = getattr(self, name)
            if val is not None and val < (1 if name in ("fairness_bound", "max_steps") else 0):
                problems.append(f"{name} out of range: {val}")
        if problems:
            raise ConfigError("invalid config: " + "; ".join(problems))


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return ExperimentConfig.from_dict(data)


def build_topology(config: ExperimentConfig) -> Topology:
    if config.graph_file is not None:
        topo = load_graph(config.graph_file)
        root = topo.root if config.root is None else config.root
        byz = topo.byzantine if config.byzantine is None else frozenset(config.byzantine)
        if root != topo.root or byz != topo.byzantine:
            topo = topo.replace_faults(root=root, byzantine=byz)
    else:
        gen = dict(config.generate or {})
        kind = gen.pop("kind", None)
        if kind is None:
            raise ConfigError("the generate field needs a 'kind'")
        topo = generate_graph(
            kind,
            root=config.root if config.root is not None else 0,
            byzantine=config.byzantine or (),
            **gen,
        )
    if len(topo.byzantine) > topo.n - 1:
        raise ConfigError(f"at most n-1 Byzantine processes allowed, got {len(topo.byzantine)}")
    return topo


# ---------------------------------------------------------------------------
# initial configurations


def legitimate_configuration(topo: Topology) -> Configuration:
    """Heights equal root distances, parents point at the smallest-id
    neighbor one hop closer.  Every process, Byzantine included, starts
    on the tree: a closure fixture."""
    dist = bfs_distances(topo, [topo.root])
    parent = np.full(topo.n, -1, dtype=np.int64)
    for v in range(topo.n):
        if v == topo.root:
            continue
        nbrs = topo.neighbors(v)
        closer = nbrs[dist[nbrs] == dist[v] - 1]
        parent[v] = int(closer[0])
    return Configuration(parent=parent, height=dist.copy())


def random_configuration(topo: Topology, seed: int, height_bound: int) -> Configuration:
    """Parent uniform over neighbors plus "none", height uniform in
    [0, height_bound]; the standard arbitrary-start fixture."""
    rng = np.random.default_rng(seed)
    parent = np.empty(topo.n, dtype=np.int64)
    for v in range(topo.n):
        nbrs = topo.neighbors(v)
        pick = int(rng.integers(0, nbrs.size + 1))
        parent[v] = -1 if pick == nbrs.size else int(nbrs[pick])
    height = rng.integers(0, height_bound + 1, size=topo.n).astype(np.int64)
    return Configuration(parent=parent, height=height)


def load_configuration_file(topo: Topology, path) -> Configuration:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        parents = data["parents"]
        heights = data["heights"]
    except (KeyError, TypeError):
        raise ConfigError(f"{path}: expected an object with 'parents' and 'heights'") from None
    if len(parents) != topo.n or len(heights) != topo.n:
        raise ConfigError(f"{path}: expected {topo.n} entries")
    cfg = Configuration.from_states(list(zip(parents, heights)))
    validate_configuration(topo, cfg)
    return cfg


def build_initial(topo: Topology, config: ExperimentConfig) -> Configuration:
    if config.init_kind == "legitimate":
        return legitimate_configuration(topo)
    if config.init_kind == "random":
        bound = config.init_height_bound if config.init_height_bound is not None else 2 * topo.n
        return random_configuration(topo, config.init_seed, bound)
    return load_configuration_file(topo, config.init_file)


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class RunMetrics:
    n: int
    max_degree: int
    zone: str
    steps: int
    truncated: bool
    contained_at: Optional[int]
    perturbation_count: int
    max_changes: int
    bound: int
    bound_respected: Optional[bool]

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "max_degree": self.max_degree,
            "zone": self.zone,
            "steps": self.steps,
            "truncated": self.truncated,
            "contained_at": self.contained_at,
            "perturbation_count": self.perturbation_count,
            "max_changes": self.max_changes,
            "bound": self.bound,
            "bound_respected": self.bound_respected,
        }


@dataclass(frozen=True)
class ExperimentResult:
    topo: Topology
    zones: ZoneReport
    trace: Trace
    report: PerturbationReport
    metrics: RunMetrics


def metrics_from_trace(trace: Trace, zones: ZoneReport, zone: str) -> tuple[RunMetrics, PerturbationReport]:
    topo = trace.topo
    scan = _scan_trace(trace, zones, zone)
    report = analyze_trace(trace, zones, zone, _scan=scan)
    contained = containment_index(trace, zones, zone, _scan=scan)
    k = report.max_out_zone_changes(topo, zones)
    bound = topo.n * max(1, topo.max_degree)
    respected: Optional[bool] = None
    if zone == "strict":
        respected = report.perturbation_count <= bound
    metrics = RunMetrics(
        n=topo.n,
        max_degree=topo.max_degree,
        zone=zone,
        steps=trace.num_steps,
        truncated=trace.truncated,
        contained_at=contained,
        perturbation_count=report.perturbation_count,
        max_changes=k,
        bound=bound,
        bound_respected=respected,
    )
    return metrics, report


def _dump_json(data, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
        fh.write("\n")


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run one seeded experiment and write any requested artifacts."""
    config.validate_static()
    topo = build_topology(config)
    zones = compute_zones(topo)
    initial = build_initial(topo, config)

    n = topo.n
    policy = SchedulerPolicy(
        kind=config.policy_kind,
        seed=config.policy_seed,
        fairness_bound=config.fairness_bound if config.fairness_bound is not None else 2 * n,
    )
    adversary = AdversaryStrategy(
        kind=config.adversary_kind,
        seed=config.adversary_seed,
        height_cap=config.height_cap if config.height_cap is not None else 4 * n,
    )
    padding = (
        config.stop_padding
        if config.stop_padding is not None
        else 10 * n * max(1, topo.max_degree)
    )
    max_steps = (
        config.max_steps
        if config.max_steps is not None
        else 20 * n * n + 40 * padding + 200
    )

    trace = run(
        topo, initial, policy,
        adversary=adversary if topo.byzantine else None,
        max_steps=max_steps, zone=config.zone, stop_padding=padding,
    )
    metrics, report = metrics_from_trace(trace, zones, config.zone)

    if config.trace_out:
        traceio.write_trace(trace, config.trace_out)
    if config.zones_out:
        _dump_json(zones.to_json_dict(), config.zones_out)
    if config.report_out:
        _dump_json(metrics.to_json_dict(), config.report_out)
    return ExperimentResult(topo=topo, zones=zones, trace=trace, report=report, metrics=metrics)


def run_campaign(
    config: ExperimentConfig,
    num_runs: int,
    seed_stride: int = 1,
    report_path=None,
) -> dict:
    """Independent seeded runs; aggregates perturbation and change counts.

    Per-run failures (exceptions) are collected, not fatal.  The aggregate is
    a plain JSON-ready dict; rerunning with the same config is byte-identical.
    """
    if num_runs < 1:
        raise ConfigError(f"num_runs must be >= 1, got {num_runs}")
    runs = []
    errors = []
    for i in range(num_runs):
        shift = i * seed_stride
        per_run = replace(
            config,
            policy_seed=config.policy_seed + shift,
            adversary_seed=config.adversary_seed + shift,
            init_seed=config.init_seed + shift,
            trace_out=None, report_out=None, zones_out=None,
        )
        try:
            result = run_experiment(per_run)
        except Exception as exc:  # noqa: BLE001 - campaign keeps going
            errors.append({"run": i, "error": f"{type(exc).__name__}: {exc}"})
            continue
        runs.append({"run": i, **result.metrics.to_json_dict()})

    t_values = [r["perturbation_count"] for r in runs]
    k_values = [r["max_changes"] for r in runs]
    failures = sum(1 for r in runs if r["contained_at"] is None)
    bound_checked = [r for r in runs if r["bound_respected"] is not None]
    violations = sum(1 for r in bound_checked if not r["bound_respected"])
    aggregate = {
        "num_runs": num_runs,
        "seed_stride": seed_stride,
        "completed": len(runs),
        "errors": errors,
        "containment_failures": failures,
        "bound_checks": len(bound_checked),
        "bound_violations": violations,
        "perturbations_max": max(t_values) if t_values else 0,
        "perturbations_mean": (sum(t_values) / len(t_values)) if t_values else 0.0,
        "max_changes_max": max(k_values) if k_values else 0,
        "max_changes_mean": (sum(k_values) / len(k_values)) if k_values else 0.0,
        "runs": runs,
    }
    if report_path:
        _dump_json(aggregate, report_path)
    return aggregate
