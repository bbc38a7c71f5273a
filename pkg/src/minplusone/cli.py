"""Command-line interface.

Subcommands: run, campaign, zones, exhaustive, replay.  Exit codes: 0 on
success, 1 when a checked claim is violated (containment failure, bound
violation, corrupt trace), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import harness, traceio
from .exhaustive import FAMILIES, DEFAULT_MAX_EDGES, DEFAULT_MAX_STATES, exhaustive_check
from .harness import ConfigError, ExperimentConfig, load_config, metrics_from_trace
from .topology import GRAPH_KINDS, ZONES, compute_zones, generate_graph, load_graph
from .trace import CorruptTraceError


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="edge-list file (first line: 'n root byz1,byz2,...')")
    p.add_argument("--generate", choices=GRAPH_KINDS, help="generate a graph instead of reading one")
    p.add_argument("--n", type=int, help="process count for generated graphs")
    p.add_argument("--rows", type=int, help="grid rows")
    p.add_argument("--cols", type=int, help="grid cols")
    p.add_argument("--edge-prob", type=float, help="edge probability for random_connected")
    p.add_argument("--graph-seed", type=int, default=0, help="generator seed")
    p.add_argument("--root", type=int, help="root id (default: file header or 0)")
    p.add_argument("--byz", help="comma-separated Byzantine ids (default: file header or none)")


def _add_run_args(p: argparse.ArgumentParser) -> None:
    _add_graph_args(p)
    p.add_argument("--init",
                   help="initial configuration: legitimate | random | <file.json> (default random)")
    p.add_argument("--init-seed", type=int)
    p.add_argument("--init-height-bound", type=int, help="height bound for random init (default 2n)")
    p.add_argument("--policy",
                   choices=("round_robin", "randomized", "central_random", "adversarial_greedy"),
                   help="scheduler policy (default round_robin)")
    p.add_argument("--seed", type=int, help="scheduler seed")
    p.add_argument("--fairness-bound", type=int, help="bounded-fairness window (default 2n)")
    p.add_argument("--adversary",
                   choices=("silent", "fake_root", "oscillator", "random_writer", "min_under_cutter"),
                   help="Byzantine strategy (default silent)")
    p.add_argument("--adversary-seed", type=int)
    p.add_argument("--height-cap", type=int, help="cap on Byzantine-published heights (default 4n)")
    p.add_argument("--max-steps", type=int, help="step budget (default 20n^2 + 40*padding)")
    p.add_argument("--zone", choices=ZONES, help="containment zone to check (default wide)")
    p.add_argument("--stop-padding", type=int,
                   help="adversary-active steps required after settling (default 10*n*max_degree)")
    p.add_argument("--config", help="JSON config file; explicit flags override it")
    p.add_argument("--trace-out", help="write the trace (JSON lines)")
    p.add_argument("--report-out", help="write run metrics (JSON)")
    p.add_argument("--zones-out", help="write the zone report (JSON)")


def _config_from_args(args, parser) -> ExperimentConfig:
    base: dict = {}
    if args.config:
        base = load_config(args.config).__dict__.copy()

    def put(key, value):
        if value is not None:
            base[key] = value

    if args.generate:
        gen = {"kind": args.generate, "seed": args.graph_seed}
        for k in ("n", "rows", "cols", "edge_prob"):
            if getattr(args, k) is not None:
                gen[k] = getattr(args, k)
        base["generate"] = gen
        base["graph_file"] = None
    if args.graph:
        base["graph_file"] = args.graph
        base["generate"] = None
    put("root", args.root)
    if args.byz is not None:
        base["byzantine"] = tuple(int(b) for b in args.byz.split(",") if b.strip() != "")
    if args.init is not None:
        if args.init in ("legitimate", "random"):
            base["init_kind"] = args.init
            base["init_file"] = None
        else:
            base["init_kind"] = "file"
            base["init_file"] = args.init
    put("init_seed", args.init_seed)
    put("init_height_bound", args.init_height_bound)
    put("policy_kind", args.policy)
    put("policy_seed", args.seed)
    put("fairness_bound", args.fairness_bound)
    put("adversary_kind", args.adversary)
    put("adversary_seed", args.adversary_seed)
    put("height_cap", args.height_cap)
    put("max_steps", args.max_steps)
    put("zone", args.zone)
    put("stop_padding", args.stop_padding)
    put("trace_out", args.trace_out)
    put("report_out", args.report_out)
    put("zones_out", args.zones_out)
    try:
        return ExperimentConfig.from_dict(base)
    except ConfigError as exc:
        parser.error(str(exc))


def _cmd_run(args, parser) -> int:
    config = _config_from_args(args, parser)
    result = harness.run_experiment(config)
    m = result.metrics
    print(json.dumps(m.to_json_dict(), sort_keys=True))
    violated = m.contained_at is None or m.bound_respected is False
    return 1 if violated else 0


def _cmd_campaign(args, parser) -> int:
    config = _config_from_args(args, parser)
    report = harness.run_campaign(config, args.runs, args.seed_stride, report_path=args.out)
    summary = {k: v for k, v in report.items() if k != "runs"}
    print(json.dumps(summary, sort_keys=True))
    bad = report["containment_failures"] or report["bound_violations"]
    return 1 if bad else 0


def _topology_from_args(args, parser):
    byz = None
    if args.byz is not None:
        byz = tuple(int(b) for b in args.byz.split(",") if b.strip() != "")
    if args.graph:
        topo = load_graph(args.graph)
        root = topo.root if args.root is None else args.root
        byzantine = topo.byzantine if byz is None else frozenset(byz)
        if root != topo.root or byzantine != topo.byzantine:
            topo = topo.replace_faults(root=root, byzantine=byzantine)
        return topo
    if args.generate:
        kwargs = {}
        for k in ("n", "rows", "cols", "edge_prob"):
            if getattr(args, k) is not None:
                kwargs[k] = getattr(args, k)
        return generate_graph(
            args.generate, seed=args.graph_seed,
            root=args.root if args.root is not None else 0,
            byzantine=byz or (), **kwargs,
        )
    parser.error("one of --graph / --generate is required")


def _cmd_zones(args, parser) -> int:
    topo = _topology_from_args(args, parser)
    zones = compute_zones(topo)
    payload = zones.to_json_dict()
    if args.out:
        harness._dump_json(payload, args.out)
    print(json.dumps(payload, sort_keys=True))
    return 0


def _cmd_exhaustive(args, parser) -> int:
    families = tuple(f.strip() for f in args.families.split(",") if f.strip())
    for f in families:
        if f not in FAMILIES:
            parser.error(f"unknown family {f!r} (expected from {FAMILIES})")
    report = exhaustive_check(
        args.n_max, families,
        zone=args.zone, max_states=args.max_states, max_edges=args.max_edges,
    )
    payload = report.to_json_dict()
    if args.out:
        harness._dump_json(payload, args.out)
    for inst in report.instances:
        status = "ok" if inst.complete else f"exhausted ({inst.exhausted})"
        print(
            f"{inst.family} n={inst.n} byz={list(inst.byzantine)}: "
            f"{inst.states} states, {inst.edges} edges, "
            f"violations={inst.violations}, {status}"
        )
    print(f"total violations: {report.total_violations}, incomplete: {report.incomplete}")
    return 1 if report.total_violations else 0


def _cmd_replay(args, parser) -> int:
    try:
        trace = traceio.read_trace(args.trace)
        traceio.verify_trace(trace)
    except CorruptTraceError as exc:
        print(f"replay failed: {exc}", file=sys.stderr)
        return 1
    zones = compute_zones(trace.topo)
    zone = trace.meta.get("zone", "wide")
    metrics, _ = metrics_from_trace(trace, zones, zone)
    print(json.dumps(metrics.to_json_dict(), sort_keys=True))
    if args.report:
        with open(args.report, encoding="utf-8") as fh:
            recorded = json.load(fh)
        if recorded != metrics.to_json_dict():
            print("replay failed: recomputed metrics differ from recorded report",
                  file=sys.stderr)
            return 1
    print(f"replay ok: {trace.num_steps} steps verified")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minplusone",
        description="Self-stabilizing BFS-tree protocol simulator and trace checker",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one seeded experiment")
    _add_run_args(p_run)

    p_camp = sub.add_parser("campaign", help="run many seeded experiments and aggregate")
    _add_run_args(p_camp)
    p_camp.add_argument("--runs", type=int, required=True)
    p_camp.add_argument("--seed-stride", type=int, default=1)
    p_camp.add_argument("--out", help="write the aggregate report (JSON)")

    p_zones = sub.add_parser("zones", help="compute containment zones for a graph")
    _add_graph_args(p_zones)
    p_zones.add_argument("--out", help="write the zone report (JSON)")

    p_ex = sub.add_parser("exhaustive", help="explore small instances under all daemon choices")
    p_ex.add_argument("--n-max", type=int, default=5)
    p_ex.add_argument("--families", default=",".join(FAMILIES))
    p_ex.add_argument("--zone", default="wide", choices=ZONES)
    p_ex.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)
    p_ex.add_argument("--max-edges", type=int, default=DEFAULT_MAX_EDGES)
    p_ex.add_argument("--out", help="write the full report (JSON)")

    p_rep = sub.add_parser("replay", help="verify a trace file by re-deriving every step")
    p_rep.add_argument("trace", help="trace file (JSON lines)")
    p_rep.add_argument("--report", help="metrics file to check against")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "campaign": _cmd_campaign,
        "zones": _cmd_zones,
        "exhaustive": _cmd_exhaustive,
        "replay": _cmd_replay,
    }
    try:
        return handlers[args.command](args, parser)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
