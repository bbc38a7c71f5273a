"""Simulator and trace checker for a self-stabilizing BFS spanning-tree
protocol under permanent Byzantine faults."""

from ._kernels import backend_name
from .adversary import ADVERSARY_KINDS, AdversaryStrategy, byz_write
from .checker import (
    PerturbationReport,
    analyze_trace,
    containment_index,
    is_locally_correct,
    is_zone_legitimate,
    is_zone_stable,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    RunMetrics,
    build_initial,
    build_topology,
    legitimate_configuration,
    load_config,
    metrics_from_trace,
    random_configuration,
    run_campaign,
    run_experiment,
)
from .protocol import (
    Action,
    Configuration,
    ProcessState,
    apply_action,
    circular_successor,
    enabled_set,
    guard_nonroot,
    guard_root,
    step,
)
from .scheduler import (
    POLICY_KINDS,
    DeadlockReached,
    FairnessLedger,
    SchedulerPolicy,
    run,
    select,
)
from .topology import (
    INF_DIST,
    ZONE_STRICT,
    ZONE_WIDE,
    Topology,
    ZoneReport,
    bfs_distances,
    complete_graph,
    compute_zones,
    generate_graph,
    load_graph,
    parse_edge_list,
    save_graph,
)
from .trace import CorruptTraceError, Step, Trace

__version__ = "0.1.0"
