"""Static communication graphs, hop distances, and containment zones.

A topology is an undirected connected graph with a designated root process
and a (possibly empty) set of Byzantine processes.  Neighbor lists are kept
in CSR form sorted ascending; that ascending order doubles as the circular
order used by the protocol's parent tie-breaking rule.

Two containment zones are derived from hop distances:

* ``wide``   = processes at most as close to the nearest Byzantine as to the
  root (ties included),
* ``strict`` = processes strictly closer to the nearest Byzantine.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels

ZONE_WIDE = "wide"
ZONE_STRICT = "strict"
ZONES = (ZONE_WIDE, ZONE_STRICT)

# distance to an empty Byzantine set: min over the empty set is +infinity
INF_DIST = np.iinfo(np.int64).max // 4

GRAPH_KINDS = ("path", "ring", "grid", "star", "random_connected")


@dataclass(frozen=True, eq=False)
class Topology:
    """Undirected connected graph with root and Byzantine set.

    Attributes:
        n: number of processes, ids are dense 0..n-1
        indptr, indices: CSR adjacency, neighbor ids sorted ascending
        root: the designated root process (never Byzantine)
        byzantine: frozenset of Byzantine process ids
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    root: int
    byzantine: frozenset

    def __post_init__(self):
        byz_mask = np.zeros(self.n, dtype=np.bool_)
        for b in self.byzantine:
            byz_mask[b] = True
        object.__setattr__(self, "byz_mask", byz_mask)
        degrees = self.indptr[1:] - self.indptr[:-1]
        object.__setattr__(self, "degrees", degrees)

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        root: int = 0,
        byzantine: Iterable[int] = (),
    ) -> "Topology":
        if n < 1:
            raise ValueError(f"process count must be >= 1, got {n}")
        edge_list = [(int(u), int(v)) for u, v in edges]
        seen = set()
        for u, v in edge_list:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) references an invalid process id")
            if u == v:
                raise ValueError(f"self-loop at process {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge ({key[0]}, {key[1]})")
            seen.add(key)
        adj = [[] for _ in range(n)]
        for u, v in seen:
            adj[u].append(v)
            adj[v].append(u)
        indptr = np.zeros(n + 1, dtype=np.int64)
        for v in range(n):
            indptr[v + 1] = indptr[v] + len(adj[v])
        indices = np.empty(indptr[-1], dtype=np.int64)
        for v in range(n):
            indices[indptr[v]:indptr[v + 1]] = sorted(adj[v])

        if not (0 <= root < n):
            raise ValueError(f"invalid root id {root}")
        byz = frozenset(int(b) for b in byzantine)
        for b in byz:
            if not (0 <= b < n):
                raise ValueError(f"invalid Byzantine id {b}")
        if root in byz:
            raise ValueError(f"root {root} cannot be Byzantine")

        dist = _kernels.bfs_distances_raw(indptr, indices, np.array([0], dtype=np.int64))
        if np.any(dist < 0):
            missing = np.flatnonzero(dist < 0)
            raise ValueError(f"graph is not connected (unreachable: {missing.tolist()})")
        return cls(n=n, indptr=indptr, indices=indices, root=root, byzantine=byz)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n > 1 else 0

    @property
    def correct_mask(self) -> np.ndarray:
        return ~self.byz_mask

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for v in range(self.n):
            for u in self.neighbors(v):
                if v < u:
                    out.append((v, int(u)))
        return out

    def replace_faults(self, root: int | None = None,
                       byzantine: Iterable[int] | None = None) -> "Topology":
        """Same graph, different root and/or Byzantine set."""
        return Topology.from_edges(
            self.n,
            self.edges(),
            root=self.root if root is None else root,
            byzantine=self.byzantine if byzantine is None else byzantine,
        )

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return (
            self.n == other.n
            and self.root == other.root
            and self.byzantine == other.byzantine
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )


@dataclass(frozen=True)
class ZoneReport:
    """Per-process distances and containment-zone membership.

    ``dist_byz`` is INF_DIST everywhere when the Byzantine set is empty, in
    which case both zones are empty.
    """

    dist_root: np.ndarray
    dist_byz: np.ndarray
    in_wide: np.ndarray
    in_strict: np.ndarray

    def in_zone(self, zone: str) -> np.ndarray:
        if zone == ZONE_WIDE:
            return self.in_wide
        if zone == ZONE_STRICT:
            return self.in_strict
        raise ValueError(f"unknown zone {zone!r}")

    def wide_ids(self) -> list[int]:
        return np.flatnonzero(self.in_wide).tolist()

    def strict_ids(self) -> list[int]:
        return np.flatnonzero(self.in_strict).tolist()

    def to_json_dict(self) -> dict:
        unreachable = self.dist_byz >= INF_DIST
        return {
            "dist_root": self.dist_root.tolist(),
            "dist_byz": [None if u else int(d) for d, u in zip(self.dist_byz, unreachable)],
            "in_wide": self.in_wide.tolist(),
            "in_strict": self.in_strict.tolist(),
        }


def bfs_distances(topo: Topology, sources: Iterable[int]) -> np.ndarray:
    """Min hop distance from every process to the nearest source (multi-source BFS)."""
    src = np.array(sorted({int(s) for s in sources}), dtype=np.int64)
    if src.size == 0:
        raise ValueError("no sources")
    if src[0] < 0 or src[-1] >= topo.n:
        raise ValueError(f"invalid process id in sources: {src.tolist()}")
    return _kernels.bfs_distances_raw(topo.indptr, topo.indices, src)


def compute_zones(topo: Topology) -> ZoneReport:
    dist_root = bfs_distances(topo, [topo.root])
    if topo.byzantine:
        dist_byz = bfs_distances(topo, topo.byzantine)
    else:
        dist_byz = np.full(topo.n, INF_DIST, dtype=np.int64)
    in_wide = dist_byz <= dist_root
    in_strict = dist_byz < dist_root
    return ZoneReport(dist_root=dist_root, dist_byz=dist_byz,
                      in_wide=in_wide, in_strict=in_strict)


def out_zone_correct_mask(topo: Topology, zones: ZoneReport, zone: str) -> np.ndarray:
    """Correct processes outside the chosen containment zone."""
    return ~zones.in_zone(zone) & topo.correct_mask


# ---------------------------------------------------------------------------
# generators


def _path_edges(n):
    return [(i, i + 1) for i in range(n - 1)]


def _ring_edges(n):
    if n < 3:
        raise ValueError(f"ring needs n >= 3, got {n}")
    return [(i, (i + 1) % n) for i in range(n)]


def _star_edges(n):
    if n < 2:
        raise ValueError(f"star needs n >= 2, got {n}")
    return [(0, i) for i in range(1, n)]


def _grid_edges(rows, cols):
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dims must be >= 1, got {rows}x{cols}")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return edges


def generate_graph(
    kind: str,
    *,
    n: int | None = None,
    rows: int | None = None,
    cols: int | None = None,
    edge_prob: float | None = None,
    seed: int = 0,
    root: int = 0,
    byzantine: Iterable[int] = (),
) -> Topology:
    """Deterministic test-graph generator.

    ``random_connected`` draws G(n, p) with the given seed and redraws until
    the graph is connected; everything else is a fixed family.
    """
    if kind == "path":
        if n is None or n < 1:
            raise ValueError("path needs n >= 1")
        edges = _path_edges(n)
    elif kind == "ring":
        if n is None:
            raise ValueError("ring needs n")
        edges = _ring_edges(n)
    elif kind == "star":
        if n is None:
            raise ValueError("star needs n")
        edges = _star_edges(n)
    elif kind == "grid":
        if rows is None or cols is None:
            raise ValueError("grid needs rows and cols")
        edges = _grid_edges(rows, cols)
        n = rows * cols
    elif kind == "random_connected":
        if n is None or n < 1:
            raise ValueError("random_connected needs n >= 1")
        if edge_prob is None or not (0.0 < edge_prob <= 1.0):
            if n == 1:
                edge_prob = 1.0
            else:
                raise ValueError(f"random_connected needs 0 < edge_prob <= 1, got {edge_prob}")
        rng = np.random.default_rng(seed)
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        for _ in range(10000):
            draw = rng.random(len(pairs)) < edge_prob
            edges = [e for e, keep in zip(pairs, draw) if keep]
            try:
                return Topology.from_edges(n, edges, root=root, byzantine=byzantine)
            except ValueError as exc:
                if "not connected" not in str(exc):
                    raise
        raise ValueError(
            f"could not draw a connected graph (n={n}, edge_prob={edge_prob}, seed={seed})"
        )
    else:
        raise ValueError(f"unknown graph kind {kind!r} (expected one of {GRAPH_KINDS})")
    return Topology.from_edges(n, edges, root=root, byzantine=byzantine)


def complete_graph(n: int, root: int = 0, byzantine: Iterable[int] = ()) -> Topology:
    if n < 1:
        raise ValueError(f"complete graph needs n >= 1, got {n}")
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return Topology.from_edges(n, edges, root=root, byzantine=byzantine)


# ---------------------------------------------------------------------------
# edge-list text format
#
#   first line:  n root byz_id1,byz_id2,...   (third field may be empty/absent)
#   then one "u v" pair per line; '#' starts a comment


def parse_edge_list(text: str) -> Topology:
    lines = text.splitlines()
    header = None
    header_no = 0
    body = []
    for i, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            header = line
            header_no = i
        else:
            body.append((i, line))
    if header is None:
        raise ValueError("line 1: missing header line 'n root byz,...'")
    parts = header.split()
    if len(parts) not in (2, 3):
        raise ValueError(f"line {header_no}: header must be 'n root [byz,...]', got {header!r}")
    try:
        n = int(parts[0])
        root = int(parts[1])
    except ValueError:
        raise ValueError(f"line {header_no}: n and root must be integers, got {header!r}") from None
    byz = []
    if len(parts) == 3 and parts[2]:
        for tok in parts[2].split(","):
            tok = tok.strip()
            if not tok:
                continue
            try:
                byz.append(int(tok))
            except ValueError:
                raise ValueError(f"line {header_no}: bad Byzantine id {tok!r}") from None
    edges = []
    seen = set()
    for i, line in body:
        toks = line.split()
        if len(toks) != 2:
            raise ValueError(f"line {i}: expected 'u v', got {line!r}")
        try:
            u, v = int(toks[0]), int(toks[1])
        except ValueError:
            raise ValueError(f"line {i}: expected integer pair, got {line!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"line {i}: edge ({u}, {v}) references an invalid process id")
        if u == v:
            raise ValueError(f"line {i}: self-loop at process {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ValueError(f"line {i}: duplicate edge ({key[0]}, {key[1]})")
        seen.add(key)
        edges.append((u, v))
    try:
        return Topology.from_edges(n, edges, root=root, byzantine=byz)
    except ValueError as exc:
        raise ValueError(f"line {header_no}: {exc}") from None


def format_edge_list(topo: Topology) -> str:
    byz = ",".join(str(b) for b in sorted(topo.byzantine))
    head = f"{topo.n} {topo.root} {byz}".rstrip()
    lines = [head] + [f"{u} {v}" for u, v in topo.edges()]
    return "\n".join(lines) + "\n"


def load_graph(path) -> Topology:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def save_graph(topo: Topology, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_edge_list(topo))
