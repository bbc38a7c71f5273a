"""Explicit-state exploration of small instances under every daemon choice.

For each small graph, Byzantine placement (at most one) and every initial
configuration with bounded heights, the explorer closes the reachable
configuration space under *all* nonempty activation subsets, pairing
Byzantine activations with every write in a finite move set (parent in
neighbors-or-none, height up to n).  Each state is packed into an int64 by
mixed-radix encoding, deduplicated in a hash map, and every transition keeps
the bitmask of selected processes so fairness can be analyzed afterwards.

Verdicts per instance:

* reach violation: a reachable state from which no contained state is
  reachable (contained = no state with an out-of-zone defect is reachable);
* fair-cycle violation: a reachable cycle avoiding containment on which every
  process that is ever activatable is also selected, i.e. an infinite valid
  execution under the strong-fairness contract that never settles.

Exploration respects per-instance state/edge budgets; an instance that blows
a budget is reported as exhausted, never silently skipped, and no verdict is
claimed for it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from ._kernels import NIL, njit, NUMBA_AVAILABLE, USE_NUMBA
from .topology import Topology, complete_graph, compute_zones, generate_graph, out_zone_correct_mask

if NUMBA_AVAILABLE:
    from numba import types as _nbtypes
    from numba.typed import Dict as _NumbaDict

FAMILIES = ("path", "ring", "star", "complete")

DEFAULT_MAX_STATES = 1_500_000
DEFAULT_MAX_EDGES = 30_000_000


# ---------------------------------------------------------------------------
# state packing helpers (shared by both explorer backends)


def _radices(n: int, hcap: int) -> tuple[int, int, int]:
    pradix = n + 1          # parent codes: 0..n-1 ids, n = "none"
    hradix = hcap + 1
    return pradix, hradix, pradix * hradix


def _encode_config(parent, height, n, hradix, radix) -> int:
    code = 0
    for v in range(n - 1, -1, -1):
        pcode = n if parent[v] < 0 else int(parent[v])
        code = code * radix + pcode * hradix + int(height[v])
    return code


def _decode_config(code, n, hradix, radix):
    parent = np.empty(n, dtype=np.int64)
    height = np.empty(n, dtype=np.int64)
    c = int(code)
    for v in range(n):
        local = c % radix
        c //= radix
        height[v] = local % hradix
        pcode = local // hradix
        parent[v] = NIL if pcode == n else pcode
    return parent, height


def _initial_codes(topo: Topology, init_hmax: int, hradix: int, radix: int) -> np.ndarray:
    """All configurations with parent in neighbors-or-none and height <= init_hmax."""
    n = topo.n
    codes = np.zeros(1, dtype=np.int64)
    for v in range(n - 1, -1, -1):
        pcodes = np.append(topo.neighbors(v).astype(np.int64), n)
        heights = np.arange(init_hmax + 1, dtype=np.int64)
        locals_v = (pcodes[:, None] * hradix + heights[None, :]).ravel()
        codes = (codes[:, None] * radix + locals_v[None, :]).ravel()
    return codes


# ---------------------------------------------------------------------------
# numba explorer


if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _succ_count(codes, indptr, indices, root, byz_id, n, hradix, radix, n_writes):
        parent = np.empty(n, dtype=np.int64)
        height = np.empty(n, dtype=np.int64)
        minh = np.empty(n, dtype=np.int64)
        total = 0
        for si in range(codes.shape[0]):
            c = codes[si]
            for v in range(n):
                local = c % radix
                c //= radix
                height[v] = local % hradix
                pc = local // hradix
                parent[v] = -1 if pc == n else pc
            for v in range(n):
                minh[v] = _kernels._nb_node_min_height(indptr, indices, height, v)
            m = 0
            for v in range(n):
                if v != byz_id and _kernels._nb_guard(parent, height, minh, root, v):
                    m += 1
            total += (1 << m) - 1
            if byz_id >= 0:
                total += (1 << m) * n_writes
        return total

    @njit(cache=True)
    def _expand_fill(
        codes, ids, indptr, indices, root, byz_id, n, hradix, radix, hcap,
        wparents, wheights, visited, next_id,
        out_src, out_dst, out_sel, out_new,
    ):
        """Emit all transitions of the given states.  Returns
        (edge_count, new_count, next_id, overflow_count)."""
        e = 0
        nn = 0
        overflow = 0
        parent = np.empty(n, dtype=np.int64)
        height = np.empty(n, dtype=np.int64)
        minh = np.empty(n, dtype=np.int64)
        act = np.empty(n, dtype=np.int64)
        newp = np.empty(n, dtype=np.int64)
        newh = np.empty(n, dtype=np.int64)
        n_writes = wparents.shape[0]
        for si in range(codes.shape[0]):
            c = codes[si]
            src_id = ids[si]
            for v in range(n):
                local = c % radix
                c //= radix
                height[v] = local % hradix
                pc = local // hradix
                parent[v] = -1 if pc == n else pc
            for v in range(n):
                minh[v] = _kernels._nb_node_min_height(indptr, indices, height, v)
            m = 0
            for v in range(n):
                if v != byz_id and _kernels._nb_guard(parent, height, minh, root, v):
                    act[m] = v
                    m += 1
            tot_bits = m + (1 if byz_id >= 0 else 0)
            for mask in range(1, 1 << tot_bits):
                byz_sel = byz_id >= 0 and (mask >> m) & 1 == 1
                selbits = 0
                for j in range(m):
                    if (mask >> j) & 1:
                        selbits |= 1 << act[j]
                if byz_sel:
                    selbits |= 1 << byz_id
                # snapshot semantics: actions computed from (parent, height)
                for v in range(n):
                    newp[v] = parent[v]
                    newh[v] = height[v]
                ok = True
                for j in range(m):
                    if (mask >> j) & 1:
                        v = act[j]
                        if v == root:
                            newp[v] = -1
                            newh[v] = 0
                        else:
                            p, h = _kernels._nb_action(indptr, indices, parent, height, minh[v], v)
                            newp[v] = p
                            newh[v] = h
                            if h > hcap:
                                ok = False
                if not ok:
                    overflow += 1 if not byz_sel else n_writes
                    continue
                n_variants = n_writes if byz_sel else 1
                for w in range(n_variants):
                    if byz_sel:
                        newp[byz_id] = wparents[w]
                        newh[byz_id] = wheights[w]
                    code2 = np.int64(0)
                    for v in range(n - 1, -1, -1):
                        pc = n if newp[v] < 0 else newp[v]
                        code2 = code2 * radix + pc * hradix + newh[v]
                    if code2 in visited:
                        dst_id = visited[code2]
                    else:
                        dst_id = next_id
                        visited[code2] = dst_id
                        out_new[nn] = code2
                        nn += 1
                        next_id += 1
                    out_src[e] = src_id
                    out_dst[e] = dst_id
                    out_sel[e] = selbits
                    e += 1
        return e, nn, next_id, overflow

    @njit(cache=True)
    def _flags_fill(
        codes, indptr, indices, root, byz_id, n, hradix, radix,
        byz_mask, out_zone,
        legit, stable, actmask,
    ):
        parent = np.empty(n, dtype=np.int64)
        height = np.empty(n, dtype=np.int64)
        minh = np.empty(n, dtype=np.int64)
        for si in range(codes.shape[0]):
            c = codes[si]
            for v in range(n):
                local = c % radix
                c //= radix
                height[v] = local % hradix
                pc = local // hradix
                parent[v] = -1 if pc == n else pc
            for v in range(n):
                minh[v] = _kernels._nb_node_min_height(indptr, indices, height, v)
            ok = True
            quiet = True
            bits = 0
            for v in range(n):
                if v == byz_id:
                    bits |= 1 << v
                    continue
                en = _kernels._nb_guard(parent, height, minh, root, v)
                if en:
                    bits |= 1 << v
                if out_zone[v]:
                    if en:
                        quiet = False
                    if ok and not _kernels._nb_chain_valid_one(
                        indptr, indices, parent, height, minh, byz_mask, root, v
                    ):
                        ok = False
            legit[si] = ok
            stable[si] = quiet
            actmask[si] = bits

    @njit(cache=True)
    def _reach_mask(indptr, nbrs, seeds):
        nstate = indptr.shape[0] - 1
        mark = seeds.copy()
        queue = np.empty(nstate, dtype=np.int64)
        tail = 0
        for s in range(nstate):
            if mark[s]:
                queue[tail] = s
                tail += 1
        head = 0
        while head < tail:
            v = queue[head]
            head += 1
            for j in range(indptr[v], indptr[v + 1]):
                u = nbrs[j]
                if not mark[u]:
                    mark[u] = True
                    queue[tail] = u
                    tail += 1
        return mark


# ---------------------------------------------------------------------------
# pure-python explorer (fallback and cross-check)


def _py_explore(topo, byz_id, hcap, init_hmax, wparents, wheights, max_states, max_edges):
    n = topo.n
    pradix, hradix, radix = _radices(n, hcap)
    init = _initial_codes(topo, init_hmax, hradix, radix)
    if init.shape[0] > max_states:
        empty = np.empty(0, dtype=np.int64)
        return np.unique(init), empty, empty, empty, 0, "state budget"
    visited = {}
    codes_list = []
    for c in init.tolist():
        if c not in visited:
            visited[c] = len(codes_list)
            codes_list.append(c)
    frontier = list(codes_list)
    src, dst, sel = [], [], []
    overflow = 0
    exhausted = None
    indptr, indices, root = topo.indptr, topo.indices, topo.root
    while frontier:
        nxt = []
        for code in frontier:
            parent, height = _decode_config(code, n, hradix, radix)
            minh = _kernels.neighbor_min_heights(indptr, indices, height)
            sid = visited[code]
            enabled = _kernels.enabled_mask(parent, height, minh, root, topo.byz_mask)
            act = [v for v in range(n) if v != byz_id and bool(enabled[v])]
            m = len(act)
            tot_bits = m + (1 if byz_id >= 0 else 0)
            for mask in range(1, 1 << tot_bits):
                byz_sel = byz_id >= 0 and (mask >> m) & 1 == 1
                selbits = sum(1 << act[j] for j in range(m) if (mask >> j) & 1)
                if byz_sel:
                    selbits |= 1 << byz_id
                newp = parent.copy()
                newh = height.copy()
                ok = True
                for j in range(m):
                    if (mask >> j) & 1:
                        v = act[j]
                        if v == root:
                            newp[v], newh[v] = NIL, 0
                        else:
                            pv, hv = _kernels.compute_actions(
                                indptr, indices, parent, height, minh,
                                np.array([v], dtype=np.int64), root)
                            newp[v], newh[v] = int(pv[0]), int(hv[0])
                            if newh[v] > hcap:
                                ok = False
                if not ok:
                    overflow += len(wparents) if byz_sel else 1
                    continue
                variants = range(len(wparents)) if byz_sel else (0,)
                for w in variants:
                    if byz_sel:
                        newp[byz_id] = wparents[w]
                        newh[byz_id] = wheights[w]
                    code2 = _encode_config(newp, newh, n, hradix, radix)
                    if code2 in visited:
                        did = visited[code2]
                    else:
                        did = len(codes_list)
                        visited[code2] = did
                        codes_list.append(code2)
                        nxt.append(code2)
                    src.append(sid)
                    dst.append(did)
                    sel.append(selbits)
            if len(visited) > max_states:
                exhausted = "state budget"
                break
            if len(src) > max_edges:
                exhausted = "edge budget"
                break
        if exhausted:
            break
        frontier = nxt
    return (
        np.array(codes_list, dtype=np.int64),
        np.array(src, dtype=np.int64),
        np.array(dst, dtype=np.int64),
        np.array(sel, dtype=np.int64),
        overflow,
        exhausted,
    )


def _nb_explore(topo, byz_id, hcap, init_hmax, wparents, wheights, max_states, max_edges):
    n = topo.n
    pradix, hradix, radix = _radices(n, hcap)
    init = np.unique(_initial_codes(topo, init_hmax, hradix, radix))
    if init.shape[0] > max_states:
        empty = np.empty(0, dtype=np.int64)
        return init, empty, empty, empty, 0, "state budget"
    visited = _NumbaDict.empty(key_type=_nbtypes.int64, value_type=_nbtypes.int64)
    for i, c in enumerate(init.tolist()):
        visited[c] = i
    next_id = init.shape[0]
    all_codes = [init]
    frontier_codes = init
    frontier_ids = np.arange(init.shape[0], dtype=np.int64)
    srcs, dsts, sels = [], [], []
    n_states = init.shape[0]
    n_edges = 0
    overflow_total = 0
    exhausted = None
    n_writes = wparents.shape[0]
    per_state_max = (1 << n) - 1 + (1 << n) * max(1, n_writes)
    chunk = max(1, 4_000_000 // per_state_max)
    while frontier_codes.size and exhausted is None:
        new_parts = []
        for lo in range(0, frontier_codes.size, chunk):
            cc = frontier_codes[lo:lo + chunk]
            ci = frontier_ids[lo:lo + chunk]
            total = _succ_count(cc, topo.indptr, topo.indices, topo.root,
                                byz_id, n, hradix, radix, n_writes)
            out_src = np.empty(total, dtype=np.int64)
            out_dst = np.empty(total, dtype=np.int64)
            out_sel = np.empty(total, dtype=np.int64)
            out_new = np.empty(total, dtype=np.int64)
            e, nn, next_id, ovf = _expand_fill(
                cc, ci, topo.indptr, topo.indices, topo.root, byz_id,
                n, hradix, radix, hcap, wparents, wheights, visited, next_id,
                out_src, out_dst, out_sel, out_new,
            )
            overflow_total += ovf
            srcs.append(out_src[:e].copy())
            dsts.append(out_dst[:e].copy())
            sels.append(out_sel[:e].copy())
            new_parts.append(out_new[:nn].copy())
            n_edges += e
            n_states += nn
            if n_states > max_states:
                exhausted = "state budget"
                break
            if n_edges > max_edges:
                exhausted = "edge budget"
                break
        fresh = np.concatenate(new_parts) if new_parts else np.empty(0, dtype=np.int64)
        all_codes.append(fresh)
        frontier_ids = np.arange(n_states - fresh.size, n_states, dtype=np.int64)
        frontier_codes = fresh
    codes = np.concatenate(all_codes)
    src = np.concatenate(srcs) if srcs else np.empty(0, dtype=np.int64)
    dst = np.concatenate(dsts) if dsts else np.empty(0, dtype=np.int64)
    sel = np.concatenate(sels) if sels else np.empty(0, dtype=np.int64)
    return codes, src, dst, sel, overflow_total, exhausted


# ---------------------------------------------------------------------------
# flags and analysis


def _compute_flags(topo, byz_id, codes, hcap, zone):
    n = topo.n
    pradix, hradix, radix = _radices(n, hcap)
    zones = compute_zones(topo)
    out_zone = out_zone_correct_mask(topo, zones, zone)
    s = codes.shape[0]
    legit = np.zeros(s, dtype=np.bool_)
    stable = np.zeros(s, dtype=np.bool_)
    actmask = np.zeros(s, dtype=np.int64)
    if USE_NUMBA:
        _flags_fill(codes, topo.indptr, topo.indices, topo.root, byz_id,
                    n, hradix, radix, topo.byz_mask, out_zone,
                    legit, stable, actmask)
        return legit, stable, actmask
    for si in range(s):
        parent, height = _decode_config(codes[si], n, hradix, radix)
        minh = _kernels.neighbor_min_heights(topo.indptr, topo.indices, height)
        enabled = _kernels.enabled_mask(parent, height, minh, topo.root, topo.byz_mask)
        ok = _kernels.chain_valid_all(topo.indptr, topo.indices, parent, height,
                                     minh, topo.byz_mask, topo.root)
        legit[si] = bool(np.all(ok[out_zone]))
        stable[si] = not bool(np.any(enabled & out_zone))
        bits = 0
        for v in range(n):
            if v == byz_id or enabled[v]:
                bits |= 1 << v
        actmask[si] = bits
    return legit, stable, actmask


def _reverse_csr(n_states, src, dst):
    order = np.argsort(dst, kind="stable")
    nbrs = src[order]
    counts = np.bincount(dst, minlength=n_states)
    indptr = np.zeros(n_states + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, nbrs


def _reach(indptr, nbrs, seeds):
    if USE_NUMBA:
        return _reach_mask(indptr, nbrs, seeds)
    mark = seeds.copy()
    stack = list(np.flatnonzero(seeds))
    while stack:
        v = stack.pop()
        for u in nbrs[indptr[v]:indptr[v + 1]]:
            if not mark[u]:
                mark[u] = True
                stack.append(int(u))
    return mark


def _find_fair_cycle(members, src, dst, sel, actmask):
    """Search for a cycle on which every ever-activatable process is selected.

    Standard fairness-emptiness refinement: within each candidate strongly
    connected component, processes activatable somewhere but never selected
    rule out any fair run that keeps visiting their states, so recurse on the
    component minus those states.
    """
    worklist = [members]
    n_total = actmask.shape[0]
    while worklist:
        subset = worklist.pop()
        if subset.size == 0:
            continue
        keep = np.zeros(n_total, dtype=np.bool_)
        keep[subset] = True
        emask = keep[src] & keep[dst]
        if not np.any(emask):
            continue
        es, ed, esel = src[emask], dst[emask], sel[emask]
        remap = np.full(n_total, -1, dtype=np.int64)
        remap[subset] = np.arange(subset.size)
        graph = coo_matrix(
            (np.ones(es.shape[0], dtype=np.int8), (remap[es], remap[ed])),
            shape=(subset.size, subset.size),
        )
        n_comp, labels = connected_components(graph, directed=True, connection="strong")
        edge_labels = labels[remap[es]]
        internal = edge_labels == labels[remap[ed]]
        if not np.any(internal):
            continue
        comp_act = np.zeros(n_comp, dtype=np.int64)
        np.bitwise_or.at(comp_act, labels, actmask[subset])
        comp_sel = np.zeros(n_comp, dtype=np.int64)
        np.bitwise_or.at(comp_sel, edge_labels[internal], esel[internal])
        has_internal = np.zeros(n_comp, dtype=np.bool_)
        has_internal[edge_labels[internal]] = True
        for comp in np.flatnonzero(has_internal):
            missing = comp_act[comp] & ~comp_sel[comp]
            comp_members = subset[labels == comp]
            if missing == 0:
                return comp_members
            shrunk = comp_members[(actmask[comp_members] & missing) == 0]
            if shrunk.size:
                worklist.append(shrunk)
    return None


@dataclass(frozen=True)
class InstanceResult:
    family: str
    n: int
    byzantine: tuple[int, ...]
    states: int
    edges: int
    complete: bool
    exhausted: Optional[str]
    contained_states: int
    reach_violations: int
    fair_cycle: bool
    witnesses: tuple = ()

    @property
    def violations(self) -> int:
        return self.reach_violations + (1 if self.fair_cycle else 0)

    def to_json_dict(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "byzantine": list(self.byzantine),
            "states": self.states,
            "edges": self.edges,
            "complete": self.complete,
            "exhausted": self.exhausted,
            "contained_states": self.contained_states,
            "reach_violations": self.reach_violations,
            "fair_cycle": self.fair_cycle,
            "witnesses": [list(w) for w in self.witnesses],
        }


@dataclass(frozen=True)
class ExhaustiveReport:
    n_max: int
    families: tuple[str, ...]
    zone: str
    instances: tuple[InstanceResult, ...]

    @property
    def total_violations(self) -> int:
        return sum(r.violations for r in self.instances)

    @property
    def incomplete(self) -> int:
        return sum(1 for r in self.instances if not r.complete)

    def to_json_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "families": list(self.families),
            "zone": self.zone,
            "total_violations": self.total_violations,
            "incomplete": self.incomplete,
            "instances": [r.to_json_dict() for r in self.instances],
        }


def check_instance(
    topo: Topology,
    *,
    family: str = "custom",
    zone: str = "wide",
    init_hmax: Optional[int] = None,
    max_states: int = DEFAULT_MAX_STATES,
    max_edges: int = DEFAULT_MAX_EDGES,
    force_python: bool = False,
) -> InstanceResult:
    """Explore one instance and analyze containment over the explored graph."""
    n = topo.n
    if len(topo.byzantine) > 1:
        raise ValueError("exhaustive exploration supports at most one Byzantine process")
    byz_id = next(iter(topo.byzantine)) if topo.byzantine else -1
    hcap = 2 * n + 2
    hmax = n if init_hmax is None else init_hmax
    if byz_id >= 0:
        wp = np.append(topo.neighbors(byz_id).astype(np.int64), NIL)
        wh = np.arange(n + 1, dtype=np.int64)
        wparents = np.repeat(wp, wh.size)
        wheights = np.tile(wh, wp.size)
    else:
        wparents = np.empty(0, dtype=np.int64)
        wheights = np.empty(0, dtype=np.int64)

    explore = _py_explore if (force_python or not USE_NUMBA) else _nb_explore
    codes, src, dst, sel, overflow, exhausted = explore(
        topo, byz_id, hcap, hmax, wparents, wheights, max_states, max_edges
    )
    if overflow and exhausted is None:
        exhausted = "height range"
    complete = exhausted is None
    n_states = codes.shape[0]

    if not complete:
        return InstanceResult(
            family=family, n=n, byzantine=tuple(sorted(topo.byzantine)),
            states=n_states, edges=src.shape[0], complete=False, exhausted=exhausted,
            contained_states=0, reach_violations=0, fair_cycle=False,
        )

    legit, stable, actmask = _compute_flags(topo, byz_id, codes, hcap, zone)

    bad = ~legit | ~stable
    rev_indptr, rev_nbrs = _reverse_csr(n_states, src, dst)
    contained = ~_reach(rev_indptr, rev_nbrs, bad)
    can_settle = _reach(rev_indptr, rev_nbrs, contained)
    reach_violation_ids = np.flatnonzero(~can_settle)

    avoid = np.flatnonzero(~contained)
    fair = _find_fair_cycle(avoid, src, dst, sel, actmask)

    witnesses = []
    pradix, hradix, radix = _radices(n, hcap)
    for sid in reach_violation_ids[:3]:
        p, h = _decode_config(codes[sid], n, hradix, radix)
        witnesses.append((tuple(p.tolist()), tuple(h.tolist())))
    if fair is not None:
        for sid in fair[:3]:
            p, h = _decode_config(codes[sid], n, hradix, radix)
            witnesses.append((tuple(p.tolist()), tuple(h.tolist())))

    return InstanceResult(
        family=family, n=n, byzantine=tuple(sorted(topo.byzantine)),
        states=n_states, edges=src.shape[0], complete=True, exhausted=None,
        contained_states=int(contained.sum()),
        reach_violations=int(reach_violation_ids.size),
        fair_cycle=fair is not None,
        witnesses=tuple(witnesses),
    )


def _family_topos(family: str, n: int) -> Optional[Topology]:
    if family == "path":
        return generate_graph("path", n=n) if n >= 2 else None
    if family == "ring":
        return generate_graph("ring", n=n) if n >= 3 else None
    if family == "star":
        return generate_graph("star", n=n) if n >= 3 else None
    if family == "complete":
        return complete_graph(n) if n >= 2 else None
    raise ValueError(f"unknown family {family!r} (expected one of {FAMILIES})")


def exhaustive_check(
    n_max: int,
    families=FAMILIES,
    *,
    zone: str = "wide",
    max_states: int = DEFAULT_MAX_STATES,
    max_edges: int = DEFAULT_MAX_EDGES,
    byz_placements: bool = True,
) -> ExhaustiveReport:
    """Check every family instance up to n_max with |B| <= 1.

    Structurally identical duplicates across families (a 3-ring is the
    3-complete graph, ...) are explored once.
    """
    if n_max < 2:
        raise ValueError(f"n_max must be >= 2, got {n_max}")
    seen = set()
    results = []
    for family in families:
        for n in range(2, n_max + 1):
            base = _family_topos(family, n)
            if base is None:
                continue
            key = (n, frozenset(base.edges()))
            if key in seen:
                continue
            seen.add(key)
            byz_sets = [()]
            if byz_placements:
                byz_sets += [(b,) for b in range(1, n)]
            for byz in byz_sets:
                topo = base.replace_faults(byzantine=byz)
                results.append(
                    check_instance(
                        topo, family=family, zone=zone,
                        max_states=max_states, max_edges=max_edges,
                    )
                )
    return ExhaustiveReport(
        n_max=n_max, families=tuple(families), zone=zone, instances=tuple(results)
    )
