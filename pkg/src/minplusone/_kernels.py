"""Hot array kernels with numba acceleration and a pure-numpy fallback.

Every kernel exists twice: a numpy implementation (``_np_*``) and a numba
``@njit`` twin (``_nb_*``).  The active backend is chosen at import time:
numba when importable, unless the ``MINPLUSONE_NUMBA`` environment variable
overrides it ("0"/"false"/"off" forces the numpy path, anything else demands
numba).  Both backends produce bit-identical outputs; see
``benchmarks/bench_kernels.py`` for a speed comparison.

Graphs are CSR adjacency (``indptr``, ``indices``), neighbor ids sorted
ascending.  Configurations are two int64 arrays, ``parent`` (-1 encodes "no
parent") and ``height``.
"""

from __future__ import annotations

import os

import numpy as np

NIL = -1
# min over an empty neighbor set (isolated vertex in a 1-node graph)
NO_NEIGHBOR = np.iinfo(np.int64).max // 4


def _env_choice() -> bool | None:
    """None = auto, True = force numba, False = force numpy."""
    val = os.environ.get("MINPLUSONE_NUMBA")
    if val is None:
        return None
    return val.strip().lower() not in ("0", "false", "off", "no")


# ---------------------------------------------------------------------------
# numpy implementations


def _np_neighbor_min_heights(indptr, indices, height):
    n = indptr.shape[0] - 1
    out = np.full(n, NO_NEIGHBOR, dtype=np.int64)
    if indices.shape[0] == 0:
        return out
    offsets = np.minimum(indptr[:-1], indices.shape[0] - 1)
    mins = np.minimum.reduceat(height[indices], offsets)
    nonempty = indptr[1:] > indptr[:-1]
    out[nonempty] = mins[nonempty]
    return out


def _np_enabled_mask(parent, height, minh, root, byz_mask):
    has_parent = parent >= 0
    safe = np.where(has_parent, parent, 0)
    hp = height[safe]
    enabled = (~has_parent) | (height != hp + 1) | (hp != minh)
    enabled[root] = (parent[root] != NIL) or (height[root] != 0)
    return enabled & ~byz_mask


def _np_compute_actions(indptr, indices, parent, height, minh, actors, root):
    k = actors.shape[0]
    new_parent = np.empty(k, dtype=np.int64)
    new_height = np.empty(k, dtype=np.int64)
    for i in range(k):
        v = int(actors[i])
        if v == root:
            new_parent[i] = NIL
            new_height[i] = 0
            continue
        nbrs = indices[indptr[v]:indptr[v + 1]]
        deg = nbrs.shape[0]
        m = minh[v]
        start = 0
        p = parent[v]
        if p >= 0:
            pos = int(np.searchsorted(nbrs, p))
            if pos < deg and nbrs[pos] == p:
                start = pos + 1
        choice = -1
        for off in range(deg):
            q = int(nbrs[(start + off) % deg])
            if height[q] == m:
                choice = q
                break
        new_parent[i] = choice
        new_height[i] = m + 1
    return new_parent, new_height


def _np_chain_valid_one(indptr, indices, parent, height, minh, byz_mask, root, v):
    if v == root:
        return parent[v] == NIL and height[v] == 0
    n = indptr.shape[0] - 1
    cur = v
    for _ in range(n + 1):
        p = parent[cur]
        if p < 0:
            return False
        if height[cur] != height[p] + 1:
            return False
        if height[p] != minh[cur]:
            return False
        if (byz_mask[p] or p == root) and parent[p] == NIL and height[p] == 0:
            return True
        cur = p
    return False


def _np_chain_valid_all(indptr, indices, parent, height, minh, byz_mask, root):
    n = indptr.shape[0] - 1
    out = np.zeros(n, dtype=np.bool_)
    for v in range(n):
        if byz_mask[v]:
            continue
        out[v] = _np_chain_valid_one(
            indptr, indices, parent, height, minh, byz_mask, root, v
        )
    return out


def _np_bfs_distances(indptr, indices, sources):
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    dist[sources] = 0
    frontier = np.unique(sources)
    d = 0
    while frontier.size:
        counts = indptr[frontier + 1] - indptr[frontier]
        total = int(counts.sum())
        if total == 0:
            break
        starts = np.repeat(indptr[frontier], counts)
        rel = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        nbrs = indices[starts + rel]
        fresh = np.unique(nbrs[dist[nbrs] < 0])
        dist[fresh] = d + 1
        frontier = fresh
        d += 1
    return dist


# ---------------------------------------------------------------------------
# numba implementations

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


@njit(cache=True)
def _nb_node_min_height(indptr, indices, height, v):
    lo = indptr[v]
    hi = indptr[v + 1]
    if hi == lo:
        return NO_NEIGHBOR
    m = height[indices[lo]]
    for j in range(lo + 1, hi):
        h = height[indices[j]]
        if h < m:
            m = h
    return m


@njit(cache=True)
def _nb_neighbor_min_heights(indptr, indices, height):
    n = indptr.shape[0] - 1
    out = np.empty(n, dtype=np.int64)
    for v in range(n):
        out[v] = _nb_node_min_height(indptr, indices, height, v)
    return out


@njit(cache=True)
def _nb_guard(parent, height, minh, root, v):
    if v == root:
        return parent[v] != NIL or height[v] != 0
    p = parent[v]
    if p < 0:
        return True
    hp = height[p]
    return height[v] != hp + 1 or hp != minh[v]


@njit(cache=True)
def _nb_enabled_mask(parent, height, minh, root, byz_mask):
    n = parent.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    for v in range(n):
        if byz_mask[v]:
            continue
        out[v] = _nb_guard(parent, height, minh, root, v)
    return out


@njit(cache=True)
def _nb_action(indptr, indices, parent, height, m, v):
    """Non-root rule: pick the first min-height neighbor after the current
    parent in ascending circular order, adopt it, take its height plus one."""
    lo = indptr[v]
    hi = indptr[v + 1]
    deg = hi - lo
    start = 0
    p = parent[v]
    if p >= 0:
        for j in range(lo, hi):
            if indices[j] == p:
                start = j - lo + 1
                break
    choice = np.int64(-1)
    for off in range(deg):
        q = indices[lo + (start + off) % deg]
        if height[q] == m:
            choice = q
            break
    return choice, m + 1


@njit(cache=True)
def _nb_compute_actions(indptr, indices, parent, height, minh, actors, root):
    k = actors.shape[0]
    new_parent = np.empty(k, dtype=np.int64)
    new_height = np.empty(k, dtype=np.int64)
    for i in range(k):
        v = actors[i]
        if v == root:
            new_parent[i] = NIL
            new_height[i] = 0
        else:
            p, h = _nb_action(indptr, indices, parent, height, minh[v], v)
            new_parent[i] = p
            new_height[i] = h
    return new_parent, new_height


@njit(cache=True)
def _nb_chain_valid_one(indptr, indices, parent, height, minh, byz_mask, root, v):
    if v == root:
        return parent[v] == NIL and height[v] == 0
    n = indptr.shape[0] - 1
    cur = v
    for _ in range(n + 1):
        p = parent[cur]
        if p < 0:
            return False
        if height[cur] != height[p] + 1:
            return False
        if height[p] != minh[cur]:
            return False
        if (byz_mask[p] or p == root) and parent[p] == NIL and height[p] == 0:
            return True
        cur = p
    return False


@njit(cache=True)
def _nb_chain_valid_all(indptr, indices, parent, height, minh, byz_mask, root):
    n = indptr.shape[0] - 1
    out = np.zeros(n, dtype=np.bool_)
    for v in range(n):
        if not byz_mask[v]:
            out[v] = _nb_chain_valid_one(
                indptr, indices, parent, height, minh, byz_mask, root, v
            )
    return out


@njit(cache=True)
def _nb_bfs_distances(indptr, indices, sources):
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    for i in range(sources.shape[0]):
        s = sources[i]
        if dist[s] < 0:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        for j in range(indptr[v], indptr[v + 1]):
            u = indices[j]
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                queue[tail] = u
                tail += 1
    return dist


# ---------------------------------------------------------------------------
# backend dispatch

_forced = _env_choice()
if _forced is None:
    USE_NUMBA = NUMBA_AVAILABLE
elif _forced and not NUMBA_AVAILABLE:
    raise ImportError("MINPLUSONE_NUMBA=1 but numba is not importable")
else:
    USE_NUMBA = _forced

if USE_NUMBA:
    BACKEND = "numba"
    neighbor_min_heights = _nb_neighbor_min_heights
    enabled_mask = _nb_enabled_mask
    compute_actions = _nb_compute_actions
    chain_valid_all = _nb_chain_valid_all
    chain_valid_one = _nb_chain_valid_one
    bfs_distances_raw = _nb_bfs_distances
else:
    BACKEND = "numpy"
    neighbor_min_heights = _np_neighbor_min_heights
    enabled_mask = _np_enabled_mask
    compute_actions = _np_compute_actions
    chain_valid_all = _np_chain_valid_all
    chain_valid_one = _np_chain_valid_one
    bfs_distances_raw = _np_bfs_distances


def backend_name() -> str:
    return BACKEND
