"""The numba kernels and the pure-numpy fallbacks must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minplusone import generate_graph
from minplusone import _kernels as K

pytestmark = pytest.mark.skipif(
    not K.NUMBA_AVAILABLE, reason="numba not importable"
)

PAIRS = [
    (K._np_neighbor_min_heights, K._nb_neighbor_min_heights),
    (K._np_enabled_mask, K._nb_enabled_mask),
    (K._np_compute_actions, K._nb_compute_actions),
    (K._np_chain_valid_all, K._nb_chain_valid_all),
    (K._np_bfs_distances, K._nb_bfs_distances),
]


@st.composite
def _instance(draw):
    n = draw(st.integers(2, 10))
    topo = generate_graph("random_connected", n=n, edge_prob=0.6,
                          seed=draw(st.integers(0, 10 ** 6)))
    byz = draw(st.sets(st.integers(1, n - 1), max_size=2))
    topo = topo.replace_faults(byzantine=byz)
    parent = np.empty(n, dtype=np.int64)
    height = np.empty(n, dtype=np.int64)
    for v in range(n):
        opts = [-1] + topo.neighbors(v).tolist()
        if v in byz:
            opts = [-1] + list(range(n))
        parent[v] = draw(st.sampled_from(opts))
        height[v] = draw(st.integers(0, 12))
    return topo, parent, height


@given(_instance())
@settings(max_examples=120, deadline=None)
def test_backends_agree_everywhere(inst):
    topo, parent, height = inst
    minh_np = K._np_neighbor_min_heights(topo.indptr, topo.indices, height)
    minh_nb = K._nb_neighbor_min_heights(topo.indptr, topo.indices, height)
    assert np.array_equal(minh_np, minh_nb)

    en_np = K._np_enabled_mask(parent, height, minh_np, topo.root, topo.byz_mask)
    en_nb = K._nb_enabled_mask(parent, height, minh_nb, topo.root, topo.byz_mask)
    assert np.array_equal(en_np, en_nb)

    actors = np.flatnonzero(en_np).astype(np.int64)
    if actors.size:
        a_np = K._np_compute_actions(topo.indptr, topo.indices, parent, height,
                                     minh_np, actors, topo.root)
        a_nb = K._nb_compute_actions(topo.indptr, topo.indices, parent, height,
                                     minh_nb, actors, topo.root)
        assert np.array_equal(a_np[0], a_nb[0]) and np.array_equal(a_np[1], a_nb[1])

    ok_np = K._np_chain_valid_all(topo.indptr, topo.indices, parent, height,
                                 minh_np, topo.byz_mask, topo.root)
    ok_nb = K._nb_chain_valid_all(topo.indptr, topo.indices, parent, height,
                                 minh_nb, topo.byz_mask, topo.root)
    assert np.array_equal(ok_np, ok_nb)

    src = np.array([topo.root], dtype=np.int64)
    assert np.array_equal(
        K._np_bfs_distances(topo.indptr, topo.indices, src),
        K._nb_bfs_distances(topo.indptr, topo.indices, src),
    )


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, MINPLUSONE_NUMBA="0")
    out = subprocess.run(
        [sys.executable, "-c", "import minplusone; print(minplusone.backend_name())"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_env_flag_default_prefers_numba():
    env = {k: v for k, v in os.environ.items() if k != "MINPLUSONE_NUMBA"}
    out = subprocess.run(
        [sys.executable, "-c", "import minplusone; print(minplusone.backend_name())"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "numba"


def test_isolated_vertex_min_height_sentinel():
    # single-process graph: no neighbors, the min is the sentinel
    topo = generate_graph("path", n=1)
    h = np.array([0], dtype=np.int64)
    assert K._np_neighbor_min_heights(topo.indptr, topo.indices, h)[0] == K.NO_NEIGHBOR
    assert K._nb_neighbor_min_heights(topo.indptr, topo.indices, h)[0] == K.NO_NEIGHBOR


def test_full_runs_identical_across_backends():
    # drive the same experiment through both kernel paths in subprocesses and
    # compare the trace files byte for byte
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        outs = []
        for flag in ("0", "1"):
            path = os.path.join(d, f"t{flag}.jsonl")
            env = dict(os.environ, MINPLUSONE_NUMBA=flag)
            subprocess.run(
                [sys.executable, "-m", "minplusone.cli", "run",
                 "--generate", "ring", "--n", "6", "--byz", "3",
                 "--adversary", "min_under_cutter", "--zone", "strict",
                 "--init", "random", "--init-seed", "5", "--policy", "randomized",
                 "--seed", "9", "--trace-out", path],
                capture_output=True, env=env, check=True,
            )
            with open(path, "rb") as fh:
                outs.append(fh.read())
        assert outs[0] == outs[1]
