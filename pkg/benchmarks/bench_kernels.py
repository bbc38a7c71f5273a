#!/usr/bin/env python3
"""Compare the numba kernels against the pure-numpy fallbacks.

Times the per-step hot kernels (neighbor minima, guard evaluation, chain
validation), a full fault-free convergence run through each backend, and one
explicit-state exploration.  The numba path is what campaigns normally use;
MINPLUSONE_NUMBA=0 selects the numpy path at import time.

Usage: python benchmarks/bench_kernels.py [--n 200] [--repeat 200]
"""

import argparse
import subprocess
import sys
import time

import numpy as np

from minplusone import generate_graph, random_configuration
from minplusone import _kernels as K


def bench(fn, repeat):
    fn()  # warm (JIT-compile on the numba side)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def bench_kernels(n, repeat):
    topo = generate_graph("random_connected", n=n, edge_prob=0.08, seed=1,
                          byzantine=[n // 2])
    cfg = random_configuration(topo, seed=2, height_bound=2 * n)
    parent, height = cfg.parent, cfg.height
    rows = []

    minh = {}
    for name, fn in (("numpy", K._np_neighbor_min_heights),
                     ("numba", K._nb_neighbor_min_heights)):
        minh[name] = fn(topo.indptr, topo.indices, height)
        rows.append((f"neighbor_min_heights[{name}]",
                     bench(lambda f=fn: f(topo.indptr, topo.indices, height), repeat)))
    assert np.array_equal(minh["numpy"], minh["numba"])

    for name, fn in (("numpy", K._np_enabled_mask), ("numba", K._nb_enabled_mask)):
        rows.append((f"enabled_mask[{name}]",
                     bench(lambda f=fn: f(parent, height, minh["numpy"], topo.root,
                                          topo.byz_mask), repeat)))

    for name, fn in (("numpy", K._np_chain_valid_all), ("numba", K._nb_chain_valid_all)):
        rows.append((f"chain_valid_all[{name}]",
                     bench(lambda f=fn: f(topo.indptr, topo.indices, parent, height,
                                          minh["numpy"], topo.byz_mask, topo.root),
                           max(1, repeat // 10))))

    src = np.array([topo.root], dtype=np.int64)
    for name, fn in (("numpy", K._np_bfs_distances), ("numba", K._nb_bfs_distances)):
        rows.append((f"bfs_distances[{name}]",
                     bench(lambda f=fn: f(topo.indptr, topo.indices, src), repeat)))
    return rows


def bench_full_run(n):
    # identical experiment, backend chosen by the env flag in a subprocess
    rows = []
    code = (
        "import time, numpy as np;"
        "from minplusone import generate_graph, random_configuration, run, SchedulerPolicy;"
        f"topo = generate_graph('random_connected', n={n}, edge_prob=0.08, seed=1);"
        "cfg = random_configuration(topo, seed=2, height_bound=2*topo.n);"
        "run(topo, cfg, SchedulerPolicy('round_robin'), max_steps=10)\n"
        "t0 = time.perf_counter();"
        "tr = run(topo, cfg, SchedulerPolicy('round_robin'), max_steps=20*topo.n**2);"
        "print(tr.num_steps, time.perf_counter() - t0)"
    )
    for flag, name in (("1", "numba"), ("0", "numpy")):
        out = subprocess.run([sys.executable, "-c", code],
                             capture_output=True, text=True, check=True,
                             env={"MINPLUSONE_NUMBA": flag, "PATH": "/usr/bin:/bin"})
        steps, secs = out.stdout.split()
        rows.append((f"convergence run n={n} ({steps} steps)[{name}]", float(secs)))
    return rows


def bench_exploration():
    from minplusone.exhaustive import check_instance

    rows = []
    topo = generate_graph("path", n=4, byzantine=[3])
    for force, name in ((False, "numba"), (True, "numpy")):
        t0 = time.perf_counter()
        r = check_instance(topo, family="path", force_python=force)
        rows.append((f"explicit-state path4 ({r.states} states)[{name}]",
                     time.perf_counter() - t0))
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200, help="kernel benchmark graph size")
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()

    if not K.NUMBA_AVAILABLE:
        print("numba is not importable; nothing to compare")
        return

    rows = bench_kernels(args.n, args.repeat)
    rows += bench_full_run(args.n)
    rows += bench_exploration()

    width = max(len(name) for name, _ in rows)
    print(f"{'benchmark':<{width}}  seconds")
    for name, secs in rows:
        print(f"{name:<{width}}  {secs:.6f}")
    print("\npairs share inputs; outputs were checked equal where cheap to do so")


if __name__ == "__main__":
    main()
