"""Shared fixtures and oracle helpers."""

from __future__ import annotations

import numpy as np
import pytest

from minplusone import Configuration, Topology, generate_graph


def path_topo(n, root=0, byz=()):
    return generate_graph("path", n=n, root=root, byzantine=byz)


def config(*states):
    """Configuration from (parent-or-None, height) pairs."""
    return Configuration.from_states(list(states))


def floyd_warshall(topo: Topology) -> np.ndarray:
    """Brute-force all-pairs shortest paths, independent of the BFS kernels."""
    n = topo.n
    big = 10 ** 6
    dist = np.full((n, n), big, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    for u, v in topo.edges():
        dist[u, v] = 1
        dist[v, u] = 1
    for k in range(n):
        for i in range(n):
            for j in range(n):
                through = dist[i, k] + dist[k, j]
                if through < dist[i, j]:
                    dist[i, j] = through
    return dist


def family_graphs_up_to(n_max):
    """Every generator-family instance with n <= n_max (deterministic list)."""
    graphs = []
    for n in range(2, n_max + 1):
        graphs.append(("path", generate_graph("path", n=n)))
    for n in range(3, n_max + 1):
        graphs.append(("ring", generate_graph("ring", n=n)))
    for n in range(3, n_max + 1):
        graphs.append(("star", generate_graph("star", n=n)))
    for rows in range(1, n_max + 1):
        for cols in range(rows, n_max + 1):
            if 2 <= rows * cols <= n_max and not (rows == 1 and cols == 1):
                graphs.append(("grid", generate_graph("grid", rows=rows, cols=cols)))
    for i, n in enumerate(range(2, n_max + 1)):
        p = 0.35 if n > 4 else 0.7
        graphs.append(
            ("random_connected",
             generate_graph("random_connected", n=n, edge_prob=p, seed=100 + i))
        )
    return graphs


@pytest.fixture(scope="session")
def small_family_graphs():
    return family_graphs_up_to(8)
