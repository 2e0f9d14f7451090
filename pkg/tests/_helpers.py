"""Small graphs and random connected graphs shared by the tests."""

import numpy as np

from geomix.geometry import (RggConfig, SpatialGraph, build_rgg, csr_from_edges,
                             points_from_array, sample_ppp)
from geomix.structure import connected_components, extract_giant


def toy(n, edges, pos=None):
    """SpatialGraph with explicit edges (positions default to the origin)."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    indptr, indices = csr_from_edges(n, edges[:, 0], edges[:, 1])
    if pos is None:
        pos = np.zeros((n, 2))
    return SpatialGraph(points_from_array(pos, 10.0 ** 6), 1.0, indptr, indices)


def complete(n):
    return toy(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path(n):
    return toy(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n):
    return toy(n, [(i, (i + 1) % n) for i in range(n)])


def star(leaves):
    return toy(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


K2, P3, K4 = complete(2), path(3), complete(4)


def rgg(n, d, r, seed):
    return build_rgg(sample_ppp(RggConfig(n, d, r, seed)), r)


def giant(n, d, r, seed):
    g = rgg(n, d, r, seed)
    return extract_giant(g, connected_components(g))


def random_connected(rng, n_max, n_min=2):
    """A connected graph with between n_min and n_max vertices.

    Alternates between RGG giants, trees with a few extra edges, and
    Erdos-Renyi giants so that bipartite, dense and sparse cases appear.
    """
    while True:
        kind = int(rng.integers(3))
        n = int(rng.integers(n_min, n_max + 1))
        if kind == 0:
            side = max(1.0, n / float(rng.uniform(1.0, 8.0)))
            g = rgg(side, 2, float(rng.uniform(1.0, 3.0)), int(rng.integers(2**32)))
            g = extract_giant(g, connected_components(g)) if g.n_vertices else None
        elif kind == 1:
            parent = [int(rng.integers(i)) for i in range(1, n)]
            edges = {(p, i) for i, p in zip(range(1, n), parent)}
            for _ in range(int(rng.integers(0, 3))):
                a, b = sorted(rng.choice(n, 2, replace=False).tolist()) if n > 1 else (0, 0)
                if a != b:
                    edges.add((a, b))
            g = toy(n, sorted(edges)) if n > 1 else None
        else:
            p = float(rng.uniform(1.5, 6.0)) / n
            iu, ju = np.triu_indices(n, 1)
            keep = rng.random(len(iu)) < p
            g0 = toy(n, np.stack([iu[keep], ju[keep]], 1))
            g = extract_giant(g0, connected_components(g0))
        if g is not None and n_min <= g.n_vertices <= n_max and g.edge_count > 0:
            return g
