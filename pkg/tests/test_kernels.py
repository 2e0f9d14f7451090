"""Compiled and pure-Python kernels must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geomix import kernels
from geomix.geometry import brute_force_edges, csr_from_edges

BACKENDS = kernels.backends()
needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")


def _random_graph(rng, n, p):
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return csr_from_edges(n, iu[keep], ju[keep])


@pytest.mark.parametrize("name", sorted(BACKENDS))
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(0, 300), d=st.integers(1, 3),
       r=st.floats(0.05, 3.0))
@settings(max_examples=40, deadline=None)
def test_radius_pairs_matches_brute_force(name, seed, n, d, r):
    impl = BACKENDS[name]
    rng = np.random.default_rng(seed)
    side = max(1.0, n ** (1.0 / d))
    pos = rng.uniform(-side / 2, side / 2, size=(n, d))
    pos = np.ascontiguousarray(pos[np.lexsort(pos.T[::-1])])
    g = max(1, int(side // r))
    u, v = impl.radius_pairs(pos, -side / 2, side / g, g, r * r)
    order = np.lexsort((v, u))
    bu, bv = brute_force_edges(pos, r)
    assert np.array_equal(u[order], bu) and np.array_equal(v[order], bv)


@needs_both
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 200))
@settings(max_examples=40, deadline=None)
def test_min_labels_backends_agree(seed, n):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(0, 2 * n))
    u = rng.integers(0, n, m).astype(np.int64)
    v = rng.integers(0, n, m).astype(np.int64)
    a = BACKENDS["python"].min_labels(n, u, v)
    b = BACKENDS["cython"].min_labels(n, u, v)
    assert np.array_equal(a, b)


@needs_both
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 80))
@settings(max_examples=30, deadline=None)
def test_walk_steps_backends_agree(seed, n):
    rng = np.random.default_rng(seed)
    indptr, indices = _random_graph(rng, n, 0.3)
    deg = np.diff(indptr)
    where0 = rng.choice(np.flatnonzero(deg > 0), size=50) if (deg > 0).any() else None
    if where0 is None:
        return
    counts = rng.poisson(3.0, size=50).astype(np.int64)
    uni = rng.random(int(counts.sum()))
    out = []
    for name in ("python", "cython"):
        w = where0.astype(np.int64).copy()
        BACKENDS[name].walk_steps(indptr, indices, w, counts, uni)
        out.append(w)
    assert np.array_equal(out[0], out[1])


@needs_both
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 120))
@settings(max_examples=30, deadline=None)
def test_grow_set_and_bfs_backends_agree(seed, n):
    rng = np.random.default_rng(seed)
    indptr, indices = _random_graph(rng, n, 0.1)
    start = int(rng.integers(n))
    target = int(rng.integers(1, n + 1))
    uni = rng.random(target)
    a = BACKENDS["python"].grow_set(indptr, indices, start, target, uni)
    b = BACKENDS["cython"].grow_set(indptr, indices, start, target, uni)
    assert np.array_equal(a, b)
    assert np.array_equal(BACKENDS["python"].bfs_distances(indptr, indices, start),
                          BACKENDS["cython"].bfs_distances(indptr, indices, start))


def test_grow_set_is_connected_and_sized():
    rng = np.random.default_rng(1)
    indptr, indices = _random_graph(rng, 60, 0.2)
    A = kernels.grow_set(indptr, indices, 0, 20, rng.random(20))
    assert len(A) == 20 and len(set(A.tolist())) == 20 and A[0] == 0
    inside = set(A[:1].tolist())
    for x in A[1:].tolist():
        assert set(indices[indptr[x]:indptr[x + 1]].tolist()) & inside
        inside.add(x)


def test_walk_steps_follow_edges():
    indptr, indices = csr_from_edges(3, [0, 1], [1, 2])
    where = np.array([1, 1, 1, 1], dtype=np.int64)
    kernels.walk_steps(indptr, indices, where, np.array([1, 1, 2, 0]), np.array([0.1, 0.9, 0.1, 0.5]))
    assert where.tolist() == [0, 2, 1, 1]


def test_pure_python_switch():
    code = "import geomix.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, GEOMIX_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("GEOMIX_THREADS", "3")
    assert kernels.max_threads() == 3
    monkeypatch.setenv("GEOMIX_THREADS", "junk")
    assert kernels.max_threads() >= 1
