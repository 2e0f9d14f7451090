import math

import numpy as np
import pytest

from geomix.errors import ConfigError
from geomix.geometry import (RggConfig, brute_force_edges, build_rgg, points_from_array,
                             read_graph, sample_ppp, write_edge_list, write_graph)


@pytest.mark.parametrize("kw", [dict(volume_n=0), dict(volume_n=-1.0), dict(volume_n=math.inf),
                                dict(volume_n=math.nan), dict(dim_d=0), dict(radius_r=0.0),
                                dict(seed=-1)])
def test_config_rejects(kw):
    base = dict(volume_n=100.0, dim_d=2, radius_r=1.0, seed=0)
    base.update(kw)
    with pytest.raises(ConfigError):
        RggConfig(**base)


def test_trivially_complete_flag():
    assert RggConfig(4.0, 2, 3.0).trivially_complete
    assert not RggConfig(100.0, 2, 3.0).trivially_complete


def test_sampling_is_deterministic():
    a = sample_ppp(RggConfig(100, 2, 1.0, 7))
    b = sample_ppp(RggConfig(100, 2, 1.0, 7))
    assert a.positions.tobytes() == b.positions.tobytes()
    c = sample_ppp(RggConfig(100, 2, 1.0, 8))
    assert a.positions.tobytes() != c.positions.tobytes()


def test_points_in_half_open_cube():
    p = sample_ppp(RggConfig(5000, 3, 1.0, 3))
    half = p.side / 2
    assert np.all(p.positions >= -half) and np.all(p.positions < half)


def test_count_mean_z_test():
    counts = [sample_ppp(RggConfig(1e4, 2, 1.0, s)).count for s in range(200)]
    assert abs(np.mean(counts) - 1e4) <= 3 * math.sqrt(1e4 / 200)


def test_empty_probability_n1_d1():
    trials = 4000
    zeros = sum(sample_ppp(RggConfig(1.0, 1, 1.0, s)).count == 0 for s in range(trials))
    p = math.exp(-1)
    assert abs(zeros / trials - p) <= 4 * math.sqrt(p * (1 - p) / trials)


def test_inclusive_boundary():
    g = build_rgg(points_from_array([[0.0, 0.0], [1.5, 0.0]], 100), 1.5)
    assert g.edge_count == 1
    g = build_rgg(points_from_array([[0.0, 0.0], [1.5 + 1e-12, 0.0]], 100), 1.5)
    assert g.edge_count == 0


def test_ball_gives_complete_graph():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.3, 0.3, size=(5, 2))
    g = build_rgg(points_from_array(pts, 100), 1.0)
    assert g.edge_count == 10


def test_empty_and_single_point():
    g = build_rgg(points_from_array(np.zeros((0, 2)), 100), 1.0)
    assert g.n_vertices == 0 and g.edge_count == 0
    g = build_rgg(points_from_array([[0.0, 0.0]], 100), 1.0)
    assert g.n_vertices == 1 and g.edge_count == 0


def test_matches_brute_force_on_200_instances():
    rng = np.random.default_rng(123)
    for i in range(200):
        d = int(rng.integers(1, 4))
        n = float(rng.uniform(1, 2000))
        r = float(rng.uniform(0.2, 3.0))
        g = build_rgg(sample_ppp(RggConfig(n, d, r, i)), r)
        u, v = g.edges()
        bu, bv = brute_force_edges(g.positions, r)
        assert np.array_equal(u, bu) and np.array_equal(v, bv)
        # symmetric, loop-free, consistent counts
        assert g.edge_count * 2 == g.degrees.sum()
        for x in range(0, g.n_vertices, 97):
            for y in g.neighbors(x):
                assert y != x and x in g.neighbors(y)


def test_graph_file_roundtrip(tmp_path):
    g = build_rgg(sample_ppp(RggConfig(500, 2, 1.5, 4)), 1.5)
    path = tmp_path / "g.rgg"
    write_graph(path, g)
    assert path.read_bytes()[:4] == b"RGG1"
    h = read_graph(path)
    assert np.array_equal(h.positions, g.positions)
    assert np.array_equal(h.indptr, g.indptr) and np.array_equal(h.indices, g.indices)
    assert h.radius == g.radius and h.points.config == g.points.config
    write_graph(tmp_path / "g2.rgg", h)
    assert (tmp_path / "g2.rgg").read_bytes() == path.read_bytes()


def test_edge_list_export(tmp_path):
    g = build_rgg(points_from_array([[0, 0], [0.5, 0], [3, 3]], 100), 1.0)
    write_edge_list(tmp_path / "e.txt", g)
    assert (tmp_path / "e.txt").read_text() == "0 1\n"


def test_cut_size():
    g = build_rgg(points_from_array([[0, 0], [0.5, 0], [1.0, 0]], 100), 0.6)
    assert g.cut_size([0]) == 1 and g.cut_size([1]) == 2 and g.cut_size([0, 1, 2]) == 0
