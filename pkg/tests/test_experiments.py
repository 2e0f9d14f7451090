import filecmp
import json
import math

import numpy as np
import pytest

from geomix import experiments as ex
from geomix.errors import ConfigError


def test_fit_synthetic():
    n = np.array([1e3, 4e3, 1.6e4, 6.4e4])
    f = ex.fit_loglog(n, 3.0 * n)
    assert abs(f.slope - 1) <= 1e-10 and abs(f.r2 - 1) <= 1e-10
    assert f.intercept == pytest.approx(math.log(3.0))


def test_fit_needs_points():
    with pytest.raises(ConfigError):
        ex.fit_loglog([10.0], [5.0])
    with pytest.raises(ConfigError):
        ex.fit_line([1, 1, 1, 1], [1, 2, 3, 4])


def test_kl_tail():
    assert ex.kl_tail(0.5, 0.5) == 0.0
    assert ex.kl_tail(0.9, 0.5) == pytest.approx(0.9 * math.log(1.8) + 0.1 * math.log(0.2))
    for bad in ((0.0, 0.5), (0.5, 1.0), (1.2, 0.3)):
        with pytest.raises(ConfigError):
            ex.kl_tail(*bad)


def test_derive_seed():
    assert ex.derive_seed(1, 2, 3) == ex.derive_seed(1, 2, 3)
    assert ex.derive_seed(1, 2, 3) != ex.derive_seed(1, 3, 2)
    assert 0 <= ex.derive_seed(0) < 2 ** 32


def test_plan_validation_and_roundtrip(tmp_path):
    plan = ex.SweepPlan.grid([256, 1024], [2.0], 2, 3, master_seed=4)
    assert len(plan.cells) == 2 and len(plan.cells[0].seeds) == 3
    plan.to_json(tmp_path / "p.json")
    back = ex.SweepPlan.from_json(tmp_path / "p.json")
    assert back.cells == plan.cells and back.master_seed == 4
    (tmp_path / "g.json").write_text(json.dumps(
        {"grid": {"n": [256], "r": [2.0], "d": 2, "seeds": 2}, "master_seed": 4}))
    assert ex.SweepPlan.from_json(tmp_path / "g.json").cells[0] == plan.cells[0].__class__(
        256.0, 2.0, 2, plan.cells[0].seeds[:2])
    with pytest.raises(ConfigError):
        ex.SweepPlan([])
    with pytest.raises(ConfigError):
        ex.SweepPlan([ex.Cell(100.0, 2.0, 2, (1, 1))])
    with pytest.raises(ConfigError):
        ex.SweepPlan([ex.Cell(100.0, 2.0, 2, (1,))], measurements=("bogus",))
    with pytest.raises(ConfigError):
        ex.SweepPlan([ex.Cell(-1.0, 2.0, 2, (1,))])


def test_scaling_reproducible():
    plan = ex.SweepPlan.grid([128, 256, 512, 1024], [2.0], 2, 2, master_seed=1)
    a = ex.run_scaling(plan).record()
    b = ex.run_scaling(plan).record()
    assert a == b
    assert a["slope"] > 0


def test_iso_window_and_report(tmp_path):
    plan = ex.SweepPlan.grid([2048], [2.0], 2, 2, master_seed=3)
    rep = ex.run_iso(plan, samples=40, size_lo=32)
    assert len(rep.rows) == 40
    assert all(32 <= r["size"] for r in rep.rows) and all(r["in_window"] for r in rep.rows)
    s = rep.summary()
    assert s["sets"] == 40 and s["min"] > 0
    rep.to_csv(tmp_path / "iso.csv")
    assert (tmp_path / "iso.csv").read_text().splitlines()[0].startswith("n,r,d,seed,size")
    # empty window is reported rather than sampled
    rep = ex.run_iso(plan, samples=10, size_lo=10 ** 6)
    assert not rep.rows and len(rep.notes) == 2
    with pytest.raises(ConfigError):
        ex.run_iso(ex.SweepPlan.grid([256], [2.0], 1, 1), samples=1)


def test_large_radii_smoke():
    plan = ex.SweepPlan.grid([1024], [3.0], 2, 1, master_seed=0)
    rep = ex.run_large_radii_iso(plan, samples=20)
    assert rep.rows and rep.extra["tile_checks"] >= 0
    assert 0 <= rep.extra["all_tiles_loose_fraction"] <= 1


def test_renorm_guard_and_smoke():
    plan = ex.SweepPlan.grid([10000], [1.5], 2, 1, master_seed=0)
    with pytest.raises(ConfigError):
        ex.run_renormalization(plan, M_grid=(3.0,))
    out = ex.run_renormalization(plan, M_grid=(15, 20))
    per = out["cells"][0]["per_M"]
    assert [p["M"] for p in per] == [15, 20]
    assert all(0 <= p["fraction"] <= 1 for p in per)


def test_d1_suffix():
    plan = ex.SweepPlan.grid([256, 512, 1024, 2048], [lambda n: 2 * math.log(n)], 1, 1)
    out = ex.run_d1(plan, samples=50)
    assert out["fit"]["slope"] > 0
    assert all(s["min_ratio"] > 0 for s in out["suffix"])
    with pytest.raises(ConfigError):
        ex.run_d1(ex.SweepPlan.grid([256], [2.0], 2, 1))


def test_bracket_supercritical():
    rows = ex.bracket_supercritical(2000, 2, [0.5, 2.0], pilot_seeds=2)
    assert [r["accepted"] for r in rows] == [False, True]


def test_export_byte_stable(tmp_path):
    a = ex.export_figure_csvs(str(tmp_path / "a" / "rgg"), 16.0, 1.0, 0)
    b = ex.export_figure_csvs(str(tmp_path / "b" / "rgg"), 16.0, 1.0, 0)
    assert len(a) == 4
    for x, y in zip(a, b):
        assert filecmp.cmp(x, y, shallow=False)


def test_perc_and_tiles_reports():
    rep = ex.perc_report(32, 2, [0.2, 0.8], 0)
    assert rep["rows"][0]["largest"] <= rep["rows"][1]["largest"]
    from _helpers import rgg
    t = ex.tiles_report(rgg(2000, 2, 3.0, 0))
    assert t["tiles"] > 0 and t["normal_loose"] >= t["normal_wide"]
