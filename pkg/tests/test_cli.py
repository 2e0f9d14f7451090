import json

import pytest

from geomix.cli import _radius, main


def _run(tmp_path, capsys, *argv):
    code = main([*argv, "--out", str(tmp_path)])
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 else None)


def test_radius_parsing():
    assert _radius("2.5") == 2.5
    assert _radius("2log")(100) == pytest.approx(2 * 4.60517, rel=1e-5)
    assert _radius("sqrtlog")(100) == pytest.approx((2 * 4.605170186) ** 0.5)


@pytest.mark.parametrize("argv", [
    ["generate", "--n", "500"],
    ["giant", "--n", "500"],
    ["spectrum", "--n", "500"],
    ["mix", "--n", "200", "--points", "5"],
    ["tiles", "--n", "2000", "--r", "3", "--M", "15"],
    ["perc", "--n", "16"],
    ["scaling", "--n", "128", "256", "512", "1024", "--seeds", "1"],
    ["export-fig", "--n", "16", "--r", "1"],
])
def test_commands(tmp_path, capsys, argv):
    code, out = _run(tmp_path, capsys, *argv)
    assert code == 0 and isinstance(out, dict)
    name = argv[0].replace("-", "_")
    assert (tmp_path / f"{name}.json").exists()


def test_error_exit(tmp_path, capsys):
    code = main(["giant", "--n", "-5", "--out", str(tmp_path)])
    assert code == 2
    assert "geomix giant" in capsys.readouterr().err
