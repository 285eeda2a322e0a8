import subprocess
import sys
from pathlib import Path

import pytest

from rmtgap import cli, edges
from rmtgap.errors import NumericalError


def _manifest(path):
    return dict(line.split("=", 1) for line in Path(path).read_text().splitlines())


def test_unknown_subcommand_is_usage_error(capsys):
    assert cli.run(["bogus"]) == 2
    assert "usage" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert cli.run(["--help"]) == 0


def test_parameter_error_exit(tmp_path):
    assert cli.run(["lue-hard", "--N", "1", "--out", str(tmp_path / "x.csv")]) == 2
    assert cli.run(["gue-piv", "--n", "5", "--nodes", "4", "--out", str(tmp_path / "y.csv")]) == 2


def test_numerical_error_exit(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise NumericalError("synthetic failure")

    monkeypatch.setattr(edges, "lue_hard_edge", boom)
    assert cli.run(["lue-hard", "--out", str(tmp_path / "x.csv")]) == 3


def test_check_pass_and_breach(tmp_path, capsys):
    out = tmp_path / "jue.csv"
    assert cli.run(["jue-hard", "--N", "20", "--check", "--out", str(out)]) == 0
    assert "check: PASS" in capsys.readouterr().out
    assert cli.run(["jue-hard", "--N", "20", "--check", "--tol", "1e-9", "--out", str(out)]) == 4


def test_csv_and_manifest(tmp_path):
    out = tmp_path / "sub" / "lue.csv"
    assert cli.run(["lue-hard", "--N", "10", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "s,E_N,E_hard,abs_err"
    assert len(lines) == 62
    # 17 significant digits round-trip exactly
    first = lines[2].split(",")
    assert float(first[0]) == pytest.approx(0.5 + 9.5 / 60, rel=1e-16)
    man = _manifest(str(out) + ".manifest")
    assert man["command"] == "lue-hard"
    assert man["N"] == "10"
    assert Path(man["outputs"]).exists()
    assert float(man["elapsed"]) >= 0
    assert "toolkit_version" in man


def test_csv_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.run(["jue-hard", "--N", "20", "--a", "2", "--out", str(a)]) == 0
    assert cli.run(["jue-hard", "--N", "20", "--a", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_precedence(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("N = 12\nedge = left\n")
    out = tmp_path / "h.csv"
    assert cli.run(["jue-hard", "--config", str(conf), "--out", str(out)]) == 0
    man = _manifest(str(out) + ".manifest")
    assert (man["N"], man["edge"]) == ("12", "left")
    assert cli.run(["jue-hard", "--config", str(conf), "--N", "14", "--out", str(out)]) == 0
    man = _manifest(str(out) + ".manifest")
    assert (man["N"], man["edge"]) == ("14", "left")


def test_config_unknown_key(tmp_path):
    conf = tmp_path / "bad.cfg"
    conf.write_text("nonsense = 3\n")
    assert cli.run(["jue-hard", "--config", str(conf), "--out", str(tmp_path / "o.csv")]) == 2


def test_every_subcommand_has_check():
    parser = cli.build_parser()
    choices = parser._subparsers._group_actions[0].choices
    assert len(choices) == 11
    for name, sub in choices.items():
        assert any(act.dest == "check" for act in sub._actions), name


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "rmtgap", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "tw-compare" in res.stdout
