import json

import pytest

from sbmkit.cli import COMMANDS, main
from sbmkit.config import config_keys

SMALL = ["--paths", "300", "--scheme.dt=0.004"]


def _run(tmp_path, *args):
    return main(["run", *args, "--out", str(tmp_path)])


def test_help_lists_commands_and_keys(capsys):
    with pytest.raises(SystemExit) as e:
        main(["run", "--help"])
    assert e.value.code == 0
    out = capsys.readouterr().out
    for c in COMMANDS:
        assert c in out
    for k, _ in config_keys():
        assert k in out


@pytest.mark.parametrize("command", ["tau", "exit-dist", "sample", "carleson", "dynkin"])
def test_commands_write_results(tmp_path, command):
    assert _run(tmp_path, command, *SMALL) == 0
    res = json.loads((tmp_path / command / "result.json").read_text())
    assert res["command"] == command and res["seed"] == 0


def test_harnack_needs_vanishing_payoff(tmp_path):
    assert _run(tmp_path, "harnack", *SMALL) == 1
    assert _run(tmp_path, "harnack", *SMALL, "--query.payoff=ball:center=1.5;0;0,r=0.5") == 0


def test_green_and_martin_in_disc(tmp_path):
    common = ["--dim", "2", "--kernel", "pure_bm", *SMALL]
    assert _run(tmp_path, "green", *common, "--query.y=[0.5, 0.0]") == 0
    assert _run(tmp_path, "martin", *common, "--query.x=[0.3, 0.0]", "--query.x0=[0.0, 0.0]") == 0
    r = json.loads((tmp_path / "green" / "result.json").read_text())["result"]
    assert r["value"] > 0


def test_profile_and_bhp(tmp_path):
    assert _run(tmp_path, "profile", "--kernel", "pure_bm", *SMALL, "--query.grid", "[0.1, 0.2]") == 0
    assert _run(tmp_path, "bhp", *SMALL, "--query.grid=[[0, 0, -0.9], [0.1, 0, -0.9]]") == 0


def test_same_seed_same_result(tmp_path):
    _run(tmp_path / "a", "tau", *SMALL)
    _run(tmp_path / "b", "tau", *SMALL, "--workers", "2")
    a = json.loads((tmp_path / "a" / "tau" / "result.json").read_text())
    b = json.loads((tmp_path / "b" / "tau" / "result.json").read_text())
    assert a == b


def test_errors_exit_one(tmp_path, capsys):
    assert _run(tmp_path, "tau", "--run.pathz=3") == 1
    assert _run(tmp_path, "tau", "--kernel", "nonsense") == 1
    assert _run(tmp_path, "green", *SMALL) == 1
    assert _run(tmp_path, "experiment") == 1
    assert _run(tmp_path, "report") == 1
    assert _run(tmp_path, "exit-dist", *SMALL, "--query.payoff=ball:center=1;0;0") == 1
    assert "error:" in capsys.readouterr().err


def test_bad_config_file_exits_one(tmp_path, capsys):
    p = tmp_path / "c.yaml"
    p.write_text("run:\n  seed: 1\n  bogus: 2\n")
    assert _run(tmp_path, "tau", "--config", str(p)) == 1
    assert "c.yaml:3" in capsys.readouterr().err


def _tiny_oracle(tmp_path, *extra):
    return _run(tmp_path, "experiment", "--id", "exit_time_oracle",
                "--experiment.exit_time_oracle.paths=2000", "--experiment.exit_time_oracle.dt=0.004",
                "--experiment.exit_time_oracle.order_paths=4000",
                "--experiment.exit_time_oracle.order_dts=[0.08, 0.04, 0.02]", *extra)


def test_experiment_pass_and_claim_failure(tmp_path, capsys):
    assert _tiny_oracle(tmp_path, "--experiment.exit_time_oracle.min_order=-100",
                        "--experiment.exit_time_oracle.z_max=100") == 0
    rep = json.loads((tmp_path / "exit_time_oracle" / "report.json").read_text())
    assert all(c["verdict"] == "pass" for c in rep["claims"])
    assert _run(tmp_path, "report") == 0
    capsys.readouterr()
    assert _tiny_oracle(tmp_path, "--experiment.exit_time_oracle.min_order=100") == 2
    assert "claim failure" in capsys.readouterr().err
    assert _run(tmp_path, "report") == 2
