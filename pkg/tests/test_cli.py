import json
import subprocess
import sys

import pytest

from carnot.algebra import algebra_to_dict, engel
from carnot.cli import COMMANDS, main
from carnot.hypo import counterexample, dump_family


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


def test_subcommand_set():
    assert set(COMMANDS) == {
        "validate", "identities", "frame", "radial", "gauge-scan", "ball-volume", "hardy-check",
        "hardy-ibp", "hardy-scaling", "hypo-flag", "hypo-repair", "hypo-scan", "hypo-radial",
    }


def test_identities_heisenberg(capsys):
    code, rep, err = run_json(capsys, "identities", "--algebra", "heisenberg")
    assert code == 0
    for key in ["associativity", "zeta_oracle", "div_left_invariant", "div_radial", "remarkable_identity", "euler_gauge"]:
        assert rep["identities"][key]["residual"] == "0"
    assert err.startswith("[ok]")


def test_validate_reports_violations(capsys, tmp_path):
    data = algebra_to_dict(engel())
    good = tmp_path / "engel.json"
    good.write_text(json.dumps(data))
    assert run_json(capsys, "validate", "--algebra", str(good))[0] == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"layer_dims": [2, 1], "brackets": []}))
    code, rep, _ = run_json(capsys, "validate", "--algebra", str(bad))
    assert code == 1
    assert rep["violations"][0]["axiom"] == "generation"


@pytest.mark.parametrize("argv", [
    ["validate", "--algebra", "nonsense"],
    ["identities"],
    ["ball-volume", "--algebra", "heisenberg"],
    ["hardy-check", "--algebra", "heisenberg", "--s", "2"],
    ["frame", "--algebra", "heisenberg", "--threads", "0"],
    ["frobnicate"],
])
def test_input_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_group_frame_alias(capsys):
    code, rep, _ = run_json(capsys, "group", "frame", "--algebra", "heisenberg")
    assert code == 0
    assert rep["fields"][0] == "(1)*d1 + (-1/2*x2)*d3"


def test_hardy_ibp_engel(capsys):
    code, rep, _ = run_json(capsys, "hardy", "ibp", "--algebra", "engel", "--s", "2", "--annulus", "0.5", "2", "--seed", "7")
    assert code == 0
    assert rep["residual"] < 1e-5


def test_hardy_check_and_scaling(capsys):
    code, rep, _ = run_json(capsys, "hardy-check", "--algebra", "heisenberg", "--s", "1")
    assert code == 0 and rep["lhs"] > 0
    code, rep, _ = run_json(capsys, "hardy-scaling", "--algebra", "heisenberg", "--s", "1", "--r", "2")
    assert code == 0


def test_hypo_scan_expect(capsys):
    code, rep, _ = run_json(capsys, "hypo", "scan", "--family", "counterexample", "--target-order", "1")
    assert code == 1 and rep["verdict"] == "unbounded"
    code, rep, _ = run_json(capsys, "hypo", "scan", "--family", "counterexample", "--target-order", "1",
                            "--expect", "unbounded")
    assert code == 0


def test_hypo_repair_and_radial(capsys):
    code, rep, _ = run_json(capsys, "hypo-repair", "--family", "counterexample")
    assert code == 0
    assert "y3 = x3 - 1/2*x1^2" in rep["repair"]["change"]
    assert run(capsys, "hypo-radial", "--family", "counterexample")[0] == 1
    assert run(capsys, "hypo-radial", "--family", "counterexample", "--repair")[0] == 0


def test_hypo_flag_from_json(capsys, tmp_path):
    path = tmp_path / "fam.json"
    dump_family(counterexample(), path)
    code, rep, _ = run_json(capsys, "hypo-flag", "--family", str(path))
    assert code == 0 and rep["dims"] == [3, 4, 5]
    assert run(capsys, "hypo-flag", "--family", "irregular")[0] == 1


def test_gauge_scan_csv(capsys):
    code, out, _ = run(capsys, "gauge", "scan", "--algebra", "heisenberg", "--target-order", "1",
                       "--max-derivs", "2", "--seed", "3", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "shell_radius,gamma,sup_value"


def test_json_is_byte_identical_across_threads(capsys):
    base = ["gauge-scan", "--algebra", "engel", "--max-order", "2", "--seed", "5"]
    outs = [run(capsys, *base, "--threads", t)[1] for t in ("1", "4")]
    assert outs[0] == outs[1]
    vol = ["ball-volume", "--algebra", "heisenberg", "--samples", "200000", "--seed", "5"]
    outs = [run(capsys, *vol, "--threads", t)[1] for t in ("1", "3")]
    assert outs[0] == outs[1]


def test_output_file_and_text_format(capsys, tmp_path):
    target = tmp_path / "r.json"
    code, out, _ = run(capsys, "radial", "--algebra", "engel", "--output", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["passed"] is True
    code, out, _ = run(capsys, "radial", "--algebra", "engel", "--format", "text")
    assert code == 0 and "verdict: pass" in out


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"algebra": "engel"}))
    assert run(capsys, "identities", "--config", str(cfg))[0] == 0
    cfg.write_text(json.dumps({"algebra": "engel", "colour": 1}))
    assert run(capsys, "identities", "--config", str(cfg))[0] == 2


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "carnot.cli", "validate", "--algebra", "engel"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["valid"] is True
