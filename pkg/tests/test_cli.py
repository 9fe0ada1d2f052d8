import json
import subprocess
import sys
from pathlib import Path

import pytest

from bandcontrol.cli import main
from conftest import R1_SING_D, R1_SING_GAMMA, R1_SING_U

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def write_config(tmp_path, **overrides):
    cfg = json.loads((CONFIGS / "r1_impulse.json").read_text())
    cfg.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_solve_singular(capsys):
    code, doc, _ = run(capsys, "solve", CONFIGS / "r1_singular.json")
    assert code == 0
    assert doc["band"]["d"] == pytest.approx(R1_SING_D, abs=1e-9)
    assert doc["band"]["u"] == pytest.approx(R1_SING_U, abs=1e-9)
    assert doc["gamma"] == pytest.approx(R1_SING_GAMMA, abs=1e-9)


@pytest.mark.parametrize("name", ["r1_impulse", "quadratic_impulse", "shifted_linear",
                                  "nonneg_r1"])
def test_solve_then_verify_round_trip(capsys, name):
    code, doc, _ = run(capsys, "solve", CONFIGS / f"{name}.json")
    assert code == 0
    assert max(abs(v) for v in doc["residuals"].values()) < 1e-8
    b = doc["band"]
    band = f"{b['d']},{b['D']},{b['U']},{b['u']}"
    code, ev, _ = run(capsys, "evaluate", CONFIGS / f"{name}.json", "--band", band)
    assert code == 0
    assert ev["gamma"] == pytest.approx(doc["gamma"], rel=1e-6)
    code, rep, _ = run(capsys, "verify", CONFIGS / f"{name}.json", "--band", band)
    assert code == 0 and rep["pass"] is True


def test_json_floats_rounded(capsys):
    _, doc, _ = run(capsys, "solve", CONFIGS / "r1_impulse.json")
    assert len(repr(doc["gamma"]).replace(".", "").lstrip("0")) <= 12


def test_zero_drift_is_validation_error(capsys, tmp_path):
    code, doc, err = run(capsys, "solve", write_config(tmp_path, mu=0.0))
    assert code == 2 and doc is None
    assert "unsupported drift" in err


def test_evaluate_zero_holding(capsys):
    code, doc, err = run(capsys, "evaluate", CONFIGS / "zero_holding.json",
                         "--band", "-2,-1,1,2", "--m", "0")
    assert code == 0
    assert doc["gamma"] == pytest.approx(1.1047914, abs=1e-6)
    assert "warning" in err


def test_evaluate_csv(capsys, tmp_path):
    out = tmp_path / "v.csv"
    code, doc, _ = run(capsys, "evaluate", CONFIGS / "r1_impulse.json",
                       "--band", "-3,-1.5,-0.4,2", "--csv", out, "--grid", 25)
    assert code == 0 and doc["csv"] == str(out)
    assert len(out.read_text().splitlines()) == 26


def test_verify_perturbed_band_fails(capsys):
    _, doc, _ = run(capsys, "solve", CONFIGS / "r1_impulse.json")
    b = doc["band"]
    band = f"{b['d']},{b['D'] + 0.3},{b['U']},{b['u']}"
    code, rep, _ = run(capsys, "verify", CONFIGS / "r1_impulse.json", "--band", band)
    assert code == 4 and rep["pass"] is False


def test_verify_solves_when_band_missing(capsys):
    code, rep, _ = run(capsys, "verify", CONFIGS / "quadratic_impulse.json")
    assert code == 0 and rep["pass"] is True


def test_simulate_is_deterministic(capsys, tmp_path):
    args = ("simulate", CONFIGS / "r1_impulse.json", "--horizon", 200, "--burn-in", 5,
            "--reps", 2, "--seed", 4)
    code, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert code == 0 and first == second
    assert first["config"]["reps"] == 2


def test_simulate_dump(capsys, tmp_path):
    dump = tmp_path / "path.csv"
    code, _, _ = run(capsys, "simulate", CONFIGS / "r1_singular.json", "--band", "-1.5,0.6",
                     "--horizon", 10, "--burn-in", 1, "--reps", 1, "--dump-path", dump,
                     "--stride", 10)
    assert code == 0
    lines = dump.read_text().splitlines()
    assert lines[0] == "t,Z,cumulative_cost" and len(lines) == 1001


@pytest.mark.parametrize("argv", [
    ["simulate", "CFG", "--reps", "0"],
    ["evaluate", "CFG", "--band", "1,2,3"],
    ["evaluate", "CFG", "--band", "2,1,3,4"],
    ["evaluate", "CFG", "--band", "-2,-1,1,2", "--grid", "1"],
    ["verify", "CFG", "--points", "2"],
    ["evaluate", "CFG"],
    ["frobnicate", "CFG"],
])
def test_usage_errors(capsys, argv):
    argv = [str(CONFIGS / "r1_impulse.json") if a == "CFG" else a for a in argv]
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


@pytest.mark.parametrize("content", [
    "not json", "[1, 2]", '{"mu": 1}',
])
def test_bad_config_files(capsys, tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    code, _, err = run(capsys, "solve", path)
    assert code == 1 and err


def test_unknown_keys_rejected(capsys, tmp_path):
    assert run(capsys, "solve", write_config(tmp_path, colour="red"))[0] == 1
    bad_hold = {"family": "linear", "p": 1, "c": 1, "slope": 2}
    assert run(capsys, "solve", write_config(tmp_path, holding=bad_hold))[0] == 1
    assert run(capsys, "solve", tmp_path / "missing.json")[0] == 1


def test_invalid_parameters_are_validation_errors(capsys, tmp_path):
    code, _, err = run(capsys, "solve", write_config(tmp_path, k=-1.0))
    assert code == 2 and "validation" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bandcontrol", "solve",
                           str(CONFIGS / "r1_singular.json")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["mode"] == "singular"


def test_simulate_singular_optimum_defaults(capsys):
    code, doc, _ = run(capsys, "simulate", CONFIGS / "r1_singular.json", "--seed", 42)
    assert code == 0
    assert doc["ac_mean"] == pytest.approx(R1_SING_GAMMA, rel=0.02)
    assert doc["config"]["horizon"] == 2e4 and doc["config"]["reps"] == 8
