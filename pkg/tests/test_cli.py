import json
from pathlib import Path

import pytest

from chaplygin import cli

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def small(tmp_path, name="small", **over):
    d = {
        "name": name, "system": "reduced-special", "n": 3, "geometry": {"eps": 0.3, "D": 1.0},
        "inertia": {"kind": "random-specop"}, "integrator": {"t_end": 0.5, "h": 1e-2},
        "checks": ["hamiltonian", "gamma_norm", "psi2"], "seed": 3,
    }
    d.update(over)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(d))
    return path


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", "--scenario", str(small(tmp_path)), "--out", str(out)]) == 0
    assert (out / "small.csv").exists()
    report = json.loads((out / "small.report.json").read_text())
    assert report["passed"] and {c["name"] for c in report["checks"]} == {"hamiltonian", "gamma_norm", "psi2"}
    assert json.loads((out / "summary.json").read_text())["passed"]
    assert "PASS" in capsys.readouterr().out


def test_shipped_scenario(tmp_path):
    assert cli.main(["run", "--scenario", str(SCENARIOS / "rubber_n4.json"), "--out", str(tmp_path)]) == 0


@pytest.mark.parametrize("bad", [
    {"system": "bogus"},
    {"n": 1},
    {"integrator": {"method": "Euler"}},
    {"checks": ["no-such-check"]},
    {"initial": {"gamma": [1.0, 1.0, 0.0]}},
    {"geometry": {"eps": 0.0, "D": 1.0}},
    {"extra": 1},
])
def test_config_errors_exit_2(tmp_path, bad, capsys):
    assert cli.main(["run", "--scenario", str(small(tmp_path, **bad)), "--out", str(tmp_path / "o")]) == 2
    assert "error:" in capsys.readouterr().err


def test_parse_error_reports_location(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"system": "rubber",\n  "n": }')
    assert cli.main(["run", "--scenario", str(path)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path):
    assert cli.main(["run", "--scenario", str(tmp_path / "missing.json")]) == 2


def test_failed_check_exit_1(tmp_path):
    # a coarse step cannot hold the energy to the drift tolerance
    path = small(tmp_path, integrator={"t_end": 4.0, "h": 0.5}, initial={"scale": 10.0})
    assert cli.main(["run", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 1
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert not summary["passed"]


def test_blowup_is_a_failed_row(tmp_path):
    path = small(tmp_path, integrator={"t_end": 5.0, "h": 0.5, "projection": False}, initial={"scale": 5.0})
    assert cli.main(["run", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 1
    row = json.loads((tmp_path / "o" / "summary.json").read_text())["results"][0]
    assert "failure_time" in row and row["failure_time"] > 0


def test_workers_env(tmp_path, monkeypatch):
    paths = [str(small(tmp_path, name=f"s{i}", seed=i)) for i in range(3)]
    monkeypatch.setenv(cli.WORKERS_ENV, "2")
    assert cli.main(["run", "--scenario", *paths, "--out", str(tmp_path / "o")]) == 0
    rows = json.loads((tmp_path / "o" / "summary.json").read_text())["results"]
    assert [r["name"] for r in rows] == ["s0", "s1", "s2"]
    monkeypatch.setenv(cli.WORKERS_ENV, "many")
    assert cli.main(["run", "--scenario", *paths, "--out", str(tmp_path / "o")]) == 2


def test_duplicate_names_exit_2(tmp_path):
    p = str(small(tmp_path))
    assert cli.main(["run", "--scenario", p, p]) == 2


def test_verify_measure(capsys):
    assert cli.main(["verify-measure", "--system", "nonrubber-reduced", "--n", "4", "--eps", "0.3", "--samples", "5"]) == 0
    assert capsys.readouterr().out.startswith("PASS")


def test_verify_measure_negative_control(tmp_path):
    assert cli.main(["verify-measure", "--negative-control", "--eps", "0.3", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "summary.json").read_text())["passed"]


def test_verify_hamiltonization():
    assert cli.main(["verify-hamiltonization", "--n", "4", "--eps", "0.3", "--samples", "200"]) == 0


def test_verify_equivalence():
    assert cli.main(["verify-equivalence", "--n", "3", "--eps", "0.3", "--t-end", "0.5"]) == 0


def test_bad_samples_exit_2():
    assert cli.main(["verify-hamiltonization", "--samples", "0"]) == 2


def test_sweep(tmp_path, capsys):
    base = SCENARIOS / "chaplygin3d_eps1.json"
    d = json.loads(base.read_text())
    d["integrator"]["t_end"] = 0.5
    path = tmp_path / "base.json"
    path.write_text(json.dumps(d))
    code = cli.main(["sweep", "--scenario", str(path), "--eps", "0.5", "2", "--inertia", "random-chop", "--out", str(tmp_path / "o")])
    assert code == 0
    rows = json.loads((tmp_path / "o" / "summary.json").read_text())["results"]
    assert len(rows) == 2


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "chaplygin", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify-measure" in res.stdout
