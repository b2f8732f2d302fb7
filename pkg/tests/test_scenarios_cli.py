"""Scenario schema validation, the bundled library, CLI exit codes and
machine-readable report contracts."""

import json
import math

import numpy as np
import pytest

import magtorus as mt
from magtorus.cli import canonical_json, main
from magtorus.scenarios import BUNDLED, ScenarioError
from helpers import circular_closed_form


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def stdout_json(out):
    return json.loads(out)


# ---------------------------------------------------------------------------
# schema and scenario building
# ---------------------------------------------------------------------------


def test_bundled_names():
    names = mt.bundled_scenario_names()
    for expected in ("linear-family-periodic", "random-nonsolution",
                     "flat-zero-field", "flat-constant-field"):
        assert expected in names


def test_build_scenario_validation_errors():
    with pytest.raises(ScenarioError):
        mt.build_scenario({"lambda": 1.0})  # missing N
    with pytest.raises(ScenarioError):
        mt.build_scenario({"N": 1})  # missing lambda
    with pytest.raises(ScenarioError):
        mt.build_scenario({"N": 1, "lambda": 1.0, "schema_version": 99})
    with pytest.raises(ScenarioError):
        mt.build_scenario({"N": 1, "lambda": 1.0, "checks": ["bogus"]})
    with pytest.raises(ScenarioError):
        mt.build_scenario({"N": 1, "lambda": 1.0,
                           "coefficients": [{"k": 0, "v": 1.0}]})  # v_0 must vanish
    with pytest.raises(ScenarioError):
        mt.build_scenario({"N": 1, "lambda": 1.0,
                           "coefficients": [{"k": 5, "u": 1.0}]})
    with pytest.raises(ScenarioError):
        mt.build_scenario({"N": 1, "lambda": 1.0,
                           "trajectories": [{"initial": [0, 0, 0]}]})  # t_end


def test_build_scenario_defaults():
    sc = mt.build_scenario({"N": 1, "lambda": 2.0})
    assert sc.grid.nx == 64 and sc.grid.ny == 64
    assert sc.tolerance == 1e-10
    assert sc.omega_source == "derived"
    assert set(sc.checks) == {"stationarity", "harmonics", "constraint",
                              "conservation", "certificate"}


def test_load_scenario_unknown_name():
    with pytest.raises(ScenarioError):
        mt.load_scenario("no-such-scenario")


# ---------------------------------------------------------------------------
# canonical JSON
# ---------------------------------------------------------------------------


def test_canonical_json_format():
    doc = {"b": 1.5, "a": [1, 2.0, True, None, "s"], "c": {"y": 0.1, "x": -3}}
    text = canonical_json(doc)
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    parsed = json.loads(text)
    assert parsed == doc
    assert canonical_json(1.0) == "1.0"
    assert canonical_json(0.1) == "0.10000000000000001"
    with pytest.raises(ValueError):
        canonical_json(float("nan"))


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def test_verify_exact_family_passes(capsys):
    code, out, _ = run_cli(capsys, "verify", "linear-family-periodic")
    assert code == 0
    doc = stdout_json(out)
    assert doc["payload"]["overall_pass"] is True
    assert doc["payload"]["omega_source"] == "derived"
    for check in doc["payload"]["checks"]:
        assert check["pass"] is True
        for entry in check.get("residuals", []):
            assert entry["sup"] < 1e-10


def test_verify_random_nonsolution_fails(capsys):
    code, out, _ = run_cli(capsys, "verify", "random-nonsolution")
    assert code == 1
    doc = stdout_json(out)
    cert = [c for c in doc["payload"]["checks"] if c["check"] == "certificate"][0]
    assert cert["certified"] is False
    assert max(cert["residual_sups"].values()) > 1e-3


def test_verify_truncated_json_is_input_error(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text('{"N": 1, "lambda": ')
    code, _, err = run_cli(capsys, "verify", str(bad))
    assert code == 2
    assert "malformed" in err


def test_verify_unknown_preset_is_input_error(tmp_path, capsys):
    scen = tmp_path / "scen.json"
    scen.write_text(json.dumps({
        "N": 1,
        "lambda": {"type": "analytic", "name": "not-registered"},
    }))
    code, _, err = run_cli(capsys, "verify", str(scen))
    assert code == 2
    assert "preset" in err


def test_verify_nonpositive_lambda_is_input_error(tmp_path, capsys):
    scen = tmp_path / "scen.json"
    scen.write_text(json.dumps({"N": 1, "lambda": -1.0}))
    code, _, err = run_cli(capsys, "verify", str(scen))
    assert code == 2


def test_verify_deterministic_payload(capsys):
    _, out1, _ = run_cli(capsys, "verify", "linear-family-periodic")
    _, out2, _ = run_cli(capsys, "verify", "linear-family-periodic")
    doc1 = stdout_json(out1)
    doc2 = stdout_json(out2)
    del doc1["timings"], doc2["timings"]
    assert canonical_json(doc1) == canonical_json(doc2)


def test_verify_grid_and_tol_overrides(capsys):
    code, out, _ = run_cli(capsys, "verify", "linear-family-periodic",
                           "--grid", "16,20", "--tol", "1e-6")
    assert code == 0
    doc = stdout_json(out)
    assert doc["payload"]["grid"] == [16, 20]
    assert doc["payload"]["tolerance"] == 1e-6


def test_verify_seed_override_changes_random_fields(capsys):
    _, out1, _ = run_cli(capsys, "verify", "random-nonsolution")
    _, out2, _ = run_cli(capsys, "verify", "random-nonsolution", "--seed", "7")
    _, out3, _ = run_cli(capsys, "verify", "random-nonsolution", "--seed", "7")
    sup = lambda out: stdout_json(out)["payload"]["checks"][0]["residuals"][0]["sup"]
    assert sup(out1) != sup(out2)
    assert sup(out2) == sup(out3)


def test_verify_writes_report_and_plot_data(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "verify", "flat-zero-field",
                         "--out", str(tmp_path), "--plot-data")
    assert code == 0
    report = tmp_path / "flat-zero-field_verify.json"
    assert report.is_file()
    json.loads(report.read_text())
    dats = list(tmp_path.glob("*.dat"))
    assert dats, "expected gnuplot-ready columnar files"
    first = dats[0].read_text().strip().split("\n")[0].split()
    assert len(first) == 3  # x y value


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def test_simulate_flat_constant_field(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "simulate", "flat-constant-field",
                           "--out", str(tmp_path))
    assert code == 0
    doc = stdout_json(out)
    traj = doc["payload"]["trajectories"][0]
    cx, cy, cphi = circular_closed_form(math.pi)
    assert abs(traj["final"][1] - cx) < 1e-8
    assert abs(traj["final"][2] - cy) < 1e-8
    assert abs(traj["final"][3] - (cphi % (2 * math.pi))) < 1e-8
    assert traj["drifts"]["F"]["relative"] < 1e-8
    csv_path = tmp_path / traj["csv"]
    assert csv_path.is_file()
    header = csv_path.read_text().split("\n", 1)[0]
    assert header == "t,x,y,phi,H,F"
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    assert abs(data[-1, 1] - cx) < 1e-8 and abs(data[-1, 2] - cy) < 1e-8


def test_simulate_zero_field_drift_exactly_zero(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "simulate", "flat-zero-field",
                           "--out", str(tmp_path))
    assert code == 0
    doc = stdout_json(out)
    traj = doc["payload"]["trajectories"][0]
    assert traj["drifts"]["F"]["max_abs"] <= 1e-12
    assert traj["drifts"]["H"]["max_abs"] == 0.0


def test_simulate_step_halving_error_ratio(tmp_path, capsys):
    errors = []
    for dt in ("1e-2", "5e-3"):
        _, out, _ = run_cli(capsys, "simulate", "flat-constant-field",
                            "--dt", dt, "--out", str(tmp_path))
        final = stdout_json(out)["payload"]["trajectories"][0]["final"]
        cx, cy, cphi = circular_closed_form(math.pi)
        errors.append(max(abs(final[1] - cx), abs(final[2] - cy),
                          abs(final[3] - (cphi % (2 * math.pi)))))
    assert 12.0 < errors[0] / errors[1] < 20.0


def test_simulate_without_trajectories_is_input_error(capsys):
    code, _, err = run_cli(capsys, "simulate", "random-nonsolution")
    assert code == 2
    assert "trajectory" in err


def test_simulate_abort_gives_partial_output(tmp_path, capsys):
    scen = tmp_path / "abort.json"
    scen.write_text(json.dumps({
        "name": "abort-case",
        "N": 1,
        "lambda": {"type": "analytic", "name": "affine_y",
                   "params": {"offset": 1.0, "slope": 0.4}},
        "coefficients": [{"k": 0, "u": 0.0}],
        "omega": 0.0,
        "trajectories": [{"name": "down", "initial": [0.0, 0.0, 4.71238898038469],
                          "t_end": 5.0}],
    }))
    code, out, _ = run_cli(capsys, "simulate", str(scen), "--out", str(tmp_path))
    assert code == 1
    doc = stdout_json(out)
    traj = doc["payload"]["trajectories"][0]
    assert traj["aborted"] is True
    assert "positivity floor" in traj["diagnostic"]
    assert (tmp_path / traj["csv"]).is_file()  # partial trajectory still written


def test_simulate_adaptive_flag(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "simulate", "flat-constant-field",
                           "--adaptive", "1e-10", "--out", str(tmp_path))
    assert code == 0
    doc = stdout_json(out)
    assert doc["payload"]["trajectories"][0]["step"]["mode"] == "adaptive"


# ---------------------------------------------------------------------------
# assemble
# ---------------------------------------------------------------------------


def test_assemble_geodesic(capsys):
    code, out, _ = run_cli(capsys, "assemble", "--geodesic", "n=2 a=0,1,1")
    assert code == 0
    doc = stdout_json(out)
    geo = doc["payload"]["geodesic"]
    assert geo["matrix"] == [[0.0, 1.0], [1.0, 2.0]]
    eigs = sorted(ev[0] for ev in geo["eigenvalues"])
    assert abs(eigs[0] - (1 - math.sqrt(2))) < 1e-12
    assert abs(eigs[1] - (1 + math.sqrt(2))) < 1e-12
    assert geo["class"] == "hyperbolic"


def test_assemble_magnetic_n1_golden(capsys):
    code, out, _ = run_cli(capsys, "assemble", "linear-family-periodic",
                           "--at", "1,0.3")
    assert code == 0
    entry = stdout_json(out)["payload"]["entries"][0]
    assert entry["a"] == [[1.0, 0.0], [0.0, 2.0]]
    assert entry["b"] == [[0.0, 0.0], [0.0, 0.0]]
    assert entry["class"] == "degenerate"


def test_assemble_crafted_degenerate_state(capsys):
    # both matrices singular: analysis still succeeds with exit 0
    code, out, _ = run_cli(capsys, "assemble", "random-nonsolution",
                           "--at", "1,0.3,0,0")
    assert code == 0
    entry = stdout_json(out)["payload"]["entries"][0]
    assert entry["class"] == "degenerate"


def test_assemble_wrong_state_length(capsys):
    code, _, err = run_cli(capsys, "assemble", "linear-family-periodic",
                           "--at", "1,0.3,0.2")
    assert code == 2
    assert "length" in err


def test_assemble_requires_scenario_or_geodesic(capsys):
    code, _, _ = run_cli(capsys, "assemble")
    assert code == 2


def test_assemble_plot_data(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "assemble", "--geodesic", "n=2 a=0,1,1",
                         "--out", str(tmp_path), "--plot-data")
    assert code == 0
    assert (tmp_path / "spectrum.dat").is_file()
    assert (tmp_path / "assemble.json").is_file()


# ---------------------------------------------------------------------------
# scenario files round-trip through the CLI
# ---------------------------------------------------------------------------


def test_scenario_file_equivalent_to_bundled(tmp_path, capsys):
    scen = tmp_path / "family.json"
    scen.write_text(json.dumps(BUNDLED["linear-family-periodic"]))
    code, out, _ = run_cli(capsys, "verify", str(scen))
    assert code == 0
    _, out_bundled, _ = run_cli(capsys, "verify", "linear-family-periodic")
    doc1, doc2 = stdout_json(out), stdout_json(out_bundled)
    del doc1["timings"], doc2["timings"]
    assert canonical_json(doc1) == canonical_json(doc2)
