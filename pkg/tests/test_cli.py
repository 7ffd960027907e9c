import json
import math

import numpy as np
import pytest

from magnetosc.cli import main
from magnetosc.cli.scenario import builtin_names, load_scenario, scenario_from_dict
from magnetosc.errors import ScenarioError
from magnetosc.quantum import Grid, WaveFrame, read_binary
from magnetosc.quantum.grid import integrate_grid


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def write_scenario(tmp_path, **changes):
    doc = load_scenario("identity").to_dict()
    for key, value in changes.items():
        if key in doc["profiles"]:
            doc["profiles"][key] = value
        else:
            doc[key] = value
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return str(path)


def run(tmp_path, *argv):
    return main(["--out", str(tmp_path), *argv])


def test_shipped_scenarios_parse():
    names = builtin_names()
    assert {"identity", "symmetric", "unequal_masses", "rotating", "drifting"} <= set(names)
    for name in names:
        load_scenario(name)


def test_scenario_round_trips_through_dict():
    s = load_scenario("modulated_stiffness")
    assert scenario_from_dict(s.to_dict()) == s


def test_reduce_identity_columns(tmp_path):
    assert run(tmp_path, "--scenario", "identity", "reduce", "--samples", "11") == 0
    cols = read_csv(tmp_path / "reduce.csv")
    assert len(cols["t"]) == 11
    np.testing.assert_array_equal(cols["lambda1"], 1.0)
    np.testing.assert_array_equal(cols["lambda2"], 1.0)
    np.testing.assert_array_equal(cols["lambda3"], 0.0)
    np.testing.assert_array_equal(cols["theta"], 0.0)


def test_reduce_symmetric_delta(tmp_path):
    assert run(tmp_path, "--scenario", "symmetric", "reduce") == 0
    cols = read_csv(tmp_path / "reduce.csv")
    assert np.max(np.abs(cols["delta"])) < 1e-10
    np.testing.assert_allclose(cols["theta"], math.pi / 2, rtol=0, atol=1e-15)


def test_reduce_drifting_exits_3(tmp_path, capsys):
    assert run(tmp_path, "--scenario", "drifting", "reduce") == 3
    assert "theta_constancy" in capsys.readouterr().err


def test_corrupted_scenario_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x", "interval": [0, 1], ')
    assert run(tmp_path, "--scenario", str(bad), "validate") == 2
    assert run(tmp_path, "--scenario", str(tmp_path / "missing.json"), "reduce") == 2
    assert run(tmp_path, "--scenario", write_scenario(tmp_path, extra_field=1), "reduce") == 2


def test_scenario_errors_are_specific():
    doc = load_scenario("identity").to_dict()
    doc["quantum"]["frame"] = "sideways"
    with pytest.raises(ScenarioError, match="quantum.frame"):
        scenario_from_dict(doc)
    doc = load_scenario("identity").to_dict()
    doc["profiles"]["B"] = {"kind": "noise"}
    with pytest.raises(ScenarioError):
        scenario_from_dict(doc)


def test_invalid_mass_exits_2(tmp_path):
    path = write_scenario(tmp_path, m1={"kind": "polynomial", "coefficients": [1.0, -1.0]})
    assert run(tmp_path, "--scenario", path, "reduce") == 2
    assert run(tmp_path, "--scenario", path, "validate") == 2


def test_inverted_mode(tmp_path, capsys):
    path = write_scenario(tmp_path, C1={"kind": "constant", "value": -1.0})
    assert run(tmp_path, "--scenario", path, "ermakov") == 3
    assert "omega_sq_positive" in capsys.readouterr().err
    # the original-frame propagator still runs, with a warning
    assert run(tmp_path, "--scenario", path, "classical", "--t-end", "1") == 0
    assert "omega_sq_positive" in capsys.readouterr().err


def test_ermakov_stiff_scenario(tmp_path):
    assert run(tmp_path, "--scenario", "stiff", "ermakov", "--times", "0", repr(math.pi / 4)) == 0
    cols = read_csv(tmp_path / "ermakov.csv")
    assert cols["rho1"][1] == pytest.approx(0.5, abs=1e-8)
    assert cols["rho2"][1] == pytest.approx(0.5, abs=1e-8)
    assert np.max(cols["residual1"]) < 1e-8


def test_wavefunction_csv_norm(tmp_path):
    assert run(tmp_path, "--scenario", "identity", "wavefunction", "--n", "0", "0", "--times", "1.5") == 0
    cols = read_csv(tmp_path / "psi_n00_t0.csv")
    x, y = np.unique(cols["x"]), np.unique(cols["y"])
    grid = Grid(x[0], x[-1], y[0], y[-1], len(x), len(y))
    density = cols["density"].reshape(len(x), len(y))
    assert integrate_grid(grid, density).real == pytest.approx(1.0, abs=1e-6)


def test_wavefunction_binary(tmp_path):
    argv = ["--scenario", "rotating", "wavefunction", "--n", "1", "0", "--times", "0", "2",
            "--format", "binary", "--points", "64"]
    assert run(tmp_path, *argv) == 0
    field, n = read_binary(tmp_path / "psi_n10_t1.bin")
    assert n == (1, 0) and field.t == 2.0 and field.frame == WaveFrame.ORIGINAL
    assert field.grid.nx == 64


def test_wavefunction_transformed_and_closed_form(tmp_path):
    base = ["--scenario", "symmetric", "wavefunction", "--points", "48", "--format", "binary"]
    assert run(tmp_path, *base, "--frame", "transformed") == 0
    assert read_binary(tmp_path / "psi_n00_t0.bin")[0].frame == WaveFrame.TRANSFORMED
    assert run(tmp_path, *base, "--kind", "closed_form") == 0


def test_classical_round_trip(tmp_path):
    assert run(tmp_path, "--scenario", "rotating", "classical", "--round-trip") == 0
    report = json.loads((tmp_path / "classical_round_trip.json").read_text())
    assert report["passed"] and report["measured"] < 1e-8
    cols = read_csv(tmp_path / "classical.csv")
    assert list(cols) == ["t", "X1", "X2", "P1", "P2", "energy"]


def test_fixed_step_outputs_are_byte_identical(tmp_path):
    outputs = []
    for k in range(2):
        out = tmp_path / str(k)
        assert main(["--scenario", "modulated_field", "--out", str(out), "--fixed-step", "--step", "1e-2",
                     "classical", "--t-end", "10"]) == 0
        # global flags are also accepted after the subcommand
        assert main(["--scenario", "stiff", "ermakov", "--out", str(out), "--fixed-step"]) == 0
        outputs.append(((out / "classical.csv").read_bytes(), (out / "ermakov.csv").read_bytes()))
    assert outputs[0] == outputs[1]


def test_csv_uses_17_significant_digits(tmp_path):
    run(tmp_path, "--scenario", "stiff", "ermakov", "--times", "0.3")
    fields = (tmp_path / "ermakov.csv").read_text().splitlines()[1].split(",")
    for text in fields:
        assert text == "%.17g" % float(text)


def test_validate_identity(tmp_path, capsys):
    assert run(tmp_path, "--scenario", "identity", "validate") == 0
    report = json.loads((tmp_path / "validate.json").read_text())
    assert report["passed"] and report["physics_error"] is None
    names = {c["name"] for c in report["checks"]}
    assert {"symplectic_original_to_scaled", "cross_frame_consistency", "psi_schrodinger_residual"} <= names
    for c in report["checks"]:
        assert set(c) == {"name", "measured", "tolerance", "passed", "informational", "note"}
        assert c["passed"] or c["informational"]


def test_validate_symmetric_records_ermakov_residual(tmp_path):
    assert run(tmp_path, "--scenario", "symmetric", "validate") == 0
    checks = {c["name"]: c for c in json.loads((tmp_path / "validate.json").read_text())["checks"]}
    for mode in (1, 2):
        assert checks[f"ermakov_residual_mode{mode}"]["measured"] < 1e-8


def test_validate_drifting_exits_3(tmp_path, capsys):
    assert run(tmp_path, "--scenario", "drifting", "validate") == 3
    report = json.loads((tmp_path / "validate.json").read_text())
    assert "theta_constancy" in report["physics_error"]


def test_missing_scenario_flag():
    with pytest.raises(SystemExit) as exc:
        main(["reduce"])
    assert exc.value.code == 2
