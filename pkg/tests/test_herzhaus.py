import json
import math

import pytest

import harness
from herzhaus import EXIT_BAD_INPUT, EXIT_GATE, EXIT_OK, main

PARAMS = {"dim": 1, "alpha": 0.5, "p": 1.0, "q": 2.0}


@pytest.fixture(autouse=True)
def restore_config():
    snapshots = [(module, dict(vars(module.config))) for module in harness._CONFIGURED_MODULES]
    yield
    for module, snapshot in snapshots:
        vars(module.config).clear()
        vars(module.config).update(snapshot)


def write(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def experiment(**overrides):
    data = {
        "theorem": "3.1",
        "params": PARAMS,
        "kernel": {"kind": "indicator", "m": 0, "M": 1},
        "atoms": {"j_a": [0, 1]},
    }
    data.update(overrides)
    return data


def test_herz_norm_command(tmp_path, capsys):
    code = main(
        [
            "herz-norm",
            "--function",
            write(tmp_path / "f.json", {"kind": "indicator", "k_lo": 0, "k_hi": 0}),
            "--params",
            write(tmp_path / "params.json", PARAMS),
        ]
    )
    assert code == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed["value"] == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_verify_command_writes_the_report(tmp_path, capsys):
    out = tmp_path / "report.json"
    table = tmp_path / "report.csv"
    code = main(
        ["verify", "--config", write(tmp_path / "exp.json", experiment()), "--out", str(out), "--csv", str(table)]
    )
    assert code == EXIT_OK
    aggregate = json.loads(capsys.readouterr().out)
    assert aggregate["rows"] == 2
    assert aggregate["max_ratio"] == pytest.approx(2.0, rel=1e-10)
    assert json.loads(out.read_text(encoding="utf-8"))["theorem"] == "3.1"
    assert len(table.read_text(encoding="utf-8").splitlines()) == 3


def test_verify_command_reports_gate_failure(tmp_path):
    config_path = write(tmp_path / "exp.json", experiment(params={**PARAMS, "alpha": 0.25}))
    assert main(["verify", "--config", config_path, "--out", str(tmp_path / "r.json")]) == EXIT_GATE


def test_missing_config_is_bad_input(tmp_path):
    assert main(["verify", "--config", str(tmp_path / "nowhere.json")]) == EXIT_BAD_INPUT
    assert main(["constants", "--config", write(tmp_path / "bad.json", {"theorem": "3.1"})]) == EXIT_BAD_INPUT


def test_constants_command(tmp_path, capsys):
    assert main(["constants", "--config", write(tmp_path / "exp.json", experiment())]) == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed["gate"]["passed"]
    assert printed["C1"]["value"] == pytest.approx(1.0, rel=1e-12)


def test_decompose_command(tmp_path, capsys):
    assert main(["--seed", "4", "decompose", "--config", write(tmp_path / "exp.json", experiment()), "--j-a", "2"]) == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed["j_a"] == 2
    assert [piece["support_index"] for piece in printed["pieces"]] == [3]
    assert printed["reconstruction_residual"] < 1e-8


def test_atom_validate_command(tmp_path, capsys):
    atom = {"j_a": 0, "r_a": -3, "s": 0, "shape": "radial-bump", "seed": 1}
    code = main(
        [
            "atom",
            "validate",
            "--atom",
            write(tmp_path / "atom.json", atom),
            "--params",
            write(tmp_path / "params.json", PARAMS),
        ]
    )
    assert code == EXIT_OK
    assert "conditions" in json.loads(capsys.readouterr().out)
