import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from argreweight import cli
from argreweight.config import ConfigError, Z_PRESETS, load_config, validate_config
from argreweight.harness import prepare, run_experiment, simulate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def small(**over):
    cfg = {
        "schema_version": 1,
        "model": {"kind": "repetition", "distance": 3, "rounds": 2, "p_data": 0.05, "p_meas": 0.05},
        "decoder": {"name": "bposd"},
        "policy": {"criterion": "2R-LEC", "rule": "ratio", "z": [0.0, 0.5, 2.0]},
        "shots": 3000,
        "seed": 5,
    }
    cfg.update(over)
    return cfg


def write(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


# --- config -------------------------------------------------------------------


def test_shipped_configs_validate():
    for p in CONFIGS.glob("*.yaml"):
        load_config(p)


def test_presets():
    assert len(Z_PRESETS["surface"]) == 17
    assert Z_PRESETS["surface"][:4] == (1e-12, 1e-6, 1e-3, 0.01)
    assert validate_config(small(policy={"criterion": "PEC", "z_preset": "surface"})).policy.z_values() == Z_PRESETS["surface"]


@pytest.mark.parametrize(
    "override, path",
    [
        (dict(shots=0), "shots"),
        (dict(seed=-1), "seed"),
        (dict(policy={"criterion": "3R-LEC", "z": [0.1, -0.2]}), "policy.z"),
        (dict(policy={"criterion": "7X", "z": [0.1]}), "policy.criterion"),
        (dict(policy={"criterion": "PEC"}), "policy"),
        (dict(policy={"criterion": "PEC", "z": [1.0], "z_preset": "surface"}), "policy"),
        (dict(decoder={"name": "relay"}), "decoder.name"),
        (dict(model={"kind": "repetition", "distance": 3, "p_data": 0.1, "typo": 1}), "model.typo"),
        (dict(extra_key=True), "extra_key"),
        (dict(schema_version=2), "schema_version"),
        (dict(model={"kind": "repetition", "distance": 4, "p_data": 0.1}), "model"),
        (dict(model={"kind": "file", "path": "missing.dem"}), "model.path"),
    ],
)
def test_config_errors_name_the_field(override, path):
    with pytest.raises(ConfigError) as info:
        validate_config(small(**override))
    assert any(p == path for p, _ in info.value.errors), info.value.errors


def test_unparseable_config(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("model: [unclosed")
    with pytest.raises(ConfigError):
        load_config(p)


# --- harness ------------------------------------------------------------------


def test_run_document_shape():
    doc = run_experiment(validate_config(small()))
    assert doc["schema_version"] == 1
    assert [r["z"] for r in doc["rows"]] == [0.0, 0.5, 2.0]
    assert [r["b"] for r in doc["rows"]] == [1.0, 1.5, 3.0]
    for r in doc["rows"] + [doc["baseline"]]:
        assert r["accepted"] + r["rejected"] == r["shots"] == 3000
    assert "workers" not in doc["config"]
    # b = 1 is the identity: same rows as the baseline, no rejections
    first = doc["rows"][0]
    assert first["rejected"] == 0
    assert first["logical_errors"] == doc["baseline"]["logical_errors"]


def test_identity_row_per_shot():
    exp = prepare(validate_config(small()))
    out = simulate(exp, 5, 0, 3000)
    assert out.accepted[:, 0].all()
    np.testing.assert_array_equal(out.logical_error[:, 0], out.baseline_error)


def test_deterministic_across_workers():
    one = run_experiment(validate_config(small(workers=1)))
    two = run_experiment(validate_config(small(workers=3)))
    assert cli.dump_json(one) == cli.dump_json(two)


def test_windowed_run():
    cfg = small(window={"n_com": 1, "n_buf": 1}, decoder={"name": "mwpm"}, shots=500)
    doc = run_experiment(validate_config(cfg))
    assert doc["window"]["n_com"] == 1
    assert doc["rows"][0]["rejected"] == 0


# --- cli ----------------------------------------------------------------------


def test_cli_run_and_report(tmp_path, capsys):
    cfg = write(tmp_path, small())
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["run", str(cfg), "--out", str(out1)]) == 0
    other = small(policy={"criterion": "PEC", "rule": "ratio", "z": [0.5]})
    assert cli.main(["run", str(write(tmp_path, other, "pec.yaml")), "--out", str(out2)]) == 0
    doc = json.loads(out1.read_text())
    assert doc["config"]["shots"] == 3000

    assert cli.main(["sweep-report", str(out1), str(out2), "--out", str(tmp_path / "plot")]) == 0
    report = json.loads((tmp_path / "plot.json").read_text())
    crits = [r["criterion"] for r in report["rows"]]
    assert crits.count("baseline") == 1
    assert {"PEC", "2R-LEC"} <= set(crits)
    rates = [r["rejection_rate"] for r in report["rows"]]
    assert rates == sorted(rates)
    csv_lines = (tmp_path / "plot.csv").read_text().splitlines()
    assert csv_lines[0].startswith("code,decoder,criterion")
    assert len(csv_lines) == len(report["rows"]) + 1

    capsys.readouterr()
    assert cli.main(["sweep-report", str(out1)]) == 0
    assert capsys.readouterr().out.startswith("code,")


def test_cli_overrides(tmp_path):
    cfg = write(tmp_path, small())
    out = tmp_path / "o.json"
    assert cli.main(["run", str(cfg), "--shots", "200", "--seed", "9", "--workers", "2", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["shots"] == 200 and doc["config"]["seed"] == 9


def test_cli_report_model_mismatch(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cli.main(["run", str(write(tmp_path, small(shots=100))), "--out", str(a)])
    other = small(shots=100, model={"kind": "repetition", "distance": 5, "p_data": 0.05})
    cli.main(["run", str(write(tmp_path, other, "o.yaml")), "--out", str(b)])
    assert cli.main(["sweep-report", str(a), str(b)]) == 1
    assert "different models" in capsys.readouterr().err


def test_report_pools_distinct_seeds():
    d1 = run_experiment(validate_config(small(shots=500, seed=1)))
    d2 = run_experiment(validate_config(small(shots=500, seed=2)))
    rows = cli.sweep_report([d1, d2])["rows"]
    assert {r["shots"] for r in rows} == {1000}
    rows = cli.sweep_report([d1, d1])["rows"]
    assert {r["shots"] for r in rows} == {500}


def test_cli_validation_exit(tmp_path, capsys):
    assert cli.main(["run", str(write(tmp_path, small(shots=0)))]) == 1
    assert "shots" in capsys.readouterr().err


def test_cli_not_matchable_before_sampling(tmp_path, capsys):
    dem = tmp_path / "m.dem"
    dem.write_text("error(0.1) D0 D1 D2\nerror(0.1) D0\n")
    cfg = small(model={"kind": "file", "path": "m.dem"}, decoder={"name": "mwpm"})
    assert cli.main(["run", str(write(tmp_path, cfg))]) == 1
    assert "mechanism 0" in capsys.readouterr().err


def test_cli_check_bounds(tmp_path, capsys):
    assert cli.main(["check-bounds", "repetition:distance=3,p_data=0.1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["num_syndromes"] == 4 and doc["violations"] == 0
    assert cli.main(["check-bounds", "repetition:distance=5,p_data=0.1"]) == 0
    assert json.loads(capsys.readouterr().out)["num_syndromes"] == 16

    big = tmp_path / "big.dem"
    big.write_text("\n".join(f"error(0.01) D{i} D{i + 1}" for i in range(30)) + "\n")
    assert cli.main(["check-bounds", str(big)]) == 1
    assert cli.main(["check-bounds", "repetition:distance=4,p_data=0.1"]) == 1
    assert cli.main(["check-bounds", "nowhere.dem"]) == 1


def test_cli_check_bounds_violation_exit(monkeypatch, capsys):
    real = cli.check_conditional_bounds

    def broken(model, s):
        r = real(model, s)
        return type(r)(**{**r.__dict__, "bound1": -1.0})

    monkeypatch.setattr(cli, "check_conditional_bounds", broken)
    assert cli.main(["check-bounds", "repetition:distance=3,p_data=0.1"]) == 3


def test_cli_parse_dem(tmp_path, capsys):
    p = tmp_path / "x.dem"
    p.write_text("# two copies merge\nerror(0.1) D0 L0\nerror(0.1) D0 L0\nerror(0.2) D1 D0\n")
    assert cli.main(["parse-dem", str(p)]) == 0
    out = capsys.readouterr().out
    assert out == "detector_count 2\nobservable_count 1\nerror(0.18000000000000002) D0 L0\nerror(0.2) D0 D1\n"
    p.write_text("error(0.1) D0\nshift_detectors 3\n")
    assert cli.main(["parse-dem", str(p)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "argreweight", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "0.1.0" in r.stdout
