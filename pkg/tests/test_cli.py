import csv
import io
import json

import pytest

from guidecloak.cli import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_REGIME,
    SWEEP_COLUMNS,
    dumps,
    exit_code_for,
    main,
    parse_config,
    run,
)
from guidecloak.errors import ConfigError, InvariantError, MaxIterError, NearCutoffError

SQUARE = {"schema": 1, "cross_section": {"a": 1, "b": 1}, "k2": 30}
ONE_FLY = dict(SQUARE, epsilon=0.005, flies=[{"y": [0.3, 0.3], "z": 0.0, "shape": {"radius": 1}}])


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def _strip_timings(report):
    report = json.loads(dumps(report))
    report["provenance"].pop("timings")
    return report


def test_minimal_config_defaults():
    cfg = parse_config(json.dumps(SQUARE))
    assert cfg.flies == []
    assert cfg.epsilon == 0.01
    assert cfg.design["tol"] == 1e-12
    assert cfg.numerics["mode_cutoff"] == 1e-13


def test_round_trip():
    cfg = parse_config(json.dumps(ONE_FLY))
    again = parse_config(json.dumps(cfg.to_dict()))
    assert again == cfg


@pytest.mark.parametrize(
    "doc,fragment",
    [
        ({"schema": 2, "cross_section": {"a": 1, "b": 1}, "k2": 30}, "$.schema"),
        ({"cross_section": {"a": -1, "b": 1}, "k2": 30}, "$.cross_section.a"),
        ({"cross_section": {"a": 1, "b": 1}}, "$.k2"),
        (dict(SQUARE, flies=[{"y": [0.3], "z": 0}]), "$.flies[0].y"),
        (dict(SQUARE, flies=[{"y": [0.3, 0.3], "z": 0, "shape": {"radius": 0}}]), "$.flies[0].shape.radius"),
        (dict(SQUARE, design={"variant": "two-fly"}), "$.design.variant"),
        (dict(SQUARE, bogus=1), "unknown keys"),
        (dict(SQUARE, sweep={"epsilons": [0.1]}), "$.sweep.epsilons"),
    ],
)
def test_schema_errors_are_path_qualified(doc, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("[", r"\[").replace("$", r"\$")):
        parse_config(json.dumps(doc))


def test_fly_outside_names_index():
    doc = dict(SQUARE, flies=[{"y": [0.3, 0.3], "z": 0}, {"y": [1.3, 0.3], "z": 1}])
    with pytest.raises(InvariantError, match="fly 1"):
        parse_config(json.dumps(doc))


def test_malformed_json():
    with pytest.raises(ConfigError):
        parse_config("{not json")


def test_modes_command():
    out = run("modes", parse_config(json.dumps(SQUARE)))["outputs"]
    assert out["n_propagating"] == 1
    assert out["propagating"][0]["beta"] == pytest.approx(3.20325, abs=1e-5)


def test_scatter_empty():
    out = run("scatter", parse_config(json.dumps(SQUARE)))["outputs"]
    assert out["R"][0][0] == {"re": 0.0, "im": 0.0}
    assert out["T"][0][0] == {"re": 1.0, "im": 0.0}


def test_scatter_one_fly():
    out = run("scatter", parse_config(json.dumps(ONE_FLY)))["outputs"]
    assert abs(out["energy_residual"][0]) < 1e-10
    assert out["sign_sigma"] == -1


def test_determinism():
    cfg = parse_config(json.dumps(ONE_FLY))
    assert _strip_timings(run("design-position", cfg)) == _strip_timings(run("design-position", cfg))


def test_sweep_csv(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("GUIDECLOAK_THREADS", "2")
    path = _write(tmp_path, ONE_FLY)
    assert main(["sweep", "--config", path, "--format", "csv"]) == 0
    text = capsys.readouterr().out
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert rows[0][2] == "|s_minus − eps·s1|"
    assert [float(r[0]) for r in rows[1:]] == [0.02, 0.01, 0.005, 0.0025]


def test_sweep_json_slopes():
    out = run("sweep", parse_config(json.dumps(ONE_FLY)))["outputs"]
    assert out["slopes"][SWEEP_COLUMNS[2]] == pytest.approx(2.0, abs=0.2)
    assert out["slopes"][SWEEP_COLUMNS[3]] == pytest.approx(3.0, abs=0.3)


def test_bound_command():
    out = run("bound", parse_config(json.dumps(ONE_FLY)))["outputs"]
    assert out["L"] == pytest.approx(0.005)
    assert out["verdict"] is True
    assert out["transmission"]["phase_shift_persists"]


def test_design_size_command():
    out = run("design-size", parse_config(json.dumps(dict(SQUARE, epsilon=0.005))))["outputs"]
    assert out["residual"] <= 1e-10


def test_design_multi_command(tmp_path):
    path = _write(tmp_path, {"schema": 1, "cross_section": {"a": 1, "b": 0.5}, "k2": 100, "epsilon": 0.004})
    out_path = tmp_path / "report.json"
    assert main(["design-multi", "--config", path, "--out", str(out_path), "--seed", "7"]) == 0
    rep = json.loads(out_path.read_text())
    assert rep["outputs"]["N"] == 48
    assert rep["outputs"]["residual"] <= 1e-9
    assert rep["provenance"]["seed"] == 7


def test_exit_codes(tmp_path, capsys):
    bad = _write(tmp_path, {"cross_section": {"a": 1}, "k2": 30}, "bad.json")
    assert main(["modes", "--config", bad]) == EXIT_CONFIG
    cutoff = _write(tmp_path, {"cross_section": {"a": 1, "b": 1}, "k2": 19.7392088}, "cut.json")
    assert main(["modes", "--config", cutoff]) == EXIT_REGIME
    multi = _write(tmp_path, {"cross_section": {"a": 1, "b": 0.5}, "k2": 100}, "multi.json")
    assert main(["design-position", "--config", multi]) == EXIT_REGIME
    stiff = _write(tmp_path, dict(SQUARE, epsilon=0.005, design={"max_iter": 1}), "stiff.json")
    assert main(["design-position", "--config", stiff]) == EXIT_NUMERIC
    assert main(["modes", "--config", _write(tmp_path, SQUARE, "ok.json"), "--format", "csv"]) == EXIT_CONFIG
    assert main(["modes", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert "guidecloak:" in capsys.readouterr().err


def test_exit_code_mapping():
    assert exit_code_for(ConfigError("x")) == EXIT_CONFIG
    assert exit_code_for(InvariantError("x")) == EXIT_CONFIG
    assert exit_code_for(NearCutoffError("x")) == EXIT_REGIME
    assert exit_code_for(MaxIterError("x")) == EXIT_NUMERIC


def test_bad_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("GUIDECLOAK_THREADS", "many")
    assert main(["sweep", "--config", _write(tmp_path, ONE_FLY)]) == EXIT_CONFIG
