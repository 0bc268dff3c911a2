import csv
import json
import math
import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from lattice.errors import BadValue, CapExceeded, ConfigError
from harness.cli import main
from harness.experiment_config import build_initial, build_model, parse_config, set_dotted
from harness.manifest import config_hash, load_manifest, verify_manifest
from harness.oracle import cmd_oracle
from harness.runner import EXIT_CAP, EXIT_CONFIG, EXIT_OK, cmd_run, cmd_sweep, grid_points
from db.db_manager import fetch_all_runs, fetch_outputs


def _flip_config(**extra):
    data = {
        "geometry": {"d": 1, "sides": [4], "q": 2},
        "dynamics": {"kind": "inf-temp-flip", "params": {"rate": 1.0}},
        "initial": {"kind": "point-mass", "value": 1},
        "reference": "uniform",
        "times": [0.0, 0.5, 1.0, 2.0],
        "volumes": [1, 4],
        "seed": 7,
        "monte_carlo": {"chains": 200},
    }
    data.update(extra)
    return data


def _glauber_config(**extra):
    data = {
        "geometry": {"d": 1, "sides": [4], "q": 2},
        "potential": {"preset": "ising", "beta": 0.5},
        "dynamics": {"kind": "glauber"},
        "initial": {"kind": "point-mass", "value": 1},
        "times": [0.0, 1.0, 4.0],
    }
    data.update(extra)
    return data


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def _flip_h(t):
    p = (1.0 + math.exp(-2.0 * t)) / 2.0
    tail = (1.0 - p) * math.log(1.0 - p) if p < 1.0 else 0.0
    return math.log(2.0) + p * math.log(p) + tail


def test_parse_config_rejects_bad_input():
    with pytest.raises(ConfigError):
        parse_config({**_flip_config(), "colour": "red"})
    missing = _flip_config()
    del missing["times"]
    with pytest.raises(ConfigError):
        parse_config(missing)
    with pytest.raises(ConfigError):
        parse_config(_flip_config(times=[1.0, 0.5]))
    with pytest.raises(ConfigError):
        parse_config(_flip_config(seed=None))
    with pytest.raises(ConfigError):
        parse_config(_flip_config(initial={"kind": "product", "p": 0.3}))
    with pytest.raises(ConfigError):
        parse_config(_flip_config(volumes=[5]))
    with pytest.raises(ConfigError):
        parse_config(_flip_config(reference="maxent"))


def test_parse_config_enforces_the_cap():
    with pytest.raises(CapExceeded):
        parse_config(_flip_config(geometry={"d": 1, "sides": [30], "q": 2}))
    cfg = parse_config(_flip_config(geometry={"d": 1, "sides": [30], "q": 2}), check_cap=False)
    assert cfg.geometry.n_sites == 30


def test_parsed_config_builds_its_objects():
    cfg = parse_config(_glauber_config(volumes=[2, [0, 3]]))
    assert cfg.volumes == [2, [0, 3]]
    assert cfg.reference == "gibbs"
    assert not cfg.stochastic
    assert build_initial(cfg).probs[15] == pytest.approx(1.0)
    pca = parse_config(_glauber_config(dynamics={"kind": "pca-majority-eps"}, times=[0, 0.5]))
    with pytest.raises(ConfigError):
        build_model(pca)
    unknown = parse_config(_glauber_config(dynamics={"kind": "voter"}))
    with pytest.raises(ConfigError):
        build_model(unknown)


def test_dotted_keys_and_grid_points():
    data = _glauber_config()
    set_dotted(data, "potential.beta", 0.9)
    assert data["potential"]["beta"] == 0.9
    with pytest.raises(ConfigError):
        set_dotted(data, "nothing.beta", 1.0)
    assert grid_points({}) == []
    assert grid_points({"a": [1, 2], "b": []}) == []
    assert grid_points({"a": [1, 2], "b": ["x"]}) == [{"a": 1, "b": "x"}, {"a": 2, "b": "x"}]


def test_config_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_flip_run_writes_verified_outputs(tmp_path):
    path = _write(tmp_path, "flip.json", _flip_config())
    out = tmp_path / "out"
    db = str(tmp_path / "db" / "runs.db")
    code, result = cmd_run(path, out=str(out), db_path=db)
    assert code == EXIT_OK
    assert verify_manifest(str(out / "manifest.json")) == []
    names = {entry["path"] for entry in load_manifest(str(out / "manifest.json")).outputs}
    assert names == {"trace.csv", "diagnostics.json"}

    rows = _read_csv(out / "trace.csv")
    assert len(rows) == 8
    for row in rows:
        assert float(row["h_density"]) == pytest.approx(_flip_h(float(row["t"])), abs=1e-8)

    diagnostics = json.loads((out / "diagnostics.json").read_text(encoding="utf-8"))
    assert diagnostics["monte_carlo"]["chains"] == 200
    assert diagnostics["converged"]["h_density_monotone"] is True
    assert result.summary["model"] == "inf-temp-flip"

    runs = fetch_all_runs(db)
    assert len(runs) == 1
    assert runs[0][1] == config_hash(_flip_config())
    assert len(fetch_outputs(runs[0][0], db)) == 2


def test_reruns_are_byte_identical_across_thread_counts(tmp_path):
    path = _write(tmp_path, "flip.json", _flip_config())
    db = str(tmp_path / "runs.db")
    code_a, _ = cmd_run(path, out=str(tmp_path / "a"), threads=1, db_path=db)
    code_b, _ = cmd_run(path, out=str(tmp_path / "b"), threads=4, db_path=db)
    assert code_a == code_b == EXIT_OK
    for name in ("trace.csv", "diagnostics.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_failed_runs_leave_no_outputs(tmp_path):
    db = str(tmp_path / "runs.db")
    bad = _write(tmp_path, "bad.json", {**_flip_config(), "colour": "red"})
    code, result = cmd_run(bad, out=str(tmp_path / "bad"), db_path=db)
    assert code == EXIT_CONFIG and result is None
    assert not (tmp_path / "bad").exists()

    big = _write(tmp_path, "big.json", _flip_config(geometry={"d": 1, "sides": [30], "q": 2}))
    code, _ = cmd_run(big, out=str(tmp_path / "big"), db_path=db)
    assert code == EXIT_CAP
    assert not (tmp_path / "big").exists()

    code, _ = cmd_run(str(tmp_path / "missing.json"), db_path=db)
    assert code == EXIT_CONFIG


def test_excel_and_plot_outputs_are_listed_in_the_manifest(tmp_path):
    path = _write(tmp_path, "glauber.json", _glauber_config())
    out = tmp_path / "out"
    code, _ = cmd_run(path, out=str(out), excel=True, plot=True, db_path=str(tmp_path / "runs.db"))
    assert code == EXIT_OK
    names = {entry["path"] for entry in load_manifest(str(out / "manifest.json")).outputs}
    assert {"trace.xlsx", "trace.png"} <= names
    assert verify_manifest(str(out / "manifest.json")) == []


def test_empty_sweep_writes_a_header_only_table(tmp_path):
    path = _write(tmp_path, "sweep.json", _glauber_config(grid={"potential.beta": []}))
    code, rows = cmd_sweep(path, out=str(tmp_path / "sweep"), db_path=str(tmp_path / "runs.db"))
    assert code == EXIT_OK and rows == []
    lines = (tmp_path / "sweep" / "sweep.csv").read_text(encoding="utf-8").splitlines()
    assert lines == ["run,potential.beta,status,exit_code,h_density,g_direct,dlr_residual,tv_to_mu,"
                     "h_monotone,errors,error"]


def test_beta_sweep(tmp_path):
    path = _write(tmp_path, "sweep.json", _glauber_config(grid={"potential.beta": [0.3, 0.7]}))
    root = tmp_path / "sweep"
    code, rows = cmd_sweep(path, out=str(root), threads=2, db_path=str(tmp_path / "runs.db"))
    assert code == EXIT_OK
    assert [row["status"] for row in rows] == ["ok", "ok"]
    table = _read_csv(root / "sweep.csv")
    assert [float(row["potential.beta"]) for row in table] == [0.3, 0.7]
    assert (root / "run_000" / "trace.csv").is_file()
    assert verify_manifest(str(root / "manifest.json")) == []


def test_sweep_rejects_unknown_grid_keys(tmp_path):
    path = _write(tmp_path, "sweep.json", _glauber_config(grid={"nothing.beta": [0.3]}))
    code, rows = cmd_sweep(path, out=str(tmp_path / "sweep"), db_path=str(tmp_path / "runs.db"))
    assert code == EXIT_CONFIG and rows == []


def test_sweep_continues_past_a_failed_run(tmp_path):
    path = _write(tmp_path, "sweep.json", _glauber_config(grid={"geometry.sides": [[4], [30]]}))
    code, rows = cmd_sweep(path, out=str(tmp_path / "sweep"), db_path=str(tmp_path / "runs.db"))
    assert code == EXIT_OK
    assert rows[0]["status"] == "ok"
    assert rows[1]["status"] == "failed" and rows[1]["exit_code"] == EXIT_CAP
    table = _read_csv(tmp_path / "sweep" / "sweep.csv")
    assert table[1]["status"] == "failed"


def test_oracles():
    assert cmd_oracle("pressure", "ising1d", beta=1.0) == pytest.approx(math.log(2.0 * math.cosh(1.0)))
    assert cmd_oracle("pressure", "ising1d-enumerated", beta=0.5, length=6) == pytest.approx(
        cmd_oracle("pressure", "ising1d", beta=0.5, length=6), abs=1e-12)
    assert cmd_oracle("partition", "ising1d", beta=0.0, length=4) == pytest.approx(4 * math.log(2.0))
    assert cmd_oracle("flip-marginal", t=1.0) == pytest.approx((1.0 + math.exp(-2.0)) / 2.0)
    assert cmd_oracle("entropy", "pointmass-vs-uniform", n=4, q=3) == pytest.approx(4 * math.log(3.0))
    with pytest.raises(BadValue):
        cmd_oracle("pressure", "potts2d")
    with pytest.raises(BadValue):
        cmd_oracle("magnetization")


def test_cli_commands(tmp_path, capsys):
    assert main(["list-models"]) == EXIT_OK
    assert "glauber" in capsys.readouterr().out

    assert main(["oracle", "flip-marginal", "--t", "0"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "flip-marginal = 1.0"

    assert main(["oracle", "pressure", "ising1d-enumerated", "--length", "30"]) == EXIT_CAP
    assert main(["oracle", "pressure", "bogus"]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG

    path = _write(tmp_path, "flip.json", _flip_config())
    code = main(["run", path, "--out", str(tmp_path / "out"), "--db", str(tmp_path / "runs.db")])
    assert code == EXIT_OK
    assert "Run: inf-temp-flip" in capsys.readouterr().out


def test_failed_chart_leaves_a_complete_run(tmp_path, monkeypatch):
    def broken(rows, title=""):
        raise ValueError("unparsable label")

    monkeypatch.setattr("harness.runner.create_trace_chart", broken)
    path = _write(tmp_path, "glauber.json", _glauber_config())
    out = tmp_path / "out"
    code, _ = cmd_run(path, out=str(out), plot=True, db_path=str(tmp_path / "runs.db"))
    assert code == EXIT_OK
    names = {entry["path"] for entry in load_manifest(str(out / "manifest.json")).outputs}
    assert names == {"trace.csv", "diagnostics.json"}
    assert verify_manifest(str(out / "manifest.json")) == []


def test_plotted_sweep_on_several_threads(tmp_path):
    path = _write(tmp_path, "sweep.json", _glauber_config(grid={"potential.beta": [0.2, 0.4, 0.6, 0.8]}))
    root = tmp_path / "sweep"
    code, rows = cmd_sweep(path, out=str(root), threads=4, plot=True, db_path=str(tmp_path / "runs.db"))
    assert code == EXIT_OK
    assert [row["status"] for row in rows] == ["ok"] * 4
    for index in range(4):
        run_dir = root / f"run_{index:03d}"
        assert (run_dir / "trace.png").is_file()
        assert verify_manifest(str(run_dir / "manifest.json")) == []
    assert (root / "sweep.png").is_file()
