import csv
import json
import os
import time

import numpy as np
import pytest

from advtune import cli
from advtune.config import ExperimentConfig, load_config
from advtune.errors import ConfigError
from advtune.formats import load_dataset
from advtune.priors import JointPrior

QUICK = cli.bundled_config("quickstart")


def write_cfg(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def err_record(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_defaults_and_validation(tmp_path):
    cfg = ExperimentConfig.from_dict({})
    assert cfg.loop.n_v == 1000 and cfg.train.learning_rate == 0.01 and cfg.gibbs.k == 1000
    for bad in ({"bogus": 1}, {"loop": {"n_vv": 3}}, {"train": {"epochs": 0}},
                {"render": {"region": [0, 0, 1]}}, {"target": {"source": "web"}},
                {"target": {"bumps": {"nope": {"mean": 0.5}}}}, {"space": {"bins": 1}},
                {"seed": -1}, {"features": {"mode": "x"}},
                {"target": {"tables": {"light_intensity": [1, 2]}}}):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(bad)


def test_effective_config_round_trip(tmp_path):
    cfg = load_config(QUICK).with_overrides(seed=5, output_dir=str(tmp_path))
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_missing_config(tmp_path, capsys):
    missing = tmp_path / "none.json"
    code = cli.main(["tune", "--config", str(missing), "--out", str(tmp_path / "o")])
    assert code != 0
    rec = err_record(capsys)
    assert str(missing) in rec["message"] and rec["path"] == str(missing)
    assert json.loads((tmp_path / "o" / "error.json").read_text())["exit_code"] == code


def test_invalid_config_exit_code(tmp_path, capsys):
    p = write_cfg(tmp_path / "c.json", {"loop": {"unknown": 1}})
    assert cli.main(["tune", "--config", p, "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    assert err_record(capsys)["error"] == "ConfigError"


def test_no_output_dir(tmp_path, capsys):
    p = write_cfg(tmp_path / "c.json", {})
    assert cli.main(["generate", "--config", p]) == cli.EXIT_CONFIG


def test_quickstart_tune(tmp_path, capsys):
    t0 = time.perf_counter()
    out = tmp_path / "run"
    assert cli.main(["tune", "--config", "quickstart", "--out", str(out)]) == 0
    assert time.perf_counter() - t0 < 60
    rep = json.loads((out / "report.json").read_text())
    first, last = rep["initial_kl"], rep["records"][-1]["kl_to_target"]
    for name in ("light_intensity", "camera_height"):
        assert last[name] < first[name]
    for f in ("config.json", "final_prior.json", "iterations.csv", "priors.csv", "timing.csv"):
        assert (out / f).exists()
    JointPrior.load(out / "final_prior.json")
    rows = list(csv.DictReader(open(out / "iterations.csv")))
    assert len(rows) == rep["iterations"]
    assert "kl_light_intensity" in rows[0]
    # re-running from the echoed effective config reproduces the report
    out2 = tmp_path / "rerun"
    assert cli.main(["tune", "--config", str(out / "config.json"), "--out", str(out2)]) == 0
    assert (out2 / "report.json").read_bytes() == (out / "report.json").read_bytes()


def test_generate_and_stats(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["generate", "--config", QUICK, "--out", str(a), "--count", "100"]) == 0
    assert len(os.listdir(a / "features")) == 100 and len(os.listdir(a / "labels")) == 100
    assert len(list(csv.DictReader(open(a / "manifest.csv")))) == 100
    ds = load_dataset(a)
    assert ds.params.shape == (100, 16)
    assert cli.main(["generate", "--config", QUICK, "--out", str(b), "--count", "30",
                     "--seed", "1"]) == 0

    s = tmp_path / "s_same"
    assert cli.main(["stats", "--config", QUICK, "--out", str(s), str(a), str(a)]) == 0
    kl = {r["direction"]: float(r["kl"]) for r in csv.DictReader(open(s / "kl.csv"))}
    assert kl == {"a||b": 0.0, "b||a": 0.0}
    s2 = tmp_path / "s_diff"
    assert cli.main(["stats", "--config", QUICK, "--out", str(s2), str(a), str(b)]) == 0
    kl = [float(r["kl"]) for r in csv.DictReader(open(s2 / "kl.csv"))]
    assert all(k > 0 for k in kl)
    head = (s2 / "histogram_a.csv").read_text().splitlines()[0]
    assert head == "bin_left,bin_right,frequency"
    props = list(csv.DictReader(open(s2 / "proportions.csv")))
    assert len(props) == 7
    assert sum(float(r["a"]) for r in props) == pytest.approx(1.0)


def test_generate_zero(tmp_path):
    out = tmp_path / "z"
    assert cli.main(["generate", "--config", QUICK, "--out", str(out), "--count", "0"]) == 0
    lines = (out / "manifest.csv").read_text().splitlines()
    assert len(lines) == 1 and lines[0].startswith("sample_id,feature_file,label_file")


def test_generate_from_prior_file(tmp_path):
    run = tmp_path / "r"
    prior = JointPrior.from_json(json.loads(json.dumps({
        "format": "advtune-prior/1", "iteration": 0,
        "space": load_config(QUICK).space().to_dict(),
        "tables": [[0.0] * 31 + [1.0]] + [[1.0] * 32] * 15})))
    run.mkdir()
    prior.save(run / "p.json")
    p = write_cfg(tmp_path / "g.json", {"generate": {"prior": "r/p.json", "count": 5}})
    assert cli.main(["generate", "--config", p, "--out", str(tmp_path / "g")]) == 0
    ds = load_dataset(tmp_path / "g")
    assert np.all(ds.params[:, 0] >= 6.0 * 31 / 32)


def test_binning_override_mismatch(tmp_path, capsys):
    a = tmp_path / "a"
    cli.main(["generate", "--config", QUICK, "--out", str(a), "--count", "3"])
    p = write_cfg(tmp_path / "c.json", {"stats": {"bins": 64, "bins_b": 32}})
    code = cli.main(["stats", "--config", p, "--out", str(tmp_path / "s"), str(a), str(a)])
    assert code == cli.EXIT_BINNING
    assert err_record(capsys)["error"] == "BinningMismatch"


def test_directory_target(tmp_path, capsys):
    t = tmp_path / "target"
    cli.main(["generate", "--config", QUICK, "--out", str(t), "--count", "40"])
    p = write_cfg(tmp_path / "c.json", {
        "loop": {"n_v": 20, "max_iterations": 1}, "train": {"epochs": 5},
        "target": {"source": "directory", "path": "target"}})
    assert cli.main(["tune", "--config", p, "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["initial_kl"] is None and rep["iterations"] == 1


def test_writes_confined_to_out(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    p = write_cfg(tmp_path / "c.json", {"loop": {"n_v": 20, "max_iterations": 1},
                                        "train": {"epochs": 3},
                                        "target": {"count": 30}})
    before = set(os.listdir(tmp_path))
    assert cli.main(["tune", "--config", p, "--out", "out"]) == 0
    assert set(os.listdir(tmp_path)) - before == {"out"}


def test_console_script_help():
    with pytest.raises(SystemExit) as e:
        cli.main(["--help"])
    assert e.value.code == 0
