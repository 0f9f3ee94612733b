"""End-to-end runs of the command-line interface through cli.main."""

import csv
import json

import numpy as np
import pytest

from wgboost.cli import main


@pytest.fixture()
def reg_csv(tmp_path):
    rng = np.random.default_rng(5)
    X = rng.normal(size=(50, 2))
    y = np.sin(X[:, 0]) + 0.1 * rng.normal(size=50)
    p = tmp_path / "reg.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "y"])
        for i in range(50):
            w.writerow([repr(float(X[i, 0])), repr(float(X[i, 1])), repr(float(y[i]))])
    return p


@pytest.fixture()
def cls_csv(tmp_path):
    rng = np.random.default_rng(6)
    X = rng.normal(size=(60, 2))
    label = np.where(X[:, 0] > 0, "up", "down")
    p = tmp_path / "cls.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "cls"])
        for i in range(60):
            w.writerow([repr(float(X[i, 0])), repr(float(X[i, 1])), label[i]])
    return p


def run(*argv):
    return main([str(a) for a in argv])


def read_rows(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, data = rows[0], rows[1:]
    return header, data


def test_regression_train_evaluate_predict(tmp_path, reg_csv):
    model = tmp_path / "m.json"
    log = tmp_path / "log.csv"
    metrics = tmp_path / "metrics.csv"
    preds = tmp_path / "preds.csv"
    assert run(
        "train", "--data", reg_csv, "--task", "regression", "--label-column", "y",
        "--max-iterations", 8, "--n-particles", 4, "--init-steps", 100,
        "--seed", 3, "--out-model", model, "--out-log", log,
    ) == 0
    assert run(
        "evaluate", "--model", model, "--data", reg_csv, "--label-column", "y",
        "--out", metrics, "--per-row", tmp_path / "rows.csv",
    ) == 0
    assert run("predict", "--model", model, "--data", reg_csv, "--label-column", "y", "--out", preds) == 0

    header, data = read_rows(metrics)
    row = dict(zip(header, data[0]))
    assert row["dataset"] == "reg" and row["seed"] == "3" and row["M"] == "8"
    assert float(row["NLL"]) < 3.0 and float(row["RMSE"]) < 2.0
    assert row["accuracy"] == ""

    header, data = read_rows(preds)
    assert header[0] == "prediction"
    assert len(data) == 50 and len(header) == 1 + 4 * 2
    # the training log records one proxy value per boosting round
    header, data = read_rows(log)
    assert header == ["iteration", "direction_sq_mean", "val_nll"]
    assert len(data) == 8

    doc = json.loads(model.read_text())
    assert doc["format_version"] == 1
    assert doc["config"]["seed"] == 3


def test_same_seed_models_byte_identical(tmp_path, reg_csv):
    m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
    common = [
        "train", "--data", reg_csv, "--task", "regression", "--label-column", "y",
        "--max-iterations", 5, "--init-steps", 50, "--seed", 11,
    ]
    assert run(*common, "--out-model", m1) == 0
    assert run(*common, "--out-model", m2) == 0
    assert m1.read_bytes() == m2.read_bytes()


def test_config_file_with_flag_override(tmp_path, reg_csv):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "task": "regression",
        "data": str(reg_csv),
        "label_column": "y",
        "seed": 5,
        "boost": {"max_iterations": 4, "n_particles": 3, "init_steps": 10},
    }))
    model = tmp_path / "m.json"
    assert run("train", "--config", cfg, "--seed", 7, "--out-model", model) == 0
    doc = json.loads(model.read_text())
    assert doc["config"]["seed"] == 7  # flag wins over config
    assert doc["config"]["max_iterations"] == 4
    assert doc["config"]["n_particles"] == 3


def test_env_seed_fallback(tmp_path, reg_csv, monkeypatch):
    model = tmp_path / "m.json"
    monkeypatch.setenv("WGBOOST_SEED", "42")
    assert run(
        "train", "--data", reg_csv, "--task", "regression", "--label-column", "y",
        "--max-iterations", 2, "--init-steps", 10, "--out-model", model,
    ) == 0
    assert json.loads(model.read_text())["config"]["seed"] == 42
    monkeypatch.setenv("WGBOOST_SEED", "not-a-number")
    assert run(
        "train", "--data", reg_csv, "--task", "regression", "--label-column", "y",
        "--max-iterations", 2, "--out-model", model,
    ) == 2


def test_early_stopping_flag(tmp_path, reg_csv):
    model = tmp_path / "m.json"
    log = tmp_path / "log.csv"
    assert run(
        "train", "--data", reg_csv, "--task", "regression", "--label-column", "y",
        "--max-iterations", 6, "--init-steps", 50, "--seed", 0,
        "--early-stopping", "--val-fraction", 0.2,
        "--out-model", model, "--out-log", log,
    ) == 0
    header, data = read_rows(log)
    assert len(data) == 7  # iterations 0..6 of the validation curve
    assert all(r[2] != "" for r in data)
    doc = json.loads(model.read_text())
    assert doc["config"]["max_iterations"] <= 6


def test_classification_flow(tmp_path, cls_csv):
    model = tmp_path / "m.json"
    metrics = tmp_path / "metrics.csv"
    preds = tmp_path / "p.csv"
    assert run(
        "train", "--data", cls_csv, "--task", "classification", "--label-column", "cls",
        "--max-iterations", 10, "--n-particles", 3, "--init-steps", 100, "--seed", 1,
        "--out-model", model,
    ) == 0
    assert run(
        "evaluate", "--model", model, "--data", cls_csv, "--label-column", "cls",
        "--out", metrics, "--per-row", tmp_path / "rows.csv",
    ) == 0
    header, data = read_rows(metrics)
    row = dict(zip(header, data[0]))
    assert float(row["accuracy"]) > 0.8
    assert row["RMSE"] == ""

    assert run("predict", "--model", model, "--data", cls_csv, "--label-column", "cls", "--out", preds) == 0
    header, data = read_rows(preds)
    assert header == ["predicted_label", "prob_down", "prob_up", "ood_score"]
    for r in data:
        assert r[0] in ("down", "up")
        assert float(r[1]) + float(r[2]) == pytest.approx(1.0, abs=1e-9)


def test_exit_codes(tmp_path, reg_csv):
    # unknown config key -> 2
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"task": "regression", "bogus": 1}))
    assert run("train", "--config", cfg) == 2
    # missing data file -> 3
    assert run(
        "train", "--data", tmp_path / "nope.csv", "--task", "regression",
        "--label-column", "y",
    ) == 3
    # wrong label column -> 3
    assert run(
        "train", "--data", reg_csv, "--task", "regression", "--label-column", "zzz",
        "--max-iterations", 1,
    ) == 3
    # no task anywhere -> 2
    assert run("train", "--data", reg_csv, "--label-column", "y") == 2
    # malformed JSON config -> 2
    cfg.write_text("{")
    assert run("train", "--config", cfg) == 2
    # bad boost field value -> 2
    assert run(
        "train", "--data", reg_csv, "--task", "regression", "--label-column", "y",
        "--learning-rate", -1,
    ) == 2
    # no subcommand -> 2
    assert main([]) == 2


def test_bench_and_toy_sin(tmp_path):
    out = tmp_path / "bench.csv"
    assert run(
        "bench-directions", "--out", out, "--iterations", 3, "--checkpoints", "0,3",
        "--train-points", 30, "--eval-points", 20, "--n-particles", 3, "--seed", 0,
    ) == 0
    header, data = read_rows(out)
    assert header == ["direction", "weak_learners", "mean_mmd", "wall_clock_s"]
    assert len(data) == 8  # 4 direction kinds x 2 checkpoints
    assert out.read_text().rstrip().endswith("# seed=0 format_version=1")

    toy = tmp_path / "toy.csv"
    assert run(
        "toy-sin", "--out", toy, "--learners", 4, "--grid-points", 5,
        "--n-particles", 3, "--seed", 0,
    ) == 0
    header, data = read_rows(toy)
    assert header[0] == "x" and header[-2:] == ["band_lo", "band_hi"]
    assert len(data) == 5
    assert run("bench-directions", "--out", out, "--iterations", 3, "--checkpoints", "9") == 2
