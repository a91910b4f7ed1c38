import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from conftest import DATA_DIR, make_blobs
from sscc.cli import main

WINE = str(DATA_DIR / "wine.csv")


@pytest.fixture(scope="module")
def blob_csv(tmp_path_factory):
    p = tmp_path_factory.mktemp("data") / "blobs.csv"
    make_blobs().to_csv(p, label_column="class")
    return p


@pytest.fixture(scope="module")
def wine_model(tmp_path_factory):
    out = tmp_path_factory.mktemp("model") / "m.json"
    rc = main(["fit", "--data", WINE, "--label-col", "class", "--preset", "wine", "--algo", "kmeans", "--seed", "7", "--out", str(out)])
    assert rc == 0
    return out


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_fit_writes_outputs(wine_model):
    stem = wine_model.with_suffix("")
    assert json.loads(wine_model.read_text())["version"] == "sscc-model/1"
    assert json.loads(Path(f"{stem}.report.json").read_text())["version"] == "sscc-report/1"
    assert "class" in Path(f"{stem}.classes.txt").read_text()
    assert "created" in json.loads(Path(f"{stem}.meta.json").read_text())


def test_fit_byte_identical(wine_model, tmp_path):
    out = tmp_path / "again.json"
    main(["fit", "--data", WINE, "--label-col", "class", "--preset", "wine", "--algo", "kmeans", "--seed", "7", "--out", str(out)])
    assert out.read_bytes() == wine_model.read_bytes()
    assert Path(f"{out.with_suffix('')}.classes.txt").read_bytes() == Path(f"{wine_model.with_suffix('')}.classes.txt").read_bytes()


def test_predict_on_training_file(wine_model, tmp_path):
    out = tmp_path / "pred.csv"
    summary = tmp_path / "acc.json"
    rc = main(["predict", "--model", str(wine_model), "--data", WINE, "--label-col", "class", "--out", str(out), "--truth", "--summary", str(summary)])
    assert rc == 0
    rows = _read(out)
    assert list(rows[0]) == ["row_id", "predicted_class", "dominant_label", "novelty_flag", "leaf_node_id", "error"]
    assert len(rows) == 178
    model = json.loads(wine_model.read_text())
    fit_class = {r: c["class_id"] for c in model["classes"] for r in c["row_ids"]}
    match = [int(r["predicted_class"]) == fit_class[int(r["row_id"])] for r in rows if int(r["row_id"]) in fit_class]
    assert sum(match) / len(match) >= 0.99
    assert 0.0 <= json.loads(summary.read_text())["accuracy"] <= 1.0


def test_predict_novelty_and_paths(wine_model, tmp_path):
    out = tmp_path / "pred.csv"
    paths = tmp_path / "paths.json"
    rc = main(["predict", "--model", str(wine_model), "--data", WINE, "--label-col", "class", "--out", str(out), "--novelty", "--radius-mult", "3", "--paths-json", str(paths)])
    assert rc == 0
    assert all(r["novelty_flag"] in ("0", "1") for r in _read(out))
    assert len(json.loads(paths.read_text())["rows"]) == 178


def test_predict_feature_mismatch(wine_model, blob_csv, tmp_path):
    rc = main(["predict", "--model", str(wine_model), "--data", str(blob_csv), "--label-col", "class", "--out", str(tmp_path / "p.csv")])
    assert rc == 2


def test_predict_bad_model_version(wine_model, tmp_path):
    d = json.loads(wine_model.read_text())
    d["version"] = "sscc-model/99"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(d))
    rc = main(["predict", "--model", str(bad), "--data", WINE, "--label-col", "class", "--out", str(tmp_path / "p.csv")])
    assert rc == 2


def test_fit_missing_label_column(tmp_path, capsys):
    rc = main(["fit", "--data", WINE, "--label-col", "nope", "--out", str(tmp_path / "m.json")])
    assert rc == 2
    assert "nope" in capsys.readouterr().err


def test_fit_rejects_ol_above_cem(tmp_path, capsys):
    rc = main(["fit", "--data", WINE, "--label-col", "class", "--lambda-ol", "0.95", "--lambda-cem", "0.9", "--out", str(tmp_path / "m.json")])
    assert rc == 2
    assert "lambda_ol" in capsys.readouterr().err


def test_fit_bad_row_named(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,class\n1,2,x\n3,oops,y\n4,5,x\n")
    assert main(["fit", "--data", str(p), "--label-col", "class", "--out", str(tmp_path / "m.json")]) == 2
    assert "row 2" in capsys.readouterr().err


def test_noise_counts(blob_csv, tmp_path):
    out, man = tmp_path / "n.csv", tmp_path / "n.json"
    assert main(["noise", "--data", str(blob_csv), "--label-col", "class", "--fraction", "0.2", "--seed", "1", "--out", str(out), "--manifest", str(man)]) == 0
    manifest = json.loads(man.read_text())
    assert len(manifest["corrupted"]) == 20
    assert all(c["original"] != c["new"] for c in manifest["corrupted"])
    before, after = _read(blob_csv), _read(out)
    diff = [i for i, (a, b) in enumerate(zip(before, after)) if a != b]
    assert sorted(diff) == sorted(c["row_id"] for c in manifest["corrupted"])


def test_noise_zero_identical(blob_csv, tmp_path):
    out, man = tmp_path / "n.csv", tmp_path / "n.json"
    assert main(["noise", "--data", str(blob_csv), "--label-col", "class", "--fraction", "0", "--out", str(out), "--manifest", str(man)]) == 0
    assert out.read_bytes() == blob_csv.read_bytes()
    assert json.loads(man.read_text())["corrupted"] == []


def test_noise_deterministic(blob_csv, tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"n{i}.csv"
        man = tmp_path / f"n{i}.json"
        main(["noise", "--data", str(blob_csv), "--label-col", "class", "--fraction", "0.3", "--seed", "5", "--out", str(out), "--manifest", str(man)])
        outs.append((out.read_bytes(), json.loads(man.read_text())["corrupted"]))
    assert outs[0] == outs[1]


def test_noise_single_label(tmp_path):
    p = tmp_path / "one.csv"
    p.write_text("a,class\n1,x\n2,x\n3,x\n")
    assert main(["noise", "--data", str(p), "--label-col", "class", "--fraction", "0.5", "--out", str(tmp_path / "o.csv")]) == 2


def _experiment(blob_csv, out, *extra):
    return main(["experiment", "--data", str(blob_csv), "--label-col", "class", "--algo", "kmeans", "--seeds", "0,1", "--subset-budget", "10", "--out", str(out), *extra])


def test_experiment_grid(blob_csv, tmp_path, monkeypatch):
    monkeypatch.setenv("SSCC_THREADS", "1")
    out = tmp_path / "exp"
    assert _experiment(blob_csv, out, "--noise-fractions", "0,0.1") == 0
    res = json.loads((out / "results.json").read_text())
    assert res["version"] == "sscc-experiment/1"
    assert [r["noise_pct"] for r in res["grid"]] == [0, 10]
    assert len(res["cells"]) == 4 and all(c["error"] is None for c in res["cells"])
    assert (out / "grid.csv").exists() and (out / "cells.csv").exists()


def test_experiment_default_noise(blob_csv, tmp_path, monkeypatch):
    monkeypatch.setenv("SSCC_THREADS", "1")
    out = tmp_path / "exp"
    assert _experiment(blob_csv, out) == 0
    assert [r["noise_pct"] for r in json.loads((out / "results.json").read_text())["grid"]] == [0]


def test_experiment_empty_noise_list(blob_csv, tmp_path):
    assert _experiment(blob_csv, tmp_path / "exp", "--noise-fractions", "") == 2


def test_experiment_preset_with_lambda(blob_csv, tmp_path):
    assert _experiment(blob_csv, tmp_path / "exp", "--preset", "wine", "--lambda-cs", "0.5") == 2


def test_experiment_baseline_columns(blob_csv, tmp_path, monkeypatch):
    monkeypatch.setenv("SSCC_THREADS", "1")
    base = tmp_path / "svm.csv"
    base.write_text("noise_pct,name,accuracy\n0,svm,0.97\n")
    out = tmp_path / "exp"
    assert _experiment(blob_csv, out, "--baseline", str(base)) == 0
    assert _read(out / "grid.csv")[0]["baseline_svm"] == "0.97"


def test_usage_error_exit_code():
    assert main(["fit"]) == 2


def test_numpy_backend_subprocess(blob_csv, tmp_path):
    env = dict(os.environ, SSCC_DISABLE_NUMBA="1")
    code = "from sscc import kernels; print(kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    models = []
    for flag in ("1", "0"):
        m = tmp_path / f"m{flag}.json"
        env = dict(os.environ, SSCC_DISABLE_NUMBA=flag)
        subprocess.run(
            [sys.executable, "-m", "sscc.cli", "fit", "--data", str(blob_csv), "--label-col", "class", "--out", str(m)],
            env=env, check=True, capture_output=True,
        )
        models.append(json.loads(m.read_text()))
    assert models[0]["classes"] == models[1]["classes"]
