import pytest

from conftest import make_blobs
from sscc.dataset import train_test_split
from sscc.experiment import ExperimentSpec, format_grid, noise_seed, run_cell, run_experiment, summarize, worker_count
from sscc.presets import PRESETS, preset_hyperparameters, thresholds
from sscc.tree import Hyperparameters


def test_presets_table():
    assert set(PRESETS) == {"coal", "ecoli", "wine", "eucalyptus"}
    assert thresholds("wine") == (0.7, 0.65, 0.03)
    assert thresholds("ecoli", "kmedoids", 0.3) == (0.75, 0.75, 0.04)
    assert thresholds("coal") == (0.9, 0.9, 0.01)
    assert thresholds("eucalyptus", "kmedoids", 0.2) == (0.9, 0.75, 0.02)
    assert thresholds("eucalyptus", "kmeans", 0.1) == (0.85, 0.8, 0.02)
    assert thresholds("eucalyptus", "kmeans", 0.24) == thresholds("eucalyptus", "kmeans", 0.2)
    with pytest.raises(ValueError):
        thresholds("iris")


def test_preset_keeps_engine_settings():
    hp = preset_hyperparameters("wine", "kmedoids", 0.1, Hyperparameters(subset_budget=7, seed=4))
    assert (hp.algorithm, hp.subset_budget, hp.seed, hp.lambda_cem) == ("kmedoids", 7, 4, 0.7)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec("x", noise_fractions=())
    with pytest.raises(ValueError):
        ExperimentSpec("x", noise_fractions=(1.0,))
    with pytest.raises(ValueError):
        ExperimentSpec("x", seeds=())
    with pytest.raises(ValueError):
        ExperimentSpec("x", algorithms=("svm",))


def test_noise_seed_depends_on_both_coordinates():
    assert noise_seed(0, 0.1) == noise_seed(0, 0.1)
    assert len({noise_seed(s, f) for s in range(3) for f in (0.1, 0.2, 0.3)}) == 9


def _spec(**kw):
    base = Hyperparameters(subset_budget=5, lambda_cs=0.5, lambda_cem=0.8, lambda_ol=0.05)
    return ExperimentSpec("blobs", noise_fractions=(0.0, 0.2), algorithms=("kmeans", "kmedoids"), base=base, seeds=(0, 1), **kw)


def test_test_rows_fixed_across_noise():
    data = make_blobs(n_blobs=3)
    ids = {tuple(train_test_split(data, 0.1, seed=3)[1].row_ids) for _ in (0.0, 0.3)}
    assert len(ids) == 1
    a = run_cell(data, _spec(), 0.0, "kmeans", 3)
    b = run_cell(data, _spec(), 0.2, "kmeans", 3)
    assert a["n_test"] == b["n_test"] and b["n_flipped"] == round(0.2 * a["n_train"])


def test_schedule_independent():
    data = make_blobs(n_blobs=3)
    serial = run_experiment(data, _spec(), workers=1)
    parallel = run_experiment(data, _spec(), workers=3)
    assert serial == parallel
    assert len(serial["cells"]) == 8


def test_cell_errors_are_recorded():
    data = make_blobs(n_per=3, n_blobs=2)
    res = run_experiment(data, _spec(test_fraction=0.9), workers=1)
    assert all(c["error"] for c in res["cells"])
    assert res["grid"][0]["kmeans_n"] == 0 and res["grid"][0]["kmeans_mean"] is None
    assert "n/a" in format_grid(res["grid"], ("kmeans",))


def test_summarize_stats():
    cells = [{"noise": 0.1, "algorithm": "kmeans", "accuracy": a} for a in (0.5, 1.0)]
    spec = ExperimentSpec("x", noise_fractions=(0.1,), seeds=(0, 1))
    row = summarize(cells, spec)[0]
    assert row["noise_pct"] == 10
    assert row["kmeans_mean"] == 0.75 and row["kmeans_std"] == 0.25
    assert (row["kmeans_min"], row["kmeans_max"], row["kmeans_n"]) == (0.5, 1.0, 2)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("SSCC_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.delenv("SSCC_THREADS")
    assert worker_count() >= 1
