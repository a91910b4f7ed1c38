"""Noise-robustness grid: split, corrupt the training side only, fit, score on clean test rows."""
from __future__ import annotations

import csv
import hashlib
import json
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cascade import fit
from .classify import classify_batch, evaluate_accuracy
from .dataset import Dataset, NoiseSpec, inject_label_noise, train_test_split
from .presets import preset_hyperparameters
from .tree import Hyperparameters

RESULTS_VERSION = "sscc-experiment/1"


@dataclass
class ExperimentSpec:
    data: str
    label_column: str = "class"
    noise_fractions: Sequence[float] = (0.0,)
    algorithms: Sequence[str] = ("kmeans",)
    preset: Optional[str] = None
    base: Hyperparameters = field(default_factory=Hyperparameters)
    test_fraction: float = 0.1
    seeds: Sequence[int] = (0, 1, 2, 3, 4)
    stratified: bool = True
    out_dir: Optional[str] = None
    save_models: bool = False

    def __post_init__(self):
        if not self.noise_fractions:
            raise ValueError("noise_fractions is empty")
        if any(not 0.0 <= f < 1.0 for f in self.noise_fractions):
            raise ValueError("noise fractions must lie in [0, 1)")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if any(a not in ("kmeans", "kmedoids") for a in self.algorithms):
            raise ValueError(f"unknown algorithm in {list(self.algorithms)}")

    def hyperparameters(self, algorithm: str, noise: float, seed: int) -> Hyperparameters:
        if self.preset:
            hp = preset_hyperparameters(self.preset, algorithm, noise, self.base)
        else:
            hp = replace(self.base, algorithm=algorithm)
        return replace(hp, seed=seed)


def noise_seed(seed: int, noise: float) -> int:
    """Noise RNG seed for a cell; the split depends on ``seed`` alone so test rows stay fixed across noise levels."""
    return int(np.random.SeedSequence([seed, int(round(noise * 1_000_000))]).generate_state(1)[0])


def fit_cell(data: Dataset, spec: ExperimentSpec, noise: float, algorithm: str, seed: int):
    """One grid cell; returns (cell record, tree, fit report, noisy training set)."""
    train, test = train_test_split(data, spec.test_fraction, seed=seed, stratified=spec.stratified)
    noisy, flipped = inject_label_noise(train, NoiseSpec(noise, noise_seed(seed, noise)))
    pristine = dict(zip(data.row_ids.tolist(), data.labels.tolist()))
    if any(pristine[r] != lab for r, lab in zip(test.row_ids.tolist(), test.labels.tolist())):
        raise AssertionError("test labels differ from the pristine data")
    hp = spec.hyperparameters(algorithm, noise, seed)
    tree, report = fit(noisy, hp)
    preds = classify_batch(test, tree)
    acc = evaluate_accuracy(preds, test.labels, tree)
    model_json = tree.to_json()
    removed = tree.removed_row_ids()
    cell = {
        "noise": noise,
        "algorithm": algorithm,
        "seed": seed,
        "accuracy": acc.accuracy,
        "n_test": int(test.n_rows),
        "n_train": int(train.n_rows),
        "n_flipped": len(flipped),
        "n_removed": len(removed),
        "n_flipped_removed": len(removed & set(flipped)),
        "n_classes": len(tree.classes),
        "n_nodes": len(tree.nodes),
        "model_sha256": hashlib.sha256(model_json.encode()).hexdigest(),
        "error": None,
    }
    if spec.save_models and spec.out_dir:
        mdir = Path(spec.out_dir) / "models"
        mdir.mkdir(parents=True, exist_ok=True)
        (mdir / f"{algorithm}_noise{noise:g}_seed{seed}.json").write_text(model_json, encoding="utf-8")
    return cell, tree, report, noisy


def run_cell(data: Dataset, spec: ExperimentSpec, noise: float, algorithm: str, seed: int) -> dict:
    return fit_cell(data, spec, noise, algorithm, seed)[0]


def _cell_or_error(args):
    data, spec, noise, algorithm, seed = args
    try:
        return run_cell(data, spec, noise, algorithm, seed)
    except Exception as exc:  # recorded per cell, the grid is still emitted
        return {"noise": noise, "algorithm": algorithm, "seed": seed, "accuracy": None, "error": f"{type(exc).__name__}: {exc}"}


def worker_count() -> int:
    raw = os.environ.get("SSCC_THREADS", "").strip()
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def summarize(cells: list[dict], spec: ExperimentSpec) -> list[dict]:
    rows = []
    for noise in spec.noise_fractions:
        row: dict = {"noise_pct": round(noise * 100, 6)}
        for algo in spec.algorithms:
            accs = [c["accuracy"] for c in cells if c["noise"] == noise and c["algorithm"] == algo and c["accuracy"] is not None]
            row[f"{algo}_mean"] = statistics.fmean(accs) if accs else None
            row[f"{algo}_std"] = statistics.pstdev(accs) if len(accs) > 1 else (0.0 if accs else None)
            row[f"{algo}_min"] = min(accs) if accs else None
            row[f"{algo}_max"] = max(accs) if accs else None
            row[f"{algo}_n"] = len(accs)
        rows.append(row)
    return rows


def run_experiment(data: Dataset, spec: ExperimentSpec, workers: Optional[int] = None) -> dict:
    """Run every (noise, algorithm, seed) cell; the result does not depend on scheduling."""
    jobs = [(data, spec, n, a, s) for n in spec.noise_fractions for a in spec.algorithms for s in spec.seeds]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            cells = list(pool.map(_cell_or_error, jobs))
    else:
        cells = [_cell_or_error(j) for j in jobs]
    return {"version": RESULTS_VERSION, "cells": cells, "grid": summarize(cells, spec)}


def read_baseline(path) -> dict[float, dict[str, float]]:
    """Externally produced baseline accuracies: CSV with columns noise_pct, name, accuracy."""
    out: dict[float, dict[str, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(float(row["noise_pct"]), {})[row["name"]] = float(row["accuracy"])
    return out


def write_results(results: dict, out_dir, baseline: Optional[dict] = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = [dict(r) for r in results["grid"]]
    if baseline:
        names = sorted({n for v in baseline.values() for n in v})
        for r in grid:
            for n in names:
                r[f"baseline_{n}"] = baseline.get(r["noise_pct"], {}).get(n)
    (out / "results.json").write_text(json.dumps({**results, "grid": grid}, indent=1) + "\n", encoding="utf-8")
    fields = list(grid[0]) if grid else ["noise_pct"]
    with (out / "grid.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in grid:
            w.writerow({k: ("" if v is None else v) for k, v in r.items()})
    with (out / "cells.csv").open("w", newline="", encoding="utf-8") as fh:
        keys = ["noise", "algorithm", "seed", "accuracy", "n_test", "n_flipped", "n_removed", "n_flipped_removed", "n_classes", "model_sha256", "error"]
        w = csv.DictWriter(fh, fieldnames=keys, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for c in results["cells"]:
            w.writerow({k: ("" if c.get(k) is None else c.get(k)) for k in keys})


def format_grid(grid: list[dict], algorithms: Sequence[str]) -> str:
    head = f"{'noise %':>8}" + "".join(f"  {a + ' (mean ± sd)':>24}" for a in algorithms)
    lines = [head]
    for r in grid:
        cells = []
        for a in algorithms:
            m, s = r.get(f"{a}_mean"), r.get(f"{a}_std")
            cells.append(f"  {'n/a':>24}" if m is None else f"  {f'{100 * m:.1f} ± {100 * s:.1f}':>24}")
        lines.append(f"{r['noise_pct']:>8g}" + "".join(cells))
    return "\n".join(lines) + "\n"
