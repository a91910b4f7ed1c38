"""``sscc`` command line: fit, predict, noise, experiment."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import shutil
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .cascade import fit
from .classify import NOVEL, NoveltyPolicy, classify_batch, evaluate_accuracy
from .dataset import DataError, Dataset, NoiseSpec, inject_label_noise, load_csv
from .experiment import ExperimentSpec, format_grid, read_baseline, run_experiment, write_results
from .presets import PRESETS, preset_hyperparameters
from .tree import Hyperparameters, ModelError, load_model, save_model

EXIT_OK, EXIT_USAGE, EXIT_INTERNAL = 0, 2, 3
MANIFEST_VERSION = "sscc-noise-manifest/1"
PREDICT_VERSION = "sscc-predictions/1"


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_hp_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("hyperparameters")
    g.add_argument("--preset", choices=PRESETS, help="threshold preset for a known dataset")
    g.add_argument("--lambda-cs", type=float)
    g.add_argument("--lambda-cem", type=float)
    g.add_argument("--lambda-ol", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--subset-min", type=int, default=2)
    g.add_argument("--subset-max", type=int)
    g.add_argument("--subset-budget", type=int, default=2000, help="max subsets per node, 0 = all")
    g.add_argument("--min-node-rows", type=int, default=6)
    g.add_argument("--max-depth", type=int, default=10)
    g.add_argument("--restarts", type=int, default=8)


def _hyperparameters(args, algorithm: str, noise: float = 0.0) -> Hyperparameters:
    try:
        base = Hyperparameters(
            algorithm=algorithm,
            seed=args.seed,
            subset_min_size=args.subset_min,
            subset_max_size=args.subset_max,
            subset_budget=args.subset_budget,
            min_node_rows=args.min_node_rows,
            max_depth=args.max_depth,
            restarts=args.restarts,
        )
        if args.preset:
            base = preset_hyperparameters(args.preset, algorithm, noise, base)
        overrides = {
            k: v
            for k, v in (("lambda_cs", args.lambda_cs), ("lambda_cem", args.lambda_cem), ("lambda_ol", args.lambda_ol))
            if v is not None
        }
        return replace(base, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(path, label_col) -> Dataset:
    try:
        return load_csv(path, label_col)
    except DataError as exc:
        raise UsageError(f"--data {path}: {exc}") from None


def cmd_fit(args) -> int:
    data = _load(args.data, args.label_col)
    hp = _hyperparameters(args, args.algo)
    if data.n_rows < 3:
        raise UsageError(f"--data {args.data}: need at least 3 rows")
    tree, report = fit(data, hp)
    out = Path(args.out)
    save_model(tree, out)
    stem = out.with_suffix("")
    Path(f"{stem}.report.json").write_text(json.dumps(report.to_dict(), indent=1) + "\n", encoding="utf-8")
    Path(f"{stem}.classes.txt").write_text(report.render_text(), encoding="utf-8")
    _write_meta(Path(f"{stem}.meta.json"), args)
    print(report.render_text(), end="")
    return EXIT_OK


def _write_meta(path: Path, args) -> None:
    meta = {"version": "sscc-meta/1", "sscc": __version__, "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "argv": sys.argv[1:]}
    path.write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8")


def _features_for_model(path, label_col, n_features: int):
    """Read a CSV for prediction; returns (X, row_ids, label names or None)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise UsageError(f"--data {path}: empty file")
    header = [h.strip() for h in rows[0]]
    drop = set()
    lab_idx = None
    if label_col is not None:
        if label_col in header:
            lab_idx = header.index(label_col)
        else:
            try:
                lab_idx = int(label_col) % len(header)
            except ValueError:
                raise UsageError(f"--label-col {label_col!r} not found in {path}") from None
        drop.add(lab_idx)
    id_idx = header.index("__row_id") if "__row_id" in header else None
    if id_idx is not None:
        drop.add(id_idx)
    cols = [j for j in range(len(header)) if j not in drop]
    if len(cols) != n_features:
        raise UsageError(f"--data {path}: {len(cols)} feature columns but the model expects {n_features}")
    X = np.full((len(rows) - 1, n_features), np.nan)
    ids = np.arange(len(rows) - 1)
    labels = [] if lab_idx is not None else None
    for i, r in enumerate(rows[1:]):
        for o, j in enumerate(cols):
            try:
                X[i, o] = float(r[j])
            except (ValueError, IndexError):
                pass  # left as NaN, reported as a per-row error
        if id_idx is not None:
            ids[i] = int(r[id_idx])
        if labels is not None:
            labels.append(r[lab_idx].strip() if lab_idx < len(r) else "")
    return X, ids, labels


def cmd_predict(args) -> int:
    try:
        tree = load_model(args.model)
    except ModelError as exc:
        raise UsageError(f"--model {args.model}: {exc}") from None
    X, ids, truth_names = _features_for_model(args.data, args.label_col, tree.n_features)
    policy = NoveltyPolicy(enabled=args.novelty, radius_multiplier=args.radius_mult)
    preds = classify_batch(X, tree, policy)
    out = Path(args.out)
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_id", "predicted_class", "dominant_label", "novelty_flag", "leaf_node_id", "error"])
        for rid, p in zip(ids, preds):
            if p.class_id == NOVEL:
                w.writerow([int(rid), NOVEL, "", int(p.novel), "" if p.novel_node is None else p.novel_node, p.error or ""])
            else:
                dom = tree.label_names[tree.classes[p.class_id].dominant_label]
                w.writerow([int(rid), p.class_id, dom, 0, p.leaf_node, ""])
    if args.paths_json:
        payload = {
            "version": PREDICT_VERSION,
            "rows": [
                {"row_id": int(rid), "class_id": p.class_id, "novel": p.novel, "path": [list(s) for s in p.path], "error": p.error}
                for rid, p in zip(ids, preds)
            ],
        }
        Path(args.paths_json).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    print(f"{len(preds)} rows, {preds.n_novel} novel, {preds.n_errors} errors -> {out}")
    if args.truth:
        if truth_names is None:
            raise UsageError("--truth needs --label-col")
        index = {n: i for i, n in enumerate(tree.label_names)}
        truth = np.array([index.get(n, -1) for n in truth_names])
        acc = evaluate_accuracy(preds, truth, tree, exclude_novel=args.exclude_novel)
        print(f"accuracy {acc.accuracy:.4f} ({acc.n_correct}/{acc.n_scored})")
        if args.summary:
            Path(args.summary).write_text(json.dumps({"version": PREDICT_VERSION, **acc.to_dict()}, indent=1) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_noise(args) -> int:
    data = _load(args.data, args.label_col)
    try:
        noisy, flipped = inject_label_noise(data, NoiseSpec(args.fraction, args.seed))
    except DataError as exc:
        raise UsageError(str(exc)) from None
    if not flipped:
        shutil.copyfile(args.data, args.out)
    with open(args.data, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header = [h.strip() for h in rows[0]]
    lab = header.index(args.label_col) if args.label_col in header else int(args.label_col) % len(header)
    changed = {}
    pos = {int(r): i for i, r in enumerate(data.row_ids)}
    for rid in flipped:
        i = pos[rid]
        changed[rid] = (data.label_names[data.labels[i]], noisy.label_names[noisy.labels[i]])
        rows[i + 1][lab] = changed[rid][1]
    if flipped:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    manifest = {
        "version": MANIFEST_VERSION,
        "source": str(args.data),
        "fraction": args.fraction,
        "seed": args.seed,
        "n_rows": data.n_rows,
        "corrupted": [{"row_id": rid, "original": o, "new": n} for rid, (o, n) in changed.items()],
    }
    manifest_path = args.manifest or f"{Path(args.out).with_suffix('')}.manifest.json"
    Path(manifest_path).write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    print(f"{len(flipped)} of {data.n_rows} labels changed -> {args.out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    data = _load(args.data, args.label_col)
    if args.noise_fractions is not None and not args.noise_fractions:
        raise UsageError("--noise-fractions is empty")
    hp = _hyperparameters(args, args.algo[0])
    try:
        spec = ExperimentSpec(
            data=args.data,
            label_column=args.label_col,
            noise_fractions=tuple(args.noise_fractions if args.noise_fractions is not None else (0.0,)),
            algorithms=tuple(args.algo),
            preset=args.preset,
            base=hp,
            test_fraction=args.test_fraction,
            seeds=tuple(args.seeds),
            stratified=not args.no_stratify,
            out_dir=args.out,
            save_models=args.save_models,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.preset and any(v is not None for v in (args.lambda_cs, args.lambda_cem, args.lambda_ol)):
        raise UsageError("--preset cannot be combined with explicit --lambda-* values in an experiment")
    results = run_experiment(data, spec)
    baseline = read_baseline(args.baseline) if args.baseline else None
    write_results(results, args.out, baseline)
    _write_meta(Path(args.out) / "meta.json", args)
    print(format_grid(results["grid"], spec.algorithms), end="")
    failed = [c for c in results["cells"] if c["error"]]
    for c in failed:
        print(f"cell noise={c['noise']} algo={c['algorithm']} seed={c['seed']} failed: {c['error']}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sscc", description="Semi-supervised cascaded clustering for noisy-label data")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a cascade model on a labeled CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--label-col", required=True)
    p.add_argument("--algo", choices=("kmeans", "kmedoids"), default="kmeans")
    p.add_argument("--out", required=True, help="model JSON path; report files are written next to it")
    _add_hp_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="classify rows with a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label-col", help="label column to ignore as a feature (and score with --truth)")
    p.add_argument("--out", required=True)
    p.add_argument("--truth", action="store_true", help="report accuracy against --label-col")
    p.add_argument("--exclude-novel", action="store_true", help="drop novel rows from the accuracy denominator")
    p.add_argument("--summary", help="write the accuracy summary as JSON")
    p.add_argument("--novelty", action="store_true")
    p.add_argument("--radius-mult", type=float, default=3.0)
    p.add_argument("--paths-json", help="write full descent paths as JSON")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("noise", help="write a copy of a CSV with randomly flipped labels")
    p.add_argument("--data", required=True)
    p.add_argument("--label-col", required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("experiment", help="noise-robustness grid over noise levels, kernels and seeds")
    p.add_argument("--data", required=True)
    p.add_argument("--label-col", required=True)
    p.add_argument("--algo", type=lambda s: [a for a in s.split(",") if a], default=["kmeans", "kmedoids"])
    p.add_argument("--noise-fractions", type=_floats)
    p.add_argument("--seeds", type=_ints, default=[0, 1, 2, 3, 4])
    p.add_argument("--test-fraction", type=float, default=0.1)
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--baseline", help="CSV of external baseline accuracies (noise_pct,name,accuracy)")
    p.add_argument("--save-models", action="store_true")
    p.add_argument("--out", required=True, help="output directory")
    _add_hp_flags(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sscc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, AssertionError) as exc:
        print(f"sscc {args.command}: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
