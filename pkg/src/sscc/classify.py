"""Nearest-center descent through a fitted cascade."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dataset import Dataset
from .tree import CascadeTree, Leaf

NOVEL = -1


@dataclass(frozen=True)
class NoveltyPolicy:
    enabled: bool = False
    radius_multiplier: float = 3.0

    def __post_init__(self):
        if self.radius_multiplier <= 0:
            raise ValueError("radius_multiplier must be positive")


@dataclass
class Classification:
    class_id: int
    path: list[tuple[int, int, float]]
    distances: list[list[float]]
    novel: bool = False
    novel_node: Optional[int] = None
    error: Optional[str] = None

    @property
    def leaf_node(self) -> Optional[int]:
        return self.path[-1][0] if self.path else None


def classify(x, tree: CascadeTree, policy: NoveltyPolicy = NoveltyPolicy()) -> Classification:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (tree.n_features,):
        raise ValueError(f"expected {tree.n_features} feature values, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    z = tree.normalization.transform(x)
    path: list[tuple[int, int, float]] = []
    dists: list[list[float]] = []
    nid = tree.root
    while True:
        node = tree.nodes[nid]
        diff = node.centers - z[list(node.feature_subset)]
        d = np.sqrt(np.sum(diff * diff, axis=1))
        j = int(np.argmin(d))
        path.append((nid, j, float(d[j])))
        dists.append(d.tolist())
        if policy.enabled and d[j] > policy.radius_multiplier * node.radii[j]:
            return Classification(NOVEL, path, dists, novel=True, novel_node=nid)
        child = node.children[j]
        if isinstance(child, Leaf):
            return Classification(child.class_id, path, dists)
        nid = child.node_id


@dataclass
class BatchResult:
    items: list[Classification]
    n_novel: int = 0
    n_errors: int = 0

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    @property
    def class_ids(self) -> np.ndarray:
        return np.array([c.class_id for c in self.items], dtype=np.int64)


def classify_batch(rows, tree: CascadeTree, policy: NoveltyPolicy = NoveltyPolicy()) -> BatchResult:
    """Classify each row; a row that cannot be classified gets an error slot instead of aborting the batch."""
    X = rows.features if isinstance(rows, Dataset) else rows
    items = []
    n_novel = n_err = 0
    for x in X:
        try:
            c = classify(x, tree, policy)
        except ValueError as exc:
            c = Classification(NOVEL, [], [], error=str(exc))
            n_err += 1
        else:
            n_novel += c.novel
        items.append(c)
    return BatchResult(items, n_novel, n_err)


@dataclass
class AccuracyReport:
    accuracy: float
    n_correct: int
    n_scored: int
    n_novel: int
    n_errors: int
    confusion: dict[int, list[int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "n_correct": self.n_correct,
            "n_scored": self.n_scored,
            "n_novel": self.n_novel,
            "n_errors": self.n_errors,
            "confusion": {str(k): v for k, v in self.confusion.items()},
        }


def evaluate_accuracy(predictions: Sequence[Classification], truth, tree: CascadeTree, exclude_novel: bool = False) -> AccuracyReport:
    """Share of rows whose predicted class is dominated by the true label.

    ``confusion[class_id]`` counts true labels per predicted class. Novel and
    errored rows count as misses unless ``exclude_novel`` drops them from the
    denominator.
    """
    truth = np.asarray(truth)
    if len(predictions) != truth.size:
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {truth.size} labels")
    L = len(tree.label_names)
    confusion: dict[int, list[int]] = {}
    correct = scored = novel = errors = 0
    for p, t in zip(predictions, truth):
        if p.error is not None or p.class_id == NOVEL:
            novel += p.novel
            errors += p.error is not None
            if not exclude_novel:
                scored += 1
            continue
        scored += 1
        confusion.setdefault(p.class_id, [0] * L)[int(t)] += 1
        correct += tree.classes[p.class_id].dominant_label == int(t)
    acc = correct / scored if scored else float("nan")
    return AccuracyReport(acc, correct, scored, novel, errors, dict(sorted(confusion.items())))
