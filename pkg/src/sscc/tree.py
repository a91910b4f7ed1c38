"""Fitted cascade model: nodes, leaf classes, removal records and the JSON model file."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .dataset import NormalizationParams

MODEL_VERSION = "sscc-model/1"


class ModelError(ValueError):
    """Model file is unreadable, from another schema version, or inconsistent."""


@dataclass(frozen=True)
class Hyperparameters:
    lambda_cem: float = 0.9
    lambda_cs: float = 0.85
    lambda_ol: float = 0.01
    algorithm: str = "kmeans"
    subset_min_size: int = 2
    subset_max_size: Optional[int] = None
    subset_budget: int = 2000
    min_node_rows: int = 6
    max_depth: int = 10
    seed: int = 0
    restarts: int = 8
    max_iter: int = 300
    tol: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.lambda_cem <= 1.0:
            raise ValueError(f"lambda_cem must be in (0, 1], got {self.lambda_cem}")
        if not 0.0 < self.lambda_cs <= 1.0:
            raise ValueError(f"lambda_cs must be in (0, 1], got {self.lambda_cs}")
        if not 0.0 <= self.lambda_ol < 1.0:
            raise ValueError(f"lambda_ol must be in [0, 1), got {self.lambda_ol}")
        if self.lambda_ol >= self.lambda_cem:
            raise ValueError(f"lambda_ol ({self.lambda_ol}) must be below lambda_cem ({self.lambda_cem})")
        if self.algorithm not in ("kmeans", "kmedoids"):
            raise ValueError(f"algorithm must be kmeans or kmedoids, got {self.algorithm!r}")
        if self.subset_min_size < 1:
            raise ValueError("subset_min_size must be >= 1")
        if self.subset_max_size is not None and self.subset_max_size < self.subset_min_size:
            raise ValueError("subset_max_size must be >= subset_min_size")
        if self.subset_budget < 0 or self.max_depth < 1 or self.restarts < 1 or self.max_iter < 1:
            raise ValueError("subset_budget >= 0, max_depth >= 1, restarts >= 1 and max_iter >= 1 required")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")

    def subset_range(self, n_features: int) -> tuple[int, int]:
        lo = min(self.subset_min_size, n_features)
        hi = n_features if self.subset_max_size is None else min(self.subset_max_size, n_features)
        if hi < lo:
            raise ValueError(f"empty subset size range [{self.subset_min_size}, {self.subset_max_size}]")
        return lo, hi

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Leaf:
    class_id: int


@dataclass(frozen=True)
class Subtree:
    node_id: int


Outcome = Union[Leaf, Subtree]


@dataclass
class CascadeNode:
    node_id: int
    depth: int
    feature_subset: tuple[int, ...]
    k: int
    centers: np.ndarray
    radii: np.ndarray
    completeness: float
    cem: Optional[np.ndarray]
    cem_labels: tuple[int, ...]
    children: list[Outcome] = field(default_factory=list)
    removed_rows: list[tuple[int, int, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "depth": self.depth,
            "feature_subset": list(self.feature_subset),
            "k": self.k,
            "centers": self.centers.tolist(),
            "radii": self.radii.tolist(),
            "completeness": self.completeness,
            "cem": None if self.cem is None else self.cem.tolist(),
            "cem_labels": list(self.cem_labels),
            "children": [{"leaf": c.class_id} if isinstance(c, Leaf) else {"node": c.node_id} for c in self.children],
            "removed_rows": [list(r) for r in self.removed_rows],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CascadeNode":
        children: list[Outcome] = []
        for c in d["children"]:
            if "leaf" in c:
                children.append(Leaf(int(c["leaf"])))
            elif "node" in c:
                children.append(Subtree(int(c["node"])))
            else:
                raise ModelError(f"node {d['node_id']}: child entry {c!r} is neither leaf nor node")
        centers = np.asarray(d["centers"], dtype=np.float64).reshape(len(d["centers"]), -1)
        return cls(
            node_id=int(d["node_id"]),
            depth=int(d["depth"]),
            feature_subset=tuple(int(f) for f in d["feature_subset"]),
            k=int(d["k"]),
            centers=centers,
            radii=np.asarray(d["radii"], dtype=np.float64),
            completeness=float(d["completeness"]),
            cem=None if d["cem"] is None else np.asarray(d["cem"], dtype=np.float64),
            cem_labels=tuple(int(c) for c in d["cem_labels"]),
            children=children,
            removed_rows=[tuple(int(v) for v in r) for r in d["removed_rows"]],
        )


@dataclass
class ClassInfo:
    class_id: int
    node_id: int
    cluster: int
    row_ids: list[int]
    composition: list[int]
    dominant_label: int
    reason: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CascadeTree:
    normalization: NormalizationParams
    root: int
    nodes: dict[int, CascadeNode]
    classes: list[ClassInfo]
    removed: list[tuple[int, int, int]]
    hyperparameters: Hyperparameters
    label_names: list[str]
    feature_names: list[str]

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def class_by_id(self, class_id: int) -> ClassInfo:
        return self.classes[class_id]

    def removed_row_ids(self) -> set[int]:
        return {r[0] for r in self.removed}

    def to_dict(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "normalization": {"mean": self.normalization.mean.tolist(), "scale": self.normalization.scale.tolist()},
            "hyperparameters": self.hyperparameters.to_dict(),
            "root": self.root,
            "nodes": [self.nodes[i].to_dict() for i in sorted(self.nodes)],
            "classes": [c.to_dict() for c in self.classes],
            "removed": [list(r) for r in self.removed],
            "label_names": list(self.label_names),
            "feature_names": list(self.feature_names),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "CascadeTree":
        if not isinstance(d, dict) or d.get("version") != MODEL_VERSION:
            found = d.get("version") if isinstance(d, dict) else None
            raise ModelError(f"unsupported model version {found!r}, expected {MODEL_VERSION!r}")
        try:
            tree = cls(
                normalization=NormalizationParams(d["normalization"]["mean"], d["normalization"]["scale"]),
                root=int(d["root"]),
                nodes={n["node_id"]: CascadeNode.from_dict(n) for n in d["nodes"]},
                classes=[ClassInfo(**c) for c in d["classes"]],
                removed=[tuple(int(v) for v in r) for r in d["removed"]],
                hyperparameters=Hyperparameters(**d["hyperparameters"]),
                label_names=list(d["label_names"]),
                feature_names=list(d["feature_names"]),
            )
        except ModelError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed model: {exc}") from exc
        validate_tree(tree)
        return tree


def validate_tree(tree: CascadeTree) -> None:
    """Raise ModelError unless the structural invariants hold."""
    nodes = tree.nodes
    if tree.root not in nodes:
        raise ModelError("root node missing")
    n_feat = tree.n_features
    if tree.normalization.mean.size != n_feat:
        raise ModelError("normalization length does not match feature count")
    seen_nodes: set[int] = set()
    leaf_classes: list[int] = []
    stack = [(tree.root, 0)]
    while stack:
        nid, depth = stack.pop()
        if nid in seen_nodes:
            raise ModelError(f"node {nid} reached twice (cycle or shared subtree)")
        if nid not in nodes:
            raise ModelError(f"dangling child pointer to node {nid}")
        seen_nodes.add(nid)
        node = nodes[nid]
        if node.depth != depth:
            raise ModelError(f"node {nid}: depth {node.depth} but reached at depth {depth}")
        if len(node.children) != node.k:
            raise ModelError(f"node {nid}: {len(node.children)} children for k={node.k}")
        if node.centers.shape != (node.k, len(node.feature_subset)):
            raise ModelError(f"node {nid}: centers shape {node.centers.shape} inconsistent with k and subset")
        if node.radii.shape != (node.k,) or np.any(node.radii < 0):
            raise ModelError(f"node {nid}: bad radii")
        if any(f < 0 or f >= n_feat for f in node.feature_subset):
            raise ModelError(f"node {nid}: feature index out of range")
        for child in node.children:
            if isinstance(child, Leaf):
                leaf_classes.append(child.class_id)
            else:
                stack.append((child.node_id, depth + 1))
    if seen_nodes != set(nodes):
        raise ModelError("unreachable nodes present")
    if sorted(leaf_classes) != list(range(len(tree.classes))):
        raise ModelError("leaf class ids do not match the class table one-to-one")
    for i, c in enumerate(tree.classes):
        if c.class_id != i:
            raise ModelError("class table out of order")
        if len(c.composition) != len(tree.label_names) or sum(c.composition) != len(c.row_ids):
            raise ModelError(f"class {i}: composition disagrees with its rows")
        if not 0 <= c.dominant_label < len(tree.label_names):
            raise ModelError(f"class {i}: dominant label out of range")
        target = nodes[c.node_id].children[c.cluster] if c.node_id in nodes and c.cluster < nodes[c.node_id].k else None
        if target != Leaf(i):
            raise ModelError(f"class {i}: not the leaf at node {c.node_id} cluster {c.cluster}")
    ids = [r for c in tree.classes for r in c.row_ids] + [r[0] for r in tree.removed]
    if len(ids) != len(set(ids)):
        raise ModelError("a training row is accounted for more than once")
    node_removed = sorted(tuple(r) for n in nodes.values() for r in n.removed_rows)
    if node_removed != sorted(tuple(r) for r in tree.removed):
        raise ModelError("removed rows disagree between nodes and the model total")


def save_model(tree: CascadeTree, path) -> None:
    Path(path).write_text(tree.to_json(), encoding="utf-8")


def load_model(path) -> CascadeTree:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelError(f"corrupt model file {path}: {exc}") from exc
    except OSError as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    return CascadeTree.from_dict(d)
