"""Cascaded clustering fit.

Each node searches feature subsets, clusters every subset with the
silhouette-best k (capped at the number of labels present), keeps the subset
with the highest completeness and then either closes the node as one class,
or scores each (cluster, label) cell with the CEM: low cells are dropped as
label noise, clusters with a dominant cell become classes and the rest are
re-clustered one level down.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .clustering import ClusteringResult, DegenerateClusteringError, best_k_clustering
from .dataset import Dataset, NormalizationParams, apply_normalization, fit_normalization
from .scores import ContingencyTable, cem, completeness_score, contingency
from .tree import CascadeNode, CascadeTree, ClassInfo, Hyperparameters, Leaf, Subtree, validate_tree

log = logging.getLogger(__name__)

CS_TIE_TOL = 1e-12


# -- feature subsets ---------------------------------------------------------


def _unrank_combination(rank: int, n: int, size: int) -> tuple[int, ...]:
    """Lexicographic unranking of a ``size``-combination of range(n)."""
    out = []
    start = 0
    for left in range(size, 0, -1):
        for v in range(start, n):
            block = math.comb(n - v - 1, left - 1)
            if rank < block:
                out.append(v)
                start = v + 1
                break
            rank -= block
    return tuple(out)


def enumerate_feature_subsets(n_features: int, hp: Hyperparameters, seed=None) -> list[tuple[int, ...]]:
    """All subsets with sizes in the policy range, ordered by size then lexicographically.

    Above ``hp.subset_budget`` a seeded uniform sample of that many subsets is
    returned instead (kept in enumeration order); the full feature set is
    always part of the sample when it is in range.
    """
    if n_features < 1:
        raise ValueError("need at least one feature")
    lo, hi = hp.subset_range(n_features)
    sizes = list(range(lo, hi + 1))
    per_size = [math.comb(n_features, s) for s in sizes]
    total = sum(per_size)
    budget = hp.subset_budget
    if budget <= 0 or total <= budget:
        return [c for s in sizes for c in itertools.combinations(range(n_features), s)]

    rng = np.random.default_rng(hp.seed if seed is None else seed)
    has_full = hi == n_features
    pool = total - 1 if has_full else total
    want = budget - 1 if has_full else budget
    ranks = sorted(int(r) for r in rng.choice(pool, size=want, replace=False))
    if has_full:
        ranks.append(total - 1)
    out = []
    offsets = np.cumsum([0] + per_size)
    for r in ranks:
        i = int(np.searchsorted(offsets, r, side="right")) - 1
        out.append(_unrank_combination(r - int(offsets[i]), n_features, sizes[i]))
    return out


# -- per-node search ---------------------------------------------------------


@dataclass
class SubsetEvaluation:
    subset: tuple[int, ...]
    result: ClusteringResult
    completeness: float
    order: int


def evaluate_subset(points: np.ndarray, subset: Sequence[int], labels: np.ndarray, hp: Hyperparameters, seed=0, order: int = 0):
    """Cluster ``points[:, subset]`` with the silhouette-best k and score it against ``labels``.

    ``points`` are the (already normalized) rows of the node.
    """
    k_max = int(np.unique(labels).size)
    pts = np.ascontiguousarray(points[:, list(subset)])
    res = best_k_clustering(
        pts, k_max, hp.algorithm, seed=seed, restarts=hp.restarts, max_iter=hp.max_iter, tol=hp.tol, feature_subset=subset
    )
    cs = completeness_score(contingency(labels, res.assignments, clusters=range(res.k)))
    return SubsetEvaluation(tuple(subset), res, cs, order)


def select_best_subset(evaluations: Sequence[SubsetEvaluation]) -> SubsetEvaluation:
    """Highest completeness; ties -> fewer features, higher silhouette, earlier enumeration."""
    if not evaluations:
        raise ValueError("no subset evaluations to choose from")
    top = max(e.completeness for e in evaluations)
    tied = [e for e in evaluations if e.completeness >= top - CS_TIE_TOL]
    return min(tied, key=lambda e: (len(e.subset), -e.result.silhouette, e.order))


# -- node decisions ----------------------------------------------------------


@dataclass
class ClusterDecision:
    cluster: int
    action: str  # "class", "recurse", "forced_leaf"
    reason: str
    max_cem: float
    rows: np.ndarray  # positional indices (into the node rows) kept after removal
    removed: np.ndarray  # positional indices dropped as noisy


@dataclass
class NodeDecisions:
    single_class: bool
    table: ContingencyTable
    cem: Optional[np.ndarray]
    clusters: list[ClusterDecision] = field(default_factory=list)


def partition_node(labels: np.ndarray, winner: SubsetEvaluation, hp: Hyperparameters, depth: int) -> NodeDecisions:
    """Apply the completeness / CEM thresholds to the winning clustering of a node."""
    assign = winner.result.assignments
    k = winner.result.k
    table = contingency(labels, assign, clusters=range(k))
    if winner.completeness < hp.lambda_cs:
        return NodeDecisions(True, table, None)
    matrix = cem(table)
    out = NodeDecisions(False, table, matrix.values)
    min_rows = max(hp.min_node_rows, 3)
    for j in range(k):
        in_cluster = assign == j
        drop = np.zeros_like(in_cluster)
        for ci, lab in enumerate(table.label_ids):
            if table.counts[ci, j] > 0 and matrix.values[j, ci] < hp.lambda_ol:
                drop |= in_cluster & (labels == lab)
        keep = np.flatnonzero(in_cluster & ~drop)
        top = float(matrix.values[j].max())
        if top >= hp.lambda_cem:
            action, reason = "class", f"max CEM {top:.4f} >= lambda_cem"
        elif keep.size < min_rows:
            action, reason = "forced_leaf", f"{keep.size} rows < min_node_rows"
        elif np.unique(labels[keep]).size < 2:
            action, reason = "forced_leaf", "single label remaining"
        elif depth + 1 > hp.max_depth:
            action, reason = "forced_leaf", "max_depth reached"
        else:
            action, reason = "recurse", f"max CEM {top:.4f} < lambda_cem"
        out.clusters.append(ClusterDecision(j, action, reason, top, keep, np.flatnonzero(drop)))
    return out


# -- report ------------------------------------------------------------------


@dataclass
class FitReport:
    records: list[dict] = field(default_factory=list)
    removals: list[dict] = field(default_factory=list)
    class_table: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"version": "sscc-report/1", "records": self.records, "removals": self.removals, "classes": self.class_table}

    def render_text(self) -> str:
        """Class table: one line per leaf class with its label make-up."""
        lines = [f"{'class':>5}  {'path':<16} {'rows':>5}  {'dominant':<14} labels"]
        for c in self.class_table:
            labs = ", ".join(f"{name}({n})" for name, n in c["labels"])
            lines.append(f"{c['class_id']:>5}  {c['path']:<16} {c['rows']:>5}  {c['dominant_label']:<14} {labs}")
        lines.append(f"removed as noisy: {len(self.removals)}")
        return "\n".join(lines) + "\n"


# -- fit ---------------------------------------------------------------------


class _Builder:
    def __init__(self, data: Dataset, Z: np.ndarray, hp: Hyperparameters):
        self.data = data
        self.Z = Z
        self.hp = hp
        self.nodes: dict[int, CascadeNode] = {}
        self.classes: list[ClassInfo] = []
        self.removed: list[tuple[int, int, int]] = []
        self.report = FitReport()
        self.n_evals = 0
        self.paths: dict[int, str] = {}

    def _new_class(self, node_id: int, cluster: int, rows: np.ndarray, fallback_rows: np.ndarray, reason: str) -> int:
        L = self.data.n_labels
        comp = np.bincount(self.data.labels[rows], minlength=L)
        basis = comp if comp.sum() else np.bincount(self.data.labels[fallback_rows], minlength=L)
        cid = len(self.classes)
        self.classes.append(
            ClassInfo(
                class_id=cid,
                node_id=node_id,
                cluster=cluster,
                row_ids=[int(r) for r in self.data.row_ids[rows]],
                composition=[int(v) for v in comp],
                dominant_label=int(np.argmax(basis)),
                reason=reason,
            )
        )
        return cid

    def _search(self, rows: np.ndarray):
        eval_id = self.n_evals
        self.n_evals += 1
        labels = self.data.labels[rows]
        pts = self.Z[rows]
        subsets = enumerate_feature_subsets(self.data.n_features, self.hp, seed=[self.hp.seed, eval_id, 0])
        evals = []
        for i, s in enumerate(subsets):
            try:
                evals.append(evaluate_subset(pts, s, labels, self.hp, seed=[self.hp.seed, eval_id, i + 1], order=i))
            except DegenerateClusteringError:
                continue  # the rows coincide on this subset
        return eval_id, len(subsets), select_best_subset(evals) if evals else None

    def _single_node(self, rows: np.ndarray, depth: int, path: str, reason: str) -> int:
        """One-cluster node, used when the whole root collapses into one class."""
        nid = len(self.nodes)
        subset = tuple(range(self.data.n_features))
        pts = self.Z[rows]
        center = pts.mean(axis=0, keepdims=True)
        radius = float(np.max(np.sqrt(np.sum((pts - center) ** 2, axis=1))))
        cs = completeness_score(contingency(self.data.labels[rows], np.zeros(rows.size, dtype=np.int64)))
        node = CascadeNode(nid, depth, subset, 1, center, np.array([radius]), cs, None, ())
        self.nodes[nid] = node
        node.children.append(Leaf(self._new_class(nid, 0, rows, rows, reason)))
        self.paths[node.children[0].class_id] = path
        return nid

    def grow(self, rows: np.ndarray, depth: int, parent: Optional[tuple[int, int]], path: str):
        """Returns ("leaf", rows, reason) when the evaluated rows should close as one class, else a Subtree."""
        hp = self.hp
        eval_id, n_searched, win = self._search(rows)
        labels = self.data.labels[rows]
        names = self.data.label_names
        if win is None:
            self.report.records.append(
                {
                    "evaluation": eval_id,
                    "node_id": None,
                    "parent": None if parent is None else {"node_id": parent[0], "cluster": parent[1]},
                    "depth": depth,
                    "n_rows": int(rows.size),
                    "labels_present": [names[c] for c in np.unique(labels)],
                    "subsets_searched": n_searched,
                    "winning_subset": None,
                    "k": None,
                    "cem": None,
                    "decisions": [{"cluster": None, "action": "class", "reason": "rows coincide on every subset"}],
                }
            )
            return ("leaf", rows, "rows coincide on every feature subset")
        dec = partition_node(labels, win, hp, depth)
        record = {
            "evaluation": eval_id,
            "node_id": None,
            "parent": None if parent is None else {"node_id": parent[0], "cluster": parent[1]},
            "depth": depth,
            "n_rows": int(rows.size),
            "labels_present": [names[c] for c in dec.table.label_ids],
            "subsets_searched": n_searched,
            "winning_subset": [self.data.feature_names[f] for f in win.subset],
            "winning_subset_idx": list(win.subset),
            "k": win.result.k,
            "silhouette": win.result.silhouette,
            "cs_max": win.completeness,
            "contingency": dec.table.counts.tolist(),
            "contingency_labels": [names[c] for c in dec.table.label_ids],
            "cem": None if dec.cem is None else dec.cem.tolist(),
            "decisions": [],
        }
        self.report.records.append(record)
        if dec.single_class:
            record["decisions"].append({"cluster": None, "action": "class", "reason": "cs_max < lambda_cs"})
            return ("leaf", rows, "cs_max below lambda_cs")

        nid = len(self.nodes)
        record["node_id"] = nid
        res = win.result
        pts = np.ascontiguousarray(self.Z[rows][:, list(win.subset)])
        _, dist = kernels.nearest_center(pts, np.ascontiguousarray(res.centers))
        radii = np.array([float(dist[res.assignments == j].max()) for j in range(res.k)])
        node = CascadeNode(
            nid, depth, win.subset, res.k, np.asarray(res.centers, dtype=np.float64), radii, win.completeness, dec.cem, dec.table.label_ids
        )
        self.nodes[nid] = node
        for cd in dec.clusters:
            for p in cd.removed:
                entry = (int(self.data.row_ids[rows[p]]), int(labels[p]), cd.cluster)
                node.removed_rows.append(entry)
                self.removed.append(entry)
                self.report.removals.append(
                    {"row_id": entry[0], "label": names[entry[1]], "node_id": nid, "cluster": cd.cluster}
                )
        for cd in dec.clusters:
            child_rows = rows[cd.rows]
            child_path = f"{path}.{cd.cluster}" if path else str(cd.cluster)
            decision = {"cluster": cd.cluster, "action": cd.action, "reason": cd.reason, "max_cem": cd.max_cem}
            record["decisions"].append(decision)
            if cd.action == "recurse":
                out = self.grow(child_rows, depth + 1, (nid, cd.cluster), child_path)
                if isinstance(out, Subtree):
                    node.children.append(out)
                    decision["child_node"] = out.node_id
                    continue
                _, leaf_rows, reason = out
                cid = self._new_class(nid, cd.cluster, leaf_rows, leaf_rows, reason)
            else:
                all_rows = rows[np.flatnonzero(res.assignments == cd.cluster)]
                cid = self._new_class(nid, cd.cluster, child_rows, all_rows, cd.reason)
            node.children.append(Leaf(cid))
            decision["class_id"] = cid
            self.paths[cid] = child_path
        return Subtree(nid)


def _class_table(tree: CascadeTree, paths: dict[int, str]) -> list[dict]:
    out = []
    for c in tree.classes:
        out.append(
            {
                "class_id": c.class_id,
                "node_id": c.node_id,
                "cluster": c.cluster,
                "path": paths.get(c.class_id, ""),
                "rows": len(c.row_ids),
                "dominant_label": tree.label_names[c.dominant_label],
                "labels": [[tree.label_names[i], n] for i, n in enumerate(c.composition) if n > 0],
                "reason": c.reason,
            }
        )
    return out


def fit(train: Dataset, hp: Optional[Hyperparameters] = None) -> tuple[CascadeTree, FitReport]:
    """Fit the cascade on a labeled training set. Deterministic for a given ``hp.seed``."""
    hp = hp or Hyperparameters()
    if train.n_rows < 3:
        raise ValueError(f"need at least 3 training rows, got {train.n_rows}")
    hp.subset_range(train.n_features)
    norm: NormalizationParams = fit_normalization(train)
    Z = np.ascontiguousarray(apply_normalization(train, norm).features)
    b = _Builder(train, Z, hp)
    rows = np.arange(train.n_rows)

    if np.unique(train.labels).size < 2:
        log.warning("training data carries a single label; returning a one-class model")
        root = b._single_node(rows, 0, "", "single label in training data")
    else:
        out = b.grow(rows, 0, None, "")
        if isinstance(out, Subtree):
            root = out.node_id
        else:
            root = b._single_node(rows, 0, "", out[2])
            b.report.records[0]["node_id"] = root

    tree = CascadeTree(
        normalization=norm,
        root=root,
        nodes=b.nodes,
        classes=b.classes,
        removed=b.removed,
        hyperparameters=hp,
        label_names=list(train.label_names),
        feature_names=list(train.feature_names),
    )
    validate_tree(tree)
    b.report.class_table = _class_table(tree, b.paths)
    return tree, b.report
