"""Label-aware evaluation of a clustering: contingency counts, completeness, CEM."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ContingencyTable:
    """counts[c, k] = rows with label ``label_ids[c]`` in cluster ``cluster_ids[k]``."""

    counts: np.ndarray
    label_ids: tuple[int, ...]
    cluster_ids: tuple[int, ...]

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    def row(self, label) -> int:
        return self.label_ids.index(label)

    def col(self, cluster) -> int:
        return self.cluster_ids.index(cluster)


def contingency(labels, assignments, clusters=None) -> ContingencyTable:
    """Tabulate label x cluster counts.

    Labels absent from ``labels`` never get a row. ``clusters`` fixes the
    column set (e.g. range(k)); by default it is the sorted distinct values.
    """
    labels = np.asarray(labels)
    assignments = np.asarray(assignments)
    if labels.shape != assignments.shape:
        raise ValueError(f"length mismatch: {labels.size} labels vs {assignments.size} assignments")
    if labels.size == 0:
        raise ValueError("empty input")
    label_ids = np.unique(labels)
    cluster_ids = np.unique(assignments) if clusters is None else np.asarray(list(clusters))
    r = np.searchsorted(label_ids, labels)
    c = np.searchsorted(cluster_ids, assignments)
    if np.any(c >= cluster_ids.size) or np.any(cluster_ids[np.minimum(c, cluster_ids.size - 1)] != assignments):
        raise ValueError("assignment outside the declared cluster set")
    counts = np.zeros((label_ids.size, cluster_ids.size), dtype=np.int64)
    np.add.at(counts, (r, c), 1)
    return ContingencyTable(counts, tuple(label_ids.tolist()), tuple(cluster_ids.tolist()))


def _as_counts(table) -> np.ndarray:
    counts = table.counts if isinstance(table, ContingencyTable) else np.asarray(table)
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 2 or counts.size == 0 or counts.sum() <= 0:
        raise ValueError("empty contingency table")
    if np.any(counts < 0):
        raise ValueError("negative counts")
    return counts


def _xlogy(x, y):
    # 0 * log 0 := 0
    out = np.zeros_like(x)
    nz = x > 0
    out[nz] = x[nz] * np.log(y[nz])
    return out


def completeness_score(table) -> float:
    """1 - H(K|C) / H(K,C), with H(K,C) the joint entropy; 1 when H(K,C) = 0."""
    n = _as_counts(table)
    n = n[n.sum(axis=1) > 0]
    N = n.sum()
    label_tot = n.sum(axis=1, keepdims=True)
    h_k_given_c = -np.sum(_xlogy(n / N, n / label_tot))
    h_joint = -np.sum(_xlogy(n / N, n / N))
    if h_joint == 0.0:
        return 1.0
    return float(min(max(1.0 - h_k_given_c / h_joint, 0.0), 1.0))


@dataclass(frozen=True)
class CemMatrix:
    """Cluster evaluation matrix, stored [clusters x labels]."""

    values: np.ndarray
    label_ids: tuple[int, ...]
    cluster_ids: tuple[int, ...]

    def entry(self, cluster, label) -> float:
        return float(self.values[self.cluster_ids.index(cluster), self.label_ids.index(label)])

    def cluster_max(self, cluster) -> float:
        return float(self.values[self.cluster_ids.index(cluster)].max())


def cem_values(table) -> np.ndarray:
    """Raw [K x C] CEM values from a [C x K] count matrix."""
    n = _as_counts(table)
    cluster_tot = n.sum(axis=0)
    if np.any(cluster_tot == 0):
        raise ValueError("empty cluster column in contingency table")
    label_tot = n.sum(axis=1, keepdims=True)
    safe_tot = np.where(label_tot > 0, label_tot, 1.0)
    purity = n / cluster_tot[None, :]
    size_term = np.log(n + 1.0) / np.log(safe_tot + 1.0)
    spread_term = np.exp(n / safe_tot - 1.0)
    vals = np.where(n > 0, purity * np.maximum(size_term, spread_term), 0.0)
    return np.clip(vals, 0.0, 1.0).T.copy()


def cem(table: ContingencyTable) -> CemMatrix:
    return CemMatrix(cem_values(table), table.label_ids, table.cluster_ids)
