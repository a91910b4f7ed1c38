"""Distance-based clustering: k-means++/Lloyd, PAM k-medoids, silhouette-driven k.

All distances are Euclidean. Heavy loops live in :mod:`sscc.kernels`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels

ALGORITHMS = ("kmeans", "kmedoids")


class DegenerateClusteringError(ValueError):
    """The points cannot be split into clusters with distinct centers."""


@dataclass
class ClusteringResult:
    assignments: np.ndarray
    centers: np.ndarray
    k: int
    objective: float
    silhouette: float = float("nan")
    feature_subset: tuple[int, ...] = ()
    medoid_index: Optional[np.ndarray] = None
    n_iter: int = 0
    trace: np.ndarray = field(default_factory=lambda: np.empty(0))

    def to_json(self) -> str:
        """Diagnostic dump; not a model format."""
        return json.dumps(
            {
                "k": self.k,
                "assignments": self.assignments.tolist(),
                "centers": self.centers.tolist(),
                "objective": self.objective,
                "silhouette": self.silhouette,
                "feature_subset": list(self.feature_subset),
            }
        )


def _as_points(points) -> np.ndarray:
    X = np.ascontiguousarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError("points must be a 2-D array")
    return X


def _check_k(n: int, k: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of rows ({n})")


def restart_uniforms(seed, restarts: int, k: int) -> np.ndarray:
    """Row r holds the uniforms driving restart r; independent of evaluation order."""
    return np.random.default_rng(seed).random((restarts, k))


def kmeans_fit(points, k: int, seed=0, restarts: int = 8, max_iter: int = 300, tol: float = 1e-6) -> ClusteringResult:
    """Best-of-``restarts`` Lloyd k-means from k-means++ seeds.

    Ties between restarts keep the earliest restart.
    """
    X = _as_points(points)
    _check_k(X.shape[0], k)
    best = None
    for u in restart_uniforms(seed, max(restarts, 1), k):
        init = X[kernels.kmeanspp_init(X, k, u)]
        labels, centers, obj, n_iter, trace = kernels.kmeans_lloyd(X, init, max_iter, tol)
        if best is None or obj < best[2]:
            best = (labels, centers, obj, n_iter, trace)
    labels, centers, obj, n_iter, trace = best
    return ClusteringResult(np.asarray(labels), np.asarray(centers), k, float(obj), n_iter=int(n_iter), trace=np.asarray(trace))


def kmedoids_fit(points, k: int, seed=0, max_iter: int = 300, distances: Optional[np.ndarray] = None) -> ClusteringResult:
    """PAM: greedy BUILD then best-improvement SWAP.

    Fully deterministic; ``seed`` is accepted for signature parity with
    :func:`kmeans_fit`.
    """
    X = _as_points(points)
    _check_k(X.shape[0], k)
    D = kernels.pairwise_distances(X) if distances is None else distances
    medoids, labels, obj, n_swaps, trace = kernels.pam(D, k, max_iter)
    medoids = np.asarray(medoids)
    return ClusteringResult(
        np.asarray(labels), X[medoids].copy(), k, float(obj), medoid_index=medoids, n_iter=int(n_swaps), trace=np.asarray(trace)
    )


def silhouette_score(points, assignments, distances: Optional[np.ndarray] = None) -> float:
    """Mean silhouette; a point alone in its cluster contributes 0."""
    labels = np.asarray(assignments, dtype=np.int64)
    _, labels = np.unique(labels, return_inverse=True)
    k = int(labels.max()) + 1 if labels.size else 0
    if k < 2:
        raise ValueError("silhouette is undefined for fewer than 2 clusters")
    D = kernels.pairwise_distances(_as_points(points)) if distances is None else distances
    return float(kernels.silhouette(D, labels.astype(np.int64), k))


def best_k_clustering(
    points,
    k_max: int,
    algorithm: str = "kmeans",
    seed=0,
    restarts: int = 8,
    max_iter: int = 300,
    tol: float = 1e-6,
    feature_subset: Sequence[int] = (),
) -> ClusteringResult:
    """Fit k = 2..k_max and keep the highest silhouette (ties -> smaller k).

    ``k_max`` is lowered to n_rows - 1 when there are too few rows for a
    silhouette at larger k, and to the number of distinct points. A k whose
    centers coincide is skipped: nearest-center assignment could not tell
    those clusters apart.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    X = _as_points(points)
    n = X.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 rows to select k by silhouette, got {n}")
    if k_max < 2:
        raise ValueError(f"k_max must be >= 2, got {k_max}")
    n_distinct = np.unique(X, axis=0).shape[0]
    if n_distinct < 2:
        raise DegenerateClusteringError("all points coincide")
    k_max = min(k_max, n - 1, n_distinct)
    D = kernels.pairwise_distances(X)
    best = None
    for k in range(2, k_max + 1):
        if algorithm == "kmeans":
            res = kmeans_fit(X, k, seed=seed, restarts=restarts, max_iter=max_iter, tol=tol)
        else:
            res = kmedoids_fit(X, k, seed=seed, max_iter=max_iter, distances=D)
        if np.unique(res.centers, axis=0).shape[0] < k:
            continue
        res.silhouette = float(kernels.silhouette(D, res.assignments, k))
        if best is None or res.silhouette > best.silhouette + 1e-12:
            best = res
    if best is None:
        raise DegenerateClusteringError("no k yields distinct centers")
    best.feature_subset = tuple(int(f) for f in feature_subset)
    return best
