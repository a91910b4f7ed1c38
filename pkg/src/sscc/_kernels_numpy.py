"""Vectorised numpy kernels. Same contracts as ``_kernels_numba``."""
import numpy as np


def pairwise_distances(X):
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def center_distances(X, centers):
    diff = X[:, None, :] - centers[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def nearest_center(X, centers):
    """Index of the nearest center per row (ties -> lowest index) and its distance."""
    d = center_distances(X, centers)
    labels = np.argmin(d, axis=1)
    return labels.astype(np.int64), d[np.arange(X.shape[0]), labels]


def kmeanspp_init(X, k, u):
    n = X.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = min(int(u[0] * n), n - 1)
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    taken = np.zeros(n, dtype=np.bool_)
    taken[chosen[0]] = True
    for c in range(1, k):
        total = np.sum(d2)
        if total <= 0.0:
            free = np.flatnonzero(~taken)
            idx = free[min(int(u[c] * free.size), free.size - 1)]
        else:
            cum = np.cumsum(d2)
            idx = int(np.searchsorted(cum, u[c] * total, side="right"))
            if idx >= n:
                idx = n - 1
            while d2[idx] <= 0.0:
                idx -= 1
        chosen[c] = idx
        taken[idx] = True
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return chosen


def _means(X, labels, k):
    d = X.shape[1]
    sums = np.zeros((k, d))
    np.add.at(sums, labels, X)
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    return sums / counts[:, None]


def _repair_empty(X, labels, centers, k):
    counts = np.bincount(labels, minlength=k)
    for c in range(k):
        if counts[c] > 0:
            continue
        own = np.sum((X - centers[labels]) ** 2, axis=1)
        own[counts[labels] <= 1] = -1.0
        p = int(np.argmax(own))
        counts[labels[p]] -= 1
        labels[p] = c
        counts[c] = 1
    return labels


def kmeans_lloyd(X, init_centers, max_iter, tol):
    """Lloyd iterations from ``init_centers``.

    Returns (labels, centers, objective, n_iter, trace) where ``trace[t]`` is
    the SSE right after the t-th mean update.
    """
    k = init_centers.shape[0]
    centers = init_centers.astype(np.float64).copy()
    trace = np.zeros(max(max_iter, 1))
    prev = np.full(X.shape[0], -1, dtype=np.int64)
    labels = prev
    n_iter = 0
    for it in range(max_iter):
        labels, _ = nearest_center(X, centers)
        labels = _repair_empty(X, labels, centers, k)
        new_centers = _means(X, labels, k)
        resid = X - new_centers[labels]
        trace[it] = np.sum(resid * resid)
        shift = np.max(np.sqrt(np.sum((new_centers - centers) ** 2, axis=1)))
        centers = new_centers
        n_iter = it + 1
        if np.array_equal(labels, prev) or shift < tol:
            break
        prev = labels
    final, _ = nearest_center(X, centers)
    if np.bincount(final, minlength=k).min() > 0:
        labels = final
    resid = X - centers[labels]
    return labels, centers, float(np.sum(resid * resid)), n_iter, trace[:n_iter]


def pam(D, k, max_iter):
    """PAM BUILD followed by best-improvement SWAP on a distance matrix.

    Returns (medoids, labels, objective, n_swaps, trace); ``trace`` holds the
    total distance after BUILD and after every accepted swap.
    """
    n = D.shape[0]
    medoids = np.empty(k, dtype=np.int64)
    medoids[0] = int(np.argmin(D.sum(axis=1)))
    is_med = np.zeros(n, dtype=np.bool_)
    is_med[medoids[0]] = True
    dnear = D[:, medoids[0]].copy()
    for c in range(1, k):
        gain = np.maximum(dnear[:, None] - D, 0.0).sum(axis=0)
        gain[is_med] = -1.0
        m = int(np.argmax(gain))
        medoids[c] = m
        is_med[m] = True
        dnear = np.minimum(dnear, D[:, m])

    trace = [float(dnear.sum())]
    n_swaps = 0
    rows = np.arange(n)
    for _ in range(max_iter):
        dm = D[:, medoids]
        order = np.argsort(dm, axis=1, kind="stable")
        lab = order[:, 0]
        d1 = dm[rows, lab]
        d2 = dm[rows, order[:, 1]] if k > 1 else np.full(n, np.inf)
        cost = d1.sum()
        best = 0.0
        best_i = -1
        best_o = -1
        cand = np.flatnonzero(~is_med)
        for i in range(k):
            keep = np.where(lab == i, d2, d1)
            new = np.minimum(D[:, cand], keep[:, None]).sum(axis=0) - cost
            j = int(np.argmin(new))
            if new[j] < best:
                best = new[j]
                best_i = i
                best_o = cand[j]
        if best_i < 0 or best >= -1e-12 * max(1.0, cost):
            break
        is_med[medoids[best_i]] = False
        is_med[best_o] = True
        medoids[best_i] = best_o
        n_swaps += 1
        trace.append(float(np.min(D[:, medoids], axis=1).sum()))
    dm = D[:, medoids]
    labels = np.argmin(dm, axis=1).astype(np.int64)
    labels[medoids] = np.arange(k)
    objective = float(dm[rows, labels].sum())
    return medoids, labels, objective, n_swaps, np.array(trace)


def silhouette(D, labels, k):
    n = D.shape[0]
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    sums = D @ onehot
    counts = onehot.sum(axis=0)
    own = sums[np.arange(n), labels]
    own_n = counts[labels]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(own_n > 1, own / np.maximum(own_n - 1, 1), 0.0)
        other = sums / counts[None, :]
    other[np.arange(n), labels] = np.inf
    b = other.min(axis=1)
    m = np.maximum(a, b)
    s = np.where((own_n > 1) & (m > 0), (b - a) / np.where(m > 0, m, 1.0), 0.0)
    return float(np.mean(s))
