"""Loop kernels compiled with numba. Same contracts as ``_kernels_numpy``."""
import numpy as np
from numba import njit

_opts = dict(cache=True, nogil=True)


@njit(**_opts)
def pairwise_distances(X):
    n, d = X.shape
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for f in range(d):
                t = X[i, f] - X[j, f]
                s += t * t
            s = np.sqrt(s)
            D[i, j] = s
            D[j, i] = s
    return D


@njit(**_opts)
def center_distances(X, centers):
    n, d = X.shape
    k = centers.shape[0]
    out = np.empty((n, k))
    for i in range(n):
        for c in range(k):
            s = 0.0
            for f in range(d):
                t = X[i, f] - centers[c, f]
                s += t * t
            out[i, c] = np.sqrt(s)
    return out


@njit(**_opts)
def _sq_nearest(X, centers, labels, dist2):
    n, d = X.shape
    k = centers.shape[0]
    for i in range(n):
        best = np.inf
        arg = 0
        for c in range(k):
            s = 0.0
            for f in range(d):
                t = X[i, f] - centers[c, f]
                s += t * t
            if s < best:
                best = s
                arg = c
        labels[i] = arg
        dist2[i] = best


@njit(**_opts)
def nearest_center(X, centers):
    n = X.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist2 = np.empty(n)
    _sq_nearest(X, centers, labels, dist2)
    return labels, np.sqrt(dist2)


@njit(**_opts)
def kmeanspp_init(X, k, u):
    n, d = X.shape
    chosen = np.empty(k, dtype=np.int64)
    first = int(u[0] * n)
    if first > n - 1:
        first = n - 1
    chosen[0] = first
    taken = np.zeros(n, dtype=np.bool_)
    taken[first] = True
    d2 = np.empty(n)
    for i in range(n):
        s = 0.0
        for f in range(d):
            t = X[i, f] - X[first, f]
            s += t * t
        d2[i] = s
    for c in range(1, k):
        total = 0.0
        for i in range(n):
            total += d2[i]
        if total <= 0.0:
            n_free = 0
            for i in range(n):
                if not taken[i]:
                    n_free += 1
            pick = int(u[c] * n_free)
            if pick > n_free - 1:
                pick = n_free - 1
            idx = -1
            for i in range(n):
                if not taken[i]:
                    if pick == 0:
                        idx = i
                        break
                    pick -= 1
        else:
            target = u[c] * total
            cum = 0.0
            idx = n - 1
            for i in range(n):
                cum += d2[i]
                if cum > target:
                    idx = i
                    break
            while d2[idx] <= 0.0:
                idx -= 1
        chosen[c] = idx
        taken[idx] = True
        for i in range(n):
            s = 0.0
            for f in range(d):
                t = X[i, f] - X[idx, f]
                s += t * t
            if s < d2[i]:
                d2[i] = s
    return chosen


@njit(**_opts)
def _means(X, labels, k):
    n, d = X.shape
    sums = np.zeros((k, d))
    counts = np.zeros(k)
    for i in range(n):
        c = labels[i]
        counts[c] += 1.0
        for f in range(d):
            sums[c, f] += X[i, f]
    for c in range(k):
        for f in range(d):
            sums[c, f] /= counts[c]
    return sums


@njit(**_opts)
def _repair_empty(X, labels, centers, k):
    n, d = X.shape
    counts = np.zeros(k, dtype=np.int64)
    for i in range(n):
        counts[labels[i]] += 1
    for c in range(k):
        if counts[c] > 0:
            continue
        best = -1.0
        p = 0
        for i in range(n):
            if counts[labels[i]] <= 1:
                continue
            s = 0.0
            for f in range(d):
                t = X[i, f] - centers[labels[i], f]
                s += t * t
            if s > best:
                best = s
                p = i
        counts[labels[p]] -= 1
        labels[p] = c
        counts[c] = 1


@njit(**_opts)
def _sse(X, labels, centers):
    n, d = X.shape
    total = 0.0
    for i in range(n):
        for f in range(d):
            t = X[i, f] - centers[labels[i], f]
            total += t * t
    return total


@njit(**_opts)
def kmeans_lloyd(X, init_centers, max_iter, tol):
    n, d = X.shape
    k = init_centers.shape[0]
    centers = init_centers.astype(np.float64).copy()
    trace = np.zeros(max(max_iter, 1))
    labels = np.empty(n, dtype=np.int64)
    prev = np.full(n, -1, dtype=np.int64)
    dist2 = np.empty(n)
    n_iter = 0
    for it in range(max_iter):
        _sq_nearest(X, centers, labels, dist2)
        _repair_empty(X, labels, centers, k)
        new_centers = _means(X, labels, k)
        trace[it] = _sse(X, labels, new_centers)
        shift = 0.0
        for c in range(k):
            s = 0.0
            for f in range(d):
                t = new_centers[c, f] - centers[c, f]
                s += t * t
            s = np.sqrt(s)
            if s > shift:
                shift = s
        centers = new_centers
        n_iter = it + 1
        same = True
        for i in range(n):
            if labels[i] != prev[i]:
                same = False
                break
        if same or shift < tol:
            break
        prev[:] = labels
    final = np.empty(n, dtype=np.int64)
    _sq_nearest(X, centers, final, dist2)
    counts = np.zeros(k, dtype=np.int64)
    for i in range(n):
        counts[final[i]] += 1
    if counts.min() > 0:
        labels = final
    return labels, centers, _sse(X, labels, centers), n_iter, trace[:n_iter].copy()


@njit(**_opts)
def pam(D, k, max_iter):
    n = D.shape[0]
    medoids = np.empty(k, dtype=np.int64)
    is_med = np.zeros(n, dtype=np.bool_)
    best = np.inf
    arg = 0
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += D[i, j]
        if s < best:
            best = s
            arg = i
    medoids[0] = arg
    is_med[arg] = True
    dnear = D[:, arg].copy()
    for c in range(1, k):
        bestg = -np.inf
        arg = -1
        for o in range(n):
            if is_med[o]:
                continue
            g = 0.0
            for j in range(n):
                t = dnear[j] - D[j, o]
                if t > 0.0:
                    g += t
            if g > bestg:
                bestg = g
                arg = o
        medoids[c] = arg
        is_med[arg] = True
        for j in range(n):
            if D[j, arg] < dnear[j]:
                dnear[j] = D[j, arg]

    trace = np.empty(max_iter + 1)
    trace[0] = dnear.sum()
    n_swaps = 0
    lab = np.empty(n, dtype=np.int64)
    d1 = np.empty(n)
    d2 = np.empty(n)
    for _ in range(max_iter):
        cost = 0.0
        for j in range(n):
            b1 = np.inf
            b2 = np.inf
            l1 = 0
            for c in range(k):
                v = D[j, medoids[c]]
                if v < b1:
                    b2 = b1
                    b1 = v
                    l1 = c
                elif v < b2:
                    b2 = v
            lab[j] = l1
            d1[j] = b1
            d2[j] = b2
            cost += b1
        bestd = 0.0
        bi = -1
        bo = -1
        for i in range(k):
            for o in range(n):
                if is_med[o]:
                    continue
                s = 0.0
                for j in range(n):
                    keep = d2[j] if lab[j] == i else d1[j]
                    v = D[j, o]
                    s += v if v < keep else keep
                delta = s - cost
                if delta < bestd:
                    bestd = delta
                    bi = i
                    bo = o
        if bi < 0 or bestd >= -1e-12 * max(1.0, cost):
            break
        is_med[medoids[bi]] = False
        is_med[bo] = True
        medoids[bi] = bo
        n_swaps += 1
        total = 0.0
        for j in range(n):
            m = np.inf
            for c in range(k):
                if D[j, medoids[c]] < m:
                    m = D[j, medoids[c]]
            total += m
        trace[n_swaps] = total
    labels = np.empty(n, dtype=np.int64)
    objective = 0.0
    for j in range(n):
        m = np.inf
        l1 = 0
        for c in range(k):
            if D[j, medoids[c]] < m:
                m = D[j, medoids[c]]
                l1 = c
        labels[j] = l1
    for c in range(k):
        labels[medoids[c]] = c
    for j in range(n):
        objective += D[j, medoids[labels[j]]]
    return medoids, labels, objective, n_swaps, trace[: n_swaps + 1].copy()


@njit(**_opts)
def silhouette(D, labels, k):
    n = D.shape[0]
    counts = np.zeros(k)
    for i in range(n):
        counts[labels[i]] += 1.0
    sums = np.zeros(k)
    total = 0.0
    for i in range(n):
        sums[:] = 0.0
        for j in range(n):
            sums[labels[j]] += D[i, j]
        own = labels[i]
        if counts[own] <= 1.0:
            continue
        a = sums[own] / (counts[own] - 1.0)
        b = np.inf
        for c in range(k):
            if c != own and counts[c] > 0.0:
                v = sums[c] / counts[c]
                if v < b:
                    b = v
        m = a if a > b else b
        if m > 0.0:
            total += (b - a) / m
    return total / n
