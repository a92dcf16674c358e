"""Independent brute-force references used to freeze expected test values.

Everything here is deliberately naive: explicit subset enumeration,
triple loops, and recursive definitions, kept free of the package's fast
paths so the two routes stay independent.
"""

import math
from itertools import combinations

import numpy as np


def brute_functional_kernel(f, g, depth):
    """Subset-norm kernel by explicit enumeration of coordinate subsets."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    n = len(f)
    total = 0.0
    for m in range(1, depth + 1):
        for subset in combinations(range(n), m):
            total += math.sqrt(sum((f[k] - g[k]) ** 2 for k in subset))
    return total


def brute_n_distance(xs, ys, kernel):
    """V-statistic estimate by explicit loops, diagonals included."""
    m1, m2 = len(xs), len(ys)
    cross = sum(kernel(x, y) for x in xs for y in ys)
    within_x = sum(kernel(a, b) for a in xs for b in xs)
    within_y = sum(kernel(a, b) for a in ys for b in ys)
    return 2.0 * cross / (m1 * m2) - within_x / m1**2 - within_y / m2**2


def ward_distance_recursive(matrix, children, a, b):
    """Cluster distance by recursion over the dendrogram's merge tree.

    ``children`` maps a merged cluster id to its (left, right) pair;
    singleton ids fall back to the base matrix.
    """
    n = matrix.shape[0]
    if a < n and b < n:
        return float(matrix[a, b])
    if a < n:  # recurse on the composite side
        a, b = b, a
    left, right = children[a]
    d13 = ward_distance_recursive(matrix, children, left, b)
    d23 = ward_distance_recursive(matrix, children, right, b)
    d12 = ward_distance_recursive(matrix, children, left, right)
    m1 = cluster_size(children, left, n)
    m2 = cluster_size(children, right, n)
    m3 = cluster_size(children, b, n)
    m = m1 + m2 + m3
    inner = ((m1 + m3) / m) * d13**2 + ((m2 + m3) / m) * d23**2 - (m3 / m) * d12**2
    return math.sqrt(max(inner, 0.0))


def cluster_size(children, c, n):
    if c < n:
        return 1
    left, right = children[c]
    return cluster_size(children, left, n) + cluster_size(children, right, n)


def naive_alternating_kmedoids(matrix, init, max_iter=100):
    """Dumb rendering of the alternating k-medoids steps with the same tie
    rules (lowest medoid position, lowest index), for cross-checking."""
    meds = list(init)
    n = matrix.shape[0]
    labels = None
    for _ in range(max_iter):
        new_labels = []
        for i in range(n):
            ds = [matrix[i, m] for m in meds]
            new_labels.append(ds.index(min(ds)))
        for c in range(len(meds)):
            members = [i for i in range(n) if new_labels[i] == c]
            if not members:
                continue
            best, best_sum = None, None
            for cand in members:
                s = sum(matrix[cand, j] for j in members)
                if best_sum is None or s < best_sum:
                    best, best_sum = cand, s
            meds[c] = best
        if labels == new_labels:
            break
        labels = new_labels
    return labels


def block_matrix(block_sizes, within=0.1, across=10.0, jitter=0.0, seed=0):
    """Symmetric matrix with tight within-block and wide across-block values."""
    n = sum(block_sizes)
    owner = np.repeat(np.arange(len(block_sizes)), block_sizes)
    rng = np.random.default_rng(seed)
    m = np.where(owner[:, None] == owner[None, :], within, across).astype(float)
    if jitter:
        noise = rng.uniform(0, jitter, size=(n, n))
        noise = (noise + noise.T) / 2
        m = m + noise
    np.fill_diagonal(m, 0.0)
    return m, owner
