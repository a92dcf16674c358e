"""Supervised and unsupervised classification over a distance matrix.

The supervised rule estimates class posteriors with a kernel weighted by
distance over a bandwidth that admits exactly the m nearest training
points, where m is selected per training point by leave-one-out squared
loss. Unsupervised options are k-medoids and Ward agglomeration driven by
the same distances. All ties break toward the lowest index and all
randomness is seeded, so every routine is reproducible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import permutations

import numpy as np

__all__ = [
    "knn_posterior",
    "select_m",
    "knn_classify",
    "k_medoids",
    "ward_cluster",
    "ward_dendrogram",
    "cut_dendrogram",
    "misclassification",
    "best_permutation_alignment",
]

_KERNELS = ("uniform", "epanechnikov")


def _kernel_weights(scaled: np.ndarray, kernel: str) -> np.ndarray:
    # Both kernels live on [0, 1], are non-increasing and integrate to 1.
    if kernel == "uniform":
        return (scaled <= 1.0).astype(float)
    if kernel == "epanechnikov":
        return np.where(scaled <= 1.0, 1.5 * (1.0 - scaled**2), 0.0)
    raise ValueError(f"unknown kernel {kernel!r}, expected one of {_KERNELS}")


def _bandwidth(dists: np.ndarray, m: int) -> float:
    """Smallest natural bandwidth putting the m nearest points strictly inside."""
    d_sorted = np.sort(dists)
    d_m = d_sorted[m - 1]
    if m < len(d_sorted) and d_sorted[m] > d_m:
        return 0.5 * (d_m + d_sorted[m])
    return d_m + max(1e-12, 1e-9 * d_m)


def knn_posterior(
    labels,
    dists: np.ndarray,
    m: int,
    kernel: str = "uniform",
    classes=None,
):
    """Posterior class probabilities at a point from its training distances.

    Returns (probs, classes) where probs sums to 1 over the sorted class
    list. Ties at the m-th distance are all included.
    """
    labels = np.asarray(labels)
    dists = np.asarray(dists, dtype=float)
    if len(labels) != len(dists):
        raise ValueError("labels and distances must align")
    if not 1 <= m <= len(labels):
        raise ValueError(f"m must be in [1, {len(labels)}], got {m}")
    if classes is None:
        classes = np.unique(labels)
    h = _bandwidth(dists, m)
    w = _kernel_weights(dists / h, kernel)
    total = w.sum()
    if total <= 0.0:
        raise ValueError("empty neighbourhood: all kernel weights are zero")
    probs = np.array([w[labels == c].sum() for c in classes]) / total
    return probs, classes


def _loo_loss(labels, dists, i0: int, m: int, kernel: str, classes) -> float:
    keep = np.arange(len(labels)) != i0
    probs, _ = knn_posterior(labels[keep], dists[keep], m, kernel=kernel, classes=classes)
    truth = (classes == labels[i0]).astype(float)
    return float(((truth - probs) ** 2).sum())


def select_m(
    labels,
    matrix: np.ndarray,
    i0: int,
    m_range=None,
    kernel: str = "uniform",
) -> int:
    """Leave-one-out optimal neighbour count for training point i0.

    Minimises the squared posterior loss with i0 held out; ties go to the
    smallest m.
    """
    labels = np.asarray(labels)
    matrix = np.asarray(matrix, dtype=float)
    n = len(labels)
    if m_range is None:
        m_range = range(1, n)
    m_range = list(m_range)
    if not m_range:
        raise ValueError("m_range must be nonempty")
    if min(m_range) < 1 or max(m_range) > n - 1:
        raise ValueError(f"m_range must lie within [1, {n - 1}]")
    classes = np.unique(labels)
    dists = matrix[i0]
    best_m, best_loss = None, np.inf
    for m in sorted(m_range):
        loss = _loo_loss(labels, dists, i0, m, kernel, classes)
        if loss < best_loss - 1e-15:
            best_m, best_loss = m, loss
    return best_m


def _lower_median(values) -> int:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def knn_classify(
    train_labels,
    train_matrix: np.ndarray,
    test_dists: np.ndarray,
    kernel: str = "uniform",
    m: int | None = None,
):
    """Classify test points from their distances to the training set.

    When m is not given, each training point selects its own leave-one-out
    optimal neighbour count and the lower median is used for every test
    point. Returns (predicted labels, posterior matrix, classes, m).
    Posterior ties break toward the first class in sorted order.
    """
    train_labels = np.asarray(train_labels)
    train_matrix = np.asarray(train_matrix, dtype=float)
    test_dists = np.atleast_2d(np.asarray(test_dists, dtype=float))
    n = len(train_labels)
    if train_matrix.shape != (n, n):
        raise ValueError(f"training matrix shape {train_matrix.shape} does not match {n} labels")
    if test_dists.shape[1] != n:
        raise ValueError(f"test rows have {test_dists.shape[1]} columns, expected {n}")
    if m is None:
        if n < 2:
            m = 1 if n == 1 else None
            if m is None:
                raise ValueError("cannot classify with an empty training set")
        else:
            m = _lower_median([select_m(train_labels, train_matrix, i0, kernel=kernel) for i0 in range(n)])
    classes = np.unique(train_labels)
    posteriors = np.empty((len(test_dists), len(classes)))
    for t, row in enumerate(test_dists):
        posteriors[t], _ = knn_posterior(
            train_labels, row, min(m, n), kernel=kernel, classes=classes
        )
    preds = classes[np.argmax(posteriors, axis=1)]
    return preds, posteriors, classes, m


def k_medoids(
    matrix: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    initial_medoids=None,
    return_objective_trace: bool = False,
):
    """Partition around medoids on a precomputed distance matrix.

    Starts from k random distinct medoids (seeded, or explicit via
    ``initial_medoids``), alternates nearest-medoid assignment with
    in-class medoid updates until assignments settle. Assignment ties go
    to the lowest medoid position, medoid ties to the lowest index, and an
    emptied class seizes the point farthest from its current medoid.

    Returns (labels, medoids) with labels in 0..k-1 in medoid order, plus
    the per-iteration objective when ``return_objective_trace`` is set.
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ValueError("matrix must be square")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if initial_medoids is not None:
        medoids = np.asarray(initial_medoids, dtype=int).copy()
        if len(medoids) != k or len(np.unique(medoids)) != k:
            raise ValueError("initial_medoids must be k distinct indices")
    else:
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        medoids = rng.choice(n, size=k, replace=False)

    def assign(meds):
        labels = np.argmin(matrix[:, meds], axis=1)
        for c in range(k):
            if not np.any(labels == c):
                # Seize the point farthest from its current medoid.
                gaps = matrix[np.arange(n), meds[labels]]
                gaps = gaps.copy()
                gaps[meds] = -np.inf  # never steal a serving medoid
                grab = int(np.argmax(gaps))
                meds[c] = grab
                labels = np.argmin(matrix[:, meds], axis=1)
                labels[grab] = c
        return labels

    labels = assign(medoids)
    trace = [float(matrix[np.arange(n), medoids[labels]].sum())]
    for _ in range(max_iter):
        for c in range(k):
            members = np.flatnonzero(labels == c)
            within = matrix[np.ix_(members, members)].sum(axis=1)
            medoids[c] = members[int(np.argmin(within))]
        new_labels = assign(medoids)
        trace.append(float(matrix[np.arange(n), medoids[new_labels]].sum()))
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    if return_objective_trace:
        return labels, medoids, trace
    return labels, medoids


def _ward_update(d13: float, d23: float, d12: float, m1: int, m2: int, m3: int) -> float:
    m = m1 + m2 + m3
    inner = ((m1 + m3) / m) * d13**2 + ((m2 + m3) / m) * d23**2 - (m3 / m) * d12**2
    if inner < 0.0:
        warnings.warn(
            f"negative squared cluster distance {inner}; clamping to 0 "
            "(input distances are not Euclidean)",
            stacklevel=3,
        )
        inner = 0.0
    return float(np.sqrt(inner))


@dataclass(frozen=True)
class Merge:
    """One agglomeration step: clusters a and b join at ``height``."""

    a: int
    b: int
    height: float
    size: int


def ward_dendrogram(matrix: np.ndarray, first_merge_average: bool = False) -> list[Merge]:
    """Full minimum-variance agglomeration of a distance matrix.

    Cluster ids are 0..n-1 for the inputs and n+step for merged clusters.
    The closest active pair merges at each step (ties to the smallest id
    pair) and distances to the remaining clusters follow the size-weighted
    square-root update. ``first_merge_average`` instead updates the very
    first merge with the plain average of the two singleton distances.
    Heights are recorded as produced, even when non-monotone.
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ValueError("matrix must be square")
    dist = {}
    for i in range(n):
        for j in range(i + 1, n):
            dist[(i, j)] = float(matrix[i, j])
    sizes = {i: 1 for i in range(n)}
    active = list(range(n))
    merges = []
    for step in range(n - 1):
        best = None
        for ai in range(len(active)):
            for bi in range(ai + 1, len(active)):
                a, b = active[ai], active[bi]
                key = (dist[_key(a, b)], a, b)
                if best is None or key < best:
                    best = key
        d_ab, a, b = best
        new = n + step
        merges.append(Merge(a=a, b=b, height=d_ab, size=sizes[a] + sizes[b]))
        active.remove(a)
        active.remove(b)
        for c in active:
            d_ac = dist.pop(_key(a, c))
            d_bc = dist.pop(_key(b, c))
            if first_merge_average and step == 0:
                d_new = 0.5 * (d_ac + d_bc)
            else:
                d_new = _ward_update(d_ac, d_bc, d_ab, sizes[a], sizes[b], sizes[c])
            dist[_key(new, c)] = d_new
        del dist[(a, b)]
        sizes[new] = sizes[a] + sizes[b]
        active.append(new)
    return merges


def _key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def cut_dendrogram(merges: list[Merge], n: int, k: int) -> np.ndarray:
    """Cluster labels after stopping k merge steps before completion.

    Labels are 0..k-1, numbered by each cluster's smallest member index.
    """
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    members = {i: [i] for i in range(n)}
    for step, mg in enumerate(merges[: n - k]):
        members[n + step] = members.pop(mg.a) + members.pop(mg.b)
    groups = sorted((min(v), v) for v in members.values())
    labels = np.empty(n, dtype=int)
    for lab, (_, pts) in enumerate(groups):
        labels[pts] = lab
    return labels


def ward_cluster(matrix: np.ndarray, k: int, first_merge_average: bool = False) -> np.ndarray:
    """Agglomerate and cut at k clusters; see :func:`ward_dendrogram`."""
    matrix = np.asarray(matrix, dtype=float)
    merges = ward_dendrogram(matrix, first_merge_average=first_merge_average)
    return cut_dendrogram(merges, matrix.shape[0], k)


def best_permutation_alignment(pred, truth):
    """Relabel predictions to best match the truth labels.

    Searches every permutation of the joint label alphabet (at most 6
    labels) and returns (aligned predictions, mismatch rate). This is the
    right notion for clustering output, where label identity is arbitrary.
    """
    pred_list = list(np.asarray(pred).tolist())
    truth_list = list(np.asarray(truth).tolist())
    if len(pred_list) != len(truth_list):
        raise ValueError(f"length mismatch: {len(pred_list)} vs {len(truth_list)}")
    alphabet = sorted(set(pred_list) | set(truth_list), key=lambda v: (str(type(v)), str(v)))
    if len(alphabet) > 6:
        raise ValueError(f"best_permutation supports at most 6 labels, got {len(alphabet)}")
    best_rate, best_aligned = None, None
    for perm in permutations(alphabet):
        relabel = dict(zip(alphabet, perm))
        aligned = [relabel[p] for p in pred_list]
        rate = sum(a != t for a, t in zip(aligned, truth_list)) / len(truth_list)
        if best_rate is None or rate < best_rate:
            best_rate, best_aligned = rate, aligned
    return np.array(best_aligned), float(best_rate)


def misclassification(pred, truth, align: str = "fixed") -> float:
    """Fraction of mismatched labels, optionally minimised over relabelings."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if align == "fixed":
        return float(np.mean(pred != truth))
    if align != "best_permutation":
        raise ValueError(f"unknown alignment {align!r}")
    return best_permutation_alignment(pred, truth)[1]
