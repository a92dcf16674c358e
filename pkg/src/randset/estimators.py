"""Estimator-style wrappers so the pipeline composes with scikit-learn.

All distance-consuming estimators treat X as precomputed N-distances, the
same convention as ``metric="precomputed"`` elsewhere in the ecosystem:
``fit`` takes the square training matrix, ``predict`` takes rows of
test-to-training distances.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, ClusterMixin, TransformerMixin

from . import classify
from .features import extract_features
from .ndistance import FeatureMode, SamplingPolicy, pairwise_matrix

__all__ = [
    "RealisationFeaturizer",
    "NDistanceMatrixTransformer",
    "KernelPosteriorKNN",
    "KMedoids",
    "WardClustering",
]


def _check_square(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"expected a square distance matrix, got shape {X.shape}")
    if (X < 0).any():
        raise ValueError("distances must be nonnegative")
    return X


class RealisationFeaturizer(TransformerMixin, BaseEstimator):
    """Stateless transformer: binary rasters to per-component features."""

    def __init__(self, r=5, drop_border_components=False):
        self.r = r
        self.drop_border_components = drop_border_components

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return [
            extract_features(
                raster,
                r=self.r,
                source_id=str(i),
                drop_border_components=self.drop_border_components,
            )
            for i, raster in enumerate(X)
        ]


class NDistanceMatrixTransformer(TransformerMixin, BaseEstimator):
    """Pairwise N-distance matrix over a list of realisation features."""

    def __init__(self, mode="both", count=None, depth=2, seed=0):
        self.mode = mode
        self.count = count
        self.depth = depth
        self.seed = seed

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        mode = FeatureMode.parse(self.mode, depth=self.depth)
        policy = SamplingPolicy(count=self.count, seed=self.seed)
        return pairwise_matrix(list(X), mode, policy).values


class KernelPosteriorKNN(ClassifierMixin, BaseEstimator):
    """Kernel-posterior nearest-neighbour classifier on precomputed distances.

    The neighbour count is selected per training point by leave-one-out
    loss and pooled by lower median unless ``m`` is fixed.
    """

    def __init__(self, m=None, kernel="uniform"):
        self.m = m
        self.kernel = kernel

    def fit(self, X, y):
        X = _check_square(X)
        y = np.asarray(y)
        if len(y) != X.shape[0]:
            raise ValueError("labels must match matrix size")
        self.train_matrix_ = X
        self.train_labels_ = y
        self.classes_ = np.unique(y)
        if self.m is None and len(y) >= 2:
            losses = [classify.select_m(y, X, i0, kernel=self.kernel) for i0 in range(len(y))]
            self.per_point_m_ = np.array(losses)
            self.m_ = classify._lower_median(losses)
        else:
            self.per_point_m_ = None
            self.m_ = self.m if self.m is not None else 1
        return self

    def predict_proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        _, probs, _, _ = self._classify(X)
        return probs

    def _classify(self, X):
        return classify.knn_classify(
            self.train_labels_, self.train_matrix_, X, kernel=self.kernel, m=self.m_
        )

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        preds, _, _, _ = self._classify(X)
        return preds


class KMedoids(ClusterMixin, BaseEstimator):
    """Partition-around-medoids clustering of a precomputed distance matrix."""

    def __init__(self, n_clusters=2, seed=0, max_iter=100):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = _check_square(X)
        labels, medoids = classify.k_medoids(
            X, self.n_clusters, seed=self.seed, max_iter=self.max_iter
        )
        self.labels_ = labels
        self.medoid_indices_ = medoids
        return self


class WardClustering(ClusterMixin, BaseEstimator):
    """Minimum-variance agglomeration of a precomputed distance matrix.

    ``first_merge_average`` switches the very first merge to the plain
    average of the two singleton distances instead of the size-weighted
    square-root update.
    """

    def __init__(self, n_clusters=2, first_merge_average=False):
        self.n_clusters = n_clusters
        self.first_merge_average = first_merge_average

    def fit(self, X, y=None):
        X = _check_square(X)
        self.merges_ = classify.ward_dendrogram(X, first_merge_average=self.first_merge_average)
        self.labels_ = classify.cut_dendrogram(self.merges_, X.shape[0], self.n_clusters)
        return self
