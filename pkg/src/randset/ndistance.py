"""Empirical N-distance between realisations and pairwise distance matrices.

The N-distance of two component samples is the V-statistic

    2/(m1*m2) * sum L(x_i, y_j) - 1/m1^2 * sum L(x_i, x_j)
                                - 1/m2^2 * sum L(y_i, y_j)

with a negative definite kernel L: the absolute difference for scalar
points and the subset-norm functional kernel for vector points. Diagonal
terms are included as written (they contribute zero for both kernels).

Feature modes: "ratio" compares scalar perimeter/area ratios, "curvature"
compares curvature histograms, "both" appends the ratio to the histogram
as one extra coordinate, and "combined" mixes the first two distances
convexly with weight alpha.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import functional_gram, functional_gram_sym, functional_kernel_value
from .features import RealisationFeatures

__all__ = [
    "FeatureMode",
    "SamplingPolicy",
    "DistanceMatrix",
    "ScalarKernel",
    "FunctionalKernel",
    "kernel_scalar",
    "kernel_functional",
    "n_distance",
    "realisation_distance",
    "pairwise_matrix",
    "save_matrix_csv",
    "load_matrix_csv",
]

_MODES = ("ratio", "curvature", "both", "combined")


@dataclass(frozen=True)
class FeatureMode:
    """Which per-component points feed the distance, plus kernel depth."""

    kind: str
    depth: int = 2
    alpha: float = 0.5  # weight of the ratio distance in "combined"

    def __post_init__(self):
        if self.kind not in _MODES:
            raise ValueError(f"unknown mode {self.kind!r}, expected one of {_MODES}")
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")

    def spec_string(self) -> str:
        if self.kind == "combined":
            return f"combined:{self.alpha}"
        return self.kind

    @classmethod
    def parse(cls, text: str, depth: int = 2) -> "FeatureMode":
        text = text.strip().lower()
        if text.startswith("combined:"):
            return cls(kind="combined", depth=depth, alpha=float(text.split(":", 1)[1]))
        if text == "combined":
            return cls(kind="combined", depth=depth)
        return cls(kind=text, depth=depth)


@dataclass(frozen=True)
class SamplingPolicy:
    """How many components to subsample per realisation; None means all."""

    count: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.count is not None and self.count < 1:
            raise ValueError(f"count must be >= 1 or None, got {self.count}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")

    def count_string(self) -> str:
        return "all" if self.count is None else str(self.count)

    @classmethod
    def parse_count(cls, text: str) -> int | None:
        text = str(text).strip().lower()
        return None if text == "all" else int(text)


class ScalarKernel:
    """Absolute difference of scalar points."""

    def __call__(self, x, y) -> float:
        return abs(float(x) - float(y))

    def gram(self, X, Y):
        X = np.asarray(X, dtype=float).ravel()
        Y = np.asarray(Y, dtype=float).ravel()
        return np.abs(X[:, None] - Y[None, :])

    def gram_sym(self, X):
        return self.gram(X, X)


class FunctionalKernel:
    """Subset-norm kernel over equal-length vectors, truncated at ``depth``."""

    def __init__(self, depth: int = 2):
        if depth < 1:
            raise ValueError(f"depth must be >= 1, got {depth}")
        self.depth = depth

    def __call__(self, f, g) -> float:
        return functional_kernel_value(f, g, self.depth)

    def gram(self, X, Y):
        X, Y = np.atleast_2d(np.asarray(X, float)), np.atleast_2d(np.asarray(Y, float))
        return functional_gram(X, Y, self.depth)

    def gram_sym(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        return functional_gram_sym(X, self.depth)


def kernel_scalar(x: float, y: float) -> float:
    """Negative definite kernel for scalar observations: |x - y|."""
    return abs(float(x) - float(y))


def kernel_functional(f, g, depth: int) -> float:
    """Functional kernel: sum over coordinate subsets of size 1..depth of
    the Euclidean norm of the restricted difference vector."""
    return functional_kernel_value(f, g, depth)


_NEGATIVE_TOL = 1e-9


def _gram_all(xs, ys, kernel):
    if hasattr(kernel, "gram"):
        return kernel.gram(xs, ys), kernel.gram_sym(xs), kernel.gram_sym(ys)
    # Plain callable: quadratic loops, used by small samples and oracles.
    m1, m2 = len(xs), len(ys)
    l_xy = np.array([[kernel(xs[i], ys[j]) for j in range(m2)] for i in range(m1)])
    l_xx = np.array([[kernel(xs[i], xs[j]) for j in range(m1)] for i in range(m1)])
    l_yy = np.array([[kernel(ys[i], ys[j]) for j in range(m2)] for i in range(m2)])
    return l_xy, l_xx, l_yy


def _canonical_key(a: np.ndarray):
    return (a.shape, a.tobytes())


def n_distance(xs, ys, kernel) -> float:
    """Empirical N-distance of two nonempty point samples under ``kernel``.

    Tiny negatives from floating error are clamped to zero; anything below
    -1e-9 signals a broken kernel and raises. The two samples are ordered
    canonically before evaluation, so swapping the arguments returns the
    bitwise-identical value.
    """
    xs = np.ascontiguousarray(xs, dtype=float)
    ys = np.ascontiguousarray(ys, dtype=float)
    if xs.size == 0 or ys.size == 0:
        raise ValueError("samples must be nonempty")
    if _canonical_key(ys) < _canonical_key(xs):
        xs, ys = ys, xs
    l_xy, l_xx, l_yy = _gram_all(xs, ys, kernel)
    value = 2.0 * l_xy.mean() - l_xx.mean() - l_yy.mean()
    if value < -_NEGATIVE_TOL:
        raise RuntimeError(
            f"N-distance {value} is negative beyond floating tolerance; kernel is not negative definite"
        )
    return max(value, 0.0)


def _mode_points(rf: RealisationFeatures, idx: np.ndarray, mode: FeatureMode) -> np.ndarray:
    if mode.kind == "ratio":
        return rf.pa_values()[idx]
    hists = rf.hist_matrix()[idx]
    if mode.kind == "curvature":
        return hists
    # "both": the ratio becomes one extra point of the curvature histogram.
    return np.column_stack([hists, rf.pa_values()[idx]])


def _sample_indices(size: int, take: int, rng: np.random.Generator) -> np.ndarray:
    if take >= size:
        return np.arange(size)
    return rng.choice(size, size=take, replace=False)


def realisation_distance(
    a: RealisationFeatures,
    b: RealisationFeatures,
    mode: FeatureMode,
    policy: SamplingPolicy,
    rng: np.random.Generator | None = None,
) -> float:
    """N-distance between two realisations under a feature mode.

    Each realisation contributes min(count, |a|, |b|) components sampled
    without replacement ("all" takes min(|a|, |b|), downsampling only the
    larger side). A count exceeding both sizes is clamped with a warning.
    """
    if a.radius != b.radius:
        raise ValueError(f"disc radius mismatch: {a.radius} vs {b.radius}")
    na, nb = a.n_components, b.n_components
    if policy.count is not None and policy.count > na and policy.count > nb:
        warnings.warn(
            f"component count {policy.count} exceeds both realisations "
            f"({na}, {nb}); clamping to all",
            stacklevel=2,
        )
    take = min(na, nb) if policy.count is None else min(policy.count, na, nb)
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(policy.seed))
    idx_a = _sample_indices(na, take, rng)
    idx_b = _sample_indices(nb, take, rng)

    if mode.kind == "combined":
        d_ratio = n_distance(a.pa_values()[idx_a], b.pa_values()[idx_b], ScalarKernel())
        kern = FunctionalKernel(_checked_depth(mode, a.hist_length))
        d_curv = n_distance(a.hist_matrix()[idx_a], b.hist_matrix()[idx_b], kern)
        return mode.alpha * d_ratio + (1.0 - mode.alpha) * d_curv
    if mode.kind == "ratio":
        kernel = ScalarKernel()
    else:
        dim = a.hist_length + (1 if mode.kind == "both" else 0)
        kernel = FunctionalKernel(_checked_depth(mode, dim))
    return n_distance(_mode_points(a, idx_a, mode), _mode_points(b, idx_b, mode), kernel)


def _checked_depth(mode: FeatureMode, dim: int) -> int:
    if mode.depth > dim:
        raise ValueError(f"depth {mode.depth} exceeds feature vector length {dim}")
    return mode.depth


@dataclass(eq=False)
class DistanceMatrix:
    """Symmetric nonnegative realisation-distance matrix with provenance."""

    values: np.ndarray
    ids: list[str]
    mode: FeatureMode
    policy: SamplingPolicy
    r: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        n = len(self.ids)
        if v.shape != (n, n):
            raise ValueError(f"matrix shape {v.shape} does not match {n} ids")
        self.values = v

    @property
    def n(self) -> int:
        return len(self.ids)


def pairwise_matrix(
    realisations: list[RealisationFeatures],
    mode: FeatureMode,
    policy: SamplingPolicy,
) -> DistanceMatrix:
    """All pairwise realisation distances, symmetric by construction.

    Each (i, j) cell is computed once with its own generator seeded from
    (policy.seed, i, j), so the matrix is reproducible regardless of
    evaluation order.
    """
    if not realisations:
        raise ValueError("need at least one realisation")
    radii = {rf.radius for rf in realisations}
    if len(radii) != 1:
        raise ValueError(f"realisations disagree on disc radius: {sorted(radii)}")
    n = len(realisations)
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            rng = np.random.default_rng(np.random.SeedSequence((policy.seed, i, j)))
            d = realisation_distance(realisations[i], realisations[j], mode, policy, rng=rng)
            values[i, j] = d
            values[j, i] = d
    return DistanceMatrix(
        values=values,
        ids=[rf.source_id for rf in realisations],
        mode=mode,
        policy=policy,
        r=realisations[0].radius,
    )


def save_matrix_csv(path, dm: DistanceMatrix) -> None:
    """Write the matrix as CSV plus a metadata sidecar JSON."""
    path = Path(path)
    lines = ["id," + ",".join(dm.ids)]
    for i, row_id in enumerate(dm.ids):
        lines.append(row_id + "," + ",".join(repr(float(v)) for v in dm.values[i]))
    path.write_text("\n".join(lines) + "\n")
    meta = {
        "mode": dm.mode.spec_string(),
        "D": dm.mode.depth,
        "count": dm.policy.count_string(),
        "seed": dm.policy.seed,
        "r": dm.r,
    }
    _sidecar_path(path).write_text(json.dumps(meta, indent=1) + "\n")


def _sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".meta.json")


def load_matrix_csv(path) -> DistanceMatrix:
    """Read a matrix CSV written by :func:`save_matrix_csv`."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("id,"):
        raise ValueError(f"{path}: not a distance matrix CSV")
    ids = lines[0].split(",")[1:]
    n = len(ids)
    values = np.zeros((n, n))
    for i, line in enumerate(lines[1 : n + 1]):
        parts = line.split(",")
        if len(parts) != n + 1:
            raise ValueError(f"{path}: row {i} has {len(parts) - 1} values, expected {n}")
        values[i] = [float(p) for p in parts[1:]]
    meta_path = _sidecar_path(path)
    if not meta_path.exists():
        raise FileNotFoundError(f"metadata sidecar {meta_path} not found")
    meta = json.loads(meta_path.read_text())
    mode = FeatureMode.parse(meta["mode"], depth=int(meta["D"]))
    policy = SamplingPolicy(count=SamplingPolicy.parse_count(meta["count"]), seed=int(meta["seed"]))
    return DistanceMatrix(values=values, ids=ids, mode=mode, policy=policy, r=int(meta["r"]))
