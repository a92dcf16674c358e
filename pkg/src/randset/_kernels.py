"""Inner loops for the negative definite kernels.

The functional kernel sums, over coordinate subsets up to a configured
depth, the Euclidean norm of the difference vector restricted to each
subset. Depths 1..3 have dedicated loops (depth 1 collapses to a sum of
absolute differences); larger depths fall back to explicit subset
enumeration and are only practical for short vectors.

Gram-matrix evaluation is JIT-compiled with numba when available, with a
chunked numpy fallback. Entries are mutually independent, so threading
never changes results.
"""

from __future__ import annotations

import math
import os
from itertools import combinations

import numpy as np

__all__ = [
    "functional_kernel_value",
    "functional_gram",
    "functional_gram_sym",
    "effective_threads",
    "HAVE_NUMBA",
]

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def effective_threads() -> int:
    """Worker cap: RANDSET_THREADS if set, else all available cores."""
    avail = os.cpu_count() or 1
    raw = os.environ.get("RANDSET_THREADS", "")
    if raw.strip():
        try:
            avail = min(avail, max(1, int(raw)))
        except ValueError:
            pass
    return avail


if HAVE_NUMBA:

    @njit(cache=True)
    def _pair_value(x, y, depth):
        n = x.shape[0]
        s = np.empty(n)
        total = 0.0
        for a in range(n):
            d = x[a] - y[a]
            s[a] = d * d
            total += abs(d)
        if depth >= 2:
            for a in range(n):
                sa = s[a]
                for b in range(a + 1, n):
                    total += math.sqrt(sa + s[b])
        if depth >= 3:
            for a in range(n):
                sa = s[a]
                for b in range(a + 1, n):
                    sab = sa + s[b]
                    for c in range(b + 1, n):
                        total += math.sqrt(sab + s[c])
        return total

    @njit(cache=True, parallel=True)
    def _gram_rect(X, Y, depth):
        out = np.empty((X.shape[0], Y.shape[0]))
        for i in prange(X.shape[0]):
            for j in range(Y.shape[0]):
                out[i, j] = _pair_value(X[i], Y[j], depth)
        return out

    @njit(cache=True, parallel=True)
    def _gram_sym(X, depth):
        m = X.shape[0]
        out = np.zeros((m, m))
        for i in prange(m):
            for j in range(i + 1, m):
                v = _pair_value(X[i], X[j], depth)
                out[i, j] = v
                out[j, i] = v
        return out

    def _set_threads():
        try:
            numba.set_num_threads(effective_threads())
        except ValueError:
            pass


def _pair_value_np(x, y, depth):
    d = x - y
    s = d * d
    total = float(np.abs(d).sum())
    if depth >= 2:
        iu, ju = np.triu_indices(len(s), k=1)
        total += float(np.sqrt(s[iu] + s[ju]).sum())
    if depth >= 3:
        idx = np.array(list(combinations(range(len(s)), 3)), dtype=np.intp)
        if len(idx):
            total += float(np.sqrt(s[idx[:, 0]] + s[idx[:, 1]] + s[idx[:, 2]]).sum())
    return total


def _gram_np(X, Y, depth, symmetric):
    m1, m2 = X.shape[0], Y.shape[0]
    out = np.zeros((m1, m2))
    for i in range(m1):
        j0 = i + 1 if symmetric else 0
        for j in range(j0, m2):
            out[i, j] = _pair_value_np(X[i], Y[j], depth)
    if symmetric:
        out = out + out.T
    return out


def functional_kernel_value(f, g, depth: int) -> float:
    """Kernel value for one pair of equal-length vectors, any valid depth."""
    f = np.asarray(f, dtype=float).ravel()
    g = np.asarray(g, dtype=float).ravel()
    if f.shape != g.shape:
        raise ValueError(f"length mismatch: {f.shape[0]} vs {g.shape[0]}")
    n = f.shape[0]
    if not 1 <= depth <= n:
        raise ValueError(f"depth must be in [1, {n}], got {depth}")
    if depth <= 3:
        if HAVE_NUMBA:
            return float(_pair_value(f, g, depth))
        return _pair_value_np(f, g, depth)
    # General depth: explicit enumeration of coordinate subsets.
    s = (f - g) ** 2
    total = _pair_value_np(f, g, 3)
    for m in range(4, depth + 1):
        for idx in combinations(range(n), m):
            total += math.sqrt(s[list(idx)].sum())
    return total


def functional_gram(X: np.ndarray, Y: np.ndarray, depth: int) -> np.ndarray:
    """Kernel values for all row pairs of X (m1, n) and Y (m2, n)."""
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if not 1 <= depth <= 3:
        raise ValueError(f"gram fast path supports depth 1..3, got {depth}")
    if HAVE_NUMBA:
        _set_threads()
        return _gram_rect(X, Y, depth)
    return _gram_np(X, Y, depth, symmetric=False)


def functional_gram_sym(X: np.ndarray, depth: int) -> np.ndarray:
    """Kernel values for all row pairs of X with itself (zero diagonal)."""
    X = np.ascontiguousarray(X, dtype=float)
    if not 1 <= depth <= 3:
        raise ValueError(f"gram fast path supports depth 1..3, got {depth}")
    if HAVE_NUMBA:
        _set_threads()
        return _gram_sym(X, depth)
    return _gram_np(X, X, depth, symmetric=True)
