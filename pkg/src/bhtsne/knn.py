"""Exact k-nearest-neighbor search over squared Euclidean distance.

Brute force with a per-query partial selection of the k smallest
distances, parallelized over query points. Distances stay squared end to
end (the affinity kernels consume d^2, never d). Ties on distance are
broken toward the lower point id, which makes the result deterministic
for any thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .io import InputMatrix


@dataclass(frozen=True)
class NeighborGraph:
    """k neighbor ids and squared distances per point, ascending per row."""

    indices: np.ndarray       # (N, k) int64
    sq_distances: np.ndarray  # (N, k), same dtype as the input matrix

    @property
    def n_points(self) -> int:
        return self.indices.shape[0]

    @property
    def k(self) -> int:
        return self.indices.shape[1]


@njit(parallel=True, cache=True)
def _knn_kernel(data, k, out_idx, out_sqd):
    n, d = data.shape
    for i in prange(n):
        best_d = np.full(k, np.inf)
        best_i = np.full(k, -1, np.int64)
        for j in range(n):
            if j == i:
                continue
            acc = 0.0
            for c in range(d):
                diff = np.float64(data[i, c]) - np.float64(data[j, c])
                acc += diff * diff
            if acc < best_d[k - 1]:
                pos = k - 1
                while pos > 0 and acc < best_d[pos - 1]:
                    best_d[pos] = best_d[pos - 1]
                    best_i[pos] = best_i[pos - 1]
                    pos -= 1
                best_d[pos] = acc
                best_i[pos] = j
        for t in range(k):
            out_idx[i, t] = best_i[t]
            out_sqd[i, t] = best_d[t]


def knn_exact(x: InputMatrix, k: int) -> NeighborGraph:
    """Find the k exact nearest neighbors of every point in ``x``.

    Requires ``1 <= k <= N - 1``; a point is never its own neighbor.
    """
    n = x.n_points
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    out_idx = np.empty((n, k), dtype=np.int64)
    out_sqd = np.empty((n, k), dtype=x.data.dtype)
    _knn_kernel(np.ascontiguousarray(x.data), k, out_idx, out_sqd)
    return NeighborGraph(indices=out_idx, sq_distances=out_sqd)
