"""Perplexity calibration and the sparse symmetric similarity matrix.

For each point i a Gaussian bandwidth is found by bisection over
beta_i = 1/(2 sigma_i^2) so that the perplexity 2^H of the conditional
neighbor distribution

    p_{j|i} = exp(-beta_i d_ij^2) / sum_{l in N_i} exp(-beta_i d_il^2)

matches the requested value, H being the Shannon entropy in bits. The
conditionals are then symmetrized, p_ij = (p_{j|i} + p_{i|j}) / 2N, into
a CSR matrix whose structure is the symmetric closure of the KNN graph.

Calibration is embarrassingly parallel across rows. Symmetrization is a
deterministic sort-and-merge, so the CSR structure and values are
independent of thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from .knn import NeighborGraph

DEFAULT_MAX_ITER = 200
DEFAULT_TOL_BITS = 1e-5


@dataclass(frozen=True)
class PerplexityResult:
    """Calibrated precisions and conditional probabilities per row."""

    betas: np.ndarray        # (N,) f64, 1/(2 sigma_i^2)
    conditional: np.ndarray  # (N, k) f64, rows sum to 1, aligned with indices


@dataclass(frozen=True)
class SparseAffinity:
    """Symmetric p_ij in CSR form; values sum to the exaggeration factor."""

    n: int
    row_offsets: np.ndarray  # (N+1,) int64
    col_indices: np.ndarray  # (nnz,) int64
    values: np.ndarray       # (nnz,) run dtype, currently applied scale
    exaggeration: float = 1.0
    # pristine (exaggeration == 1) values, kept so rescaling is exact
    _base_values: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self._base_values is None:
            object.__setattr__(self, "_base_values", self.values)

    @property
    def nnz(self) -> int:
        return self.col_indices.shape[0]


@njit(parallel=True, cache=True)
def _calibrate_kernel(sqd, ln_u, tol_nats, max_iter, cond, betas):
    n, k = sqd.shape
    for i in prange(n):
        dmax = np.float64(sqd[i, k - 1])
        if dmax <= 0.0:
            # duplicate points: the kernel is 0/0, fall back to uniform
            for j in range(k):
                cond[i, j] = 1.0 / k
            betas[i] = 1.0
            continue
        dmin = np.float64(sqd[i, 0])
        beta = 1.0
        lo = 0.0
        hi = np.inf
        s = 0.0
        for _ in range(max_iter):
            s = 0.0
            t = 0.0
            for j in range(k):
                delta = np.float64(sqd[i, j]) - dmin
                e = math.exp(-beta * delta)
                s += e
                t += e * delta
            entropy = math.log(s) + beta * t / s  # nats
            if abs(entropy - ln_u) <= tol_nats:
                break
            if entropy > ln_u:
                lo = beta
                beta = beta * 2.0 if hi == np.inf else 0.5 * (lo + hi)
            else:
                hi = beta
                beta = 0.5 * (lo + hi)
        for j in range(k):
            cond[i, j] = math.exp(-beta * (np.float64(sqd[i, j]) - dmin)) / s
        betas[i] = beta


def calibrate_perplexity(g: NeighborGraph, u: float,
                         max_iter: int = DEFAULT_MAX_ITER,
                         tol: float = DEFAULT_TOL_BITS) -> PerplexityResult:
    """Bisect each row's beta until 2^H is within ``2^±tol`` of ``u``.

    ``tol`` is measured in bits of entropy. Requires ``1 < u <= k``.
    """
    k = g.k
    if u > k:
        raise ValueError(
            f"perplexity exceeds neighborhood size (u={u}, k={k})")
    if u <= 1:
        raise ValueError(f"perplexity must be > 1, got {u}")
    if tol <= 0:
        raise ValueError(f"tolerance must be > 0, got {tol}")
    cond = np.empty((g.n_points, k), dtype=np.float64)
    betas = np.empty(g.n_points, dtype=np.float64)
    _calibrate_kernel(np.ascontiguousarray(g.sq_distances),
                      math.log(u), tol * math.log(2.0), max_iter, cond, betas)
    return PerplexityResult(betas=betas, conditional=cond)


def symmetrize(pr: PerplexityResult, g: NeighborGraph,
               dtype=np.float64) -> SparseAffinity:
    """Build the CSR matrix of p_ij = (p_{j|i} + p_{i|j}) / 2N.

    The structure is the symmetric closure of the directed KNN graph; a
    direction missing from the graph contributes 0. Both of a pair's
    entries are produced from the same sum, so the matrix is bitwise
    symmetric, and the values sum to 1.
    """
    n, k = g.indices.shape
    if pr.conditional.shape != (n, k):
        raise ValueError("perplexity result does not match neighbor graph")
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    cols = g.indices.ravel().astype(np.int64)
    vals = pr.conditional.ravel()

    ri = np.concatenate([rows, cols])
    ci = np.concatenate([cols, rows])
    vi = np.concatenate([vals, vals])
    order = np.lexsort((ci, ri))
    ri, ci, vi = ri[order], ci[order], vi[order]

    first = np.ones(ri.shape[0], dtype=bool)
    first[1:] = (ri[1:] != ri[:-1]) | (ci[1:] != ci[:-1])
    starts = np.flatnonzero(first)
    # each (i, j) appears at most twice (one per direction); reduceat sums them
    summed = np.add.reduceat(vi, starts)
    # conditionals of far neighbors can underflow to 0; keep values positive
    values = np.maximum(summed / (2.0 * n),
                        np.finfo(np.float64).eps).astype(dtype)

    out_rows = ri[starts]
    out_cols = ci[starts]
    row_offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(out_rows, minlength=n), out=row_offsets[1:])
    return SparseAffinity(n=n, row_offsets=row_offsets,
                          col_indices=out_cols.copy(), values=values,
                          exaggeration=1.0)


def set_exaggeration(p: SparseAffinity, factor: float) -> SparseAffinity:
    """Rescale the matrix so its values sum to ``factor``.

    Scaling always restarts from the pristine (sum = 1) values, so
    returning to ``factor = 1`` restores them bitwise.
    """
    if factor <= 0:
        raise ValueError(f"exaggeration factor must be > 0, got {factor}")
    base = p._base_values
    values = base if factor == 1.0 else (base * p.values.dtype.type(factor))
    return SparseAffinity(n=p.n, row_offsets=p.row_offsets,
                          col_indices=p.col_indices, values=values,
                          exaggeration=float(factor), _base_values=base)
