"""Attractive and repulsive force accumulation for the embedding.

Attraction walks each CSR row of the sparse similarity matrix,
accumulating p_ij * (1 + |y_i - y_j|^2)^-1 * (y_i - y_j). Repulsion runs
a per-point depth-first traversal of the summarized quadtree: a cell far
and small enough (cell side / distance to its center-of-mass < theta,
compared squared to avoid square roots) contributes its center-of-mass
summary, otherwise its children are visited; leaves contribute their
points directly, skipping the point itself. Both passes are data-parallel over points with disjoint
writes, and the normalization term Z is reduced from per-point partials
in a fixed order, so results do not depend on the thread count.

An exact O(N^2) repulsion pass is included as the test oracle for the
Barnes-Hut approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .affinity import SparseAffinity
from .quadtree import MortonQuadtree, _split_xy

_STACK_CAP = 160  # DFS needs at most 3 * MAX_DEPTH + 1 slots


@dataclass
class GradientBuffers:
    """Per-point force accumulators and the normalization term."""

    attr0: np.ndarray      # (N,) attractive force, dim 0
    attr1: np.ndarray
    rep0: np.ndarray       # (N,) unnormalized repulsive force, dim 0
    rep1: np.ndarray
    z_partial: np.ndarray  # (N,) f64 per-point contributions to Z
    z: float = 0.0

    @classmethod
    def allocate(cls, n: int, dtype=np.float64) -> "GradientBuffers":
        return cls(attr0=np.zeros(n, dtype), attr1=np.zeros(n, dtype),
                   rep0=np.zeros(n, dtype), rep1=np.zeros(n, dtype),
                   z_partial=np.zeros(n, np.float64))

    @property
    def attr(self) -> np.ndarray:
        return np.column_stack((self.attr0, self.attr1))

    @property
    def rep(self) -> np.ndarray:
        return np.column_stack((self.rep0, self.rep1))


@njit(parallel=True, cache=True)
def _attractive_kernel(row_offsets, col_indices, values, y0, y1,
                       attr0, attr1):
    for i in prange(row_offsets.shape[0] - 1):
        yi0 = np.float64(y0[i])
        yi1 = np.float64(y1[i])
        a0 = 0.0
        a1 = 0.0
        for t in range(row_offsets[i], row_offsets[i + 1]):
            j = col_indices[t]
            dx = yi0 - np.float64(y0[j])
            dy = yi1 - np.float64(y1[j])
            pq = np.float64(values[t]) / (1.0 + dx * dx + dy * dy)
            a0 += pq * dx
            a1 += pq * dy
        attr0[i] = a0
        attr1[i] = a1


def attractive(p: SparseAffinity, y, out: GradientBuffers) -> None:
    """Accumulate attractive forces over the nonzeros of ``p`` into ``out``."""
    y0, y1 = _split_xy(y)
    if p.n != y0.shape[0]:
        raise ValueError(f"matrix is over {p.n} points, embedding has "
                         f"{y0.shape[0]}")
    _attractive_kernel(p.row_offsets, p.col_indices, p.values, y0, y1,
                       out.attr0, out.attr1)


@njit(parallel=True, cache=True)
def _repulsive_bh_kernel(children, is_leaf, start, end, radius, mass, com,
                         order, ys0, ys1, y0, y1, theta2, rep0, rep1,
                         z_partial):
    for i in prange(y0.shape[0]):
        yi0 = np.float64(y0[i])
        yi1 = np.float64(y1[i])
        r0 = 0.0
        r1 = 0.0
        z = 0.0
        stack = np.empty(_STACK_CAP, np.int64)
        stack[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if is_leaf[node]:
                for t in range(start[node], end[node]):
                    if order[t] == i:
                        continue
                    dx = yi0 - np.float64(ys0[t])
                    dy = yi1 - np.float64(ys1[t])
                    k = 1.0 / (1.0 + dx * dx + dy * dy)
                    z += k
                    r0 += k * k * dx
                    r1 += k * k * dy
            else:
                dx = yi0 - np.float64(com[node, 0])
                dy = yi1 - np.float64(com[node, 1])
                d2 = dx * dx + dy * dy
                side = 2.0 * radius[node]
                if side * side < theta2 * d2:
                    k = 1.0 / (1.0 + d2)
                    mk = mass[node] * k
                    z += mk
                    mk2 = mk * k
                    r0 += mk2 * dx
                    r1 += mk2 * dy
                else:
                    for v in range(3, -1, -1):
                        ch = children[node, v]
                        if ch >= 0:
                            stack[sp] = ch
                            sp += 1
        rep0[i] = r0
        rep1[i] = r1
        z_partial[i] = z


def repulsive_bh(t: MortonQuadtree, y, theta: float,
                 out: GradientBuffers) -> None:
    """Barnes-Hut repulsion over the summarized tree, writing into ``out``.

    Fills the per-point accumulators and ``out.z`` (reduced sequentially
    from the partials).
    """
    if not t.summarized:
        raise ValueError("tree must be summarized before computing repulsion")
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    y0, y1 = _split_xy(y)
    _repulsive_bh_kernel(t.children, t.is_leaf, t.start, t.end,
                         t.cell_radius, t.mass, t.com, t.order, t.ys0, t.ys1,
                         y0, y1, float(theta) ** 2,
                         out.rep0, out.rep1, out.z_partial)
    out.z = float(np.sum(out.z_partial))


@njit(parallel=True, cache=True)
def _repulsive_exact_kernel(y0, y1, rep0, rep1, z_partial):
    n = y0.shape[0]
    for i in prange(n):
        yi0 = np.float64(y0[i])
        yi1 = np.float64(y1[i])
        r0 = 0.0
        r1 = 0.0
        z = 0.0
        for j in range(n):
            if j == i:
                continue
            dx = yi0 - np.float64(y0[j])
            dy = yi1 - np.float64(y1[j])
            k = 1.0 / (1.0 + dx * dx + dy * dy)
            z += k
            r0 += k * k * dx
            r1 += k * k * dy
        rep0[i] = r0
        rep1[i] = r1
        z_partial[i] = z


def repulsive_exact(y, out: GradientBuffers) -> None:
    """Direct O(N^2) repulsion over all pairs; the Barnes-Hut oracle."""
    y0, y1 = _split_xy(y)
    if y0.shape[0] < 2:
        raise ValueError("need at least 2 points")
    _repulsive_exact_kernel(y0, y1, out.rep0, out.rep1, out.z_partial)
    out.z = float(np.sum(out.z_partial))
