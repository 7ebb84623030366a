"""Morton-code quadtrees over 2-D embedding points.

Every gradient iteration rebuilds the tree from scratch:

1. bounds of the point cloud give a square root cell (center, half-extent
   ``r_span``),
2. each point is scaled into ``[0, 2^32)`` per dimension and its two
   32-bit integer coordinates are bit-interleaved into a 64-bit Morton
   code,
3. codes are sorted with a stable parallel LSD radix sort, after which
   every tree cell is a contiguous range of the sorted order,
4. the tree is built by splitting ranges on 2-bit Morton digits: a short
   sequential breadth-first phase fans out until a level holds enough
   nodes, then whole subtrees are built in parallel into pre-counted,
   level-contiguous regions (count pass, prefix, fill pass),
5. summarization walks levels bottom-up, computing each cell's mass and
   center-of-mass from its children, all nodes of one level in parallel.

The resulting arrays are a pure function of the sorted codes, byte
identical for any thread count.

A cell's ``radius`` is half its side length; the root's radius is
``r_span`` and each level halves it. A node is a leaf iff it holds a
single point or sits at the maximum depth of 32 (where coincident and
Morton-indistinguishable points aggregate, so a leaf's mass may exceed 1
there).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
from numba import njit, prange

MAX_DEPTH = 32
_FANOUT_CAP_DEPTH = 8
_RADIX_CHUNKS = 64

_M32 = np.uint64(0x00000000FFFFFFFF)
_M16 = np.uint64(0x0000FFFF0000FFFF)
_M8 = np.uint64(0x00FF00FF00FF00FF)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_M2 = np.uint64(0x3333333333333333)
_M1 = np.uint64(0x5555555555555555)
_S16 = np.uint64(16)
_S8 = np.uint64(8)
_S4 = np.uint64(4)
_S2 = np.uint64(2)
_S1 = np.uint64(1)
_SCALE = float(2 ** 31)


@dataclass(frozen=True)
class MortonCodes:
    """64-bit codes plus the permutation sorting points into Z-order."""

    codes: np.ndarray         # (N,) uint64
    order: np.ndarray         # (N,) int64, stable sort of ids by code
    center: tuple             # (cent0, cent1) of the bounding square
    r_span: float             # half-extent of the bounding square
    sorted_codes: np.ndarray = field(repr=False, default=None)  # codes[order]


@dataclass
class MortonQuadtree:
    """Level-contiguous node arrays; children live in the next level block."""

    n_points: int
    level_offsets: np.ndarray  # (L+1,) int64; level l occupies [off[l], off[l+1])
    start: np.ndarray          # (M,) int64 into the sorted order
    end: np.ndarray            # (M,) int64
    children: np.ndarray       # (M, 4) int64 refs in Z-order, -1 = empty quadrant
    is_leaf: np.ndarray        # (M,) uint8
    cell_center: np.ndarray    # (M, 2) f64
    cell_radius: np.ndarray    # (M,) f64, half the cell side
    mass: np.ndarray           # (M,) int64, filled by summarize
    com: np.ndarray            # (M, 2) point dtype, filled by summarize
    order: np.ndarray          # (N,) int64, Z-order permutation of point ids
    ys0: np.ndarray            # (N,) point coords gathered into Z-order
    ys1: np.ndarray
    center: tuple
    r_span: float
    summarized: bool = False

    @property
    def n_nodes(self) -> int:
        return self.start.shape[0]

    @property
    def n_levels(self) -> int:
        return self.level_offsets.shape[0] - 1

    def depths(self) -> np.ndarray:
        """Per-node depth derived from the level layout."""
        sizes = np.diff(self.level_offsets)
        return np.repeat(np.arange(self.n_levels, dtype=np.int64), sizes)

    def node_prefix(self, node: int, sorted_codes: np.ndarray,
                    depth: int) -> str:
        if depth == 0:
            return "-"
        code = int(sorted_codes[self.start[node]])
        return format(code >> (64 - 2 * depth), f"0{2 * depth}b")

    def dump(self, sorted_codes: np.ndarray) -> str:
        """Textual dump (depth, prefix bits, point count, com) per node."""
        if not self.summarized:
            raise ValueError("tree must be summarized before dumping")
        depths = self.depths()
        lines = []
        for n in range(self.n_nodes):
            d = int(depths[n])
            lines.append("{} {} {} {:.12g} {:.12g}".format(
                d, self.node_prefix(n, sorted_codes, d),
                int(self.end[n] - self.start[n]),
                float(self.com[n, 0]), float(self.com[n, 1])))
        return "\n".join(lines)


def _split_xy(y):
    """Accept an (N, 2) array or an (y0, y1) pair; return contiguous columns."""
    if isinstance(y, tuple):
        y0, y1 = y
        return np.ascontiguousarray(y0), np.ascontiguousarray(y1)
    y = np.asarray(y)
    if y.ndim != 2 or y.shape[1] != 2:
        raise ValueError(f"expected (N, 2) points, got shape {y.shape}")
    return np.ascontiguousarray(y[:, 0]), np.ascontiguousarray(y[:, 1])


def compute_bounds(y) -> tuple:
    """Bounding square of the points: (center, r_span).

    ``r_span`` is the largest per-dimension half-extent, inflated so every
    point scales strictly inside ``[0, 2^32)``; a degenerate (single or
    repeated point) cloud gets a small positive floor.
    """
    y0, y1 = _split_xy(y)
    if y0.shape[0] < 1:
        raise ValueError("need at least one point")
    if not (np.isfinite(y0).all() and np.isfinite(y1).all()):
        raise ValueError("non-finite coordinate in embedding points")
    mn0, mx0 = float(y0.min()), float(y0.max())
    mn1, mx1 = float(y1.min()), float(y1.max())
    c0 = 0.5 * (mn0 + mx0)
    c1 = 0.5 * (mn1 + mx1)
    half = max(mx0 - c0, mx1 - c1)
    if half <= 0.0:
        half = 1e-9 * max(1.0, abs(c0), abs(c1))
    r_span = half * (1.0 + 1e-12)
    return (c0, c1), float(r_span)


@njit(inline="always")
def _spread_bits(m):
    m = m & _M32
    m = (m | (m << _S16)) & _M16
    m = (m | (m << _S8)) & _M8
    m = (m | (m << _S4)) & _M4
    m = (m | (m << _S2)) & _M2
    m = (m | (m << _S1)) & _M1
    return m


@njit(cache=True)
def _interleave(m0, m1):
    return _spread_bits(m0) | (_spread_bits(m1) << _S1)


def morton_interleave(d0: int, d1: int) -> int:
    """Bit-interleave two integer coordinates (d0 -> even bits, d1 -> odd)."""
    return int(_interleave(np.uint64(d0), np.uint64(d1)))


@njit(parallel=True, cache=True)
def _morton_kernel(y0, y1, c0, c1, r_span, codes):
    scale = _SCALE / r_span
    root0 = c0 - r_span
    root1 = c1 - r_span
    for i in prange(y0.shape[0]):
        m0 = np.uint64((np.float64(y0[i]) - root0) * scale)
        m1 = np.uint64((np.float64(y1[i]) - root1) * scale)
        codes[i] = _interleave(m0, m1)


@njit(parallel=True, cache=True)
def _radix_argsort(codes, out_order, out_sorted):
    n = codes.shape[0]
    nchunks = _RADIX_CHUNKS if n >= _RADIX_CHUNKS else n
    keys_a = codes.copy()
    ord_a = np.arange(n)
    keys_b = np.empty_like(keys_a)
    ord_b = np.empty_like(ord_a)
    hist = np.empty((nchunks, 256), np.int64)
    offsets = np.empty((nchunks, 256), np.int64)
    mask = np.uint64(0xFF)
    for p in range(8):
        shift = np.uint64(8 * p)
        for c in prange(nchunks):
            for d in range(256):
                hist[c, d] = 0
            lo = c * n // nchunks
            hi = (c + 1) * n // nchunks
            for t in range(lo, hi):
                hist[c, np.int64((keys_a[t] >> shift) & mask)] += 1
        base = 0
        for d in range(256):
            for c in range(nchunks):
                offsets[c, d] = base
                base += hist[c, d]
        for c in prange(nchunks):
            local = offsets[c].copy()
            lo = c * n // nchunks
            hi = (c + 1) * n // nchunks
            for t in range(lo, hi):
                d = np.int64((keys_a[t] >> shift) & mask)
                pos = local[d]
                local[d] += 1
                keys_b[pos] = keys_a[t]
                ord_b[pos] = ord_a[t]
        keys_a, keys_b = keys_b, keys_a
        ord_a, ord_b = ord_b, ord_a
    for i in prange(n):
        out_order[i] = ord_a[i]
        out_sorted[i] = keys_a[i]


def morton_codes(y, center, r_span: float) -> MortonCodes:
    """Compute 64-bit Morton codes and their stable Z-order permutation."""
    y0, y1 = _split_xy(y)
    n = y0.shape[0]
    codes = np.empty(n, dtype=np.uint64)
    _morton_kernel(y0, y1, float(center[0]), float(center[1]), float(r_span),
                   codes)
    order = np.empty(n, dtype=np.int64)
    sorted_codes = np.empty(n, dtype=np.uint64)
    _radix_argsort(codes, order, sorted_codes)
    return MortonCodes(codes=codes, order=order,
                       center=(float(center[0]), float(center[1])),
                       r_span=float(r_span), sorted_codes=sorted_codes)


@njit(inline="always")
def _digit(code, depth):
    return np.int64((code >> np.uint64(62 - 2 * depth)) & np.uint64(3))


@njit(inline="always")
def _digit_upper_bound(sc, lo, hi, depth, v):
    # first index in [lo, hi) whose 2-bit digit at this depth exceeds v
    while lo < hi:
        mid = (lo + hi) >> 1
        if _digit(sc[mid], depth) <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def _build_top(sc, c0, c1, r_span, fanout, cap_depth,
               a_start, a_end, a_children, a_is_leaf, a_center, a_radius,
               a_level_off):
    n = sc.shape[0]
    a_start[0] = 0
    a_end[0] = n
    a_center[0, 0] = c0
    a_center[0, 1] = c1
    a_radius[0] = r_span
    a_level_off[0] = 0
    a_level_off[1] = 1
    depth = 0
    lo, hi = 0, 1
    while True:
        splittable = 0
        for t in range(lo, hi):
            if a_end[t] - a_start[t] > 1 and depth < MAX_DEPTH:
                splittable += 1
        if splittable == 0:
            for t in range(lo, hi):
                a_is_leaf[t] = 1
            return depth, hi, lo, hi, False
        if hi - lo >= fanout or depth >= cap_depth:
            for t in range(lo, hi):
                if a_end[t] - a_start[t] == 1 or depth == MAX_DEPTH:
                    a_is_leaf[t] = 1
            return depth, hi, lo, hi, True
        w = hi
        for t in range(lo, hi):
            if a_end[t] - a_start[t] == 1:
                a_is_leaf[t] = 1
                continue
            half = a_radius[t] * 0.5
            prev = a_start[t]
            for v in range(4):
                e = _digit_upper_bound(sc, prev, a_end[t], depth, v)
                if e > prev:
                    a_start[w] = prev
                    a_end[w] = e
                    a_children[t, v] = w
                    a_center[w, 0] = a_center[t, 0] + (half if v & 1 else -half)
                    a_center[w, 1] = a_center[t, 1] + (half if v & 2 else -half)
                    a_radius[w] = half
                    w += 1
                prev = e
        depth += 1
        lo, hi = hi, w
        a_level_off[depth + 1] = w


@njit(parallel=True, cache=True)
def _count_subtrees(sc, f_start, f_end, f_split, f_depth, counts):
    for fi in prange(f_start.shape[0]):
        if not f_split[fi]:
            continue
        cap = f_end[fi] - f_start[fi]
        cur = np.empty((cap, 2), np.int64)
        nxt = np.empty((cap, 2), np.int64)
        cur[0, 0] = f_start[fi]
        cur[0, 1] = f_end[fi]
        ncur = 1
        depth = f_depth
        while ncur > 0 and depth < MAX_DEPTH:
            nn = 0
            rel = depth - f_depth
            for t in range(ncur):
                prev = cur[t, 0]
                e = cur[t, 1]
                for v in range(4):
                    ce = _digit_upper_bound(sc, prev, e, depth, v)
                    if ce > prev:
                        counts[fi, rel] += 1
                        if ce - prev > 1 and depth + 1 < MAX_DEPTH:
                            nxt[nn, 0] = prev
                            nxt[nn, 1] = ce
                            nn += 1
                    prev = ce
            tmp = cur
            cur = nxt
            nxt = tmp
            ncur = nn
            depth += 1


@njit(parallel=True, cache=True)
def _fill_subtrees(sc, f_node, f_split, f_depth, slot_base,
                   start, end, children, is_leaf, center, radius):
    for fi in prange(f_node.shape[0]):
        if not f_split[fi]:
            continue
        root = f_node[fi]
        cap = end[root] - start[root]
        cur = np.empty((cap, 3), np.int64)
        nxt = np.empty((cap, 3), np.int64)
        cursor = slot_base[fi].copy()
        cur[0, 0] = start[root]
        cur[0, 1] = end[root]
        cur[0, 2] = root
        ncur = 1
        depth = f_depth
        while ncur > 0 and depth < MAX_DEPTH:
            nn = 0
            rel = depth - f_depth
            for t in range(ncur):
                prev = cur[t, 0]
                e = cur[t, 1]
                node = cur[t, 2]
                half = radius[node] * 0.5
                for v in range(4):
                    ce = _digit_upper_bound(sc, prev, e, depth, v)
                    if ce > prev:
                        slot = cursor[rel]
                        cursor[rel] += 1
                        start[slot] = prev
                        end[slot] = ce
                        children[node, v] = slot
                        center[slot, 0] = center[node, 0] + \
                            (half if v & 1 else -half)
                        center[slot, 1] = center[node, 1] + \
                            (half if v & 2 else -half)
                        radius[slot] = half
                        if ce - prev == 1 or depth + 1 == MAX_DEPTH:
                            is_leaf[slot] = 1
                        else:
                            nxt[nn, 0] = prev
                            nxt[nn, 1] = ce
                            nxt[nn, 2] = slot
                            nn += 1
                    prev = ce
            tmp = cur
            cur = nxt
            nxt = tmp
            ncur = nn
            depth += 1


def build_tree(mc: MortonCodes, y) -> MortonQuadtree:
    """Build the quadtree over the sorted Morton codes.

    The structure is a pure function of the sorted codes: a sequential
    breadth-first top until one level holds at least 8x the worker count,
    then per-subtree parallel construction into pre-counted regions.
    """
    y0, y1 = _split_xy(y)
    n = y0.shape[0]
    sc = mc.sorted_codes if mc.sorted_codes is not None \
        else mc.codes[mc.order]
    fanout = 8 * numba.get_num_threads()

    cap_a = 2 + 4 * fanout * (_FANOUT_CAP_DEPTH + 1)
    a_start = np.empty(cap_a, np.int64)
    a_end = np.empty(cap_a, np.int64)
    a_children = np.full((cap_a, 4), -1, np.int64)
    a_is_leaf = np.zeros(cap_a, np.uint8)
    a_center = np.empty((cap_a, 2), np.float64)
    a_radius = np.empty(cap_a, np.float64)
    a_level_off = np.zeros(_FANOUT_CAP_DEPTH + 2, np.int64)

    f_depth, n_a, f_lo, f_hi, has_frontier = _build_top(
        sc, mc.center[0], mc.center[1], mc.r_span, fanout,
        _FANOUT_CAP_DEPTH, a_start, a_end, a_children, a_is_leaf,
        a_center, a_radius, a_level_off)

    level_offsets = a_level_off[:f_depth + 2].copy()

    if has_frontier:
        f_node = np.arange(f_lo, f_hi, dtype=np.int64)
        f_split = ((a_end[f_lo:f_hi] - a_start[f_lo:f_hi] > 1)
                   & (f_depth < MAX_DEPTH))
        n_rel = MAX_DEPTH - f_depth
        counts = np.zeros((f_node.shape[0], max(n_rel, 1)), np.int64)
        if f_split.any():
            _count_subtrees(sc, a_start[f_lo:f_hi].copy(),
                            a_end[f_lo:f_hi].copy(), f_split, f_depth, counts)
        level_totals = counts.sum(axis=0)
        deepest = int(np.max(np.nonzero(level_totals)[0])) + 1 \
            if level_totals.any() else 0
        extra = level_totals[:deepest]
        level_offsets = np.concatenate(
            [level_offsets, n_a + np.cumsum(extra)])
    else:
        deepest = 0
        extra = np.zeros(0, np.int64)

    m = int(level_offsets[-1])
    start = np.empty(m, np.int64)
    end = np.empty(m, np.int64)
    children = np.full((m, 4), -1, np.int64)
    is_leaf = np.zeros(m, np.uint8)
    center = np.empty((m, 2), np.float64)
    radius = np.empty(m, np.float64)
    start[:n_a] = a_start[:n_a]
    end[:n_a] = a_end[:n_a]
    children[:n_a] = a_children[:n_a]
    is_leaf[:n_a] = a_is_leaf[:n_a]
    center[:n_a] = a_center[:n_a]
    radius[:n_a] = a_radius[:n_a]

    if has_frontier and deepest > 0:
        # absolute start slot of each subtree's block within each level
        level_base = n_a + np.concatenate(([0], np.cumsum(extra[:-1])))
        sub_off = np.cumsum(counts[:, :deepest], axis=0) - counts[:, :deepest]
        slot_base = (level_base[None, :] + sub_off).astype(np.int64)
        _fill_subtrees(sc, f_node, f_split, f_depth,
                       np.ascontiguousarray(slot_base),
                       start, end, children, is_leaf, center, radius)

    order = mc.order
    tree = MortonQuadtree(
        n_points=n, level_offsets=level_offsets.astype(np.int64),
        start=start, end=end, children=children, is_leaf=is_leaf,
        cell_center=center, cell_radius=radius,
        mass=np.zeros(m, np.int64), com=np.zeros((m, 2), y0.dtype),
        order=order, ys0=y0[order], ys1=y1[order],
        center=mc.center, r_span=mc.r_span)
    return tree


@njit(parallel=True, cache=True)
def _summarize_level(lo, hi, start, end, children, is_leaf, mass, com,
                     ys0, ys1):
    for node in prange(lo, hi):
        if is_leaf[node]:
            cnt = end[node] - start[node]
            s0 = 0.0
            s1 = 0.0
            for t in range(start[node], end[node]):
                s0 += np.float64(ys0[t])
                s1 += np.float64(ys1[t])
            mass[node] = cnt
            com[node, 0] = s0 / cnt
            com[node, 1] = s1 / cnt
        else:
            m = 0
            c0 = 0.0
            c1 = 0.0
            for v in range(4):
                ch = children[node, v]
                if ch >= 0:
                    m_ch = mass[ch]
                    m += m_ch
                    c0 += m_ch * np.float64(com[ch, 0])
                    c1 += m_ch * np.float64(com[ch, 1])
            mass[node] = m
            com[node, 0] = c0 / m
            com[node, 1] = c1 / m


def summarize(t: MortonQuadtree) -> MortonQuadtree:
    """Fill mass and center-of-mass bottom-up, one level at a time."""
    for level in range(t.n_levels - 1, -1, -1):
        _summarize_level(int(t.level_offsets[level]),
                         int(t.level_offsets[level + 1]),
                         t.start, t.end, t.children, t.is_leaf,
                         t.mass, t.com, t.ys0, t.ys1)
    t.summarized = True
    return t
