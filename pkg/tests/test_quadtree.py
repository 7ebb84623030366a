import numba
import numpy as np
import pytest

from bhtsne import (build_tree, compute_bounds, morton_codes,
                    morton_interleave, summarize)
from bhtsne.quadtree import MAX_DEPTH


def make_tree(y, summarized=True):
    center, r_span = compute_bounds(y)
    mc = morton_codes(y, center, r_span)
    t = build_tree(mc, y)
    if summarized:
        summarize(t)
    return mc, t


# --- bounds -----------------------------------------------------------------


def test_bounds_simple():
    center, r_span = compute_bounds(np.array([[0.0, 0.0], [2.0, 2.0]]))
    assert center == (1.0, 1.0)
    assert r_span >= 1.0


def test_bounds_degenerate_point():
    center, r_span = compute_bounds(np.array([[3.0, 3.0], [3.0, 3.0]]))
    assert r_span > 0  # epsilon floor keeps the integer scale finite
    assert center == (3.0, 3.0)


def test_bounds_rejects_non_finite():
    with pytest.raises(ValueError, match="non-finite"):
        compute_bounds(np.array([[0.0, np.inf], [1.0, 1.0]]))


@pytest.mark.parametrize("spread", [1e-6, 1.0, 1e6])
def test_scaled_coordinates_in_range(rng, spread):
    y = rng.standard_normal((2000, 2)) * spread
    center, r_span = compute_bounds(y)
    scale = 2.0 ** 31 / r_span
    for d in range(2):
        m = (y[:, d] - (center[d] - r_span)) * scale
        assert (m >= 0).all()
        assert (m < 2.0 ** 32).all()


# --- morton codes -----------------------------------------------------------


def interleave_oracle(a, b):
    """Per-bit interleaving, independent of the mask/shift kernel."""
    out = 0
    for bit in range(32):
        out |= ((a >> bit) & 1) << (2 * bit)
        out |= ((b >> bit) & 1) << (2 * bit + 1)
    return out


def test_worked_example_47():
    assert morton_interleave(3, 7) == 47  # 101111b


def test_zero_code():
    assert morton_interleave(0, 0) == 0


def test_interleave_matches_bit_oracle(rng):
    vals = rng.integers(0, 2 ** 32, size=(1000, 2), dtype=np.uint64)
    for a, b in vals:
        assert morton_interleave(int(a), int(b)) == interleave_oracle(int(a), int(b))


def test_codes_match_oracle_from_points(rng):
    y = rng.standard_normal((1000, 2))
    center, r_span = compute_bounds(y)
    mc = morton_codes(y, center, r_span)
    scale = 2.0 ** 31 / r_span
    for i in range(0, 1000, 37):
        m0 = int((y[i, 0] - (center[0] - r_span)) * scale)
        m1 = int((y[i, 1] - (center[1] - r_span)) * scale)
        assert int(mc.codes[i]) == interleave_oracle(m0, m1)


def test_sorted_order_is_stable_z_order(rng):
    y = rng.standard_normal((500, 2))
    mc = morton_codes(y, *compute_bounds(y))
    sc = mc.codes[mc.order]
    assert (np.diff(sc.astype(object)) >= 0).all()
    np.testing.assert_array_equal(sc, mc.sorted_codes)
    # stable: ties ordered by point id
    for t in range(499):
        if sc[t] == sc[t + 1]:
            assert mc.order[t] < mc.order[t + 1]
    # matches numpy's stable argsort
    np.testing.assert_array_equal(mc.order,
                                  np.argsort(mc.codes, kind="stable"))


# --- tree structure ---------------------------------------------------------


def reference_quadtree(codes):
    """Sequential insert-one-at-a-time builder over the same code space.

    Returns {(depth, prefix): sorted point ids}. Splits a cell whenever it
    holds more than one point and sits above the maximum depth.
    """
    nodes = {}

    def insert(depth, prefix, ids):
        nodes[(depth, prefix)] = ids
        if len(ids) == 1 or depth == MAX_DEPTH:
            return
        buckets = {}
        for pid in ids:
            digit = (int(codes[pid]) >> (62 - 2 * depth)) & 3
            buckets.setdefault(digit, []).append(pid)
        for digit, sub in sorted(buckets.items()):
            insert(depth + 1, (prefix << 2) | digit, sub)

    insert(0, 0, list(range(len(codes))))
    return {key: sorted(ids) for key, ids in nodes.items()}


def tree_node_sets(mc, t):
    depths = t.depths()
    out = {}
    for n in range(t.n_nodes):
        d = int(depths[n])
        prefix = int(mc.sorted_codes[t.start[n]]) >> (64 - 2 * d) if d else 0
        out[(d, prefix)] = sorted(
            int(i) for i in mc.order[t.start[n]:t.end[n]])
    return out


def test_single_point_tree():
    y = np.array([[0.5, -0.25]])
    mc, t = make_tree(y)
    assert t.n_nodes == 1
    assert t.is_leaf[0]
    assert (t.start[0], t.end[0]) == (0, 1)
    assert t.mass[0] == 1


def test_four_quadrants_four_leaves():
    y = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]])
    mc, t = make_tree(y)
    assert t.n_levels == 2
    assert t.n_nodes == 5
    assert not t.is_leaf[0]
    assert t.is_leaf[1:].all()
    assert (t.children[0] >= 0).all()


def test_structure_matches_reference_builder(rng):
    y = rng.standard_normal((5000, 2))
    mc, t = make_tree(y)
    assert tree_node_sets(mc, t) == reference_quadtree(mc.codes)


def test_prefix_masking_property(rng):
    # a node's points are exactly the codes sharing its prefix
    y = rng.standard_normal((700, 2))
    mc, t = make_tree(y)
    depths = t.depths()
    all_codes = mc.sorted_codes
    for n in range(0, t.n_nodes, 11):
        d = int(depths[n])
        if d == 0:
            continue
        shift = 64 - 2 * d
        prefix = int(all_codes[t.start[n]]) >> shift
        matches = (all_codes >> np.uint64(shift)) == prefix
        assert matches.sum() == t.end[n] - t.start[n]
        assert matches[t.start[n]:t.end[n]].all()


def test_level_contiguity_and_ranges(rng):
    y = rng.standard_normal((1500, 2))
    mc, t = make_tree(y)
    assert t.level_offsets[0] == 0
    assert t.level_offsets[-1] == t.n_nodes
    assert (np.diff(t.level_offsets) > 0).all()
    assert (t.start[0], t.end[0]) == (0, 1500)
    depths = t.depths()
    # children sit in the next level's block and partition the parent
    for n in range(t.n_nodes):
        if t.is_leaf[n]:
            assert (t.children[n] == -1).all()
            continue
        kids = t.children[n][t.children[n] >= 0]
        assert len(kids) >= 1
        for ch in kids:
            assert depths[ch] == depths[n] + 1
        np.testing.assert_array_equal(np.sort(kids), kids)
        assert t.start[kids[0]] == t.start[n]
        assert t.end[kids[-1]] == t.end[n]
        for a, b in zip(kids[:-1], kids[1:]):
            assert t.end[a] == t.start[b]


def test_leaves_partition_points(rng):
    y = rng.standard_normal((800, 2))
    mc, t = make_tree(y)
    leaf_ranges = [(int(t.start[n]), int(t.end[n]))
                   for n in range(t.n_nodes) if t.is_leaf[n]]
    covered = np.zeros(800, dtype=int)
    for s, e in leaf_ranges:
        covered[s:e] += 1
    assert (covered == 1).all()


def test_leaf_rule(rng):
    y = rng.standard_normal((600, 2))
    mc, t = make_tree(y)
    depths = t.depths()
    for n in range(t.n_nodes):
        cnt = t.end[n] - t.start[n]
        if t.is_leaf[n]:
            assert cnt == 1 or depths[n] == MAX_DEPTH
        else:
            assert cnt > 1


def test_coincident_points_aggregate_at_max_depth():
    y = np.array([[1.0, 1.0]] * 5 + [[-1.0, -1.0]] * 2)
    mc, t = make_tree(y)
    assert t.n_levels == MAX_DEPTH + 1
    leaves = [n for n in range(t.n_nodes) if t.is_leaf[n]]
    masses = sorted(int(t.mass[n]) for n in leaves)
    assert masses == [2, 5]
    assert t.mass[0] == 7


# --- summarization ----------------------------------------------------------


def test_leaf_mass_one_and_com(rng):
    y = rng.standard_normal((100, 2))
    mc, t = make_tree(y)
    depths = t.depths()
    for n in range(t.n_nodes):
        if t.is_leaf[n] and t.end[n] - t.start[n] == 1:
            assert t.mass[n] == 1
            pid = mc.order[t.start[n]]
            np.testing.assert_array_equal(t.com[n], y[pid])


def test_root_summary(rng):
    y = rng.standard_normal((2048, 2))
    mc, t = make_tree(y)
    assert t.mass[0] == 2048
    np.testing.assert_allclose(t.com[0], y.mean(axis=0), atol=1e-12)


def test_com_matches_direct_slice_mean(rng):
    y = rng.random((1000, 2))  # positive coords keep the check well-scaled
    mc, t = make_tree(y)
    ys = y[mc.order]
    for n in range(t.n_nodes):
        direct = ys[t.start[n]:t.end[n]].mean(axis=0)
        np.testing.assert_allclose(t.com[n], direct, rtol=1e-12, atol=1e-14)
        assert t.mass[n] == t.end[n] - t.start[n]


def test_mass_telescopes_per_level(rng):
    y = rng.standard_normal((512, 2))
    mc, t = make_tree(y)
    depths = t.depths()
    # a level frontier = all leaves at depth < l plus all nodes at depth l
    for level in range(t.n_levels):
        frontier = [n for n in range(t.n_nodes)
                    if (depths[n] == level and not (t.is_leaf[n] and depths[n] < level))
                    or (t.is_leaf[n] and depths[n] < level)]
        total = sum(int(t.mass[n]) for n in frontier)
        assert total == 512


def test_radius_halves_per_level(rng):
    y = rng.standard_normal((400, 2))
    mc, t = make_tree(y)
    depths = t.depths()
    for n in range(t.n_nodes):
        assert t.cell_radius[n] == pytest.approx(
            t.r_span / 2.0 ** depths[n], rel=1e-15)


def test_thread_count_invariance(rng):
    y = rng.standard_normal((3000, 2))
    trees = []
    for threads in (1, 7):
        numba.set_num_threads(threads)
        trees.append(make_tree(y))
    numba.set_num_threads(1)
    (mc1, t1), (mc2, t2) = trees
    np.testing.assert_array_equal(mc1.order, mc2.order)
    for name in ("level_offsets", "start", "end", "children", "is_leaf",
                 "cell_center", "cell_radius", "mass", "com"):
        a, b = getattr(t1, name), getattr(t2, name)
        np.testing.assert_array_equal(a.view(np.uint8), b.view(np.uint8))


def test_debug_dump_golden():
    y = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [0.5, 0.5]])
    mc, t = make_tree(y)
    expected = "\n".join([
        "0 - 4 -0.125 -0.125",
        "1 00 1 -1 -1",
        "1 01 1 1 -1",
        "1 10 1 -1 1",
        "1 11 1 0.5 0.5",
    ])
    assert t.dump(mc.sorted_codes) == expected
