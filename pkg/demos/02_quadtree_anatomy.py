# Build a quadtree over a handful of points and look inside: level layout,
# per-cell point ranges, masses and centers-of-mass.

import numpy as np

from bhtsne import build_tree, compute_bounds, morton_codes, summarize

rng = np.random.default_rng(0)
y = np.vstack([
    rng.normal([-2, -2], 0.3, (6, 2)),   # a small cluster
    rng.normal([2.5, 2.0], 0.4, (5, 2)),  # another one
    [[0.0, 0.0]],                         # a loner
])

center, r_span = compute_bounds(y)
print(f"bounds: center=({center[0]:.3f}, {center[1]:.3f}) r_span={r_span:.3f}")

mc = morton_codes(y, center, r_span)
tree = summarize(build_tree(mc, y))

print(f"{tree.n_points} points -> {tree.n_nodes} nodes over "
      f"{tree.n_levels} levels")
print("level sizes:", np.diff(tree.level_offsets).tolist())

print("\nper-node dump (depth, Morton prefix, point count, center-of-mass):")
print(tree.dump(mc.sorted_codes))

# the root's summary telescopes: its com is the plain mean of all points
print("\nroot mass :", tree.mass[0])
print("root com  :", np.round(tree.com[0], 6))
print("mean of y :", np.round(y.mean(axis=0), 6))

# every leaf holds exactly one point (no coincident points here)
leaves = [n for n in range(tree.n_nodes) if tree.is_leaf[n]]
print(f"\n{len(leaves)} leaves partition the {tree.n_points} points:",
      sorted(int(tree.start[n]) for n in leaves))
