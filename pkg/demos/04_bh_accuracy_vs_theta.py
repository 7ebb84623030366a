# The Barnes-Hut knob: theta trades repulsion accuracy for speed. theta=0
# degenerates to the exact O(N^2) sum; larger values accept coarser cell
# summaries. Errors are measured against the exact oracle.

import time

import numpy as np

from bhtsne import (GradientBuffers, build_tree, compute_bounds, morton_codes,
                    repulsive_bh, repulsive_exact, summarize)

rng = np.random.default_rng(5)
n = 4000
y = rng.standard_normal((n, 2))

exact = GradientBuffers.allocate(n)
t0 = time.perf_counter()
repulsive_exact(y, exact)
t_exact = time.perf_counter() - t0
norm = np.linalg.norm(exact.rep, axis=1)

mc = morton_codes(y, *compute_bounds(y))
tree = summarize(build_tree(mc, y))

print(f"N={n}, exact pass: {t_exact * 1e3:.1f} ms")
print(f"\n{'theta':>6} {'time(ms)':>9} {'p50 err':>9} {'p95 err':>9} "
      f"{'z err':>9}")
for theta in (0.0, 0.2, 0.5, 0.8, 1.2):
    buf = GradientBuffers.allocate(n)
    t0 = time.perf_counter()
    repulsive_bh(tree, y, theta, buf)
    dt = time.perf_counter() - t0
    rel = np.linalg.norm(buf.rep - exact.rep, axis=1) / norm
    z_err = abs(buf.z - exact.z) / exact.z
    print(f"{theta:6.1f} {dt * 1e3:9.2f} {np.percentile(rel, 50):9.2e} "
          f"{np.percentile(rel, 95):9.2e} {z_err:9.2e}")

print("\ntheta=0.5 is the usual operating point: ~1% force error for a "
      "large speedup.")
