# Two properties worth seeing with your own eyes:
#   1. the whole pipeline is bitwise deterministic for any worker count,
#   2. per-stage wall times, the basis of the profiling harness.

import numpy as np

from bhtsne import InputMatrix, TsneConfig, run

rng = np.random.default_rng(9)
centers = rng.standard_normal((6, 8)) * 7
x = InputMatrix(np.vstack([c + rng.standard_normal((400, 8))
                           for c in centers]))

results = {}
for threads in (1, 2, 8):
    cfg = TsneConfig(perplexity=20.0, n_iter=150, exaggeration_iters=50,
                     seed=42, threads=threads)
    e, timings, kl = run(x, cfg)
    results[threads] = (e.y.copy(), kl, timings)
    print(f"threads={threads}: kl={kl:.6f} "
          f"wall={timings.total_wall_s:.2f}s")

y1 = results[1][0]
for threads in (2, 8):
    same = np.array_equal(y1, results[threads][0])
    print(f"embedding threads=1 vs threads={threads}: bitwise equal = {same}")

print("\nstage breakdown, threads=1:")
t = results[1][2]
for stage in ("knn", "bsp", "tree", "summarize", "attractive", "repulsive",
              "update"):
    calls = t.calls(stage)
    print(f"  {stage:<11}{t.total(stage):8.3f}s over {calls} calls")
