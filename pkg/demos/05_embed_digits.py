# End to end: embed the 1797-point handwritten-digit dataset and render the
# class-colored scatter to digits.svg. Takes a few seconds.

import time

import numpy as np
from sklearn.datasets import load_digits

from bhtsne import InputMatrix, TsneConfig, kl_divergence, run
from bhtsne.plot import render_svg_scatter

digits = load_digits()
x = InputMatrix(digits.data.astype(np.float64))
cfg = TsneConfig(perplexity=30.0, theta=0.5, n_iter=1000, seed=1)

t0 = time.perf_counter()
e, timings, kl = run(x, cfg)
wall = time.perf_counter() - t0

print(f"embedded {x.n_points} digits in {wall:.1f} s, final KL = {kl:.4f}")
print("stage totals (s):")
for stage in ("knn", "bsp", "tree", "summarize", "attractive", "repulsive",
              "update"):
    print(f"  {stage:<11}{timings.total(stage):8.3f}")

with open("digits.svg", "w") as fh:
    fh.write(render_svg_scatter(e.y, digits.target))
print("wrote digits.svg (one color per digit class)")
