# Perplexity picks each point's Gaussian bandwidth: the calibrated
# conditional distribution over neighbors always carries 2^H = u effective
# neighbors, whether the point sits in a dense or a sparse region.

import numpy as np

from bhtsne import InputMatrix, calibrate_perplexity, knn_exact, symmetrize

rng = np.random.default_rng(3)
dense_blob = rng.normal(0.0, 0.2, (100, 5))
sparse_blob = rng.normal(4.0, 2.0, (100, 5))
x = InputMatrix(np.vstack([dense_blob, sparse_blob]))

u = 15.0
g = knn_exact(x, k=int(3 * u))
pr = calibrate_perplexity(g, u)

entropy = -(pr.conditional * np.log2(pr.conditional)).sum(axis=1)
perp = 2.0 ** entropy
print(f"target perplexity u={u}")
print(f"achieved perplexity: min={perp.min():.5f} max={perp.max():.5f}")

# sigma^2 = 1/(2 beta): small in the dense blob, large in the sparse one
sigma2 = 1.0 / (2.0 * pr.betas)
print(f"\nmedian sigma^2, dense  region: {np.median(sigma2[:100]):.5f}")
print(f"median sigma^2, sparse region: {np.median(sigma2[100:]):.5f}")

p = symmetrize(pr, g)
print(f"\nsymmetrized CSR: {p.nnz} nonzeros over {p.n} points")
print(f"sum of p_ij = {p.values.sum():.12f} (joint distribution)")
row_sizes = np.diff(p.row_offsets)
print(f"row sizes: min={row_sizes.min()} median={int(np.median(row_sizes))} "
      f"max={row_sizes.max()} (symmetric closure of the {g.k}-NN graph)")
