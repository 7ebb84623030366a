"""Multithreaded Barnes-Hut t-SNE built on Morton-code quadtrees.

The pipeline: exact k-nearest-neighbor search, perplexity calibration of
Gaussian bandwidths, symmetrization into a sparse CSR similarity matrix,
then gradient descent where every iteration rebuilds a quadtree from
Morton-sorted embedding points, summarizes cell masses/centers-of-mass
bottom-up, and accumulates attractive (CSR) and repulsive (Barnes-Hut)
forces. All hot loops are numba-compiled and data-parallel; results are
bitwise identical for any thread count.
"""

import os

# Allow requesting more worker threads than visible cores (useful both for
# thread-count determinism checks and for containers reporting few CPUs).
# Must be set before numba is first imported anywhere in the process.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(16, os.cpu_count() or 1)))
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")

__version__ = "0.1.0"

from .io import InputMatrix, load_labels, load_matrix, save_matrix
from .knn import NeighborGraph, knn_exact
from .affinity import (
    PerplexityResult,
    SparseAffinity,
    calibrate_perplexity,
    set_exaggeration,
    symmetrize,
)
from .quadtree import (
    MortonCodes,
    MortonQuadtree,
    build_tree,
    compute_bounds,
    morton_codes,
    morton_interleave,
    summarize,
)
from .forces import GradientBuffers, attractive, repulsive_bh, repulsive_exact
from .plot import render_svg_scatter
from .optimizer import (
    Embedding,
    StepTimings,
    TsneConfig,
    gradient_step,
    init_embedding,
    kl_divergence,
    run,
)

__all__ = [
    "__version__",
    "InputMatrix",
    "load_matrix",
    "save_matrix",
    "load_labels",
    "NeighborGraph",
    "knn_exact",
    "PerplexityResult",
    "SparseAffinity",
    "calibrate_perplexity",
    "symmetrize",
    "set_exaggeration",
    "MortonCodes",
    "MortonQuadtree",
    "compute_bounds",
    "morton_codes",
    "morton_interleave",
    "build_tree",
    "summarize",
    "GradientBuffers",
    "attractive",
    "repulsive_bh",
    "repulsive_exact",
    "render_svg_scatter",
    "Embedding",
    "TsneConfig",
    "StepTimings",
    "init_embedding",
    "gradient_step",
    "kl_divergence",
    "run",
]
