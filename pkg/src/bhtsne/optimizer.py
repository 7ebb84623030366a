"""Gradient-descent driver: per-iteration tree rebuild, forces, update.

Each iteration builds a fresh quadtree over the current embedding,
summarizes it, accumulates attractive and repulsive forces, and applies a
momentum update with adaptive per-coordinate gains:

    grad_i = 4 (F_attr,i - F_rep,i / Z)
    gains  += 0.2 where sign(grad) != sign(velocity), else *= 0.8
    velocity = momentum * velocity - eta * gains * grad
    y += velocity, then y is re-centered to zero mean

The similarity matrix is exaggerated for the first iterations and the
momentum switches 0.5 -> 0.8 at iteration 250, following the common
scikit-learn style defaults. The cost C = sum p_ij ln(p_ij / q_ij) is
reported on the unexaggerated matrix.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field

import numba
import numpy as np
from numba import njit, prange

from .affinity import (SparseAffinity, calibrate_perplexity, set_exaggeration,
                       symmetrize)
from .forces import (GradientBuffers, attractive, repulsive_bh,
                     repulsive_exact)
from .io import InputMatrix, precision_dtype
from .knn import knn_exact
from .quadtree import (build_tree, compute_bounds, morton_codes, summarize,
                       _split_xy)

STAGES = ("knn", "bsp", "tree", "summarize", "attractive", "repulsive",
          "update")
MOMENTUM_SWITCH_ITER = 250


@dataclass
class TsneConfig:
    perplexity: float = 30.0
    theta: float = 0.5
    n_iter: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    learning_rate: float = 200.0
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    min_gain: float = 0.01
    seed: int = 0
    precision: str = "f64"
    threads: int | None = None  # None = all available workers
    kl_every: int = 0           # 0 = no periodic approximate KL reports

    def validate(self) -> "TsneConfig":
        if self.perplexity <= 1:
            raise ValueError(
                f"perplexity must be > 1, got {self.perplexity}")
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if self.learning_rate <= 0:
            raise ValueError(
                f"learning rate must be > 0, got {self.learning_rate}")
        if self.n_iter < 0:
            raise ValueError(f"n_iter must be >= 0, got {self.n_iter}")
        if self.n_iter < self.exaggeration_iters:
            raise ValueError(
                f"n_iter ({self.n_iter}) must cover the exaggeration phase "
                f"({self.exaggeration_iters} iterations)")
        if self.early_exaggeration <= 0:
            raise ValueError("early exaggeration must be > 0")
        precision_dtype(self.precision)
        if self.threads is not None and self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        return self

    @property
    def dtype(self):
        return precision_dtype(self.precision)


@dataclass
class Embedding:
    """2-D points in structure-of-arrays layout plus optimizer state."""

    y0: np.ndarray
    y1: np.ndarray
    v0: np.ndarray  # velocity
    v1: np.ndarray
    g0: np.ndarray  # adaptive gains, start at 1
    g1: np.ndarray
    iteration: int = 0
    rng_seed: int = 0

    @property
    def n_points(self) -> int:
        return self.y0.shape[0]

    @property
    def y(self) -> np.ndarray:
        return np.column_stack((self.y0, self.y1))

    @property
    def velocity(self) -> np.ndarray:
        return np.column_stack((self.v0, self.v1))

    @property
    def gains(self) -> np.ndarray:
        return np.column_stack((self.g0, self.g1))


@dataclass
class StepTimings:
    """Wall time per pipeline stage, per call and cumulative."""

    per_call: dict = field(
        default_factory=lambda: {s: [] for s in STAGES})
    total_wall_s: float = 0.0
    kl_history: list = field(default_factory=list)

    def add(self, stage: str, seconds: float) -> None:
        self.per_call[stage].append(seconds)

    def total(self, stage: str) -> float:
        return math.fsum(self.per_call[stage])

    def calls(self, stage: str) -> int:
        return len(self.per_call[stage])

    def report(self) -> dict:
        out = {}
        for stage in STAGES:
            calls = self.calls(stage)
            total = self.total(stage)
            out[stage] = {
                "total_s": total,
                "per_iter_mean_s": total / calls if calls else 0.0,
                "calls": calls,
            }
        return out


def init_embedding(n: int, seed: int, dtype=np.float64) -> Embedding:
    """Gaussian init (sd 1e-4 per coordinate) from a Philox counter PRNG."""
    if n < 2:
        raise ValueError(f"need at least 2 points, got {n}")
    rng = np.random.Generator(np.random.Philox(seed))
    y = (rng.standard_normal((n, 2)) * 1e-4).astype(dtype)
    zeros = lambda: np.zeros(n, dtype)
    ones = lambda: np.ones(n, dtype)
    return Embedding(y0=np.ascontiguousarray(y[:, 0]),
                     y1=np.ascontiguousarray(y[:, 1]),
                     v0=zeros(), v1=zeros(), g0=ones(), g1=ones(),
                     iteration=0, rng_seed=int(seed))


def _update_coord(y, v, g, grad, momentum, lr, min_gain, dtype):
    flip = np.sign(grad) != np.sign(v)
    g_new = np.where(flip, g + 0.2, g * 0.8)
    np.maximum(g_new, min_gain, out=g_new)
    g[:] = g_new.astype(dtype, copy=False)
    v_new = momentum * v - lr * g * grad
    v[:] = v_new.astype(dtype, copy=False)
    y += v


def _step_forces(e: Embedding, p: SparseAffinity, theta: float,
                 buffers: GradientBuffers, timings: StepTimings | None):
    tick = time.perf_counter
    y = (e.y0, e.y1)

    t0 = tick()
    center, r_span = compute_bounds(y)
    mc = morton_codes(y, center, r_span)
    tree = build_tree(mc, y)
    t1 = tick()
    summarize(tree)
    t2 = tick()
    attractive(p, y, buffers)
    t3 = tick()
    repulsive_bh(tree, y, theta, buffers)
    t4 = tick()
    if timings is not None:
        timings.add("tree", t1 - t0)
        timings.add("summarize", t2 - t1)
        timings.add("attractive", t3 - t2)
        timings.add("repulsive", t4 - t3)
    return tree


def gradient_step(e: Embedding, p: SparseAffinity, cfg: TsneConfig,
                  buffers: GradientBuffers | None = None,
                  timings: StepTimings | None = None) -> Embedding:
    """One full iteration: tree, summarize, forces, momentum update."""
    if buffers is None:
        buffers = GradientBuffers.allocate(e.n_points, e.y0.dtype)
    _step_forces(e, p, cfg.theta, buffers, timings)

    t0 = time.perf_counter()
    z = buffers.z
    with np.errstate(invalid="ignore", divide="ignore"):
        grad0 = 4.0 * (buffers.attr0 - buffers.rep0 / z)
        grad1 = 4.0 * (buffers.attr1 - buffers.rep1 / z)
    if not (np.isfinite(grad0).all() and np.isfinite(grad1).all()):
        bad = np.flatnonzero(~(np.isfinite(grad0) & np.isfinite(grad1)))[0]
        raise ValueError(f"non-finite gradient at point {bad} "
                         f"(iteration {e.iteration})")
    momentum = (cfg.momentum_early if e.iteration < MOMENTUM_SWITCH_ITER
                else cfg.momentum_late)
    dtype = e.y0.dtype
    _update_coord(e.y0, e.v0, e.g0, grad0, momentum, cfg.learning_rate,
                  cfg.min_gain, dtype)
    _update_coord(e.y1, e.v1, e.g1, grad1, momentum, cfg.learning_rate,
                  cfg.min_gain, dtype)
    e.y0 -= e.y0.mean(dtype=np.float64).astype(dtype)
    e.y1 -= e.y1.mean(dtype=np.float64).astype(dtype)
    e.iteration += 1
    if timings is not None:
        timings.add("update", time.perf_counter() - t0)
    return e


@njit(parallel=True, cache=True)
def _kl_rows_kernel(row_offsets, col_indices, values, y0, y1, z, partial):
    for i in prange(row_offsets.shape[0] - 1):
        yi0 = np.float64(y0[i])
        yi1 = np.float64(y1[i])
        acc = 0.0
        for t in range(row_offsets[i], row_offsets[i + 1]):
            j = col_indices[t]
            dx = yi0 - np.float64(y0[j])
            dy = yi1 - np.float64(y1[j])
            p = np.float64(values[t])
            acc += p * math.log(p * z * (1.0 + dx * dx + dy * dy))
        partial[i] = acc


def kl_divergence(p: SparseAffinity, y, mode: str = "exact",
                  theta: float = 0.5) -> float:
    """C = sum p_ij ln(p_ij / q_ij) over the nonzeros of ``p``.

    The normalization term Z is computed exactly (``mode="exact"``) or by
    a Barnes-Hut traversal at ``theta`` (``mode="bh"``). Requires the
    matrix at exaggeration 1.
    """
    if p.exaggeration != 1.0:
        raise ValueError(
            f"KL divergence requires exaggeration 1, got {p.exaggeration}")
    y0, y1 = _split_xy(y)
    n = y0.shape[0]
    if p.n != n:
        raise ValueError(f"matrix is over {p.n} points, embedding has {n}")
    buffers = GradientBuffers.allocate(n, y0.dtype)
    if mode == "exact":
        repulsive_exact((y0, y1), buffers)
    elif mode == "bh":
        center, r_span = compute_bounds((y0, y1))
        tree = build_tree(morton_codes((y0, y1), center, r_span), (y0, y1))
        summarize(tree)
        repulsive_bh(tree, (y0, y1), theta, buffers)
    else:
        raise ValueError(f"unknown mode {mode!r}; expected 'exact' or 'bh'")
    partial = np.empty(n, dtype=np.float64)
    _kl_rows_kernel(p.row_offsets, p.col_indices, p.values, y0, y1,
                    buffers.z, partial)
    return float(np.sum(partial))


def _set_threads(threads: int | None) -> int:
    limit = numba.config.NUMBA_NUM_THREADS
    if threads is None:
        # all physical cores; the (possibly larger) numba cap exists so that
        # explicit thread requests may oversubscribe small machines
        try:
            cores = len(os.sched_getaffinity(0))
        except AttributeError:
            cores = os.cpu_count() or 1
        active = min(cores, limit)
    else:
        active = min(int(threads), limit)
    numba.set_num_threads(max(1, active))
    return numba.get_num_threads()


def run(x: InputMatrix, cfg: TsneConfig) -> tuple:
    """Full pipeline; returns (embedding, timings, final exact KL)."""
    cfg.validate()
    _set_threads(cfg.threads)
    tick = time.perf_counter
    wall0 = tick()
    timings = StepTimings()
    dtype = cfg.dtype

    data = np.ascontiguousarray(x.data, dtype=dtype)
    x = InputMatrix(data)
    n = x.n_points
    k = min(int(math.floor(3 * cfg.perplexity)), n - 1)

    t0 = tick()
    graph = knn_exact(x, k)
    timings.add("knn", tick() - t0)

    t0 = tick()
    pr = calibrate_perplexity(graph, cfg.perplexity)
    p = symmetrize(pr, graph, dtype=dtype)
    timings.add("bsp", tick() - t0)

    e = init_embedding(n, cfg.seed, dtype=dtype)
    buffers = GradientBuffers.allocate(n, dtype)
    kl_history = []

    if cfg.n_iter > 0 and cfg.exaggeration_iters > 0:
        p = set_exaggeration(p, cfg.early_exaggeration)
    for it in range(cfg.n_iter):
        if it == cfg.exaggeration_iters and p.exaggeration != 1.0:
            p = set_exaggeration(p, 1.0)
        gradient_step(e, p, cfg, buffers=buffers, timings=timings)
        if cfg.kl_every and (it + 1) % cfg.kl_every == 0:
            p_plain = p if p.exaggeration == 1.0 else set_exaggeration(p, 1.0)
            kl_history.append((it + 1, kl_divergence(
                p_plain, (e.y0, e.y1), mode="bh", theta=cfg.theta)))
    if p.exaggeration != 1.0:
        p = set_exaggeration(p, 1.0)

    kl = kl_divergence(p, (e.y0, e.y1), mode="exact")
    timings.total_wall_s = tick() - wall0
    timings.kl_history.extend(kl_history)
    return e, timings, kl
