"""Seeded Monte-Carlo plumbing: batch estimates, sphere and box samplers."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

N_BATCHES = 16
THREADS_ENV = "OCTOVAL_THREADS"


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    std_error: float
    n_samples: int
    seed: int | None

    def within(self, target: float, k: float = 3.0, slack: float = 0.0) -> bool:
        return abs(self.value - target) <= k * self.std_error + slack

    def __str__(self) -> str:
        return f"{self.value:.10g} +/- {self.std_error:.3g} (n={self.n_samples})"


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return 1


def batch_means(
    fn: Callable[[np.ndarray], np.ndarray],
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    n: int,
    seed: int | None,
    batches: int = N_BATCHES,
    threads: int | None = None,
) -> np.ndarray:
    """Per-batch means of ``fn(sampler(rng_b, n // batches))``, shape (batches, ...).

    Each batch owns a child of ``SeedSequence(seed)``; results are collected in
    batch order, so the output does not depend on the thread count.
    """
    if n < batches:
        raise ValueError(f"need at least {batches} samples")
    per = n // batches
    children = np.random.SeedSequence(seed).spawn(batches)

    def run(child):
        rng = np.random.default_rng(child)
        return np.mean(np.asarray(fn(sampler(rng, per))), axis=0)

    threads = default_threads() if threads is None else threads
    if threads <= 1:
        out = [run(c) for c in children]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(run, children))
    return np.array(out)


def estimate(means: np.ndarray, n: int, seed: int | None, scale: float = 1.0) -> MeasureEstimate:
    """Estimate from a 1-d array of batch means (times ``scale``, e.g. a volume)."""
    means = np.asarray(means, float) * scale
    b = means.shape[0]
    return MeasureEstimate(float(means.mean()), float(means.std(ddof=1) / np.sqrt(b)), int(n - n % b), seed)


def mc_mean(fn, sampler, n: int, seed: int | None, scale: float = 1.0, threads: int | None = None) -> MeasureEstimate:
    return estimate(batch_means(fn, sampler, n, seed, threads=threads), n, seed, scale)


def sphere_points(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((n, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def ball_points(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    r = rng.random(n) ** (1.0 / dim)
    return sphere_points(rng, n, dim) * r[:, None]


def box_sampler(lo: np.ndarray, hi: np.ndarray):
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)

    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        return lo + (hi - lo) * rng.random((n, lo.size))

    return sample
