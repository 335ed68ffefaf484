"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's own code paths: the GLCM
oracle enumerates pixel pairs with Python loops, and the KDE-CDF oracle
integrates the kernel mixture density numerically.
"""

from __future__ import annotations

import numpy as np
import pytest

import aedr


def brute_force_glcm(codes: np.ndarray, levels: int, offset: tuple[int, int], symmetric: bool) -> np.ndarray:
    """Count co-occurrences by explicit double loop; returns probabilities."""
    dx, dy = offset
    h, w = codes.shape
    counts = np.zeros((levels, levels), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            y2, x2 = y + dy, x + dx
            if 0 <= y2 < h and 0 <= x2 < w:
                counts[codes[y, x], codes[y2, x2]] += 1.0
                if symmetric:
                    counts[codes[y2, x2], codes[y, x]] += 1.0
    total = counts.sum()
    if total == 0:
        raise ValueError("no valid pairs")
    return counts / total


def brute_force_homogeneity(probs: np.ndarray) -> float:
    total = 0.0
    n = probs.shape[0]
    for i in range(n):
        for j in range(n):
            total += probs[i, j] / (1.0 + abs(i - j))
    return total


def trapezoid_kde_cdf(samples: np.ndarray, bandwidth: float, u: float, points: int = 1_000_000) -> float:
    """Numerically integrate the Gaussian-mixture density from far below to u."""
    samples = np.asarray(samples, dtype=np.float64)
    lo = samples.min() - 12.0 * bandwidth
    if u <= lo:
        return 0.0
    grid = np.linspace(lo, u, points)
    density = np.zeros_like(grid)
    norm = 1.0 / (samples.size * bandwidth * np.sqrt(2.0 * np.pi))
    for s in samples:
        z = (grid - s) / bandwidth
        density += np.exp(-0.5 * z * z)
    density *= norm
    return float(np.trapezoid(density, grid))


def random_image(rng: np.random.Generator, height: int = 16, width: int = 16, channels: int = 1) -> aedr.Image:
    return aedr.Image(rng.random((height, width, channels)))


@pytest.fixture(scope="session")
def smooth_backend() -> aedr.LinearAEBackend:
    """Stochastic backend trained on a mild texture family (no boundary clipping)."""
    corpus = aedr.gaussian_field_corpus(
        80, 24, 24, correlation=2.5, amplitude=0.08, seed=101, id_prefix="sb-train"
    )
    return train_from(corpus, latent_dim=12, seed=42)


@pytest.fixture(scope="session")
def frozen_backend() -> aedr.LinearAEBackend:
    """Deterministic (sigma = 0) twin of smooth_backend."""
    corpus = aedr.gaussian_field_corpus(
        80, 24, 24, correlation=2.5, amplitude=0.08, seed=101, id_prefix="sb-train"
    )
    return train_from(corpus, latent_dim=12, noise_sigma=0.0, seed=42)


def train_from(corpus, latent_dim, noise_sigma=None, seed=0, backend_id="linear_ae"):
    return aedr.train_linear_backend(
        [e.image for e in corpus],
        latent_dim=latent_dim,
        noise_sigma=noise_sigma,
        seed=seed,
        backend_id=backend_id,
    )


def out_of_span_vector(backend: aedr.LinearAEBackend, seed: int = 0) -> np.ndarray:
    """Unit vector orthogonal to the backend's basis rows."""
    rng = np.random.default_rng(seed)
    d = backend.mean.size
    v = rng.standard_normal(d)
    v -= backend.basis.T @ (backend.basis @ v)
    return v / np.linalg.norm(v)
