"""Comparison quantifiers: Bayesian surprise, entropy difference, classical IP stream."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .kernel import KernelConfig, _as_samples, kernel_terms, renyi_quadratic_entropy

__all__ = [
    "SurpriseConfig",
    "SurpriseResult",
    "default_surprise_grid",
    "bayesian_surprise",
    "interval_entropies",
    "entropy_difference",
    "classical_ip_stream",
]


@dataclass(frozen=True)
class SurpriseConfig:
    """Model space grid and Parzen kernel for the surprise baseline."""

    grid: np.ndarray
    kernel: KernelConfig
    window: int | None = None

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.float64).reshape(-1)
        if g.size < 16:
            raise DomainError("surprise grid needs at least 16 points")
        if not np.all(np.diff(g) > 0):
            raise DomainError("surprise grid must be strictly increasing")
        if self.window is not None and self.window < 1:
            raise DomainError("surprise window must be positive")
        object.__setattr__(self, "grid", g)


def default_surprise_grid(reference, sigma: float, points: int = 256) -> np.ndarray:
    """Evenly spaced grid over the reference signal's range padded by ``3 sigma``."""
    ref = _as_samples(reference)
    return np.linspace(ref.min() - 3.0 * sigma, ref.max() + 3.0 * sigma, points)


@dataclass(eq=False)
class SurpriseResult:
    values: np.ndarray
    floored: np.ndarray = field(default=None)


def _trapezoid_weights(grid):
    w = np.empty_like(grid)
    dx = np.diff(grid)
    w[0] = dx[0] / 2.0
    w[-1] = dx[-1] / 2.0
    w[1:-1] = (dx[:-1] + dx[1:]) / 2.0
    return w


def bayesian_surprise(signal, cfg: SurpriseConfig, return_flags: bool = False):
    """KL divergence from the prior to the posterior Parzen model at each sample.

    Both densities live on ``cfg.grid`` and are renormalized to unit mass
    under trapezoidal weights. Sample 0 has surprise 0.
    """
    x = _as_samples(signal)
    if x.shape[0] < 2:
        raise DomainError("bayesian_surprise needs at least 2 samples")
    grid = cfg.grid
    sigma = cfg.kernel.sigma
    eps = cfg.kernel.epsilon
    w = _trapezoid_weights(grid)
    bumps = lambda v: kernel_terms(v, grid, sigma)[1]  # noqa: E731
    out = np.zeros(x.shape[0])
    floored = np.zeros(x.shape[0], dtype=bool)
    acc = bumps(float(x[0]))
    for i in range(1, x.shape[0]):
        prior = acc * w
        prior = prior / prior.sum()
        acc = acc + bumps(float(x[i]))
        if cfg.window is not None and i - cfg.window >= 0:
            acc = acc - bumps(float(x[i - cfg.window]))
            np.maximum(acc, 0.0, out=acc)
        post = acc * w
        post = post / post.sum()
        low = prior <= 0.0
        if low.any():
            floored[i] = True
            prior = np.where(low, eps, prior)
        # 0 log 0 = 0
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(post > 0, post * np.log(post / prior), 0.0)
        out[i] = max(float(terms.sum()), 0.0)
    if return_flags:
        return SurpriseResult(out, floored)
    return out


def interval_entropies(signal, interval_length: int, cfg: KernelConfig) -> np.ndarray:
    """Renyi quadratic entropy of each consecutive non-overlapping interval."""
    x = _as_samples(signal)
    if interval_length < 1:
        raise DomainError("interval_length must be positive")
    count = x.shape[0] // interval_length
    return np.array([
        renyi_quadratic_entropy(x[r * interval_length:(r + 1) * interval_length], cfg)
        for r in range(count)
    ])


def entropy_difference(signal, interval_length: int, cfg: KernelConfig) -> np.ndarray:
    """``H(R+1) - H(R)`` over consecutive intervals of ``interval_length`` samples."""
    x = _as_samples(signal)
    if x.shape[0] < 2 * interval_length:
        raise DomainError("signal must hold at least two intervals")
    h = interval_entropies(x, interval_length, cfg)
    return h[1:] - h[:-1]


def classical_ip_stream(signal, cfg: KernelConfig, window: int | None = None) -> np.ndarray:
    """IPF of each sample against its past samples; entry ``r`` is sample ``r + 1``."""
    x = _as_samples(signal)
    if x.shape[0] < 2:
        raise DomainError("classical_ip_stream needs at least 2 samples")
    out = np.empty(x.shape[0] - 1)
    for i in range(1, x.shape[0]):
        start = 0 if window is None else max(0, i - window)
        _, e = kernel_terms(float(x[i]), x[start:i], cfg.sigma)
        out[i - 1] = e.mean()
    return out
