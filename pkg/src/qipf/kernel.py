"""Gaussian kernel, information potential field and Renyi's quadratic entropy.

The kernel is the bare exponential ``exp(-u**2 / (2 sigma**2))`` (peak value 1).
Use :func:`parzen_scale` to convert values to a normalized Parzen density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "Signal",
    "KernelConfig",
    "gaussian_kernel",
    "kernel_terms",
    "ipf",
    "information_potential",
    "renyi_quadratic_entropy",
    "parzen_scale",
]


@dataclass(eq=False)
class Signal:
    """A finite real-valued sample sequence.

    ``samples`` is stored as a read-only float64 array.
    """

    samples: np.ndarray
    sample_rate_hz: float | None = None
    label: str = ""

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise DomainError("signal samples must be finite")
        if self.sample_rate_hz is not None and not self.sample_rate_hz > 0:
            raise DomainError("sample_rate_hz must be positive")
        arr.setflags(write=False)
        self.samples = arr

    def __len__(self):
        return self.samples.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.samples if dtype is None else self.samples.astype(dtype)

    def replace(self, samples, label=None):
        return Signal(samples, self.sample_rate_hz, self.label if label is None else label)


@dataclass(frozen=True)
class KernelConfig:
    sigma: float
    epsilon: float = 1e-8
    fd_step: float = 1e-4

    def __post_init__(self):
        for name in ("sigma", "epsilon", "fd_step"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise DomainError(f"kernel.{name} must be a positive finite number, got {value!r}")


def _as_samples(samples) -> np.ndarray:
    arr = samples.samples if isinstance(samples, Signal) else np.asarray(samples, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise DomainError("sample set is empty")
    return arr


def gaussian_kernel(u, sigma):
    """Unnormalized Gaussian ``exp(-u^2 / 2 sigma^2)``; accepts scalars or arrays."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    u = np.asarray(u, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        raise DomainError("kernel argument must be finite")
    out = np.exp(-(u * u) / (2.0 * sigma * sigma))
    return float(out) if out.ndim == 0 else out


def kernel_terms(x: float, samples: np.ndarray, sigma: float):
    """Differences ``x - x_i`` and kernel values at them.

    Every streaming quantity (ipf, wave-function, classical IP channel) is
    built from this one helper so they agree bit for bit.
    """
    d = x - samples
    return d, np.exp(-(d * d) / (2.0 * sigma * sigma))


def ipf(x: float, samples, cfg: KernelConfig) -> float:
    """Information potential field: mean kernel value between ``x`` and the samples."""
    arr = _as_samples(samples)
    if not math.isfinite(x):
        raise DomainError("evaluation point must be finite")
    _, e = kernel_terms(float(x), arr, cfg.sigma)
    return float(e.mean())


def information_potential(samples, cfg: KernelConfig) -> float:
    """Double-sum information potential with kernel width ``sigma * sqrt(2)``."""
    arr = _as_samples(samples)
    width = cfg.sigma * math.sqrt(2.0)
    d = arr[:, None] - arr[None, :]
    return float(np.exp(-(d * d) / (2.0 * width * width)).mean())


def renyi_quadratic_entropy(samples, cfg: KernelConfig) -> float:
    return -math.log(information_potential(samples, cfg))


def parzen_scale(sigma: float) -> float:
    """Factor turning bare-exponential kernel means into Parzen density values."""
    return 1.0 / (sigma * math.sqrt(2.0 * math.pi))
