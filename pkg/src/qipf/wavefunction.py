"""Wave-function of the information potential field and its Hermite modes.

The wave-function is ``psi(x) = sqrt(ipf(x))``. Mode ``k`` projects it through
the even Hermite polynomial of order ``2k`` (physicists' convention), and its
Laplacian follows from the chain rule::

    d2/dx2 H(psi(x)) = H''(psi) psi'^2 + H'(psi) psi''

with ``H'_n = 2n H_{n-1}`` and ``H''_n = 4n(n-1) H_{n-2}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kernel import KernelConfig, _as_samples, kernel_terms

__all__ = [
    "PsiEval",
    "ModeSpec",
    "psi_eval",
    "psi_eval_many",
    "hermite_sequence",
    "hermite_norm_constants",
    "hermite_normalized",
    "mode_wavefunction",
    "mode_laplacians",
    "MAX_HERMITE_ORDER",
]

MAX_HERMITE_ORDER = 170


@dataclass(frozen=True)
class PsiEval:
    x: float
    psi: float
    dpsi: float
    d2psi: float


@dataclass(frozen=True)
class ModeSpec:
    """Number of extracted modes; mode ``k`` (1-based) uses Hermite order ``2k``."""

    num_modes: int
    normalize: bool = True

    def __post_init__(self):
        if not (isinstance(self.num_modes, int) and self.num_modes >= 1):
            raise DomainError(f"modes.num_modes must be a positive integer, got {self.num_modes!r}")
        if 2 * self.num_modes > MAX_HERMITE_ORDER:
            raise DomainError(f"modes.num_modes too large (order {2 * self.num_modes} > {MAX_HERMITE_ORDER})")

    @staticmethod
    def hermite_order(k: int) -> int:
        return 2 * k

    @property
    def orders(self) -> np.ndarray:
        return 2 * np.arange(1, self.num_modes + 1)


def _moments(d, e, sigma):
    # mean kernel S and its first two x-derivatives
    s2 = sigma * sigma
    S = e.mean()
    S1 = (-(d / s2) * e).mean()
    S2 = ((d * d / (s2 * s2) - 1.0 / s2) * e).mean()
    return S, S1, S2


def _psi_from_moments(x, S, S1, S2):
    root = math.sqrt(S)
    dpsi = S1 / (2.0 * root)
    # S1/S first: S * root underflows long before S does
    d2psi = (S2 - 0.5 * S1 * (S1 / S)) / (2.0 * root)
    return PsiEval(x=x, psi=root, dpsi=dpsi, d2psi=d2psi)


def psi_eval(x: float, samples, cfg: KernelConfig) -> PsiEval:
    """Wave-function value and analytic first/second derivatives at ``x``."""
    arr = _as_samples(samples)
    if not math.isfinite(x):
        raise DomainError("evaluation point must be finite")
    d, e = kernel_terms(float(x), arr, cfg.sigma)
    return _psi_from_moments(float(x), *_moments(d, e, cfg.sigma))


def psi_eval_many(grid, samples, cfg: KernelConfig, chunk: int = 2048):
    """Vectorized :func:`psi_eval` over a grid; returns ``(ipf, psi, dpsi, d2psi)`` arrays."""
    arr = _as_samples(samples)
    grid = np.asarray(grid, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(grid)):
        raise DomainError("grid points must be finite")
    s2 = cfg.sigma * cfg.sigma
    S = np.empty(grid.size)
    S1 = np.empty(grid.size)
    S2 = np.empty(grid.size)
    for lo in range(0, grid.size, chunk):
        g = grid[lo:lo + chunk]
        d = g[:, None] - arr[None, :]
        e = np.exp(-(d * d) / (2.0 * s2))
        S[lo:lo + chunk] = e.mean(axis=1)
        S1[lo:lo + chunk] = (-(d / s2) * e).mean(axis=1)
        S2[lo:lo + chunk] = ((d * d / (s2 * s2) - 1.0 / s2) * e).mean(axis=1)
    root = np.sqrt(S)
    dpsi = S1 / (2.0 * root)
    d2psi = (S2 - 0.5 * S1 * (S1 / S)) / (2.0 * root)
    return S, root, dpsi, d2psi


def hermite_sequence(y, max_order: int) -> np.ndarray:
    """``[H_0(y), ..., H_max_order(y)]`` by the three-term recurrence.

    ``y`` may be a scalar or an array; the order axis is first.
    """
    if max_order < 0:
        raise DomainError("max_order must be non-negative")
    y = np.asarray(y, dtype=np.float64)
    out = np.empty((max_order + 1,) + y.shape)
    out[0] = 1.0
    if max_order >= 1:
        out[1] = 2.0 * y
    for n in range(1, max_order):
        out[n + 1] = 2.0 * y * out[n] - 2.0 * n * out[n - 1]
    return out


def hermite_norm_constants(orders) -> np.ndarray:
    """``1 / sqrt(2^n n! sqrt(pi))`` for each order, so that ``int e^{-y^2} H_n^2 = 1``."""
    orders = np.asarray(orders, dtype=int).reshape(-1)
    if orders.size and (orders.min() < 0 or orders.max() > MAX_HERMITE_ORDER):
        raise OverflowError(f"Hermite normalization defined for orders 0..{MAX_HERMITE_ORDER}")
    # log form keeps 2^n n! in range up to the factorial limit
    logs = np.array([n * math.log(2.0) + math.lgamma(n + 1) + 0.5 * math.log(math.pi) for n in orders])
    return np.exp(-0.5 * logs)


def hermite_normalized(values, orders) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    c = hermite_norm_constants(orders)
    return values * c.reshape((-1,) + (1,) * (values.ndim - 1))


def mode_laplacians(pe: PsiEval, spec: ModeSpec):
    """Mode wave-functions and Laplacians for every mode ``k = 1..m`` at once."""
    n = spec.orders
    H = hermite_sequence(pe.psi, int(n[-1]))
    h = H[n]
    h1 = 2.0 * n * H[n - 1]
    h2 = 4.0 * n * (n - 1) * H[n - 2]
    if spec.normalize:
        c = hermite_norm_constants(n)
        h, h1, h2 = h * c, h1 * c, h2 * c
    lap = h2 * (pe.dpsi * pe.dpsi) + h1 * pe.d2psi
    return h, lap


def mode_wavefunction(pe: PsiEval, k: int, spec: ModeSpec):
    """``(psi_k, laplacian of psi_k)`` for a single mode index ``k``."""
    if not 1 <= k <= spec.num_modes:
        raise DomainError(f"mode index {k} outside 1..{spec.num_modes}")
    n = spec.hermite_order(k)
    H = hermite_sequence(pe.psi, n)
    h, h1, h2 = H[n], 2.0 * n * H[n - 1], 4.0 * n * (n - 1) * H[n - 2]
    if spec.normalize:
        c = float(hermite_norm_constants([n])[0])
        h, h1, h2 = h * c, h1 * c, h2 * c
    return float(h), float(h2 * pe.dpsi * pe.dpsi + h1 * pe.d2psi)
