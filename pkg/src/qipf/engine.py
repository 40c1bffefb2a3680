"""Streaming and spatial quantum decomposition of the information potential field.

At every sample the wave-function is built from past samples only, projected
through the even Hermite modes, and each mode's Laplacian ratio
``sigma^2/2 * lap(psi_k) / psi_k`` is turned into a non-negative potential by
subtracting its running minimum (the mode eigenvalue).
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, NumericalError
from .kernel import KernelConfig, _as_samples, kernel_terms
from .wavefunction import (
    ModeSpec,
    _moments,
    _psi_from_moments,
    hermite_norm_constants,
    hermite_sequence,
    mode_laplacians,
    psi_eval_many,
)

__all__ = [
    "EngineConfig",
    "ModeState",
    "eigen_update",
    "DecompositionTrace",
    "SpatialResult",
    "decompose_stream",
    "causal_field",
    "spatial_qipf",
    "ground_state_energy",
    "mode_average",
    "write_trace_csv",
    "read_trace_csv",
]

EIGEN_SCOPES = ("history", "window")


@dataclass(frozen=True)
class EngineConfig:
    """Engine settings.

    ``window`` is the number of past samples feeding the wave-function (all
    past samples when ``None``). ``include_current`` adds the sample being
    evaluated to its own kernel sum, as the literal double loop does; the
    causal default leaves it out.
    """

    kernel: KernelConfig
    modes: ModeSpec
    window: int | None = None
    eigen_scope: str = "history"
    include_current: bool = False

    def __post_init__(self):
        if self.window is not None and not (isinstance(self.window, int) and self.window >= 2):
            raise DomainError(f"window must be an integer >= 2, got {self.window!r}")
        if self.eigen_scope not in EIGEN_SCOPES:
            raise DomainError(f"eigen_scope must be one of {EIGEN_SCOPES}, got {self.eigen_scope!r}")
        if self.eigen_scope == "window" and self.window is None:
            raise DomainError("eigen_scope='window' requires a window length")

    @property
    def sigma(self) -> float:
        return self.kernel.sigma


@dataclass(frozen=True)
class ModeState:
    k: int
    running_min_ratio: float = math.inf
    skipped: int = 0

    @property
    def eigenvalue(self) -> float:
        return -self.running_min_ratio


def eigen_update(state: ModeState, ratio: float) -> ModeState:
    """Fold one Laplacian ratio into the running minimum.

    Non-finite ratios are skipped and counted in ``skipped``.
    """
    if not math.isfinite(ratio):
        return replace(state, skipped=state.skipped + 1)
    if ratio < state.running_min_ratio:
        return replace(state, running_min_ratio=float(ratio))
    return state


@dataclass(eq=False)
class DecompositionTrace:
    """Per-sample, per-mode output of :func:`decompose_stream`.

    Row ``r`` corresponds to sample ``index[r]`` (0-based). ``flagged[r, k-1]``
    marks cells where the mode wave-function was within ``epsilon`` of zero or
    the ratio was not finite; such cells do not enter the eigenvalue minimum
    and their ``qipf`` is floored at 0.
    """

    index: np.ndarray
    x: np.ndarray
    psi: np.ndarray
    ipf: np.ndarray
    ratio: np.ndarray
    eigen: np.ndarray
    qipf: np.ndarray
    flagged: np.ndarray
    sigma: float
    events: list = field(default_factory=list)

    @property
    def num_modes(self) -> int:
        return self.qipf.shape[1]

    def __len__(self):
        return self.index.shape[0]

    def mode(self, k: int) -> np.ndarray:
        """QIPF values of mode ``k`` (1-based)."""
        if not 1 <= k <= self.num_modes:
            raise DomainError(f"mode index {k} outside 1..{self.num_modes}")
        return self.qipf[:, k - 1]


def _guarded_ratios(h, lap, sigma, epsilon):
    mag = np.abs(h)
    small = mag < epsilon
    den = np.where(small, np.where(h < 0, -1.0, 1.0) * epsilon, h)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ratio = 0.5 * sigma * sigma * lap / den
    flagged = small | ~np.isfinite(ratio)
    return ratio, flagged


class _EigenTracker:
    """Vectorized running (or sliding) minimum over unflagged ratios per mode."""

    def __init__(self, m, window=None):
        self.window = window
        self.running = np.full(m, np.inf)
        self.buffer = deque()

    def push(self, ratio, flagged):
        masked = np.where(flagged, np.inf, ratio)
        if self.window is None:
            self.running = np.minimum(self.running, masked)
            current = self.running
        else:
            self.buffer.append(masked)
            if len(self.buffer) > self.window:
                self.buffer.popleft()
            current = np.min(np.stack(self.buffer), axis=0)
        return np.where(np.isfinite(current), -current, 0.0)


def _stream(data: np.ndarray, probes: np.ndarray, cfg: EngineConfig) -> DecompositionTrace:
    n = data.shape[0]
    m = cfg.modes.num_modes
    sigma = cfg.kernel.sigma
    eps = cfg.kernel.epsilon
    rows = n - 1
    psi = np.empty(rows)
    ipf_ch = np.empty(rows)
    ratio = np.empty((rows, m))
    eigen = np.empty((rows, m))
    flagged = np.zeros((rows, m), dtype=bool)
    tracker = _EigenTracker(m, cfg.window if cfg.eigen_scope == "window" else None)
    events = []
    for r, i in enumerate(range(1, n)):
        stop = i + 1 if cfg.include_current else i
        start = 0 if cfg.window is None else max(0, stop - cfg.window)
        x = float(probes[i])
        d, e = kernel_terms(x, data[start:stop], sigma)
        S, S1, S2 = _moments(d, e, sigma)
        if not S > 0.0:
            raise NumericalError(f"wave-function underflow at sample {i} (mode 0: kernel sum is zero)", sample=i, mode=0)
        pe = _psi_from_moments(x, S, S1, S2)
        h, lap = mode_laplacians(pe, cfg.modes)
        rr, ff = _guarded_ratios(h, lap, sigma, eps)
        psi[r] = pe.psi
        ipf_ch[r] = S
        ratio[r] = rr
        flagged[r] = ff
        eigen[r] = tracker.push(rr, ff)
        if ff.any():
            events.extend((i, int(k) + 1) for k in np.flatnonzero(ff))
    qipf = eigen + ratio
    if flagged.any():
        qipf = np.where(flagged, np.maximum(np.nan_to_num(qipf, nan=0.0), 0.0), qipf)
    return DecompositionTrace(
        index=np.arange(1, n),
        x=np.asarray(probes[1:], dtype=np.float64).copy(),
        psi=psi,
        ipf=ipf_ch,
        ratio=ratio,
        eigen=eigen,
        qipf=qipf,
        flagged=flagged,
        sigma=sigma,
        events=events,
    )


def decompose_stream(signal, cfg: EngineConfig) -> DecompositionTrace:
    """Sample-by-sample decomposition of a signal.

    Row ``r`` of the result describes sample ``r + 1``; the first sample has
    no past and produces no row.
    """
    data = _as_samples(signal)
    if data.shape[0] < 2:
        raise DomainError("decompose_stream needs at least 2 samples")
    return _stream(data, data, cfg)


def causal_field(points, signal, cfg: EngineConfig) -> DecompositionTrace:
    """Evaluate the streaming decomposition at external points.

    Point ``j`` is evaluated against the signal's samples before ``j``
    (the same causal rule as :func:`decompose_stream`, which is the special
    case ``points == signal``).
    """
    data = _as_samples(signal)
    pts = np.asarray(points, dtype=np.float64).reshape(-1)
    if pts.shape[0] != data.shape[0]:
        raise DomainError("points and signal must have the same length")
    if data.shape[0] < 2:
        raise DomainError("causal_field needs at least 2 samples")
    if not np.all(np.isfinite(pts)):
        raise DomainError("evaluation points must be finite")
    return _stream(data, pts, cfg)


@dataclass(eq=False)
class SpatialResult:
    """Mode potentials over a grid; ``eigen`` is the grid-wide value per mode.

    ``ground_*`` hold the order-0 path that uses ``psi`` itself as the mode.
    """

    grid: np.ndarray
    ipf: np.ndarray
    psi: np.ndarray
    ratio: np.ndarray
    eigen: np.ndarray
    qipf: np.ndarray
    flagged: np.ndarray
    ground_ratio: np.ndarray
    ground_eigen: float
    ground_qipf: np.ndarray


def _grid_modes(psi, dpsi, d2psi, spec: ModeSpec):
    n = spec.orders
    H = hermite_sequence(psi, int(n[-1]))  # (order, G)
    h = H[n].T
    h1 = (2.0 * n[:, None] * H[n - 1]).T
    h2 = (4.0 * n[:, None] * (n[:, None] - 1) * H[n - 2]).T
    if spec.normalize:
        c = hermite_norm_constants(n)
        h, h1, h2 = h * c, h1 * c, h2 * c
    lap = h2 * (dpsi * dpsi)[:, None] + h1 * d2psi[:, None]
    return h, lap


def spatial_qipf(grid, samples, cfg: EngineConfig) -> SpatialResult:
    """Mode potentials at arbitrary locations using every sample.

    The eigenvalue of each mode is the negative minimum ratio over the grid,
    so each mode's potential attains exactly 0 somewhere on the grid.
    """
    data = _as_samples(samples)
    grid = np.asarray(grid, dtype=np.float64).reshape(-1)
    if grid.size == 0:
        raise DomainError("grid is empty")
    sigma = cfg.kernel.sigma
    S, psi, dpsi, d2psi = psi_eval_many(grid, data, cfg.kernel)
    if not np.all(S > 0.0):
        bad = int(np.flatnonzero(~(S > 0.0))[0])
        raise NumericalError(f"wave-function underflow at grid point {bad} (mode 0: kernel sum is zero)", sample=bad, mode=0)
    h, lap = _grid_modes(psi, dpsi, d2psi, cfg.modes)
    ratio, flagged = _guarded_ratios(h, lap, sigma, cfg.kernel.epsilon)
    masked = np.where(flagged, np.inf, ratio)
    mins = masked.min(axis=0)
    eigen = np.where(np.isfinite(mins), -mins, 0.0)
    qipf = eigen[None, :] + ratio
    if flagged.any():
        qipf = np.where(flagged, np.maximum(np.nan_to_num(qipf, nan=0.0), 0.0), qipf)
    ground_ratio = 0.5 * sigma * sigma * d2psi / psi
    ground_eigen = float(-ground_ratio.min())
    return SpatialResult(
        grid=grid,
        ipf=S,
        psi=psi,
        ratio=ratio,
        eigen=eigen,
        qipf=qipf,
        flagged=flagged,
        ground_ratio=ground_ratio,
        ground_eigen=ground_eigen,
        ground_qipf=ground_eigen + ground_ratio,
    )


def ground_state_energy(samples, cfg: KernelConfig, grid=None, points: int = 4001) -> float:
    """Ground-state eigenvalue of the wave-function itself over a grid.

    The default grid spans the data range padded by ``4 sigma`` and includes
    the samples. The result lies in ``[0, 1/2]``.
    """
    data = _as_samples(samples)
    if grid is None:
        pad = 4.0 * cfg.sigma
        grid = np.union1d(np.linspace(data.min() - pad, data.max() + pad, points), data)
    _, psi, _, d2psi = psi_eval_many(grid, data, cfg)
    return float(-(0.5 * cfg.sigma * cfg.sigma * d2psi / psi).min())


def mode_average(trace, mode_range: tuple[int, int]) -> np.ndarray:
    """Per-sample mean of the QIPF over modes ``a..b`` (inclusive, 1-based)."""
    values = trace.qipf if hasattr(trace, "qipf") else np.asarray(trace, dtype=np.float64)
    m = values.shape[1]
    a, b = mode_range
    if not (1 <= a <= b <= m):
        raise DomainError(f"mode range {mode_range} outside 1..{m}")
    return values[:, a - 1:b].mean(axis=1)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_trace_csv(trace: DecompositionTrace, path) -> None:
    m = trace.num_modes
    header = ["index", "x", "psi"]
    for k in range(1, m + 1):
        header += [f"ratio_{k}", f"eigen_{k}", f"qipf_{k}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in range(len(trace)):
            row = [str(int(trace.index[r])), _fmt(trace.x[r]), _fmt(trace.psi[r])]
            for k in range(m):
                row += [_fmt(trace.ratio[r, k]), _fmt(trace.eigen[r, k]), _fmt(trace.qipf[r, k])]
            w.writerow(row)


def read_trace_csv(path, sigma: float = float("nan")) -> DecompositionTrace:
    """Load a trace CSV. Channels absent from the file (ipf, flags) come back empty."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        body = np.array([[float(v) for v in row] for row in reader], dtype=np.float64).reshape(-1, len(header))
    m = (len(header) - 3) // 3
    cols = body[:, 3:].reshape(body.shape[0], m, 3)
    return DecompositionTrace(
        index=body[:, 0].astype(int),
        x=body[:, 1],
        psi=body[:, 2],
        ipf=body[:, 2] ** 2,
        ratio=cols[:, :, 0],
        eigen=cols[:, :, 1],
        qipf=cols[:, :, 2],
        flagged=np.zeros((body.shape[0], m), dtype=bool),
        sigma=sigma,
    )
