"""Test-signal generators, normalization and heteroscedastic noise injection."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IntegrationError
from .kernel import Signal

__all__ = [
    "LorenzParams",
    "MackeyGlassParams",
    "NoiseInterval",
    "NoiseSchedule",
    "lorenz_rhs",
    "gen_lorenz",
    "mackey_glass_rhs",
    "gen_mackey_glass",
    "gen_sine",
    "gen_sine_mixture",
    "normalize",
    "scale",
    "add_noise",
    "noise_variances",
    "random_schedule",
    "LORENZ_NOISE_SCHEDULE",
    "write_signal_csv",
    "read_signal_csv",
    "write_signal_raw",
    "read_signal_raw",
]


@dataclass(frozen=True)
class LorenzParams:
    sigma_l: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    init: tuple = (0.0, 1.0, 1.05)
    dt: float = 0.01
    n_samples: int = 500
    component: str = "x"
    substeps: int = 1  # RK4 steps per emitted sample

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("lorenz.dt must be positive")
        if not (isinstance(self.substeps, int) and self.substeps >= 1):
            raise DomainError("lorenz.substeps must be a positive integer")
        if not (isinstance(self.n_samples, int) and self.n_samples >= 1):
            raise DomainError("lorenz.n_samples must be a positive integer")
        if self.component not in ("x", "y", "z"):
            raise DomainError("lorenz.component must be one of x, y, z")
        if len(self.init) != 3:
            raise DomainError("lorenz.init must have three coordinates")


@dataclass(frozen=True)
class MackeyGlassParams:
    alpha: float = 0.2
    beta_mg: float = 0.1
    tau: float = 30.0
    n_exp: float = 10.0
    dt: float = 0.1
    n_samples: int = 5000
    history_init: float = 1.2

    def __post_init__(self):
        for name in ("alpha", "beta_mg", "tau", "n_exp", "dt"):
            if not getattr(self, name) > 0:
                raise DomainError(f"mackey_glass.{name} must be positive")
        if not (isinstance(self.n_samples, int) and self.n_samples >= 1):
            raise DomainError("mackey_glass.n_samples must be a positive integer")


def lorenz_rhs(state, p: LorenzParams):
    x, y, z = state
    return np.array([p.sigma_l * (y - x), x * (p.rho - z) - y, x * y - p.beta * z])


def gen_lorenz(p: LorenzParams) -> Signal:
    """Integrate the Lorenz system with classical RK4.

    The initial state is the first emitted sample; samples are ``dt`` apart
    and each is reached with ``substeps`` RK4 steps of ``dt / substeps``.
    """
    comp = "xyz".index(p.component)
    state = np.array(p.init, dtype=np.float64)
    out = np.empty(p.n_samples)
    out[0] = state[comp]
    h = p.dt / p.substeps
    for step in range(1, p.n_samples):
        with np.errstate(over="ignore", invalid="ignore"):
            state = _lorenz_advance(state, p, h)
        if not np.all(np.isfinite(state)):
            raise IntegrationError(f"Lorenz state became non-finite at step {step}", step=step)
        out[step] = state[comp]
    return Signal(out, sample_rate_hz=1.0 / p.dt, label=f"lorenz-{p.component}")


def _lorenz_advance(state, p, h):
    for _ in range(p.substeps):
        k1 = lorenz_rhs(state, p)
        k2 = lorenz_rhs(state + 0.5 * h * k1, p)
        k3 = lorenz_rhs(state + 0.5 * h * k2, p)
        k4 = lorenz_rhs(state + h * k3, p)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return state


def mackey_glass_rhs(x: float, x_delayed: float, p: MackeyGlassParams) -> float:
    return p.alpha * x_delayed / (1.0 + x_delayed ** p.n_exp) - p.beta_mg * x


def gen_mackey_glass(p: MackeyGlassParams) -> Signal:
    """Integrate the Mackey-Glass delay equation with RK4.

    The delayed term is linearly interpolated from the stored trajectory;
    ``x(t) = history_init`` for ``t <= 0``. One sample per step, starting at ``t = 0``.
    """
    h = p.dt
    lag = p.tau / h  # delay in steps
    out = np.empty(p.n_samples)
    out[0] = p.history_init

    def delayed(pos):
        # pos: time in step units at which the delayed value is needed
        q = pos - lag
        if q <= 0.0:
            return p.history_init
        j = int(math.floor(q))
        frac = q - j
        if frac == 0.0:
            return out[j]
        return (1.0 - frac) * out[j] + frac * out[j + 1]

    x = p.history_init
    for step in range(1, p.n_samples):
        s = step - 1
        d0, dm, d1 = delayed(s), delayed(s + 0.5), delayed(s + 1.0)
        k1 = mackey_glass_rhs(x, d0, p)
        k2 = mackey_glass_rhs(x + 0.5 * h * k1, dm, p)
        k3 = mackey_glass_rhs(x + 0.5 * h * k2, dm, p)
        k4 = mackey_glass_rhs(x + h * k3, d1, p)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(x):
            raise IntegrationError(f"Mackey-Glass state became non-finite at step {step}", step=step)
        out[step] = x
    return Signal(out, sample_rate_hz=1.0 / p.dt, label="mackey-glass")


def _n_samples(fs, duration):
    if not (fs > 0 and duration > 0):
        raise DomainError("fs and duration must be positive")
    # tolerate fs*duration landing a hair under an integer
    return int(math.floor(fs * duration + 1e-9))


def gen_sine(f0: float, fs: float, duration: float) -> Signal:
    n = np.arange(_n_samples(fs, duration))
    return Signal(np.sin(2.0 * np.pi * f0 * n / fs), sample_rate_hz=fs, label=f"sine-{f0:g}Hz")


def gen_sine_mixture(freqs, fs: float, duration: float) -> Signal:
    freqs = list(freqs)
    if not freqs:
        raise DomainError("mixture needs at least one frequency")
    n = np.arange(_n_samples(fs, duration))
    total = np.zeros(n.shape[0])
    for f in freqs:
        total += np.sin(2.0 * np.pi * f * n / fs)
    label = "sine-mix-" + "+".join(f"{f:g}" for f in freqs)
    return Signal(total, sample_rate_hz=fs, label=label)


def normalize(signal: Signal) -> Signal:
    """Zero mean, unit population variance."""
    x = signal.samples
    if x.shape[0] < 2:
        raise DomainError("normalize needs at least 2 samples")
    centered = x - x.mean()
    std = math.sqrt(float(np.mean(centered * centered)))
    if std == 0.0:
        raise DomainError("cannot normalize a zero-variance signal")
    return signal.replace(centered / std)


def scale(signal: Signal, factor: float) -> Signal:
    if not math.isfinite(factor):
        raise DomainError("scale factor must be finite")
    return signal.replace(signal.samples * factor)


@dataclass(frozen=True)
class NoiseInterval:
    start: int
    end: int  # exclusive
    snr_db: float


@dataclass(frozen=True)
class NoiseSchedule:
    """Half-open sample intervals, each with its own SNR. ``snr_db = inf`` adds no noise."""

    intervals: tuple = ()
    rng_seed: int = 0

    def __post_init__(self):
        ivs = tuple(iv if isinstance(iv, NoiseInterval) else NoiseInterval(*iv) for iv in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        prev_end = None
        for iv in ivs:
            if iv.start < 0 or iv.end <= iv.start:
                raise DomainError(f"bad noise interval {iv}")
            if prev_end is not None and iv.start != prev_end:
                raise DomainError("noise intervals must be contiguous and ordered")
            if math.isnan(iv.snr_db):
                raise DomainError("snr_db must not be NaN")
            prev_end = iv.end
        if self.rng_seed < 0:
            raise DomainError("rng_seed must be non-negative")

    @property
    def span(self):
        if not self.intervals:
            return (0, 0)
        return (self.intervals[0].start, self.intervals[-1].end)

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([iv.snr_db for iv in self.intervals])

    def with_seed(self, seed: int) -> "NoiseSchedule":
        return NoiseSchedule(self.intervals, seed)


LORENZ_NOISE_SCHEDULE = NoiseSchedule(
    (
        (500, 600, 16.7),
        (600, 700, 20.4),
        (700, 800, 14.2),
        (800, 900, 16.3),
        (900, 1000, 14.5),
        (1000, 1100, 5.5),
        (1100, 1200, 10.3),
    )
)


def random_schedule(start: int, stop: int, interval_length: int, db_range=(0.0, 20.0), seed: int = 0) -> NoiseSchedule:
    """Contiguous intervals over ``[start, stop)`` with SNRs drawn uniformly from ``db_range``."""
    if interval_length < 1 or (stop - start) % interval_length != 0 or stop <= start:
        raise DomainError("interval_length must tile [start, stop) exactly")
    rng = np.random.default_rng([seed, 0x5C4ED])
    count = (stop - start) // interval_length
    dbs = rng.uniform(db_range[0], db_range[1], count)
    ivs = tuple(
        NoiseInterval(start + r * interval_length, start + (r + 1) * interval_length, float(dbs[r]))
        for r in range(count)
    )
    return NoiseSchedule(ivs, seed)


def noise_variances(signal: Signal, schedule: NoiseSchedule) -> np.ndarray:
    """Per-interval noise variance implied by each interval's clean-signal power and SNR."""
    x = signal.samples
    out = []
    for iv in schedule.intervals:
        if iv.end > x.shape[0]:
            raise DomainError(f"noise interval {iv.start}-{iv.end} exceeds signal length {x.shape[0]}")
        if math.isinf(iv.snr_db) and iv.snr_db > 0:
            out.append(0.0)
            continue
        power = float(np.mean(x[iv.start:iv.end] ** 2))
        out.append(power / 10.0 ** (iv.snr_db / 10.0))
    return np.array(out)


def add_noise(signal: Signal, schedule: NoiseSchedule) -> Signal:
    """Add zero-mean white Gaussian noise interval by interval; other samples are untouched."""
    variances = noise_variances(signal, schedule)
    rng = np.random.default_rng(schedule.rng_seed)
    y = signal.samples.copy()
    for iv, var in zip(schedule.intervals, variances):
        if var == 0.0:
            continue
        y[iv.start:iv.end] += rng.normal(0.0, math.sqrt(var), iv.end - iv.start)
    return signal.replace(y, label=f"{signal.label}+noise")


def _fmt(v):
    return format(float(v), ".17g")


def write_signal_csv(signal: Signal, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "value"])
        for i, v in enumerate(signal.samples):
            w.writerow([i, _fmt(v)])


def read_signal_csv(path, sample_rate_hz=None, label="") -> Signal:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        col = header.index("value") if "value" in header else len(header) - 1
        values = [float(row[col]) for row in reader if row]
    return Signal(values, sample_rate_hz=sample_rate_hz, label=label or str(path))


def write_signal_raw(signal: Signal, path) -> None:
    signal.samples.astype("<f8").tofile(path)


def read_signal_raw(path, sample_rate_hz=None, label="") -> Signal:
    return Signal(np.fromfile(path, dtype="<f8"), sample_rate_hz=sample_rate_hz, label=label or str(path))
