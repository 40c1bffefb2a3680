"""Reports built on decomposition traces: dominance, heat-maps, eigenvalue
curves, noise-response correlation and the interval sensitivity measure."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import SurpriseConfig, bayesian_surprise, classical_ip_stream, default_surprise_grid, interval_entropies
from .engine import EngineConfig, decompose_stream, mode_average
from .errors import DomainError
from .kernel import KernelConfig, Signal
from .signals import NoiseSchedule, add_noise, random_schedule
from .wavefunction import ModeSpec

__all__ = [
    "DominanceResult",
    "dominance_histogram",
    "total_variation",
    "heatmap_matrix",
    "write_pgm",
    "eigenvalue_curve",
    "noise_response_correlation",
    "SensitivityConfig",
    "sensitivity",
    "SensitivityTable",
    "sensitivity_table",
    "BASELINE_ROWS",
]


def _qipf(trace) -> np.ndarray:
    values = trace.qipf if hasattr(trace, "qipf") else np.asarray(trace, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] == 0:
        raise DomainError("trace is empty")
    return values


@dataclass(eq=False)
class DominanceResult:
    counts: np.ndarray  # counts[k-1] = samples where mode k is the argmax
    ties: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def proportions(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    def top_modes(self, n: int = 2) -> list[int]:
        """1-based indices of the ``n`` most frequently dominant modes, by count."""
        order = np.argsort(-self.counts, kind="stable")
        return [int(k) + 1 for k in order[:n]]


def dominance_histogram(trace) -> DominanceResult:
    """Count, per mode, the samples at which that mode has the largest QIPF.

    Ties go to the lowest mode index and are also counted in ``ties``.
    """
    v = _qipf(trace)
    winners = np.argmax(v, axis=1)
    top = v[np.arange(v.shape[0]), winners]
    ties = int(np.sum(np.sum(v == top[:, None], axis=1) > 1))
    return DominanceResult(np.bincount(winners, minlength=v.shape[1]), ties)


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def heatmap_matrix(trace):
    """Modes x samples matrix with each row min-max scaled to [0, 1].

    Returns ``(matrix, constant_rows)``; constant rows are all zero.
    """
    v = _qipf(trace).T
    lo = v.min(axis=1, keepdims=True)
    span = v.max(axis=1, keepdims=True) - lo
    constant = (span[:, 0] == 0) | ~np.isfinite(span[:, 0])
    safe = np.where(constant[:, None], 1.0, span)
    out = np.where(constant[:, None], 0.0, (v - lo) / safe)
    return out, constant


def write_pgm(matrix, path) -> None:
    """Binary 16-bit PGM (P5, big-endian), rows = modes, columns = samples."""
    m = np.clip(np.asarray(matrix, dtype=np.float64), 0.0, 1.0)
    pix = np.rint(m * 65535.0).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{m.shape[1]} {m.shape[0]}\n65535\n".encode("ascii"))
        fh.write(pix.tobytes())


def eigenvalue_curve(trace) -> np.ndarray:
    """Final-sample eigenvalue per mode divided by the largest one."""
    eig = np.asarray(trace.eigen)[-1]
    top = eig.max()
    if not top > 0:
        raise DomainError("eigenvalues are all zero or negative; cannot normalize")
    return eig / top


def noise_response_correlation(trace, schedule: NoiseSchedule, variances, groups) -> dict:
    """Pearson correlation between each group's per-interval mean QIPF and the noise variance.

    ``groups`` is a sequence of inclusive 1-based mode ranges.
    """
    variances = np.asarray(variances, dtype=np.float64)
    out = {}
    for g in groups:
        avg = mode_average(trace, tuple(g))
        means = []
        for iv in schedule.intervals:
            sel = (trace.index >= iv.start) & (trace.index < iv.end)
            means.append(avg[sel].mean())
        means = np.array(means)
        if means.std() == 0 or variances.std() == 0:
            out[tuple(g)] = float("nan")
        else:
            out[tuple(g)] = float(np.corrcoef(means, variances)[0, 1])
    return out


@dataclass(frozen=True)
class SensitivityConfig:
    """Settings for the interval sensitivity measure.

    ``noise_db`` holds one dB value per interval; intervals are
    ``interval_length`` long and start at ``start`` within the value array.
    For :func:`sensitivity_table`, ``db_range`` (when set) redraws the
    interval dB values for every run seed.
    """

    interval_length: int = 500
    state_groups: tuple = ((1, 3), (4, 6), (7, 10))
    noise_db: tuple = ()
    runs: int = 10
    normalize_per_framework: bool = True
    db_range: tuple | None = (0.0, 20.0)
    seed: int = 0

    def __post_init__(self):
        if self.interval_length < 1:
            raise DomainError("interval_length must be positive")
        if self.runs < 1:
            raise DomainError("runs must be positive")
        object.__setattr__(self, "state_groups", tuple(tuple(int(a) for a in g) for g in self.state_groups))
        object.__setattr__(self, "noise_db", tuple(float(d) for d in self.noise_db))


def _zscore(v: np.ndarray) -> np.ndarray:
    std = v.std()
    if std == 0:
        return v - v.mean()
    return (v - v.mean()) / std


def sensitivity(values, cfg: SensitivityConfig, start: int = 0, return_flags: bool = False):
    """Mean absolute change of interval Euclidean norms per dB of noise change.

    Interval ``R`` is ``values[start + R*L : start + (R+1)*L]``. When
    ``normalize_per_framework`` is set the whole array is z-scored first.
    Pairs with equal dB values are skipped and reported when ``return_flags``.
    """
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    db = np.asarray(cfg.noise_db, dtype=np.float64)
    L = cfg.interval_length
    if db.size < 2:
        raise DomainError("sensitivity needs at least two noise intervals")
    if start < 0 or start + db.size * L > v.size:
        raise DomainError("values do not cover all noise intervals")
    if cfg.normalize_per_framework:
        v = _zscore(v)
    norms = np.array([np.linalg.norm(v[start + r * L:start + (r + 1) * L]) for r in range(db.size)])
    terms, skipped = [], []
    for r in range(db.size - 1):
        dd = db[r] - db[r + 1]
        if dd == 0:
            skipped.append(r)
            continue
        terms.append(abs((norms[r] - norms[r + 1]) / dd))
    zeta = float(np.mean(terms)) if terms else float("nan")
    if return_flags:
        return zeta, skipped
    return zeta


BASELINE_ROWS = ("Bayesian surprise", "Entropy difference", "Classical IP")


@dataclass(eq=False)
class SensitivityTable:
    rows: list
    widths: list
    values: np.ndarray  # rows x widths, averaged over runs
    per_run: np.ndarray  # runs x rows x widths
    seeds: list = field(default_factory=list)

    def row(self, name: str) -> np.ndarray:
        return self.values[self.rows.index(name)]


def _group_label(g):
    return f"QIPF states {g[0]}-{g[1]}"


def _table_run(args):
    signal, schedule, widths, cfg, engine_opts = args
    noisy = add_noise(signal, schedule)
    start, stop = schedule.span
    L = cfg.interval_length
    run_cfg = SensitivityConfig(
        interval_length=L,
        state_groups=cfg.state_groups,
        noise_db=tuple(schedule.snr_db),
        runs=1,
        normalize_per_framework=cfg.normalize_per_framework,
    )
    per_interval_cfg = SensitivityConfig(
        interval_length=1,
        noise_db=run_cfg.noise_db,
        normalize_per_framework=cfg.normalize_per_framework,
    )
    m = max(g[1] for g in cfg.state_groups)
    rows = len(cfg.state_groups) + 3
    out = np.empty((rows, len(widths)))
    for j, sigma in enumerate(widths):
        kcfg = KernelConfig(sigma, epsilon=engine_opts.get("epsilon", 1e-8))
        ecfg = EngineConfig(
            kernel=kcfg,
            modes=ModeSpec(m, normalize=engine_opts.get("normalize", True)),
            window=engine_opts.get("window"),
            eigen_scope=engine_opts.get("eigen_scope", "history"),
            include_current=engine_opts.get("include_current", False),
        )
        trace = decompose_stream(noisy, ecfg)
        # per-sample channels hold samples 1..N-1, hence start - 1
        for g_i, g in enumerate(cfg.state_groups):
            out[g_i, j] = sensitivity(mode_average(trace, g), run_cfg, start=start - 1)
        grid = default_surprise_grid(signal, sigma, engine_opts.get("grid_points", 256))
        surprise = bayesian_surprise(noisy, SurpriseConfig(grid, kcfg))[1:]
        out[-3, j] = sensitivity(surprise, run_cfg, start=start - 1)
        if start % L:
            raise DomainError("noisy region must start on an interval boundary")
        ent = interval_entropies(noisy, L, kcfg)
        out[-2, j] = sensitivity(ent, per_interval_cfg, start=start // L)
        out[-1, j] = sensitivity(classical_ip_stream(noisy, kcfg, ecfg.window), run_cfg, start=start - 1)
    return out


def sensitivity_table(
    signal: Signal,
    schedule: NoiseSchedule,
    kernel_widths,
    cfg: SensitivityConfig,
    workers: int = 1,
    engine_opts: dict | None = None,
    seeds=None,
) -> SensitivityTable:
    """Sensitivity of every framework at every kernel width, averaged over runs.

    Run ``r`` uses noise seed ``seeds[r]`` (default ``cfg.seed + r`` for
    ``cfg.runs`` runs); with ``cfg.db_range`` set the interval dB values are
    redrawn per run over ``schedule``'s span.
    """
    widths = [float(w) for w in kernel_widths]
    engine_opts = dict(engine_opts or {})
    start, stop = schedule.span
    if stop > len(signal):
        raise DomainError("noise schedule exceeds the signal")
    if seeds is None:
        seeds = [cfg.seed + r for r in range(cfg.runs)]
    seeds = [int(sd) for sd in seeds]
    if not seeds:
        raise DomainError("at least one run seed is required")
    jobs = []
    for seed in seeds:
        if cfg.db_range is not None:
            sched = random_schedule(start, stop, cfg.interval_length, cfg.db_range, seed)
        else:
            sched = schedule.with_seed(seed)
        jobs.append((signal, sched, widths, cfg, engine_opts))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_table_run, jobs))
    else:
        results = [_table_run(j) for j in jobs]
    per_run = np.stack(results)
    rows = [_group_label(g) for g in cfg.state_groups] + list(BASELINE_ROWS)
    return SensitivityTable(rows, widths, per_run.mean(axis=0), per_run, seeds)
