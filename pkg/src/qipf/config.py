"""YAML experiment configuration: parsing, validation and signal construction.

Validation failures raise :class:`ConfigError` whose ``field`` is the dotted
path of the offending key, e.g. ``kernel.sigma``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .engine import EngineConfig
from .errors import ConfigError, DomainError
from .kernel import KernelConfig, Signal
from .signals import (
    LORENZ_NOISE_SCHEDULE,
    LorenzParams,
    MackeyGlassParams,
    NoiseSchedule,
    gen_lorenz,
    gen_mackey_glass,
    gen_sine,
    gen_sine_mixture,
    normalize,
    read_signal_csv,
    read_signal_raw,
    scale,
)
from .wavefunction import ModeSpec

__all__ = [
    "EXPERIMENTS",
    "SignalSpec",
    "NoiseSpec",
    "ExperimentConfig",
    "load_config",
    "preset_names",
    "preset_path",
    "build_signal",
    "OUTPUT_DIR_ENV",
]

EXPERIMENTS = ("spatial", "causal_compare", "dominance", "eigencurve", "heatmap", "sensitivity")
GENERATORS = ("lorenz", "mackey-glass", "sine", "sine-mix", "file")
OUTPUT_DIR_ENV = "QIPF_OUTPUT_DIR"

_GEN_PARAMS = {
    "lorenz": LorenzParams,
    "mackey-glass": MackeyGlassParams,
}


def _require(mapping, key, where, kind=None):
    if key not in mapping:
        raise ConfigError(f"{where}.{key}" if where else key, "is required")
    value = mapping[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"{where}.{key}" if where else key, f"must be {kind.__name__ if isinstance(kind, type) else kind}")
    return value


def _reject_unknown(mapping, allowed, where):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"{where}.{key}" if where else str(key), "unknown key")


def _number(value, where, positive=False, integer=False):
    if isinstance(value, str):
        # YAML 1.1 reads exponent forms without a dot (1e-8) as strings
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(where, f"must be a number, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"must be a number, got {value!r}")
    if integer and not (isinstance(value, int) or float(value).is_integer()):
        raise ConfigError(where, f"must be an integer, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(where, f"must be positive, got {value!r}")
    return int(value) if integer else float(value)


@dataclass(frozen=True)
class SignalSpec:
    generator: str
    params: dict = field(default_factory=dict)
    name: str = ""
    path: str | None = None
    format: str = "csv"
    normalize: bool = False
    scale: float = 1.0

    @classmethod
    def from_mapping(cls, raw, where="signal"):
        if not isinstance(raw, dict):
            raise ConfigError(where, "must be a mapping")
        _reject_unknown(raw, {"generator", "params", "name", "path", "format", "normalize", "scale"}, where)
        gen = _require(raw, "generator", where, str)
        if gen not in GENERATORS:
            raise ConfigError(f"{where}.generator", f"must be one of {', '.join(GENERATORS)}")
        params = raw.get("params") or {}
        if not isinstance(params, dict):
            raise ConfigError(f"{where}.params", "must be a mapping")
        fmt = raw.get("format", "csv")
        if fmt not in ("csv", "raw"):
            raise ConfigError(f"{where}.format", "must be csv or raw")
        path = raw.get("path")
        if gen == "file":
            if not path:
                raise ConfigError(f"{where}.path", "is required for generator 'file'")
            if not Path(path).is_file():
                raise ConfigError(f"{where}.path", f"file not found: {path}")
        spec = cls(
            generator=gen,
            params=dict(params),
            name=str(raw.get("name") or gen),
            path=path,
            format=fmt,
            normalize=bool(raw.get("normalize", False)),
            scale=_number(raw.get("scale", 1.0), f"{where}.scale"),
        )
        # build once so parameter errors surface at load time
        build_signal(spec, where)
        return spec


def build_signal(spec: SignalSpec, where: str = "signal") -> Signal:
    p = dict(spec.params)
    try:
        if spec.generator in _GEN_PARAMS:
            cls = _GEN_PARAMS[spec.generator]
            if "init" in p:
                p["init"] = tuple(p["init"])
            try:
                params = cls(**p)
            except TypeError as exc:
                raise ConfigError(f"{where}.params", str(exc)) from None
            sig = gen_lorenz(params) if spec.generator == "lorenz" else gen_mackey_glass(params)
        elif spec.generator == "sine":
            _reject_unknown(p, {"f0", "fs", "duration"}, f"{where}.params")
            sig = gen_sine(
                _number(_require(p, "f0", f"{where}.params"), f"{where}.params.f0"),
                _number(_require(p, "fs", f"{where}.params"), f"{where}.params.fs", positive=True),
                _number(_require(p, "duration", f"{where}.params"), f"{where}.params.duration", positive=True),
            )
        elif spec.generator == "sine-mix":
            _reject_unknown(p, {"freqs", "fs", "duration"}, f"{where}.params")
            freqs = _require(p, "freqs", f"{where}.params", list)
            sig = gen_sine_mixture(
                [_number(f, f"{where}.params.freqs") for f in freqs],
                _number(_require(p, "fs", f"{where}.params"), f"{where}.params.fs", positive=True),
                _number(_require(p, "duration", f"{where}.params"), f"{where}.params.duration", positive=True),
            )
        else:
            reader = read_signal_csv if spec.format == "csv" else read_signal_raw
            sig = reader(spec.path, label=spec.name)
        if spec.normalize:
            sig = normalize(sig)
        if spec.scale != 1.0:
            sig = scale(sig, spec.scale)
    except DomainError as exc:
        raise ConfigError(f"{where}.params", str(exc)) from None
    return sig.replace(sig.samples, label=spec.name)


@dataclass(frozen=True)
class NoiseSpec:
    """``kind``: ``lorenz-steps`` (fixed dB list), ``random`` (dB redrawn per seed) or ``explicit``."""

    kind: str = "none"
    intervals: tuple = ()
    start: int = 0
    stop: int = 0
    interval_length: int = 500
    db_range: tuple = (0.0, 20.0)

    @classmethod
    def from_mapping(cls, raw, where="noise"):
        if raw is None:
            return cls()
        if not isinstance(raw, dict):
            raise ConfigError(where, "must be a mapping")
        _reject_unknown(raw, {"kind", "intervals", "start", "stop", "interval_length", "db_range"}, where)
        kind = raw.get("kind", "none")
        if kind not in ("none", "lorenz-steps", "random", "explicit"):
            raise ConfigError(f"{where}.kind", "must be one of none, lorenz-steps, random, explicit")
        if kind == "lorenz-steps":
            ivs = tuple((iv.start, iv.end, iv.snr_db) for iv in LORENZ_NOISE_SCHEDULE.intervals)
            return cls(kind, ivs, 500, 1200, 100)
        if kind == "explicit":
            ivs = raw.get("intervals")
            if not isinstance(ivs, list) or not ivs:
                raise ConfigError(f"{where}.intervals", "must be a non-empty list of [start, end, snr_db]")
            try:
                sched = NoiseSchedule(tuple(tuple(iv) for iv in ivs))
            except (DomainError, TypeError) as exc:
                raise ConfigError(f"{where}.intervals", str(exc)) from None
            s, e = sched.span
            return cls(kind, tuple((iv.start, iv.end, iv.snr_db) for iv in sched.intervals), s, e, ivs[0][1] - ivs[0][0])
        if kind == "random":
            start = _number(_require(raw, "start", where), f"{where}.start", integer=True)
            stop = _number(_require(raw, "stop", where), f"{where}.stop", integer=True)
            length = _number(raw.get("interval_length", 500), f"{where}.interval_length", positive=True, integer=True)
            db = raw.get("db_range", [0.0, 20.0])
            if not (isinstance(db, list) and len(db) == 2 and db[0] <= db[1]):
                raise ConfigError(f"{where}.db_range", "must be [low, high]")
            if stop <= start or (stop - start) % length:
                raise ConfigError(f"{where}.interval_length", "intervals must tile [start, stop) exactly")
            return cls(kind, (), start, stop, length, (float(db[0]), float(db[1])))
        return cls()

    def schedule(self, seed: int) -> NoiseSchedule | None:
        from .signals import random_schedule

        if self.kind == "none":
            return None
        if self.kind == "random":
            return random_schedule(self.start, self.stop, self.interval_length, self.db_range, seed)
        return NoiseSchedule(self.intervals, seed)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    signals: tuple
    sigma: float
    widths: tuple = ()
    epsilon: float = 1e-8
    num_modes: int = 10
    hermite_normalize: bool = True
    window: int | None = None
    eigen_scope: str = "history"
    include_current: bool = False
    noise: NoiseSpec = NoiseSpec()
    seeds: tuple = (0,)
    groups: tuple = ()
    grid: dict = field(default_factory=dict)
    surprise_grid_points: int = 256
    workers: int = 1
    output_dir: str = ""
    plots: bool = False

    def kernel(self, sigma: float | None = None) -> KernelConfig:
        return KernelConfig(self.sigma if sigma is None else sigma, epsilon=self.epsilon)

    def engine(self, sigma: float | None = None) -> EngineConfig:
        return EngineConfig(
            kernel=self.kernel(sigma),
            modes=ModeSpec(self.num_modes, normalize=self.hermite_normalize),
            window=self.window,
            eigen_scope=self.eigen_scope,
            include_current=self.include_current,
        )

    def to_mapping(self) -> dict:
        """Fully resolved config in the same layout :func:`load_config` accepts."""
        d = asdict(self)
        return {
            "experiment": self.experiment,
            "signals": [
                {k: v for k, v in s.items() if not (k == "path" and v is None)} for s in d["signals"]
            ],
            "kernel": {"sigma": self.sigma, "epsilon": self.epsilon, "widths": list(self.widths)},
            "modes": {"num_modes": self.num_modes, "normalize": self.hermite_normalize, "groups": [list(g) for g in self.groups]},
            "engine": {"window": self.window, "eigen_scope": self.eigen_scope, "include_current": self.include_current},
            "noise": _noise_mapping(self.noise),
            "seeds": list(self.seeds),
            "spatial": {"grid": dict(self.grid)},
            "surprise": {"grid_points": self.surprise_grid_points},
            "workers": self.workers,
            "output": {"dir": self.output_dir, "plots": self.plots},
        }


def _noise_mapping(n: NoiseSpec) -> dict:
    if n.kind == "none":
        return {"kind": "none"}
    if n.kind == "random":
        return {"kind": "random", "start": n.start, "stop": n.stop, "interval_length": n.interval_length, "db_range": list(n.db_range)}
    if n.kind == "lorenz-steps":
        return {"kind": "lorenz-steps"}
    return {"kind": "explicit", "intervals": [list(iv) for iv in n.intervals]}


_TOP_KEYS = {"experiment", "signal", "signals", "kernel", "modes", "engine", "noise", "seeds", "spatial", "surprise", "workers", "output"}


def _section(raw, key, allowed):
    sec = raw.get(key) or {}
    if not isinstance(sec, dict):
        raise ConfigError(key, "must be a mapping")
    _reject_unknown(sec, allowed, key)
    return sec


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a mapping")
    if "config" in raw and "experiment" not in raw:
        # a run manifest: replay its embedded resolved config
        raw = raw["config"]
        if not isinstance(raw, dict):
            raise ConfigError("config", "must be a mapping")
    _reject_unknown(raw, _TOP_KEYS, "")
    exp = _require(raw, "experiment", "", str)
    if exp not in EXPERIMENTS:
        raise ConfigError("experiment", f"must be one of {', '.join(EXPERIMENTS)}")

    if "signal" in raw and "signals" in raw:
        raise ConfigError("signals", "give either 'signal' or 'signals', not both")
    if "signal" in raw:
        sig_raw = [raw["signal"]]
    else:
        sig_raw = raw.get("signals")
    if not isinstance(sig_raw, list) or not sig_raw:
        raise ConfigError("signals", "at least one signal is required")
    signals = tuple(SignalSpec.from_mapping(s, f"signals[{i}]") for i, s in enumerate(sig_raw))
    names = [s.name for s in signals]
    if len(set(names)) != len(names):
        raise ConfigError("signals", "signal names must be unique")

    kern = _section(raw, "kernel", {"sigma", "epsilon", "widths"})
    widths = tuple(_number(w, "kernel.widths", positive=True) for w in kern.get("widths") or ())
    sigma_raw = kern.get("sigma", widths[0] if widths else None)
    if sigma_raw is None:
        raise ConfigError("kernel.sigma", "is required")
    sigma = _number(sigma_raw, "kernel.sigma")
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ConfigError("kernel.sigma", f"must be a positive finite number, got {sigma_raw!r}")
    epsilon = _number(kern.get("epsilon", 1e-8), "kernel.epsilon", positive=True)

    modes = _section(raw, "modes", {"num_modes", "normalize", "groups"})
    num_modes = _number(modes.get("num_modes", 10), "modes.num_modes", positive=True, integer=True)
    groups = []
    for g in modes.get("groups") or ():
        if not (isinstance(g, list) and len(g) == 2 and 1 <= g[0] <= g[1] <= num_modes):
            raise ConfigError("modes.groups", f"bad mode range {g!r} for {num_modes} modes")
        groups.append((int(g[0]), int(g[1])))

    eng = _section(raw, "engine", {"window", "eigen_scope", "include_current"})
    window = eng.get("window")
    if window is not None:
        window = _number(window, "engine.window", integer=True)
        if window < 2:
            raise ConfigError("engine.window", "must be at least 2")
    scope = eng.get("eigen_scope", "history")
    if scope not in ("history", "window"):
        raise ConfigError("engine.eigen_scope", "must be history or window")
    if scope == "window" and window is None:
        raise ConfigError("engine.eigen_scope", "window scope needs engine.window")

    noise = NoiseSpec.from_mapping(raw.get("noise"))
    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError("seeds", "must be a non-empty list of integers")
    seeds = tuple(_number(s, "seeds", integer=True) for s in seeds)
    if any(s < 0 for s in seeds):
        raise ConfigError("seeds", "must be non-negative")

    spatial = _section(raw, "spatial", {"grid"})
    grid = spatial.get("grid") or {}
    if grid:
        _reject_unknown(grid, {"start", "stop", "points"}, "spatial.grid")
        g0 = _number(_require(grid, "start", "spatial.grid"), "spatial.grid.start")
        g1 = _number(_require(grid, "stop", "spatial.grid"), "spatial.grid.stop")
        pts = _number(grid.get("points", 1001), "spatial.grid.points", positive=True, integer=True)
        if g1 <= g0 or pts < 2:
            raise ConfigError("spatial.grid", "needs start < stop and at least 2 points")
        grid = {"start": g0, "stop": g1, "points": pts}

    surprise = _section(raw, "surprise", {"grid_points"})
    sp = _number(surprise.get("grid_points", 256), "surprise.grid_points", integer=True)
    if sp < 16:
        raise ConfigError("surprise.grid_points", "must be at least 16")

    workers = _number(raw.get("workers", 1), "workers", positive=True, integer=True)
    out = _section(raw, "output", {"dir", "plots"})

    if exp == "sensitivity":
        if noise.kind == "none":
            raise ConfigError("noise.kind", "sensitivity needs a noise schedule")
        if not groups:
            raise ConfigError("modes.groups", "sensitivity needs state groups")
        if not widths:
            widths = (sigma,)
    if exp == "heatmap" and noise.kind != "none" and not groups:
        raise ConfigError("modes.groups", "noise-response correlation needs state groups")

    cfg = ExperimentConfig(
        experiment=exp,
        signals=signals,
        sigma=sigma,
        widths=widths,
        epsilon=epsilon,
        num_modes=num_modes,
        hermite_normalize=bool(modes.get("normalize", True)),
        window=window,
        eigen_scope=scope,
        include_current=bool(eng.get("include_current", False)),
        noise=noise,
        seeds=seeds,
        groups=tuple(groups),
        grid=grid,
        surprise_grid_points=sp,
        workers=workers,
        output_dir=str(out.get("dir") or ""),
        plots=bool(out.get("plots", False)),
    )
    try:
        cfg.engine()
    except DomainError as exc:
        raise ConfigError("modes.num_modes", str(exc)) from None
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh) if str(path).endswith(".json") else yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError("config", f"not valid YAML: {exc}") from None
    return parse_config(raw)


def preset_names() -> list[str]:
    root = resources.files("qipf") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def preset_path(name: str):
    path = resources.files("qipf") / "presets" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(preset_names())}")
    return path


def default_output_dir(cfg: ExperimentConfig, override=None) -> Path:
    if override:
        return Path(override)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_DIR_ENV, "qipf-out"))
