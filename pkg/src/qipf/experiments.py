"""Experiment runners behind ``qipf run``.

Each runner composes library calls, writes its CSV outputs into the output
directory and returns a JSON-serializable report. :func:`run_experiment`
adds ``report.json`` and a ``manifest.json`` recording the resolved config,
seeds, package versions and a SHA-256 of every output file.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analysis import (
    SensitivityConfig,
    dominance_histogram,
    eigenvalue_curve,
    heatmap_matrix,
    noise_response_correlation,
    sensitivity_table,
    write_pgm,
)
from .baselines import SurpriseConfig, bayesian_surprise, classical_ip_stream, default_surprise_grid
from .config import ExperimentConfig, build_signal, default_output_dir
from .engine import causal_field, decompose_stream, mode_average, spatial_qipf, write_trace_csv
from .errors import ConfigError
from .signals import add_noise, noise_variances, write_signal_csv

__all__ = ["run_experiment", "RUNNERS"]


def _fmt(v) -> str:
    return format(float(v), ".17g")


class _Outputs:
    def __init__(self, root: Path):
        self.root = root
        self.files: list[str] = []
        root.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.root / name

    def csv(self, name: str, header, rows) -> Path:
        p = self.path(name)
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([v if isinstance(v, str) else _fmt(v) if isinstance(v, float) else v for v in row])
        return p

    def trace(self, name: str, trace) -> Path:
        p = self.path(name)
        write_trace_csv(trace, p)
        return p


def _widths(cfg: ExperimentConfig):
    return cfg.widths or (cfg.sigma,)


def _wtag(sigma: float) -> str:
    return f"{sigma:g}".replace(".", "p")


def run_spatial(cfg: ExperimentConfig, out: _Outputs) -> dict:
    report = {}
    m = cfg.num_modes
    for spec in cfg.signals:
        sig = build_signal(spec)
        for sigma in _widths(cfg):
            if cfg.grid:
                grid = np.linspace(cfg.grid["start"], cfg.grid["stop"], cfg.grid["points"])
            else:
                pad = 4.0 * sigma
                grid = np.linspace(sig.samples.min() - pad, sig.samples.max() + pad, 1001)
            res = spatial_qipf(grid, sig.samples, cfg.engine(sigma))
            header = ["x", "ipf", "psi", "ground_qipf"] + [f"qipf_{k}" for k in range(1, m + 1)]
            rows = (
                [_fmt(res.grid[g]), _fmt(res.ipf[g]), _fmt(res.psi[g]), _fmt(res.ground_qipf[g])]
                + [_fmt(v) for v in res.qipf[g]]
                for g in range(grid.size)
            )
            out.csv(f"spatial_{spec.name}_w{_wtag(sigma)}.csv", header, rows)
            report[f"{spec.name}@{sigma:g}"] = {
                "eigenvalues": [float(e) for e in res.eigen],
                "ground_eigenvalue": res.ground_eigen,
                "flagged_cells": int(res.flagged.sum()),
            }
    return report


def run_causal_compare(cfg: ExperimentConfig, out: _Outputs) -> dict:
    """Causal QIPF versus the classical field and Bayesian surprise.

    The first signal supplies the samples; an optional second signal supplies
    the evaluation points (same length), as in evaluating a scaled copy.
    """
    data = build_signal(cfg.signals[0])
    points = build_signal(cfg.signals[1]) if len(cfg.signals) > 1 else data
    if len(points) != len(data):
        raise ConfigError("signals[1]", "evaluation points must match the data length")
    ecfg = cfg.engine()
    trace = causal_field(points.samples, data.samples, ecfg)
    out.trace(f"trace_{cfg.signals[0].name}.csv", trace)
    groups = cfg.groups or ((1, cfg.num_modes),)
    surprise = bayesian_surprise(
        data, SurpriseConfig(default_surprise_grid(data, cfg.sigma, cfg.surprise_grid_points), ecfg.kernel)
    )[1:]
    avgs = [mode_average(trace, g) for g in groups]
    header = ["index", "point", "classical_ip", "bayesian_surprise"] + [f"qipf_mean_{a}_{b}" for a, b in groups]
    rows = (
        [int(trace.index[r]), _fmt(trace.x[r]), _fmt(trace.ipf[r]), _fmt(surprise[r])] + [_fmt(a[r]) for a in avgs]
        for r in range(len(trace))
    )
    out.csv(f"compare_{cfg.signals[0].name}.csv", header, rows)
    corr = {
        f"{a}-{b}": float(np.corrcoef(avg, trace.ipf)[0, 1]) if avg.std() > 0 and trace.ipf.std() > 0 else None
        for (a, b), avg in zip(groups, avgs)
    }
    return {"samples": len(trace), "corr_with_classical_ip": corr, "flagged_cells": int(trace.flagged.sum())}


def _traces(cfg: ExperimentConfig, out: _Outputs):
    ecfg = cfg.engine()
    for spec in cfg.signals:
        trace = decompose_stream(build_signal(spec), ecfg)
        out.trace(f"trace_{spec.name}.csv", trace)
        yield spec, trace


def run_dominance(cfg: ExperimentConfig, out: _Outputs) -> dict:
    report = {}
    for spec, trace in _traces(cfg, out):
        res = dominance_histogram(trace)
        props = res.proportions
        out.csv(
            f"dominance_{spec.name}.csv",
            ["mode", "count", "proportion"],
            ([k + 1, int(res.counts[k]), _fmt(props[k])] for k in range(trace.num_modes)),
        )
        report[spec.name] = {
            "counts": [int(c) for c in res.counts],
            "ties": res.ties,
            "top_modes": res.top_modes(2),
            "top2_mass": float(np.sort(props)[-2:].sum()),
            "modes_over_5pct": int(np.sum(props >= 0.05)),
        }
    return report


def run_eigencurve(cfg: ExperimentConfig, out: _Outputs) -> dict:
    curves = {}
    for spec, trace in _traces(cfg, out):
        curves[spec.name] = eigenvalue_curve(trace)
    names = list(curves)
    out.csv(
        "eigencurve.csv",
        ["mode"] + names,
        ([k + 1] + [_fmt(curves[n][k]) for n in names] for k in range(cfg.num_modes)),
    )
    return {
        n: {
            "normalized": [float(v) for v in c],
            "non_decreasing": bool(np.all(np.diff(c) >= -1e-9)),
        }
        for n, c in curves.items()
    }


def run_heatmap(cfg: ExperimentConfig, out: _Outputs) -> dict:
    spec = cfg.signals[0]
    clean = build_signal(spec)
    ecfg = cfg.engine()
    report = {}
    seeds = cfg.seeds if cfg.noise.kind != "none" else cfg.seeds[:1]
    for seed in seeds:
        sched = cfg.noise.schedule(seed)
        sig = add_noise(clean, sched) if sched else clean
        tag = f"{spec.name}_s{seed}" if sched else spec.name
        if sched:
            write_signal_csv(sig, out.path(f"signal_{tag}.csv"))
        trace = decompose_stream(sig, ecfg)
        out.trace(f"trace_{tag}.csv", trace)
        matrix, constant = heatmap_matrix(trace)
        write_pgm(matrix, out.path(f"heatmap_{tag}.pgm"))
        out.csv(
            f"heatmap_{tag}.csv",
            ["mode"] + [str(int(i)) for i in trace.index],
            ([k + 1] + [_fmt(v) for v in matrix[k]] for k in range(matrix.shape[0])),
        )
        entry = {"constant_rows": [int(k) + 1 for k in np.flatnonzero(constant)]}
        if cfg.groups:
            avgs = [mode_average(trace, g) for g in cfg.groups]
            out.csv(
                f"groups_{tag}.csv",
                ["index"] + [f"qipf_mean_{a}_{b}" for a, b in cfg.groups],
                ([int(trace.index[r])] + [_fmt(a[r]) for a in avgs] for r in range(len(trace))),
            )
        if sched and cfg.groups:
            corr = noise_response_correlation(trace, sched, noise_variances(clean, sched), cfg.groups)
            entry["noise_correlation"] = {f"{a}-{b}": v for (a, b), v in corr.items()}
            entry["snr_db"] = [float(d) for d in sched.snr_db]
        report[tag] = entry
    return report


def run_sensitivity(cfg: ExperimentConfig, out: _Outputs) -> dict:
    sig = build_signal(cfg.signals[0])
    noise = cfg.noise
    scfg = SensitivityConfig(
        interval_length=noise.interval_length,
        state_groups=cfg.groups,
        db_range=noise.db_range if noise.kind == "random" else None,
    )
    template = noise.schedule(cfg.seeds[0])
    engine_opts = {
        "epsilon": cfg.epsilon,
        "normalize": cfg.hermite_normalize,
        "window": cfg.window,
        "eigen_scope": cfg.eigen_scope,
        "include_current": cfg.include_current,
        "grid_points": cfg.surprise_grid_points,
    }
    table = sensitivity_table(sig, template, cfg.widths, scfg, workers=cfg.workers, engine_opts=engine_opts, seeds=cfg.seeds)
    out.csv(
        "sensitivity.csv",
        ["framework"] + [f"{w:g}" for w in table.widths],
        ([name] + [_fmt(v) for v in table.values[i]] for i, name in enumerate(table.rows)),
    )
    out.csv(
        "sensitivity_runs.csv",
        ["seed", "framework"] + [f"{w:g}" for w in table.widths],
        (
            [seed, name] + [_fmt(v) for v in table.per_run[r, i]]
            for r, seed in enumerate(table.seeds)
            for i, name in enumerate(table.rows)
        ),
    )
    return {
        "rows": table.rows,
        "widths": table.widths,
        "values": table.values.tolist(),
        "seeds": table.seeds,
    }


RUNNERS = {
    "spatial": run_spatial,
    "causal_compare": run_causal_compare,
    "dominance": run_dominance,
    "eigencurve": run_eigencurve,
    "heatmap": run_heatmap,
    "sensitivity": run_sensitivity,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _versions() -> dict:
    return {"qipf": __version__, "numpy": np.__version__, "pyyaml": yaml.__version__, "python": platform.python_version()}


def run_experiment(cfg: ExperimentConfig, output_dir=None, plots: bool | None = None) -> Path:
    """Run ``cfg`` and return the output directory."""
    root = default_output_dir(cfg, output_dir)
    out = _Outputs(root)
    report = RUNNERS[cfg.experiment](cfg, out)
    if cfg.plots if plots is None else plots:
        from .plots import render_plots

        render_plots(cfg.experiment, out)
    with open(out.path("report.json"), "w") as fh:
        json.dump({"experiment": cfg.experiment, "results": report}, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    resolved = cfg.to_mapping()
    resolved["output"]["dir"] = ""  # keep the manifest location-independent
    manifest = {
        "config": resolved,
        "seeds": list(cfg.seeds),
        "versions": _versions(),
        "outputs": {name: _sha256(root / name) for name in out.files},
    }
    with open(root / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return root
