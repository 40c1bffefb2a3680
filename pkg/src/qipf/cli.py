"""Command-line entry point: ``qipf <subcommand>``.

Exit codes: 0 success, 1 configuration or parameter error, 2 numerical or
integration failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import dominance_histogram, eigenvalue_curve, heatmap_matrix, write_pgm
from .config import OUTPUT_DIR_ENV, load_config, parse_config, preset_names, preset_path
from .engine import EngineConfig, decompose_stream, read_trace_csv, write_trace_csv
from .errors import ConfigError, DomainError, IntegrationError, NumericalError
from .experiments import run_experiment
from .kernel import KernelConfig
from .signals import (
    LorenzParams,
    MackeyGlassParams,
    gen_lorenz,
    gen_mackey_glass,
    gen_sine,
    gen_sine_mixture,
    normalize,
    read_signal_csv,
    read_signal_raw,
    write_signal_csv,
    write_signal_raw,
)
from .wavefunction import ModeSpec


def _default_out(name: str) -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / name


def _read_input(path, fmt):
    if not Path(path).is_file():
        raise ConfigError("input", f"file not found: {path}")
    return (read_signal_raw if fmt == "raw" or str(path).endswith((".f64", ".raw")) else read_signal_csv)(path)


def cmd_run(args) -> int:
    if args.list_presets:
        print("\n".join(preset_names()))
        return 0
    if bool(args.config) == bool(args.preset):
        raise ConfigError("config", "give exactly one of CONFIG or --preset")
    cfg = load_config(preset_path(args.preset) if args.preset else args.config)
    root = run_experiment(cfg, output_dir=args.out, plots=True if args.plots else None)
    print(f"wrote {cfg.experiment} outputs to {root}")
    return 0


def cmd_generate(args) -> int:
    if args.n is not None and args.n < 1:
        raise ConfigError("n", "must be a positive integer")
    if args.kind == "lorenz":
        sig = gen_lorenz(LorenzParams(n_samples=args.n or 500, component=args.component, substeps=args.substeps))
    elif args.kind == "mackey-glass":
        sig = gen_mackey_glass(MackeyGlassParams(n_samples=args.n or 5000, tau=args.tau))
    elif args.kind == "sine":
        sig = gen_sine(args.f0, args.fs, args.dur)
    else:
        sig = gen_sine_mixture(args.freqs, args.fs, args.dur)
    if args.normalize:
        sig = normalize(sig)
    out = Path(args.out) if args.out else _default_out(f"{args.kind}.{'csv' if args.format == 'csv' else 'f64'}")
    out.parent.mkdir(parents=True, exist_ok=True)
    (write_signal_csv if args.format == "csv" else write_signal_raw)(sig, out)
    print(f"wrote {len(sig)} samples to {out}")
    return 0


def _engine(args) -> EngineConfig:
    return EngineConfig(
        kernel=KernelConfig(args.sigma, epsilon=args.epsilon),
        modes=ModeSpec(args.modes, normalize=not args.no_hermite_norm),
        window=args.window,
        eigen_scope=args.eigen_scope,
        include_current=args.include_current,
    )


def cmd_decompose(args) -> int:
    sig = _read_input(args.input, args.input_format)
    trace = decompose_stream(sig, _engine(args))
    out = Path(args.out) if args.out else _default_out("trace.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out)
    print(f"wrote {len(trace)} rows x {trace.num_modes} modes to {out}")
    return 0


def _file_config(args, experiment, extra=None) -> dict:
    if not Path(args.input).is_file():
        raise ConfigError("input", f"file not found: {args.input}")
    raw = {
        "experiment": experiment,
        "signal": {"name": Path(args.input).stem, "generator": "file", "path": str(args.input), "format": args.input_format},
        "kernel": {"sigma": args.sigma, "epsilon": args.epsilon},
        "modes": {"num_modes": args.modes, "normalize": not args.no_hermite_norm},
        "engine": {"window": args.window, "eigen_scope": args.eigen_scope, "include_current": args.include_current},
    }
    for key, value in (extra or {}).items():
        raw.setdefault(key, {}).update(value)
    return raw


def cmd_spatial(args) -> int:
    extra = {}
    if args.grid_start is not None or args.grid_stop is not None:
        if args.grid_start is None or args.grid_stop is None:
            raise ConfigError("spatial.grid", "give both --grid-start and --grid-stop")
        extra["spatial"] = {"grid": {"start": args.grid_start, "stop": args.grid_stop, "points": args.points}}
    cfg = parse_config(_file_config(args, "spatial", extra))
    root = run_experiment(cfg, output_dir=args.out or _default_out("spatial"))
    print(f"wrote spatial outputs to {root}")
    return 0


def cmd_compare(args) -> int:
    extra = {"modes": {"groups": [list(g) for g in args.group]}} if args.group else {}
    extra["surprise"] = {"grid_points": args.grid_points}
    cfg = parse_config(_file_config(args, "causal_compare", extra))
    root = run_experiment(cfg, output_dir=args.out or _default_out("compare"))
    print(f"wrote comparison outputs to {root}")
    return 0


def cmd_report(args) -> int:
    if not Path(args.trace).is_file():
        raise ConfigError("trace", f"file not found: {args.trace}")
    trace = read_trace_csv(args.trace)
    out = Path(args.out) if args.out else _default_out(f"{args.kind}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "dominance":
        res = dominance_histogram(trace)
        lines = ["mode,count,proportion"] + [
            f"{k + 1},{int(c)},{format(float(p), '.17g')}" for k, (c, p) in enumerate(zip(res.counts, res.proportions))
        ]
    elif args.kind == "eigencurve":
        curve = eigenvalue_curve(trace)
        lines = ["mode,normalized_eigenvalue"] + [f"{k + 1},{format(float(v), '.17g')}" for k, v in enumerate(curve)]
    else:
        matrix, _ = heatmap_matrix(trace)
        if out.suffix == ".pgm":
            write_pgm(matrix, out)
            print(f"wrote {matrix.shape[0]}x{matrix.shape[1]} heat-map to {out}")
            return 0
        lines = ["mode," + ",".join(str(int(i)) for i in trace.index)] + [
            f"{k + 1}," + ",".join(format(float(v), ".17g") for v in np.asarray(row)) for k, row in enumerate(matrix)
        ]
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {args.kind} report to {out}")
    return 0


def _engine_flags(p):
    p.add_argument("input", help="signal file (CSV with a value column, or raw little-endian float64)")
    p.add_argument("--input-format", choices=("csv", "raw"), default="csv")
    p.add_argument("--sigma", type=float, required=True, help="kernel width")
    p.add_argument("--epsilon", type=float, default=1e-8, help="division guard for near-zero mode values")
    p.add_argument("--modes", type=int, default=10, help="number of even Hermite modes")
    p.add_argument("--window", type=int, default=None, help="past samples per evaluation (default: all)")
    p.add_argument("--eigen-scope", choices=("history", "window"), default="history")
    p.add_argument("--include-current", action="store_true", help="count the evaluated sample in its own field")
    p.add_argument("--no-hermite-norm", action="store_true", help="use unnormalized Hermite polynomials")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qipf", description="Quantum decomposition of information potential fields.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config or a shipped preset")
    p.add_argument("config", nargs="?", help="YAML experiment config (or a previous manifest.json)")
    p.add_argument("--preset", help="shipped preset name")
    p.add_argument("--list-presets", action="store_true")
    p.add_argument("--out", help=f"output directory (default: config output.dir, then ${OUTPUT_DIR_ENV}, then ./qipf-out)")
    p.add_argument("--plots", action="store_true", help="also render SVG plots")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("generate", help="write a synthetic signal")
    p.add_argument("kind", choices=("lorenz", "mackey-glass", "sine", "sine-mix"))
    p.add_argument("--n", type=int, help="number of samples (lorenz: 500, mackey-glass: 5000)")
    p.add_argument("--component", choices=("x", "y", "z"), default="x")
    p.add_argument("--substeps", type=int, default=1, help="RK4 steps per emitted Lorenz sample")
    p.add_argument("--tau", type=float, default=30.0)
    p.add_argument("--f0", type=float, default=100.0)
    p.add_argument("--freqs", type=float, nargs="+", default=[300.0, 500.0])
    p.add_argument("--fs", type=float, default=8000.0)
    p.add_argument("--dur", type=float, default=0.16)
    p.add_argument("--normalize", action="store_true", help="zero mean, unit variance")
    p.add_argument("--format", choices=("csv", "raw"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("decompose", help="streaming decomposition of a signal file into a trace CSV")
    _engine_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("spatial", help="mode potentials over a grid from all samples")
    _engine_flags(p)
    p.add_argument("--grid-start", type=float)
    p.add_argument("--grid-stop", type=float)
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_spatial)

    p = sub.add_parser("compare", help="causal QIPF next to classical IP and Bayesian surprise")
    _engine_flags(p)
    p.add_argument("--group", type=int, nargs=2, action="append", metavar=("A", "B"), help="mode range to average")
    p.add_argument("--grid-points", type=int, default=256, help="surprise model grid size")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="dominance, eigenvalue curve or heat-map from a trace CSV")
    p.add_argument("trace")
    p.add_argument("--kind", choices=("dominance", "eigencurve", "heatmap"), required=True)
    p.add_argument("--out", help="output file (.csv, or .pgm for heat-maps)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"invalid parameter: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure at sample {exc.sample}, mode {exc.mode}: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"integration failure at step {exc.step}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
