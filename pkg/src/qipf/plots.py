"""Optional SVG rendering of experiment CSVs (needs matplotlib).

Plots are drawn from the files already written, never from live arrays.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import ConfigError


def _load(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _numeric(rows, start_col=0):
    return np.array([[float(v) for v in r[start_col:]] for r in rows])


def render_plots(experiment: str, out) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise ConfigError("output.plots", "plot rendering needs matplotlib (pip install 'artifact[plots]')") from None
    matplotlib.rcParams["svg.hashsalt"] = "qipf"

    def save(fig, name):
        fig.savefig(out.path(name), format="svg", metadata={"Date": None})
        plt.close(fig)

    for name in [f for f in out.files if f.endswith(".csv")]:
        header, rows = _load(out.root / name)
        stem = name[:-4]
        if stem.startswith("dominance_"):
            data = _numeric(rows)
            fig, ax = plt.subplots(figsize=(6, 3))
            ax.bar(data[:, 0], data[:, 2])
            ax.set_xlabel("mode")
            ax.set_ylabel("dominance proportion")
        elif stem == "eigencurve":
            data = _numeric(rows)
            fig, ax = plt.subplots(figsize=(6, 3))
            for j, label in enumerate(header[1:], start=1):
                ax.plot(data[:, 0], data[:, j], marker="o", label=label)
            ax.set_xlabel("mode")
            ax.set_ylabel("normalized eigenvalue")
            ax.legend(fontsize="small")
        elif stem.startswith("heatmap_"):
            data = _numeric(rows, 1)
            fig, ax = plt.subplots(figsize=(8, 3))
            ax.imshow(data, aspect="auto", cmap="gray", origin="lower", interpolation="nearest")
            ax.set_xlabel("sample")
            ax.set_ylabel("mode")
        elif stem.startswith(("spatial_", "compare_", "groups_")):
            data = _numeric(rows)
            first = 3 if stem.startswith("spatial_") else 2 if stem.startswith("compare_") else 1
            fig, ax = plt.subplots(figsize=(7, 3))
            for j in range(first, data.shape[1]):
                ax.plot(data[:, 0], data[:, j], lw=0.8, label=header[j])
            ax.set_xlabel(header[0])
            ax.legend(fontsize="x-small", ncol=2)
        elif stem == "sensitivity":
            fig, ax = plt.subplots(figsize=(6, 3))
            widths = [float(w) for w in header[1:]]
            for r in rows:
                ax.plot(widths, [float(v) for v in r[1:]], marker="o", label=r[0])
            ax.set_xlabel("kernel width")
            ax.set_ylabel("sensitivity")
            ax.legend(fontsize="x-small")
        else:
            continue
        fig.tight_layout()
        save(fig, f"{stem}.svg")
