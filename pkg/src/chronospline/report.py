"""CSV and figure emission for the reproduction harness.

CSV files carry ``#``-prefixed provenance comment lines before the header;
float formatting uses shortest round-trip representation so identical inputs
produce byte-identical files.  Figures are rendered with the Agg backend
next to the delimited output.
"""

from __future__ import annotations

import os

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def format_value(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, columns, rows, provenance=()):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for line in provenance:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")
    return path


def read_csv(path):
    """Read back a provenance-commented CSV into (comments, columns, rows)."""
    comments, columns, rows = [], None, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif columns is None:
                columns = line.split(",")
            elif line:
                rows.append(line.split(","))
    return comments, columns, rows


def line_figure(path, series, xlabel="", ylabel="", title="", logx=False,
                logy=False, vlines=()):
    """Render labelled (x, y) series to a PNG next to the CSV output."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, (xs, ys) in series.items():
        ax.plot(xs, ys, marker="o", markersize=3, label=label)
    for xv in vlines:
        ax.axvline(xv, color="gray", linestyle="--", linewidth=0.8)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if series:
        ax.legend(fontsize=8)
    ax.grid(True, which="major", alpha=0.4)
    fig.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def field_figure(path, xs, ys, values, title="", clim=None):
    """2D snapshot heatmap."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    im = ax.pcolormesh(xs, ys, values.T, shading="auto", cmap="RdBu_r")
    if clim:
        im.set_clim(*clim)
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
