"""Figure construction and file output.

Five figure kinds, all batch: predictive-risk histograms panelled by n,
posterior/approximator scatter overlays, mean-and-deviation risk curves,
posterior median/interval plots, and a total-variation table.  Inputs
are the harness CSV files; every input is schema-checked before any
drawing happens and rendering never mutates the inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from figure_kit.schemas import validate_schema
from figure_kit.style import Style

KIND_SCHEMAS = {
    "risk_histograms": "risk",
    "scatter_overlay": "samples",
    "risk_curves": "risk",
    "interval_plot": "samples",
    "tv_table": "tv",
}

SINGLE_INPUT_KINDS = {"risk_histograms", "risk_curves", "tv_table"}


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple
    output: str
    style: Style = field(default_factory=Style)

    def __post_init__(self):
        if self.kind not in KIND_SCHEMAS:
            raise ValueError(
                f"unknown figure kind '{self.kind}'; have {sorted(KIND_SCHEMAS)}"
            )
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        if self.kind in SINGLE_INPUT_KINDS and len(self.inputs) != 1:
            raise ValueError(f"kind '{self.kind}' takes exactly one input CSV")


def _panel_grid(count):
    cols = min(count, 3)
    rows = math.ceil(count / cols)
    fig, axes = plt.subplots(
        rows, cols, figsize=(4.2 * cols, 3.4 * rows), squeeze=False
    )
    flat = axes.ravel()
    for ax in flat[count:]:
        ax.set_axis_off()
    return fig, flat[:count]


def _normalized_weights(log_weights):
    shifted = np.asarray(log_weights, dtype=float)
    shifted = np.exp(shifted - shifted.max())
    return shifted / shifted.sum()


def _weighted_quantiles(values, weights, qs):
    order = np.argsort(values)
    values = np.asarray(values, dtype=float)[order]
    cdf = np.cumsum(np.asarray(weights, dtype=float)[order])
    cdf /= cdf[-1]
    return [float(values[np.searchsorted(cdf, q, side="left")]) for q in qs]


def _render_risk_histograms(frames, style, labels):
    frame = frames[0]
    ns = sorted(frame["n"].unique())
    fig, axes = _panel_grid(len(ns))
    for ax, n in zip(axes, ns):
        block = frame[frame["n"] == n]
        lo, hi = block["risk"].min(), block["risk"].max()
        if lo == hi:  # single value still needs a nonempty bin range
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, style.bins + 1)
        for estimator, rows in block.groupby("estimator"):
            ax.hist(
                rows["risk"], bins=edges, alpha=style.alpha,
                color=style.color(estimator), label=estimator,
            )
        ax.set_title(f"n = {n}")
        ax.set_xlabel("predictive risk")
        ax.set_ylabel("count")
        ax.legend(fontsize="small")
    return fig


def _render_scatter_overlay(frames, style, labels):
    fig, axes = _panel_grid(len(frames))
    for ax, frame, label in zip(axes, frames, labels):
        ax.set_title(label)
        for source, rows in frame.groupby("source"):
            ax.scatter(
                rows["theta_0"], rows["theta_1"], s=style.marker_size,
                alpha=style.alpha, color=style.color(source), label=source,
                linewidths=0,
            )
        ax.set_xlabel(r"$\theta_0$")
        ax.set_ylabel(r"$\theta_1$")
        ax.legend(fontsize="small")
    return fig


def _render_risk_curves(frames, style, labels):
    frame = frames[0]
    fig, (ax,) = _panel_grid(1)
    for estimator, rows in frame.groupby("estimator"):
        stats = rows.groupby("n")["risk"].agg(["mean", "std"]).reset_index()
        ax.errorbar(
            stats["n"], stats["mean"], yerr=stats["std"].fillna(0.0),
            color=style.color(estimator), label=estimator,
            marker="o", capsize=3,
        )
    ax.set_xlabel("n")
    ax.set_ylabel("predictive risk")
    ax.legend(fontsize="small")
    return fig


def _render_interval_plot(frames, style, labels):
    """Posterior median (solid line) with 95% band, per stored coordinate.

    Each input file holds the posterior draws for one experiment cell;
    the x-axis walks the input files (labelled by file name) and the
    y-axis shows importance-weighted posterior quantiles of the two
    stored coordinates.
    """
    records = []
    for frame in frames:
        posterior = frame[frame["source"] == "snis"]
        if posterior.empty:
            posterior = frame
        weights = _normalized_weights(posterior["log_weight"].to_numpy())
        entry = {}
        for coord in ("theta_0", "theta_1"):
            lo, med, hi = _weighted_quantiles(
                posterior[coord].to_numpy(), weights, (0.025, 0.5, 0.975)
            )
            entry[coord] = (lo, med, hi)
        records.append(entry)

    fig, (ax,) = _panel_grid(1)
    xs = np.arange(len(records))
    for coord, color_key in (("theta_0", "snis"), ("theta_1", "approx")):
        lows = [r[coord][0] for r in records]
        meds = [r[coord][1] for r in records]
        highs = [r[coord][2] for r in records]
        color = style.color(color_key)
        ax.plot(xs, meds, "-o", color=color, label=f"{coord} median")
        ax.fill_between(xs, lows, highs, color=color, alpha=0.2)
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, rotation=20)
    ax.set_ylabel("posterior coordinate")
    ax.legend(fontsize="small")
    return fig


def tv_table_rows(frame: pd.DataFrame) -> list[list[str]]:
    """Cell texts for the TV table: header plus one row per CSV row.

    The frame must be read with ``dtype=str`` so the numbers render
    exactly as written in the file (no float round-tripping).
    """
    header = ["scenario", "n", "seed", "bins", "tv"]
    rows = [header]
    rows.extend(frame[header].astype(str).values.tolist())
    return rows


def _render_tv_table(frames, style, labels):
    rows = tv_table_rows(frames[0])
    fig, (ax,) = _panel_grid(1)
    ax.set_axis_off()
    table = ax.table(cellText=rows[1:], colLabels=rows[0], loc="center")
    table.scale(1.0, 1.4)
    return fig


_RENDERERS = {
    "risk_histograms": _render_risk_histograms,
    "scatter_overlay": _render_scatter_overlay,
    "risk_curves": _render_risk_curves,
    "interval_plot": _render_interval_plot,
    "tv_table": _render_tv_table,
}


def render(spec: FigureSpec) -> str:
    """Render ``spec`` to its output path and return the path.

    Output is PNG via the Agg backend with no timestamp metadata, so
    identical inputs and style produce byte-identical files.
    """
    schema = KIND_SCHEMAS[spec.kind]
    frames, labels = [], []
    for path in spec.inputs:
        validate_schema(path, schema).raise_if_failed()
        # tv tables print values verbatim; everything else needs numbers.
        frames.append(pd.read_csv(path, dtype=str if spec.kind == "tv_table" else None))
        labels.append(Path(path).stem)

    fig = _RENDERERS[spec.kind](frames, spec.style, labels)
    fig.tight_layout()
    try:
        fig.savefig(
            spec.output, dpi=spec.style.dpi, format="png",
            metadata={"Software": "figure_kit"},
        )
    finally:
        plt.close(fig)
    return spec.output
