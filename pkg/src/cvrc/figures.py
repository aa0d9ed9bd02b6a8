"""Matplotlib rendering of label maps, slope profiles, sweeps and traces.

Every CLI report writes these PNGs next to its delimited output.  Rendering
is headless (Agg) and file-based only.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import ListedColormap
from matplotlib.patches import Patch

from .raster import CLASS_NAMES, MASKED, MISSING, N_CLASSES

_CLASS_COLORS = ["#3b6fb6", "#4daf4a", "#e41a1c", "#ff9f1c", "#d9d9d9"]
_MISSING_COLOR = "#ffffff"
_MASKED_COLOR = "#101010"


def save_label_figure(labels, path, title: str | None = None) -> None:
    """Colored class map with MASKED water black and MISSING borders white."""
    arr = np.asarray(labels)
    indexed = np.full(arr.shape, N_CLASSES, dtype=np.uint8)  # default missing
    for cls in range(N_CLASSES):
        indexed[arr == cls] = cls
    indexed[arr == MISSING] = N_CLASSES
    indexed[arr == MASKED] = N_CLASSES + 1
    cmap = ListedColormap(_CLASS_COLORS + [_MISSING_COLOR, _MASKED_COLOR])
    fig, ax = plt.subplots(figsize=(6.4, 6.4))
    ax.imshow(indexed, cmap=cmap, vmin=0, vmax=N_CLASSES + 1, interpolation="nearest")
    ax.set_xlabel("column")
    ax.set_ylabel("row")
    if title:
        ax.set_title(title)
    handles = [
        Patch(color=c, label=n) for c, n in zip(_CLASS_COLORS, CLASS_NAMES)
    ] + [Patch(color=_MISSING_COLOR, label="missing"),
         Patch(color=_MASKED_COLOR, label="masked")]
    ax.legend(handles=handles, loc="upper left", bbox_to_anchor=(1.02, 1.0),
              fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_slope_figure(cols, truth, predicted, neighbor, path, title=None) -> None:
    """Angle profiles plus absolute errors along one row."""
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(8.0, 6.0), sharex=True)
    ax0.plot(cols, truth, "k-", lw=1.6, label="ground truth")
    ax0.plot(cols, predicted, "-", color="#3b6fb6", lw=1.2, label="reservoir")
    ax0.plot(cols, neighbor, "-", color="#bbbbbb", lw=0.8, label="neighbor difference")
    ax0.set_ylabel("slope angle [deg]")
    ax0.legend(fontsize=8)
    if title:
        ax0.set_title(title)
    ax1.plot(cols, np.abs(np.asarray(predicted) - np.asarray(truth)),
             color="#3b6fb6", lw=1.0, label="reservoir |error|")
    ax1.plot(cols, np.abs(np.asarray(neighbor) - np.asarray(truth)),
             color="#bbbbbb", lw=0.8, label="neighbor |error|")
    ax1.set_xlabel("column")
    ax1.set_ylabel("|error| [deg]")
    ax1.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_neuron_sweep_figure(rows, path) -> None:
    """Accuracy and run times versus reservoir size."""
    ns = [r["n_res"] for r in rows]
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.5, 4.0))
    region_keys = [k for k in rows[0] if k not in
                   ("n_res", "learn_time", "classify_time", "confusion")]
    for key in region_keys:
        ax0.plot(ns, [r[key] for r in rows], marker="o", label=key)
    ax0.set_xlabel("reservoir neurons")
    ax0.set_ylabel("accuracy [%]")
    ax0.legend(fontsize=8)
    ax1.plot(ns, [r["learn_time"] for r in rows], marker="o", label="learning")
    ax1.plot(ns, [r["classify_time"] for r in rows], marker="s", label="classification")
    ax1.set_xlabel("reservoir neurons")
    ax1.set_ylabel("time [s]")
    ax1.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_frame_sweep_figure(rows, path) -> None:
    """Overall accuracy across the frame-size grid."""
    ws = sorted({r["n_w"] for r in rows})
    ts = sorted({r["n_t"] for r in rows})
    grid = np.full((len(ws), len(ts)), np.nan)
    for r in rows:
        grid[ws.index(r["n_w"]), ts.index(r["n_t"])] = r["overall"]
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    im = ax.imshow(grid, cmap="viridis")
    ax.set_xticks(range(len(ts)), [str(t) for t in ts])
    ax.set_yticks(range(len(ws)), [str(w) for w in ws])
    ax.set_xlabel("frame length n_t")
    ax.set_ylabel("frame width n_w")
    for i in range(len(ws)):
        for j in range(len(ts)):
            if np.isfinite(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.1f}", ha="center", va="center",
                        color="w", fontsize=8)
    fig.colorbar(im, ax=ax, label="overall accuracy [%]")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_trace_figure(trace, path, title=None) -> None:
    """Per-neuron amplitude and phase plus the output RMSE along a scan line."""
    steps = np.arange(trace.amplitude.shape[0])
    fig, axes = plt.subplots(3, 1, figsize=(8.5, 7.5), sharex=True)
    for i in range(trace.amplitude.shape[1]):
        axes[0].plot(steps, trace.amplitude[:, i], lw=0.8)
        axes[1].plot(steps, trace.phase[:, i], lw=0.8)
    axes[0].set_ylabel("|x_i|")
    if title:
        axes[0].set_title(title)
    axes[1].set_ylabel("arg x_i [rad]")
    axes[2].plot(steps, trace.rmse, color="#e41a1c", lw=0.9)
    axes[2].axhline(1.0, color="k", lw=0.6, ls="--")
    axes[2].set_ylabel("output RMSE")
    axes[2].set_xlabel("scan step")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
