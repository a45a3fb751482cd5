"""Report figures written as PNG files (no display needed)."""

from __future__ import annotations

import numpy as np
from matplotlib.figure import Figure

_EDGE = np.array([0, 255, 0], dtype=np.uint8)


def label_boundaries(labels) -> np.ndarray:
    """Pixels of a label map that touch a different label (4-neighbourhood)."""
    lab = np.asarray(labels)
    p = np.pad(lab, 1, mode="edge")
    edge = np.zeros(lab.shape, dtype=bool)
    for q in (p[:-2, 1:-1], p[2:, 1:-1], p[1:-1, :-2], p[1:-1, 2:]):
        edge |= q != lab
    return edge & (lab > 0)


def save_overlay(path, rgb, labels, seeds=(), title: str = "") -> None:
    """Image with segmented outlines in green and detected centres as crosses."""
    img = np.asarray(rgb, dtype=np.uint8).copy()
    img[label_boundaries(labels)] = _EDGE
    h, w = img.shape[:2]
    fig = Figure(figsize=(max(4.0, w / 100), max(4.0, h / 100)), dpi=100)
    ax = fig.add_subplot()
    ax.imshow(img, interpolation="nearest")
    if len(seeds):
        xy = np.asarray(seeds, dtype=np.float64)
        ax.plot(xy[:, 0], xy[:, 1], "x", color="yellow", markersize=5)
    h2, w2 = h // 2, w // 2
    ax.axhline(h2 - 0.5, color="white", lw=0.5, ls=":")
    ax.axvline(w2 - 0.5, color="white", lw=0.5, ls=":")
    ax.set_title(title)
    ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path)


def save_feature_histograms(path, features, baseline=None) -> None:
    """Histograms of area, mean intensity and circularity, with the baseline marked."""
    fig = Figure(figsize=(10, 3.2), dpi=100)
    cols = [("area", "area (px)", "normal_area"),
            ("mean_intensity", "mean intensity", "normal_mean_intensity"),
            ("circularity", "circularity P^2/A", "normal_circularity")]
    for i, (attr, label, base_attr) in enumerate(cols):
        ax = fig.add_subplot(1, 3, i + 1)
        vals = [getattr(f, attr) for f in features]
        if vals:
            ax.hist(vals, bins=min(20, max(5, len(vals) // 2)), color="#6a5acd")
        if baseline is not None:
            ax.axvline(getattr(baseline, base_attr), color="black", ls="--", lw=1)
        ax.set_xlabel(label)
    fig.suptitle(f"{len(features)} nuclei")
    fig.tight_layout()
    fig.savefig(path)


def save_confusion_matrix(path, cm) -> None:
    """Truth scores on rows, predicted scores on columns."""
    cm = np.asarray(cm)
    fig = Figure(figsize=(4, 4), dpi=100)
    ax = fig.add_subplot()
    ax.imshow(cm, cmap="Blues")
    for i in range(3):
        for j in range(3):
            ax.text(j, i, str(int(cm[i, j])), ha="center", va="center",
                    color="white" if cm[i, j] > cm.max() / 2 else "black")
    ax.set_xticks(range(3), ["1", "2", "3"])
    ax.set_yticks(range(3), ["1", "2", "3"])
    ax.set_xlabel("predicted score")
    ax.set_ylabel("true score")
    fig.tight_layout()
    fig.savefig(path)
