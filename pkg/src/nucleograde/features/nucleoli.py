"""Nucleolus candidates inside a nucleus, classified by CLBP texture.

Within each nucleus the blue channel is bilateral-filtered and
gamma-corrected; dark blobs surviving a small opening become candidates.
Elongated candidates and candidates covering a large part of the nucleus
(the nucleus body itself, when it is uniformly dark) are discarded. The
rest are described by the CLBP histogram of the candidate grown by two
pixels and labelled by a linear SVM: ``1`` nucleolus, ``2`` other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import filters, morphology
from ..config import FeatureConfig
from ..errors import EmptyRegion
from ..stains import as_rgb
from .lbp import clbp_descriptor
from .shape import region_circularity
from .svm import LinearSvmModel, svm_predict

NUCLEOLUS = 1
OTHER = 2
_GROW = 2


@dataclass
class Candidates:
    window: tuple[slice, slice]     # crop of the full image
    filtered: np.ndarray            # bilateral-filtered blue channel of the crop
    masks: list[np.ndarray]         # one mask per candidate, crop coordinates


def _features_cfg(cfg) -> FeatureConfig:
    if cfg is None:
        return FeatureConfig()
    return getattr(cfg, "features", cfg)


def _window(mask: np.ndarray, margin: int) -> tuple[slice, slice]:
    ys, xs = np.nonzero(mask)
    h, w = mask.shape
    return (slice(max(ys.min() - margin, 0), min(ys.max() + margin + 1, h)),
            slice(max(xs.min() - margin, 0), min(xs.max() + margin + 1, w)))


def find_candidates(img, region, cfg=None, *, limit_size: bool = True) -> Candidates:
    """Dark, compact blobs of the enhanced blue channel inside ``region``."""
    fc = _features_cfg(cfg)
    rgb = as_rgb(img)
    region = np.asarray(region, dtype=bool)
    if region.shape != rgb.shape[:2]:
        raise ValueError("region and image differ in shape")
    if not region.any():
        raise EmptyRegion("nucleus mask is empty")
    margin = math.ceil(3 * fc.bilateral_sigma_space) + _GROW + math.ceil(fc.lbp_radius) + 2
    win = _window(region, margin)
    filtered = filters.bilateral_filter(rgb[win][..., 2], fc.bilateral_sigma_space,
                                        fc.bilateral_sigma_range)
    enhanced = filters.gamma_correct(filtered, fc.nucleoli_gamma)
    inside = region[win]
    dark = (enhanced < fc.nucleoli_threshold) & inside
    if fc.nucleoli_open_radius > 0:
        dark = morphology.open(dark, morphology.disk(fc.nucleoli_open_radius))
    labels, n = morphology.label(dark, 8)
    max_area = fc.nucleoli_max_fraction * inside.sum()
    masks = []
    for k in range(1, n + 1):
        m = labels == k
        if limit_size and m.sum() > max_area:
            continue
        if region_circularity(m) < fc.circ_max:
            masks.append(m)
    return Candidates(win, filtered, masks)


def candidate_descriptor(cands: Candidates, mask: np.ndarray, cfg=None) -> np.ndarray:
    """CLBP vector of a candidate grown by two pixels."""
    fc = _features_cfg(cfg)
    grown = morphology.dilate(mask, morphology.disk(_GROW))
    return clbp_descriptor(cands.filtered, grown, fc.lbp_points, fc.lbp_radius).vector


def detect_nucleoli(img, nucleus, model: LinearSvmModel, cfg=None) -> int:
    """Number of candidates inside ``nucleus`` that ``model`` labels as nucleoli."""
    cands = find_candidates(img, nucleus, cfg)
    count = 0
    for m in cands.masks:
        if svm_predict(model, candidate_descriptor(cands, m, cfg)) == NUCLEOLUS:
            count += 1
    return count


def annotated_descriptor(img, x: float, y: float, cfg=None, *, window: int = 12) -> np.ndarray:
    """Descriptor for a training annotation at ``(x, y)``.

    Candidates are searched in a square window around the point; the one
    containing it (or the nearest within 3 px) is described. If there is
    none, a radius-2 disk at the point stands in for it.
    """
    fc = _features_cfg(cfg)
    rgb = as_rgb(img)
    h, w = rgb.shape[:2]
    xi, yi = int(round(x)), int(round(y))
    if not (0 <= xi < w and 0 <= yi < h):
        raise ValueError(f"annotation ({x}, {y}) outside a {w}x{h} image")
    box = np.zeros((h, w), dtype=bool)
    box[max(yi - window, 0):yi + window + 1, max(xi - window, 0):xi + window + 1] = True
    cands = find_candidates(rgb, box, fc, limit_size=False)
    py, px = yi - cands.window[0].start, xi - cands.window[1].start
    best, best_d = None, 3.0
    for m in cands.masks:
        if m[py, px]:
            best = m
            break
        ys, xs = np.nonzero(m)
        d = float(np.min(np.hypot(ys - py, xs - px)))
        if d <= best_d:
            best, best_d = m, d
    if best is None:
        best = np.zeros(cands.filtered.shape, dtype=bool)
        best[py, px] = True
        best = morphology.dilate(best, morphology.disk(2))
    return candidate_descriptor(cands, best, fc)
