"""Synthetic H&E-like images with known nucleus geometry.

Images are rendered through the same Beer-Lambert model the stain module
inverts, so the hematoxylin channel of a synthetic slide is a clean,
known map of where nuclei were planted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .stains import StainMatrix, compose_rgb


@dataclass
class SyntheticSlide:
    rgb: np.ndarray                 # uint8 (H, W, 3)
    labels: np.ndarray              # int32, 0 = background, k = nucleus k
    centers: list[tuple[float, float]] = field(default_factory=list)  # (x, y)
    areas: list[int] = field(default_factory=list)
    baseline_area: float = 0.0


def ellipse_mask(shape, center, semi_axes, angle=0.0) -> np.ndarray:
    """Pixels whose centres fall inside a rotated ellipse."""
    h, w = shape
    cx, cy = center
    a, b = semi_axes
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    dx, dy = x - cx, y - cy
    c, s = math.cos(angle), math.sin(angle)
    u = dx * c + dy * s
    v = -dx * s + dy * c
    return (u / a) ** 2 + (v / b) ** 2 <= 1.0


def disk_image(shape, center, radius, inside=50.0, outside=200.0) -> np.ndarray:
    """Grey image of a flat disk on a flat background."""
    m = ellipse_mask(shape, center, (radius, radius))
    return np.where(m, inside, outside).astype(np.float64)


def render_rgb(h_conc, e_conc, stains: StainMatrix | None = None) -> np.ndarray:
    """8-bit RGB from per-pixel hematoxylin and eosin concentrations."""
    conc = np.stack([h_conc, e_conc, np.zeros_like(h_conc)], axis=-1)
    return np.round(compose_rgb(conc, stains)).astype(np.uint8)


def stained_disks(shape, disks, h_nucleus=0.9, e_background=0.25,
                  noise=0.0, rng=None) -> np.ndarray:
    """RGB image of hematoxylin disks ``(cx, cy, r)`` on eosin background."""
    rng = np.random.default_rng(rng)
    h = np.zeros(shape)
    for cx, cy, r in disks:
        h[ellipse_mask(shape, (cx, cy), (r, r))] = h_nucleus
    e = np.full(shape, e_background)
    e[h > 0] = 0.05
    if noise:
        h = np.clip(h + rng.normal(0, noise, shape), 0, None)
        e = np.clip(e + rng.normal(0, noise, shape), 0, None)
    return render_rgb(h, e)


def make_slide(seed: int = 0, size: int = 512, n_nuclei: int = 30,
               baseline_area: float = 113.0, large_fraction: float = 1.0,
               large_range=(3.8, 6.0), small_range=(2.0, 3.0),
               gap: float = 12.0, noise: float = 0.02,
               h_range=(0.8, 1.0)) -> SyntheticSlide:
    """Scatter ``n_nuclei`` dark ellipses on a pink field.

    A ``large_fraction`` of the nuclei get areas drawn from
    ``large_range`` (multiples of ``baseline_area``), the rest from
    ``small_range``. The default baseline is a radius-6 disk, the default
    healthy-nucleus size of the detector. Ellipses are kept ``gap`` pixels
    apart.
    """
    rng = np.random.default_rng(seed)
    shape = (size, size)
    n_large = math.ceil(large_fraction * n_nuclei)
    targets = np.concatenate([
        rng.uniform(*large_range, n_large),
        rng.uniform(*small_range, n_nuclei - n_large),
    ]) * baseline_area
    rng.shuffle(targets)

    placed: list[tuple[float, float, float]] = []
    h = np.zeros(shape)
    labels = np.zeros(shape, dtype=np.int32)
    centers, areas = [], []
    for k, area in enumerate(targets, start=1):
        ratio = rng.uniform(1.0, 1.35)
        b = math.sqrt(area / (math.pi * ratio))
        a = b * ratio
        for _ in range(10_000):
            cx, cy = rng.uniform(a + 8, size - a - 8, 2)
            if all(math.hypot(cx - px, cy - py) >= a + pa + gap for px, py, pa in placed):
                break
        else:
            raise RuntimeError("could not place all nuclei; lower n_nuclei or gap")
        m = ellipse_mask(shape, (cx, cy), (a, b), rng.uniform(0, math.pi))
        placed.append((cx, cy, a))
        h[m] = rng.uniform(*h_range)
        labels[m] = k
        centers.append((float(cx), float(cy)))
        areas.append(int(m.sum()))

    e = np.where(labels > 0, 0.05, 0.25)
    h = np.clip(h + rng.normal(0, noise, shape), 0, None)
    e = np.clip(e + rng.normal(0, noise, shape), 0, None)
    return SyntheticSlide(render_rgb(h, e), labels, centers, areas, baseline_area)
