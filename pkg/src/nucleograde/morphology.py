"""Binary morphology and connected-component labelling.

Pixels outside the image are background for every operation. Closing is
evaluated on a canvas padded by the element radius so that the dilation
step is not truncated at the border; cropping afterwards keeps it
extensive and idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


def disk(radius: int) -> np.ndarray:
    """Discrete disk ``dx^2 + dy^2 <= radius^2`` centred in a square array."""
    if radius < 1:
        raise ValueError("disk radius must be >= 1")
    y, x = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    return (x * x + y * y) <= radius * radius


def square(side: int) -> np.ndarray:
    if side < 1:
        raise ValueError("square side must be >= 1")
    return np.ones((side, side), dtype=bool)


CROSS = ndimage.generate_binary_structure(2, 1)
BLOCK = ndimage.generate_binary_structure(2, 2)


def _as_mask(mask) -> np.ndarray:
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {m.shape}")
    return m


def erode(mask, se) -> np.ndarray:
    return ndimage.binary_erosion(_as_mask(mask), structure=se, border_value=0)


def dilate(mask, se) -> np.ndarray:
    return ndimage.binary_dilation(_as_mask(mask), structure=se, border_value=0)


def open(mask, se) -> np.ndarray:  # noqa: A001 - mirrors the morphological name
    return dilate(erode(mask, se), se)


def close(mask, se) -> np.ndarray:
    m = _as_mask(mask)
    pad = max(se.shape) // 2 + 1
    big = np.pad(m, pad, mode="constant", constant_values=False)
    big = erode(dilate(big, se), se)
    return big[pad:-pad, pad:-pad]


def fill_holes(mask) -> np.ndarray:
    """Set background regions not 4-connected to the border."""
    return ndimage.binary_fill_holes(_as_mask(mask), structure=CROSS)


@dataclass(frozen=True)
class Component:
    label: int
    pixel_count: int
    centroid: tuple[float, float]          # (x, y)
    bounding_box: tuple[int, int, int, int]  # (x0, y0, x1, y1), inclusive


def label(mask, connectivity: int = 8) -> tuple[np.ndarray, int]:
    """Label image (0 = background) numbered in raster order of first pixel."""
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    structure = BLOCK if connectivity == 8 else CROSS
    labels, n = ndimage.label(_as_mask(mask), structure=structure)
    return labels, int(n)


def components_from_labels(labels: np.ndarray, n: int) -> list[Component]:
    if n == 0:
        return []
    idx = np.arange(1, n + 1)
    counts = ndimage.sum_labels(np.ones(labels.shape), labels, idx)
    centers = ndimage.center_of_mass(np.ones(labels.shape), labels, idx)
    slices = ndimage.find_objects(labels)
    out = []
    for i, (cnt, (cy, cx), sl) in enumerate(zip(counts, centers, slices), start=1):
        ys, xs = sl
        out.append(Component(
            label=i,
            pixel_count=int(cnt),
            centroid=(float(cx), float(cy)),
            bounding_box=(xs.start, ys.start, xs.stop - 1, ys.stop - 1),
        ))
    return out


def connected_components(mask, connectivity: int = 8) -> list[Component]:
    return components_from_labels(*label(mask, connectivity))
