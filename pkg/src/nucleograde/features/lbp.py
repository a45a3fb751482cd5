"""Local binary patterns and their completed (sign, magnitude, centre) form.

Neighbour ``p`` of ``P`` sits on the radius-``R`` circle at angle
``2 pi p / P`` measured counter-clockwise from the +x axis (image rows grow
downwards, so it is at ``(x + R cos t, y - R sin t)``). Off-grid samples are
bilinearly interpolated. Interpolation is applied to the differences
``g - g_c`` rather than the raw grey levels, so constant patches give
exact zeros and every code is exactly invariant to intensity shifts of
integer-valued images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyRegion, OutOfBounds


@dataclass(frozen=True, eq=False)
class LbpHistogram:
    P: int
    R: float
    bins: np.ndarray        # 2**P integer counts

    @property
    def total(self) -> int:
        return int(self.bins.sum())

    def normalized(self) -> np.ndarray:
        t = self.bins.sum()
        if t == 0:
            raise EmptyRegion("histogram has no coded pixels")
        return self.bins / t


@dataclass(frozen=True, eq=False)
class ClbpDescriptor:
    sign_hist: LbpHistogram
    magnitude_hist: LbpHistogram
    center_hist: np.ndarray  # 2 counts: below / at-or-above the region mean

    @property
    def vector(self) -> np.ndarray:
        """Each component normalised to sum 1, concatenated, then scaled by 1/3."""
        c = self.center_hist / self.center_hist.sum()
        v = np.concatenate([self.sign_hist.normalized(), self.magnitude_hist.normalized(), c])
        return v / 3.0


def neighbour_offsets(P: int, R: float) -> tuple[np.ndarray, np.ndarray]:
    """``(dx, dy)`` of the ``P`` sampling points, rounded to 1e-10 so exact grid hits stay exact."""
    if P < 1:
        raise ValueError("P must be >= 1")
    if R <= 0:
        raise ValueError("R must be positive")
    t = 2.0 * np.pi * np.arange(P) / P
    return np.round(R * np.cos(t), 10), np.round(-R * np.sin(t), 10)


def _reach(P: int, R: float):
    dx, dy = neighbour_offsets(P, R)
    return (int(math.floor(dx.min())), int(math.ceil(dx.max())),
            int(math.floor(dy.min())), int(math.ceil(dy.max())))


def codable_mask(shape, P: int, R: float) -> np.ndarray:
    """Pixels whose whole sampling circle lies inside an image of ``shape``."""
    h, w = shape
    x0, x1, y0, y1 = _reach(P, R)
    out = np.zeros((h, w), dtype=bool)
    out[max(-y0, 0):max(h - y1, 0), max(-x0, 0):max(w - x1, 0)] = True
    return out


def _differences(img: np.ndarray, ys: np.ndarray, xs: np.ndarray, P: int, R: float) -> np.ndarray:
    """Interpolated ``g_p - g_c`` for centres ``(ys, xs)``; shape ``(n, P)``."""
    h, w = img.shape
    gc = img[ys, xs]
    dx, dy = neighbour_offsets(P, R)
    out = np.empty((len(ys), P))
    for p in range(P):
        fx0, fy0 = math.floor(dx[p]), math.floor(dy[p])
        fx, fy = dx[p] - fx0, dy[p] - fy0
        x0, y0 = xs + fx0, ys + fy0
        x1, y1 = np.minimum(x0 + 1, w - 1), np.minimum(y0 + 1, h - 1)
        a = img[y0, x0] - gc
        b = img[y0, x1] - gc
        c = img[y1, x0] - gc
        d = img[y1, x1] - gc
        top = a + fx * (b - a)
        bottom = c + fx * (d - c)
        out[:, p] = top + fy * (bottom - top)
    return out


def _pack(bits: np.ndarray) -> np.ndarray:
    weights = np.left_shift(1, np.arange(bits.shape[1], dtype=np.int64))
    return bits.astype(np.int64) @ weights


def _gray(img) -> np.ndarray:
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {a.shape}")
    return a


def lbp_code(img, center, P: int = 8, R: float = 1.0) -> int:
    """``sum_p s(g_p - g_c) 2^p`` with ``s(x) = 1`` for ``x >= 0``.

    ``center`` is ``(x, y)``. Raises :class:`OutOfBounds` when the
    sampling circle leaves the image.
    """
    a = _gray(img)
    x, y = int(center[0]), int(center[1])
    if not (0 <= y < a.shape[0] and 0 <= x < a.shape[1]) or not codable_mask(a.shape, P, R)[y, x]:
        raise OutOfBounds(f"radius-{R} circle around ({x}, {y}) leaves the {a.shape[1]}x{a.shape[0]} image")
    d = _differences(a, np.array([y]), np.array([x]), P, R)
    return int(_pack(d >= 0)[0])


def lbp_image(img, P: int = 8, R: float = 1.0) -> np.ndarray:
    """Code of every pixel; -1 where the sampling circle leaves the image."""
    a = _gray(img)
    out = np.full(a.shape, -1, dtype=np.int64)
    ys, xs = np.nonzero(codable_mask(a.shape, P, R))
    if len(ys):
        out[ys, xs] = _pack(_differences(a, ys, xs, P, R) >= 0)
    return out


def _region_coords(a: np.ndarray, region, P: int, R: float):
    m = np.asarray(region, dtype=bool)
    if m.shape != a.shape:
        raise ValueError(f"image {a.shape} and region {m.shape} differ in shape")
    if not m.any():
        raise EmptyRegion("region has no pixels")
    return np.nonzero(m & codable_mask(a.shape, P, R)), m


def lbp_histogram(img, region, P: int = 8, R: float = 1.0) -> LbpHistogram:
    """Histogram of the codes of region pixels whose neighbourhood fits in the image."""
    a = _gray(img)
    (ys, xs), _ = _region_coords(a, region, P, R)
    codes = _pack(_differences(a, ys, xs, P, R) >= 0)
    return LbpHistogram(P, R, np.bincount(codes, minlength=1 << P).astype(np.int64))


def clbp_descriptor(img, region, P: int = 8, R: float = 1.0) -> ClbpDescriptor:
    """Sign, magnitude and centre components over a region.

    The magnitude bit of neighbour ``p`` is ``s(|g_p - g_c| - m)`` with
    ``m`` the mean absolute difference over all coded pixels of the
    region; the centre bit is ``s(g_c - mean(region))``.

    Raises
    ------
    EmptyRegion
        If the region is empty or none of its pixels can be coded.
    """
    a = _gray(img)
    (ys, xs), m = _region_coords(a, region, P, R)
    if len(ys) == 0:
        raise EmptyRegion("no region pixel has its full neighbourhood inside the image")
    d = _differences(a, ys, xs, P, R)
    mag = np.abs(d)
    n_bins = 1 << P
    sign = np.bincount(_pack(d >= 0), minlength=n_bins).astype(np.int64)
    magn = np.bincount(_pack(mag >= mag.mean()), minlength=n_bins).astype(np.int64)
    centre = np.bincount((a[ys, xs] >= a[m].mean()).astype(np.int64), minlength=2)
    return ClbpDescriptor(LbpHistogram(P, R, sign), LbpHistogram(P, R, magn),
                          centre.astype(np.int64))
