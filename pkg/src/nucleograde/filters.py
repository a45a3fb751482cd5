"""Scalar-field filters used by the detection and segmentation stages.

All filters take 2-D float arrays and return arrays of the same shape.
Out-of-image samples replicate the nearest edge pixel everywhere, so the
filters agree with each other at the borders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class DiffusionParams:
    iterations: int = 10
    kappa: float = 15.0
    rate: float = 0.2

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if not 0 < self.rate <= 0.25:
            raise ValueError("rate must lie in (0, 0.25] for a stable explicit step")


@dataclass(frozen=True)
class DoGParams:
    sigma1: float = 4.0
    sigma2: float = 10.0

    def __post_init__(self):
        if not 0 < self.sigma1 < self.sigma2:
            raise ValueError("need 0 < sigma1 < sigma2")


def _as_gray(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {arr.shape}")
    return arr


def _conductance(diff: np.ndarray, kappa: float, kind: str) -> np.ndarray:
    if kind == "exponential":
        return np.exp(-np.square(diff / kappa))
    if kind == "quadratic":
        return 1.0 / (1.0 + np.square(diff / kappa))
    if kind == "constant":
        return np.ones_like(diff)
    raise ValueError(f"unknown conductance {kind!r}")


def anisotropic_diffusion(img, iterations: int = 10, kappa: float = 15.0,
                          rate: float = 0.2, conductance: str = "exponential") -> np.ndarray:
    """Perona-Malik diffusion, explicit scheme on 4-neighbour differences.

    Each pixel moves by ``rate * sum(c(d) * d)`` over its N/S/E/W
    differences ``d``. Replicated borders give zero flux across the image
    edge, so the total intensity is conserved. ``conductance`` selects
    ``exp(-(d/kappa)^2)`` (default), ``1/(1+(d/kappa)^2)`` or a constant 1,
    the last being plain linear heat diffusion.
    """
    DiffusionParams(iterations, kappa, rate)
    out = _as_gray(img).copy()
    for _ in range(iterations):
        p = np.pad(out, 1, mode="edge")
        flux = np.zeros_like(out)
        for d in (p[:-2, 1:-1] - out, p[2:, 1:-1] - out,
                  p[1:-1, 2:] - out, p[1:-1, :-2] - out):
            flux += _conductance(d, kappa, conductance) * d
        out = out + rate * flux
    return out


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalised 1-D Gaussian truncated at radius ``ceil(3 sigma)``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = max(1, math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_kernel2d(sigma: float) -> np.ndarray:
    k = gaussian_kernel1d(sigma)
    return np.outer(k, k)


def gaussian_blur(img, sigma: float) -> np.ndarray:
    k = gaussian_kernel1d(sigma)
    out = ndimage.correlate1d(_as_gray(img), k, axis=0, mode="nearest")
    return ndimage.correlate1d(out, k, axis=1, mode="nearest")


def laplacian(img) -> np.ndarray:
    """5-point Laplacian with replicated borders."""
    a = _as_gray(img)
    p = np.pad(a, 1, mode="edge")
    return p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * a


def log_filter(img, sigma: float = 2.0) -> np.ndarray:
    """Laplacian of the Gaussian-blurred image; edges become zero crossings."""
    return laplacian(gaussian_blur(img, sigma))


def dog_filter(img, sigma1: float = 4.0, sigma2: float = 10.0) -> np.ndarray:
    """``blur(sigma1) - blur(sigma2)``; bright blobs of scale ~sigma1 peak."""
    a = _as_gray(img)
    return gaussian_blur(a, sigma1) - gaussian_blur(a, sigma2)


def bilateral_filter(img, sigma_space: float, sigma_range: float) -> np.ndarray:
    """Edge-preserving average with Gaussian spatial and range weights.

    The spatial window matches :func:`gaussian_blur` (radius
    ``ceil(3 sigma_space)``, replicated borders); weights are renormalised
    per pixel.
    """
    if sigma_space <= 0 or sigma_range <= 0:
        raise ValueError("sigmas must be positive")
    a = _as_gray(img)
    k = gaussian_kernel1d(sigma_space)
    r = len(k) // 2
    h, w = a.shape
    p = np.pad(a, r, mode="edge")
    num = np.zeros_like(a)
    den = np.zeros_like(a)
    inv = 1.0 / (2.0 * sigma_range * sigma_range)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            q = p[r + dy:r + dy + h, r + dx:r + dx + w]
            wgt = k[dy + r] * k[dx + r] * np.exp(-np.square(q - a) * inv)
            num += wgt * q
            den += wgt
    return num / den


def gamma_correct(img, gamma: float) -> np.ndarray:
    """``255 * (in / 255) ** gamma`` for inputs on the 0-255 scale."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    a = np.clip(_as_gray(img), 0.0, 255.0)
    return 255.0 * np.power(a / 255.0, gamma)


def threshold(img, t: float) -> np.ndarray:
    """Boolean mask of pixels strictly above ``t``."""
    return _as_gray(img) > t


def zero_crossings(response, t: float = 0.0) -> np.ndarray:
    """Positive side of each sign change of a signed response.

    A pixel is marked when it is above 0 and some 4-neighbour is below 0
    with a jump larger than ``t`` between the two. ``t`` suppresses the
    low-amplitude crossings that noise produces in flat regions.
    """
    r = _as_gray(response)
    pos = threshold(r, 0.0)
    p = np.pad(r, 1, mode="edge")
    out = np.zeros_like(pos)
    for q in (p[:-2, 1:-1], p[2:, 1:-1], p[1:-1, :-2], p[1:-1, 2:]):
        out |= (q < 0) & (r - q > t)
    return pos & out


def rescale_to_255(img) -> np.ndarray:
    """Min-max stretch to [0, 255]; a flat image maps to all zeros."""
    a = _as_gray(img)
    lo, hi = a.min(), a.max()
    if hi <= lo:
        return np.zeros_like(a)
    return (a - lo) * (255.0 / (hi - lo))
