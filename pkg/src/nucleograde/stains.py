"""H&E colour deconvolution down to a single hematoxylin grey channel.

Pixels are mapped to optical density (Beer-Lambert) and unmixed with the
inverse of a 3x3 stain matrix whose rows are the unit OD vectors of
hematoxylin, eosin and a residual channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidImage, SingularStainMatrix

DEFAULT_HEMATOXYLIN = (0.650, 0.704, 0.286)
DEFAULT_EOSIN = (0.072, 0.990, 0.105)

_NORM_TOL = 1e-6
_DET_TOL = 1e-9


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0 or not np.isfinite(n):
        raise SingularStainMatrix(f"stain vector {v!r} has no direction")
    return v / n


@dataclass(frozen=True)
class StainMatrix:
    """Unit optical-density vectors for the two stains plus a residual."""

    hematoxylin_vector: tuple[float, float, float]
    eosin_vector: tuple[float, float, float]
    residual_vector: tuple[float, float, float]

    def __post_init__(self):
        for name in ("hematoxylin_vector", "eosin_vector", "residual_vector"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.shape != (3,):
                raise SingularStainMatrix(f"{name} must be a 3-vector")
            if abs(np.linalg.norm(v) - 1.0) > _NORM_TOL:
                raise SingularStainMatrix(f"{name} is not unit length")

    @classmethod
    def from_vectors(cls, hematoxylin, eosin, residual=None) -> "StainMatrix":
        """Normalise the given vectors; the residual defaults to H x E."""
        h = _unit(hematoxylin)
        e = _unit(eosin)
        r = _unit(np.cross(h, e) if residual is None else residual)
        return cls(tuple(h.tolist()), tuple(e.tolist()), tuple(r.tolist()))

    @classmethod
    def default(cls) -> "StainMatrix":
        return cls.from_vectors(DEFAULT_HEMATOXYLIN, DEFAULT_EOSIN)

    @property
    def matrix(self) -> np.ndarray:
        """Rows are the stain vectors, so ``od = concentrations @ matrix``."""
        return np.array(
            [self.hematoxylin_vector, self.eosin_vector, self.residual_vector],
            dtype=np.float64,
        )

    def inverse(self) -> np.ndarray:
        m = self.matrix
        if abs(np.linalg.det(m)) < _DET_TOL:
            raise SingularStainMatrix("stain vectors are linearly dependent")
        return np.linalg.inv(m)


def as_rgb(img) -> np.ndarray:
    """Validate an (H, W, 3) image with channel values in [0, 255]."""
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidImage(f"expected an (H, W, 3) RGB array, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidImage("image has zero size")
    arr = arr.astype(np.float64, copy=False)
    if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 255:
        raise InvalidImage("RGB values must lie in [0, 255]")
    return arr


def rgb_to_optical_density(img, background: float = 255.0) -> np.ndarray:
    """Per-channel ``-log10((c + 1) / (background + 1))``, shape (H, W, 3)."""
    if background <= 0:
        raise ValueError("background must be positive")
    rgb = as_rgb(img)
    return -np.log10((rgb + 1.0) / (background + 1.0))


def stain_concentrations(img, stains: StainMatrix | None = None,
                         background: float = 255.0) -> np.ndarray:
    """Unclamped (H, E, residual) concentrations, shape (H, W, 3)."""
    stains = stains or StainMatrix.default()
    od = rgb_to_optical_density(img, background)
    return od @ stains.inverse()


def separate_hematoxylin(img, stains: StainMatrix | None = None, *,
                         background: float = 255.0,
                         max_concentration: float = 1.5,
                         dark_nuclei: bool = True) -> np.ndarray:
    """Grey image of the hematoxylin channel on a 0-255 scale.

    Concentrations are clamped to ``[0, max_concentration]``. With
    ``dark_nuclei`` (the default) zero stain maps to 255 and
    ``max_concentration`` maps to 0, so nuclei are dark on a bright field.
    """
    if max_concentration <= 0:
        raise ValueError("max_concentration must be positive")
    h = stain_concentrations(img, stains, background)[..., 0]
    h = np.clip(h, 0.0, max_concentration) / max_concentration
    return 255.0 * (1.0 - h) if dark_nuclei else 255.0 * h


def compose_rgb(concentrations, stains: StainMatrix | None = None,
                background: float = 255.0) -> np.ndarray:
    """Inverse of the unmixing: render stain concentrations back to RGB.

    Returns floats in [0, 255]; callers round when they need 8-bit data.
    """
    stains = stains or StainMatrix.default()
    od = np.asarray(concentrations, dtype=np.float64) @ stains.matrix
    rgb = (background + 1.0) * np.power(10.0, -od) - 1.0
    return np.clip(rgb, 0.0, 255.0)
