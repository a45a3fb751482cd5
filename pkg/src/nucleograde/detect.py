"""First segmentation level: edge map, nucleus centres and initial regions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import filters, morphology
from .config import PipelineConfig
from .stains import as_rgb, separate_hematoxylin


@dataclass
class PreprocessOutput:
    h_channel: np.ndarray
    diffused: np.ndarray
    edge_binary: np.ndarray


@dataclass(frozen=True)
class NucleusSeed:
    center: tuple[float, float]  # (x, y)
    source_blob_area: int


def preprocess(img, cfg: PipelineConfig | None = None) -> PreprocessOutput:
    """Hematoxylin channel -> anisotropic diffusion -> LoG zero crossings."""
    cfg = cfg or PipelineConfig()
    rgb = as_rgb(img)
    s = cfg.stains
    h = separate_hematoxylin(rgb, s.matrix(), background=s.background,
                             max_concentration=s.max_concentration,
                             dark_nuclei=s.dark_nuclei)
    p = cfg.preprocess
    diffused = filters.anisotropic_diffusion(
        h, p.diffusion_iterations, p.diffusion_kappa, p.diffusion_rate)
    edges = filters.zero_crossings(filters.log_filter(diffused, p.log_sigma),
                                   p.log_threshold)
    return PreprocessOutput(h, diffused, edges)


def cluster_mask(edge_binary, cfg: PipelineConfig | None = None) -> np.ndarray:
    """Closed and hole-filled edge map: the blobs that may hold nuclei."""
    cfg = cfg or PipelineConfig()
    closed = morphology.close(edge_binary, morphology.disk(cfg.detect.close_radius))
    return morphology.fill_holes(closed)


def center_mask(pre: PreprocessOutput, cfg: PipelineConfig | None = None) -> np.ndarray:
    """Cluster mask eroded by the healthy-nucleus disk.

    Isolated objects no larger than a healthy nucleus vanish here; what is
    left sits around the middle of each larger nucleus.
    """
    cfg = cfg or PipelineConfig()
    return morphology.erode(cluster_mask(pre.edge_binary, cfg),
                            morphology.disk(cfg.detect.r_healthy))


def detect_centers(pre: PreprocessOutput, cfg: PipelineConfig | None = None) -> list[NucleusSeed]:
    cfg = cfg or PipelineConfig()
    d = cfg.detect
    gray = center_mask(pre, cfg).astype(np.float64) * 255.0
    response = filters.rescale_to_255(filters.dog_filter(gray, d.dog_sigma1, d.dog_sigma2))
    blobs = filters.threshold(response, d.dog_threshold)
    return [NucleusSeed(c.centroid, c.pixel_count)
            for c in morphology.connected_components(blobs, 8)
            if c.pixel_count >= d.min_seed_area]


def rasterize_seeds(seeds, shape) -> np.ndarray:
    out = np.zeros(shape, dtype=bool)
    h, w = shape
    for s in seeds:
        x, y = int(round(s.center[0])), int(round(s.center[1]))
        if not (0 <= x < w and 0 <= y < h):
            raise ValueError(f"seed {s.center} outside a {w}x{h} image")
        out[y, x] = True
    return out


def build_initial_contour(seeds, pre: PreprocessOutput,
                          cfg: PipelineConfig | None = None) -> np.ndarray:
    """Initial level-set region from dilated seeds masked by the cluster map.

    The product with the cluster mask removes seed pixels that fall in
    background; closing and hole filling then give closed regions. The
    result is clipped to the cluster mask so it never leaves it.
    """
    cfg = cfg or PipelineConfig()
    shape = pre.edge_binary.shape
    if not seeds:
        return np.zeros(shape, dtype=bool)
    support = cluster_mask(pre.edge_binary, cfg)
    grown = morphology.dilate(rasterize_seeds(seeds, shape),
                              morphology.disk(cfg.detect.seed_radius))
    product = grown & support
    region = morphology.fill_holes(
        morphology.close(product, morphology.disk(cfg.detect.close_radius)))
    return region & support


def seeds_to_rows(image_id: str, seeds, offset=(0, 0)) -> list[tuple[str, float, float]]:
    """CSV rows ``(image_id, x, y)``; ``offset`` shifts quarter coordinates."""
    ox, oy = offset
    return [(image_id, s.center[0] + ox, s.center[1] + oy) for s in seeds]
