"""Per-nucleus measurements: size, intensity, shape, texture and nucleoli."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .lbp import (ClbpDescriptor, LbpHistogram, clbp_descriptor, codable_mask,
                  lbp_code, lbp_histogram, lbp_image)
from .nucleoli import NUCLEOLUS, OTHER, annotated_descriptor, detect_nucleoli, find_candidates
from .shape import (boundary_perimeter, region_area, region_circularity,
                    region_mean_intensity, region_perimeter, trace_boundary)
from .svm import (LinearSvmModel, hinge_objective, load_model, loads_model, dumps_model,
                  save_model, svm_predict, svm_train)


@dataclass(frozen=True)
class NucleusFeatures:
    area: int
    mean_intensity: float
    circularity: float
    nucleoli_count: int = 0

    def __post_init__(self):
        if self.area < 1:
            raise ValueError("area must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def extract_features(rgb, gray, mask, cfg=None, model: LinearSvmModel | None = None) -> NucleusFeatures:
    """Measure one nucleus.

    ``gray`` is the image used for mean intensity (the hematoxylin channel
    in the pipeline, where denser chromatin is darker). Nucleoli are only
    counted when a trained ``model`` is given.
    """
    count = detect_nucleoli(rgb, mask, model, cfg) if model is not None else 0
    return NucleusFeatures(region_area(mask), region_mean_intensity(gray, mask),
                           region_circularity(mask), count)


__all__ = [
    "ClbpDescriptor", "LbpHistogram", "LinearSvmModel", "NUCLEOLUS", "NucleusFeatures", "OTHER",
    "annotated_descriptor", "boundary_perimeter", "clbp_descriptor", "codable_mask",
    "detect_nucleoli", "dumps_model", "extract_features", "find_candidates", "hinge_objective",
    "lbp_code", "lbp_histogram", "lbp_image", "load_model", "loads_model", "region_area",
    "region_circularity", "region_mean_intensity", "region_perimeter", "save_model",
    "svm_predict", "svm_train", "trace_boundary",
]
