"""Pleomorphism criteria, quarter and slide scores, and evaluation metrics.

Each criterion compares a nucleus population with a baseline measured on
healthy nuclei and maps the fraction of abnormal nuclei to a score in
``{1, 2, 3}``: up to 30% gives 1, up to 60% gives 2, more gives 3.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from statistics import median
from typing import NamedTuple, Sequence

import numpy as np

from .config import PipelineConfig, ScoringConfig
from .errors import (EmptyAnnotation, EmptyCounts, EmptyPopulation, LengthMismatch,
                     OutOfRange, UndefinedMetric, WrongQuarterCount)

SCORES = (1, 2, 3)


@dataclass(frozen=True)
class NormalBaseline:
    normal_area: float
    normal_mean_intensity: float
    normal_circularity: float
    normal_nucleoli: float = 0.0

    def __post_init__(self):
        if min(self.normal_area, self.normal_mean_intensity, self.normal_circularity) <= 0:
            raise ValueError("baseline area, intensity and circularity must be positive")
        if self.normal_nucleoli < 0:
            raise ValueError("baseline nucleoli count must be >= 0")

    @classmethod
    def from_config(cls, c) -> "NormalBaseline":
        return cls(c.normal_area, c.normal_mean_intensity, c.normal_circularity, c.normal_nucleoli)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CriterionScores:
    anisonucleosis: int
    chromatin: int
    contour: int
    nucleoli: int

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v not in SCORES:
                raise OutOfRange(f"{k} score {v!r} not in {{1, 2, 3}}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EvalCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("counts must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


class PRF(NamedTuple):
    precision: float
    recall: float
    f_measure: float
    f_undefined: bool = False


def score_fraction(frac: float) -> int:
    """Map an abnormal fraction to a score; 30% and 60% belong to the lower band."""
    if not 0.0 <= frac <= 1.0:
        raise OutOfRange(f"fraction {frac} outside [0, 1]")
    if frac <= 0.30:
        return 1
    if frac <= 0.60:
        return 2
    return 3


def _population(nuclei) -> list:
    nuclei = list(nuclei)
    if not nuclei:
        raise EmptyPopulation("no nuclei to score")
    return nuclei


def score_chromatin(nuclei, base: NormalBaseline, margin: float = 10.0) -> int:
    """Fraction of nuclei darker than the baseline by more than ``margin``."""
    nuclei = _population(nuclei)
    cut = base.normal_mean_intensity - margin
    return score_fraction(sum(n.mean_intensity < cut for n in nuclei) / len(nuclei))


def _irregular(n, base: NormalBaseline, margin_ratio: float) -> bool:
    return n.circularity > base.normal_circularity * (1.0 + margin_ratio)


def score_contour(nuclei, base: NormalBaseline, margin_ratio: float = 0.15) -> int:
    nuclei = _population(nuclei)
    return score_fraction(sum(_irregular(n, base, margin_ratio) for n in nuclei) / len(nuclei))


def score_nucleoli(nuclei, base: NormalBaseline) -> int:
    """Fraction of nuclei with at least one revealed nucleolus."""
    nuclei = _population(nuclei)
    return score_fraction(sum(n.nucleoli_count >= 1 for n in nuclei) / len(nuclei))


def score_anisonucleosis(nuclei, base: NormalBaseline, cv3: float = 0.5,
                         margin_ratio: float = 0.15) -> int:
    """Size variation of the population.

    1 when every contour is regular and no nucleus exceeds twice the
    normal area; 3 when the area coefficient of variation exceeds ``cv3``
    or some nucleus exceeds three times the normal area; 2 otherwise.
    """
    nuclei = _population(nuclei)
    areas = np.array([n.area for n in nuclei], dtype=np.float64)
    cv = float(areas.std() / areas.mean())
    if cv > cv3 or areas.max() > 3.0 * base.normal_area:
        return 3
    regular = not any(_irregular(n, base, margin_ratio) for n in nuclei)
    if regular and areas.max() <= 2.0 * base.normal_area:
        return 1
    return 2


def score_criteria(nuclei, base: NormalBaseline, cfg: ScoringConfig | None = None) -> CriterionScores:
    cfg = cfg or ScoringConfig()
    nuclei = _population(nuclei)
    return CriterionScores(
        anisonucleosis=score_anisonucleosis(nuclei, base, cfg.cv3, cfg.contour_margin_ratio),
        chromatin=score_chromatin(nuclei, base, cfg.chromatin_margin),
        contour=score_contour(nuclei, base, cfg.contour_margin_ratio),
        nucleoli=score_nucleoli(nuclei, base),
    )


def quarter_score(cs: CriterionScores) -> int:
    """General score of a quarter: its worst criterion."""
    return max(cs.anisonucleosis, cs.chromatin, cs.contour, cs.nucleoli)


def slide_score(quarters: Sequence[int]) -> int:
    """3 if any quarter scores 3, else 2 if any scores 2, else 1."""
    quarters = list(quarters)
    if len(quarters) != 4:
        raise WrongQuarterCount(f"need 4 quarter scores, got {len(quarters)}")
    for q in quarters:
        if q not in SCORES:
            raise OutOfRange(f"quarter score {q!r} not in {{1, 2, 3}}")
    if 3 in quarters:
        return 3
    if 2 in quarters:
        return 2
    return 1


def accuracy(c: EvalCounts) -> float:
    total = c.tp + c.tn + c.fp + c.fn
    if total == 0:
        raise EmptyCounts("accuracy of zero counts")
    return (c.tp + c.tn) / total


def precision_recall_f(c: EvalCounts) -> PRF:
    """Precision, recall and their harmonic mean.

    Recall is ``tp / (tp + fn)``. When both precision and recall are 0
    the F-measure is reported as 0 with ``f_undefined`` set.
    """
    if c.tp + c.fp == 0:
        raise UndefinedMetric("precision undefined: no predictions")
    if c.tp + c.fn == 0:
        raise UndefinedMetric("recall undefined: no positives")
    p = c.tp / (c.tp + c.fp)
    r = c.tp / (c.tp + c.fn)
    if p + r == 0:
        return PRF(p, r, 0.0, True)
    return PRF(p, r, 2.0 * p * r / (p + r))


def confusion_matrix(pred: Sequence[int], truth: Sequence[int]) -> np.ndarray:
    """3x3 counts; row ``i - 1`` is truth score ``i``, column ``j - 1`` predicted ``j``."""
    pred, truth = list(pred), list(truth)
    if len(pred) != len(truth):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(truth)} truths")
    m = np.zeros((3, 3), dtype=np.int64)
    for p, t in zip(pred, truth):
        if p not in SCORES or t not in SCORES:
            raise OutOfRange(f"scores must be in {{1, 2, 3}}, got {p!r} / {t!r}")
        m[t - 1, p - 1] += 1
    return m


def matrix_accuracy(cm) -> float:
    """Overall accuracy: diagonal over total."""
    cm = np.asarray(cm)
    total = cm.sum()
    if total == 0:
        raise EmptyCounts("empty confusion matrix")
    return float(np.trace(cm) / total)


def per_class_accuracy(cm) -> np.ndarray:
    """Fraction of each true class scored correctly (diagonal over row sums); NaN for absent classes."""
    cm = np.asarray(cm, dtype=np.float64)
    rows = cm.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(rows > 0, np.diag(cm) / rows, np.nan)


def one_vs_rest_counts(cm, k: int) -> EvalCounts:
    """Binarise a confusion matrix around score ``k``."""
    cm = np.asarray(cm)
    i = k - 1
    tp = int(cm[i, i])
    fp = int(cm[:, i].sum()) - tp
    fn = int(cm[i, :].sum()) - tp
    return EvalCounts(tp, fp, int(cm.sum()) - tp - fp - fn, fn)


def baseline_from_features(features) -> NormalBaseline:
    """Median of each feature over healthy nuclei."""
    features = list(features)
    if not features:
        raise EmptyAnnotation("no healthy nuclei to build a baseline from")
    return NormalBaseline(
        normal_area=float(median(f.area for f in features)),
        normal_mean_intensity=float(median(f.mean_intensity for f in features)),
        normal_circularity=float(median(f.circularity for f in features)),
        normal_nucleoli=float(median(f.nucleoli_count for f in features)),
    )


def healthy_features(centres, img, cfg: PipelineConfig | None = None, model=None) -> list:
    """Segment the nucleus at each ``(x, y)`` centre and measure it.

    Each centre seeds the same level-set segmentation used for tumour
    nuclei. Centres whose nucleus cannot be segmented are skipped.
    """
    from . import detect, levelset
    from .detect import NucleusSeed
    from .features import extract_features

    cfg = cfg or PipelineConfig()
    pre = detect.preprocess(img, cfg)
    ls = cfg.levelset
    p = levelset.DrlseParams.from_config(ls)
    feats = []
    for x, y in centres:
        init = detect.build_initial_contour([NucleusSeed((float(x), float(y)), 0)], pre, cfg)
        masks = levelset.segment_nuclei(init, pre.diffused, p, edge_sigma=ls.edge_sigma,
                                        c0=ls.c0, padding=ls.crop_padding,
                                        split_core_ratio=ls.split_core_ratio)
        if masks:
            feats.append(extract_features(img, pre.h_channel, masks[0], cfg, model))
    return feats


def measure_baseline(healthy_annotations, img, cfg: PipelineConfig | None = None,
                     model=None) -> NormalBaseline:
    """Baseline from the medians of the annotated healthy nuclei of one image.

    Raises
    ------
    EmptyAnnotation
        If no centre is given or none can be segmented.
    """
    centres = list(healthy_annotations)
    if not centres:
        raise EmptyAnnotation("no healthy nuclei annotated")
    feats = healthy_features(centres, img, cfg, model)
    if not feats:
        raise EmptyAnnotation("none of the annotated healthy nuclei could be segmented")
    return baseline_from_features(feats)
