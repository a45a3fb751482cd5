"""Whole-image orchestration: quartering, per-quarter analysis, reports and evaluation."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import detect, levelset, morphology
from .config import SCHEMA, PipelineConfig
from .errors import EmptyPopulation, ImageTooSmall, MissingGroundTruth, NucleogradeError
from .features import (LinearSvmModel, NucleusFeatures, extract_features, load_model,
                       trace_boundary)
from .io import GroundTruth, read_image, read_point_annotations
from .scoring import (CriterionScores, EvalCounts, NormalBaseline, baseline_from_features,
                      confusion_matrix, healthy_features, matrix_accuracy, per_class_accuracy,
                      precision_recall_f, quarter_score, score_criteria, slide_score)
from .stains import as_rgb

log = logging.getLogger(__name__)

RECALL_DEFINITION = "tp / (tp + fn)"


@dataclass
class NucleusRecord:
    features: NucleusFeatures
    centroid: tuple[float, float]           # (x, y) in full-image coordinates
    polygon: list[tuple[int, int]]          # traced outline, (x, y)
    quarter: int = 0

    def to_dict(self) -> dict:
        f = self.features
        return {
            "quarter": self.quarter,
            "centroid": [round(self.centroid[0], 3), round(self.centroid[1], 3)],
            "area": f.area,
            "mean_intensity": round(f.mean_intensity, 6),
            "circularity": round(f.circularity, 6),
            "nucleoli_count": f.nucleoli_count,
            "polygon": [list(p) for p in self.polygon],
        }


@dataclass
class QuarterResult:
    index: int
    offset: tuple[int, int]                 # (x, y) of the quarter's top-left pixel
    shape: tuple[int, int]                  # (height, width)
    seeds: list[detect.NucleusSeed] = field(default_factory=list)
    nuclei: list[NucleusRecord] = field(default_factory=list)
    masks: list[np.ndarray] = field(default_factory=list)   # quarter coordinates
    scores: CriterionScores | None = None
    failures: list[dict] = field(default_factory=list)

    @property
    def score(self) -> int | None:
        return None if self.scores is None else quarter_score(self.scores)

    def seed_centers(self) -> list[tuple[float, float]]:
        ox, oy = self.offset
        return [(s.center[0] + ox, s.center[1] + oy) for s in self.seeds]


def quarter_offsets(shape) -> list[tuple[int, int, int, int]]:
    """``(x0, y0, x1, y1)`` (exclusive ends) of the four quadrants.

    Split at ``w // 2`` and ``h // 2``; the right and bottom quadrants take
    the odd column or row. Order: top-left, top-right, bottom-left,
    bottom-right.
    """
    h, w = shape[:2]
    if h < 2 or w < 2:
        raise ImageTooSmall(f"a {w}x{h} image cannot be quartered")
    mx, my = w // 2, h // 2
    return [(0, 0, mx, my), (mx, 0, w, my), (0, my, mx, h), (mx, my, w, h)]


def quarter_image(img) -> list[np.ndarray]:
    a = np.asarray(img)
    return [a[y0:y1, x0:x1] for x0, y0, x1, y1 in quarter_offsets(a.shape)]


def _fail(failures: list, stage: str, exc: Exception, **extra) -> None:
    log.warning("%s failed: %s", stage, exc)
    failures.append({"stage": stage, "error": type(exc).__name__, "message": str(exc), **extra})


def run_pipeline(img, cfg: PipelineConfig | None = None, baseline: NormalBaseline | None = None,
                 model: LinearSvmModel | None = None, *, index: int = 0,
                 offset: tuple[int, int] = (0, 0)) -> QuarterResult:
    """Detect, segment, measure and score the nuclei of one image or quarter.

    Failures are recorded per stage in ``failures`` instead of raised, so a
    bad nucleus or an empty quarter never stops the batch.
    """
    cfg = cfg or PipelineConfig()
    baseline = baseline or NormalBaseline.from_config(cfg.baseline)
    rgb = as_rgb(img)
    res = QuarterResult(index, offset, rgb.shape[:2])
    try:
        pre = detect.preprocess(rgb, cfg)
    except NucleogradeError as exc:
        _fail(res.failures, "preprocess", exc)
        return res
    res.seeds = detect.detect_centers(pre, cfg)
    initial = detect.build_initial_contour(res.seeds, pre, cfg)

    ls = cfg.levelset
    errors: list = []
    segments = levelset.segment_nuclei_detailed(
        initial, pre.diffused, levelset.DrlseParams.from_config(ls), edge_sigma=ls.edge_sigma,
        c0=ls.c0, padding=ls.crop_padding, split_core_ratio=ls.split_core_ratio, failures=errors)
    for k, exc in errors:
        _fail(res.failures, "segment", exc, component=k)

    ox, oy = offset
    for seg in segments:
        # keep the main piece when carving left a nucleus in fragments
        labels, n = morphology.label(seg.mask, 8)
        mask = seg.mask if n <= 1 else labels == 1 + int(np.argmax(np.bincount(labels.ravel())[1:]))
        try:
            feats = extract_features(rgb, pre.h_channel, mask, cfg, model)
        except NucleogradeError as exc:
            _fail(res.failures, "features", exc, component=seg.label)
            continue
        ys, xs = np.nonzero(mask)
        poly = [(x + ox, y + oy) for y, x in trace_boundary(mask)]
        res.nuclei.append(NucleusRecord(feats, (float(xs.mean()) + ox, float(ys.mean()) + oy),
                                        poly, index))
        res.masks.append(mask)
    try:
        res.scores = score_criteria([r.features for r in res.nuclei], baseline, cfg.scoring)
    except EmptyPopulation as exc:
        _fail(res.failures, "scoring", exc)
    return res


@dataclass
class ImageResult:
    image_id: str
    shape: tuple[int, int]
    quarters: list[QuarterResult]
    labels: np.ndarray
    failures: list[dict] = field(default_factory=list)

    @property
    def slide_score(self) -> int | None:
        """Worst quarter; quarters without nuclei count as 1. None if no quarter was scored."""
        if not self.quarters or all(q.score is None for q in self.quarters):
            return None
        scores = [q.score or 1 for q in self.quarters]
        return slide_score(scores) if len(scores) == 4 else max(scores)

    @property
    def nuclei(self) -> list[NucleusRecord]:
        return [n for q in self.quarters for n in q.nuclei]

    def seed_centers(self) -> list[tuple[float, float]]:
        return [c for q in self.quarters for c in q.seed_centers()]

    @property
    def n_failures(self) -> int:
        return len(self.failures) + sum(len(q.failures) for q in self.quarters)


def process_image(img, image_id: str, cfg: PipelineConfig | None = None,
                  baseline: NormalBaseline | None = None,
                  model: LinearSvmModel | None = None) -> ImageResult:
    """Run :func:`run_pipeline` on each quadrant (or the whole image) and assemble a label map."""
    cfg = cfg or PipelineConfig()
    rgb = as_rgb(img)
    h, w = rgb.shape[:2]
    boxes = quarter_offsets(rgb.shape) if cfg.run.quarters else [(0, 0, w, h)]
    labels = np.zeros((h, w), dtype=np.int32)
    quarters = []
    next_id = 1
    for i, (x0, y0, x1, y1) in enumerate(boxes):
        q = run_pipeline(rgb[y0:y1, x0:x1], cfg, baseline, model, index=i, offset=(x0, y0))
        for m in q.masks:
            labels[y0:y1, x0:x1][m] = next_id
            next_id += 1
        quarters.append(q)
    return ImageResult(image_id, (h, w), quarters, labels)


def image_report(res: ImageResult, cfg: PipelineConfig, baseline: NormalBaseline,
                 model_name: str | None = None) -> dict:
    """JSON-ready per-image report. Contains no timestamps or paths, so it is reproducible."""
    nuclei = []
    for i, n in enumerate(res.nuclei, start=1):
        d = n.to_dict()
        d["id"] = i
        nuclei.append(d)
    return {
        "schema": SCHEMA,
        "image_id": res.image_id,
        "height": res.shape[0],
        "width": res.shape[1],
        "config_hash": cfg.hash(),
        "baseline": baseline.to_dict(),
        "nucleoli_model": model_name,
        "quarters": [
            {
                "index": q.index,
                "offset": list(q.offset),
                "height": q.shape[0],
                "width": q.shape[1],
                "n_seeds": len(q.seeds),
                "n_nuclei": len(q.nuclei),
                "seeds": [[round(x, 3), round(y, 3)] for x, y in q.seed_centers()],
                "scores": None if q.scores is None else q.scores.to_dict(),
                "quarter_score": q.score,
                "failures": q.failures,
            }
            for q in res.quarters
        ],
        "slide_score": res.slide_score,
        "n_nuclei": len(nuclei),
        "nuclei": nuclei,
        "failures": res.failures,
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=1) + "\n"


# ---------------------------------------------------------------- evaluation

def match_centers(pred, truth, radius: float) -> list[tuple[int, int, float]]:
    """Greedy one-to-one matching, closest pairs first; returns ``(i_pred, i_truth, dist)``."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 2)
    truth = np.asarray(truth, dtype=np.float64).reshape(-1, 2)
    if len(pred) == 0 or len(truth) == 0:
        return []
    d = np.hypot(pred[:, None, 0] - truth[None, :, 0], pred[:, None, 1] - truth[None, :, 1])
    ii, jj = np.nonzero(d <= radius)
    order = sorted(zip(d[ii, jj], ii, jj))
    used_p, used_t, out = set(), set(), []
    for dist, i, j in order:
        if i in used_p or j in used_t:
            continue
        used_p.add(i)
        used_t.add(j)
        out.append((int(i), int(j), float(dist)))
    return out


def detection_counts(pred, truth, radius: float) -> EvalCounts:
    """Matched pairs are true positives; ``tn`` is not defined for detection and is 0."""
    tp = len(match_centers(pred, truth, radius))
    return EvalCounts(tp=tp, fp=len(pred) - tp, tn=0, fn=len(truth) - tp)


@dataclass
class Evaluation:
    counts: EvalCounts
    per_image: dict[str, EvalCounts]
    confusion: np.ndarray | None = None
    score_pairs: list[tuple[str, int, int]] = field(default_factory=list)  # (id, pred, truth)

    def to_dict(self) -> dict:
        out = {"detection": self.counts.to_dict(), "recall_definition": RECALL_DEFINITION,
               "per_image": {k: v.to_dict() for k, v in sorted(self.per_image.items())}}
        try:
            p = precision_recall_f(self.counts)
            out.update(precision=p.precision, recall=p.recall, f_measure=p.f_measure,
                       f_undefined=p.f_undefined)
        except ZeroDivisionError as exc:
            out["metric_error"] = str(exc)
        if self.confusion is not None:
            out["confusion_matrix"] = self.confusion.tolist()
            if self.confusion.sum():
                out["score_accuracy"] = matrix_accuracy(self.confusion)
                out["per_class_accuracy"] = [None if np.isnan(v) else float(v)
                                             for v in per_class_accuracy(self.confusion)]
        return out


def evaluate(predictions: dict[str, list[tuple[float, float]]], gt: GroundTruth,
             match_radius: float = 8.0,
             pred_scores: dict[str, int | None] | None = None) -> Evaluation:
    """Compare predicted centres (and optionally slide scores) with ground truth.

    Raises
    ------
    MissingGroundTruth
        If a predicted image has no ground-truth centres (when centres are
        given) or no ground-truth score (when scores are compared).
    """
    per_image = {}
    if gt.centers:
        for image_id, pred in predictions.items():
            if image_id not in gt.centers:
                raise MissingGroundTruth(f"no ground-truth centres for image {image_id!r}")
            per_image[image_id] = detection_counts(pred, gt.centers[image_id], match_radius)
    total = EvalCounts(*(sum(getattr(c, k) for c in per_image.values())
                         for k in ("tp", "fp", "tn", "fn")))
    cm, pairs = None, []
    if pred_scores is not None and gt.scores:
        for image_id, s in sorted(pred_scores.items()):
            if image_id not in gt.scores:
                raise MissingGroundTruth(f"no ground-truth score for image {image_id!r}")
            if s is not None:
                pairs.append((image_id, s, gt.scores[image_id]))
        cm = confusion_matrix([p for _, p, _ in pairs], [t for _, _, t in pairs])
    return Evaluation(total, per_image, cm, pairs)


# ------------------------------------------------------------------- batches

def resolve_baseline(cfg: PipelineConfig, model: LinearSvmModel | None = None) -> NormalBaseline:
    """Baseline from healthy-nucleus annotations if configured, else the configured values."""
    path = cfg.baseline.annotations
    if not path:
        return NormalBaseline.from_config(cfg.baseline)
    by_image: dict[Path, list] = {}
    for p, x, y, _ in read_point_annotations(path, labelled=False):
        by_image.setdefault(p, []).append((x, y))
    feats = []
    for p, pts in sorted(by_image.items()):
        feats.extend(healthy_features(pts, read_image(p), cfg, model))
    return baseline_from_features(feats)


def load_nucleoli_model(cfg: PipelineConfig) -> LinearSvmModel | None:
    return load_model(cfg.run.nucleoli_model) if cfg.run.nucleoli_model else None


def _process_path(args):
    path, cfg, baseline, model = args
    image_id = Path(path).stem
    try:
        img = read_image(path)
    except NucleogradeError as exc:
        res = ImageResult(image_id, (0, 0), [], np.zeros((0, 0), dtype=np.int32))
        _fail(res.failures, "load", exc)
        return res
    try:
        return process_image(img, image_id, cfg, baseline, model)
    except NucleogradeError as exc:
        res = ImageResult(image_id, img.shape[:2], [], np.zeros(img.shape[:2], dtype=np.int32))
        _fail(res.failures, "quarter", exc)
        return res


def process_paths(paths, cfg: PipelineConfig, baseline: NormalBaseline,
                  model: LinearSvmModel | None = None) -> list[ImageResult]:
    """Process images in input order, in parallel when ``cfg.run.workers > 1``."""
    jobs = [(p, cfg, baseline, model) for p in paths]
    if cfg.run.workers <= 1 or len(jobs) <= 1:
        return [_process_path(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=cfg.run.workers) as ex:
        return list(ex.map(_process_path, jobs))
