"""Image files, label PNGs and the CSV formats read and written by the CLI.

CSV files have a header row:

* centres: ``image_id,x,y``
* slide scores: ``image_id,score``
* nucleolus annotations: ``image_path,x,y,label`` (1 nucleolus, 2 other)
* healthy nuclei: ``image_path,x,y``
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidImage

IMAGE_SUFFIXES = (".png", ".tif", ".tiff", ".jpg", ".jpeg", ".bmp")


def read_image(path) -> np.ndarray:
    """Load any Pillow-readable image as ``uint8`` RGB."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise InvalidImage(f"cannot read image {path}: {exc}") from exc


def write_image(path, rgb) -> None:
    Image.fromarray(np.asarray(rgb, dtype=np.uint8)).save(path)


def write_label_png(path, labels) -> None:
    """16-bit PNG, one grey level per nucleus (0 = background)."""
    labels = np.asarray(labels)
    if labels.max(initial=0) > 65535:
        raise ValueError("too many labels for a 16-bit PNG")
    Image.fromarray(labels.astype(np.uint16)).save(path)


def read_label_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im, dtype=np.int64)


def list_images(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"input directory {d} does not exist")
    return sorted(p for p in d.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def _rows(path, required: tuple[str, ...]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing column(s) {', '.join(missing)}")
        return list(reader)


def read_centers(path) -> dict[str, list[tuple[float, float]]]:
    out: dict[str, list[tuple[float, float]]] = defaultdict(list)
    for r in _rows(path, ("image_id", "x", "y")):
        out[r["image_id"]].append((float(r["x"]), float(r["y"])))
    return dict(out)


def write_centers(path, rows) -> None:
    """``rows`` are ``(image_id, x, y)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["image_id", "x", "y"])
        for image_id, x, y in rows:
            w.writerow([image_id, f"{x:.3f}", f"{y:.3f}"])


def read_scores(path) -> dict[str, int]:
    out = {}
    for r in _rows(path, ("image_id", "score")):
        s = int(r["score"])
        if s not in (1, 2, 3):
            raise ValueError(f"{path}: score {s} for {r['image_id']} not in 1..3")
        out[r["image_id"]] = s
    return out


def read_summary_scores(path) -> dict[str, int | None]:
    """Slide scores from a run's ``summary.csv``; blank means unscored."""
    return {r["image_id"]: int(r["slide_score"]) if r["slide_score"] else None
            for r in _rows(path, ("image_id", "slide_score"))}


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _resolve(base: Path, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else base / q


def read_point_annotations(path, *, labelled: bool) -> list[tuple[Path, float, float, int | None]]:
    """Rows of an annotation CSV; image paths are relative to the CSV's folder."""
    base = Path(path).parent
    cols = ("image_path", "x", "y", "label") if labelled else ("image_path", "x", "y")
    out = []
    for r in _rows(path, cols):
        lab = int(r["label"]) if labelled else None
        out.append((_resolve(base, r["image_path"]), float(r["x"]), float(r["y"]), lab))
    return out


@dataclass
class GroundTruth:
    centers: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    scores: dict[str, int] = field(default_factory=dict)

    @classmethod
    def load(cls, centers_path=None, scores_path=None) -> "GroundTruth":
        return cls(read_centers(centers_path) if centers_path else {},
                   read_scores(scores_path) if scores_path else {})
