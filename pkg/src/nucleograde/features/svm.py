"""Linear SVM trained in the primal by deterministic subgradient descent.

The objective is ``0.5 |w|^2 + C sum_i max(0, 1 - y_i (w . x_i + b))``.
Each iteration takes a full-batch subgradient step of size ``1 / t`` and
projects ``w`` onto the ball ``|w| <= sqrt(2 C n)``, which holds the
optimum because the objective at ``w = 0, b = 0`` is ``C n``. The best
iterate seen is returned. No randomness is involved, so training is
bit-for-bit reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DegenerateLabels, DimensionMismatch, ModelFormatError

MAGIC = "NGSVM1"


@dataclass(frozen=True, eq=False)
class LinearSvmModel:
    weights: np.ndarray
    bias: float
    positive_label: int
    negative_label: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if not (np.all(np.isfinite(w)) and math.isfinite(self.bias)):
            raise ValueError("weights and bias must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def dim(self) -> int:
        return self.weights.size

    def decision(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(f"model expects {self.dim} features, got {x.shape[-1]}")
        return x @ self.weights + self.bias


def hinge_objective(w, b, X, y, c_reg) -> float:
    margins = 1.0 - y * (X @ w + b)
    return 0.5 * float(w @ w) + c_reg * float(np.maximum(margins, 0.0).sum())


def svm_train(samples, labels, c_reg: float = 10.0, *, positive_label=None,
              iterations: int = 10_000, checkpoints: list | None = None,
              checkpoint_every: int = 100) -> LinearSvmModel:
    """Fit a linear max-margin classifier.

    ``labels`` must hold exactly two distinct values. ``positive_label``
    picks the one mapped to ``+1`` (default: the larger). If
    ``checkpoints`` is a list, the objective of the returned iterate so
    far is appended to it every ``checkpoint_every`` iterations.
    """
    X = np.asarray(samples, dtype=np.float64)
    labels = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DimensionMismatch("samples must be a non-empty 2-D array")
    if labels.shape != (X.shape[0],):
        raise DimensionMismatch("need one label per sample")
    if c_reg <= 0:
        raise ValueError("c_reg must be positive")
    classes = sorted(set(labels.tolist()))
    if len(classes) != 2:
        raise DegenerateLabels(f"need exactly two classes, got {classes}")
    pos = classes[1] if positive_label is None else positive_label
    if pos not in classes:
        raise DegenerateLabels(f"positive label {pos!r} not among {classes}")
    neg = classes[0] if pos == classes[1] else classes[1]
    y = np.where(labels == pos, 1.0, -1.0)

    n, d = X.shape
    radius = math.sqrt(2.0 * c_reg * n)
    w, b = np.zeros(d), 0.0
    best_w, best_b = w.copy(), b
    best = hinge_objective(w, b, X, y, c_reg)
    for t in range(1, iterations + 1):
        active = y * (X @ w + b) < 1.0
        gw = w - c_reg * (y[active] @ X[active])
        gb = -c_reg * float(y[active].sum())
        w = w - gw / t
        b = b - gb / t
        norm = math.sqrt(float(w @ w))
        if norm > radius:
            w *= radius / norm
        obj = hinge_objective(w, b, X, y, c_reg)
        if obj < best:
            best, best_w, best_b = obj, w.copy(), b
        if checkpoints is not None and t % checkpoint_every == 0:
            checkpoints.append(best)
    return LinearSvmModel(best_w, best_b, pos, neg)


def svm_predict(model: LinearSvmModel, x):
    """``positive_label`` where ``w . x + b >= 0``; accepts one vector or a 2-D batch."""
    score = model.decision(x)
    if np.ndim(score) == 0:
        return model.positive_label if score >= 0 else model.negative_label
    return np.where(score >= 0, model.positive_label, model.negative_label)


def _fmt(v) -> str:
    return repr(float(v))


def _label_str(v) -> str:
    if isinstance(v, (bool, np.bool_)) or not isinstance(v, (int, np.integer)):
        raise ModelFormatError(f"labels must be integers, got {v!r}")
    return str(int(v))


def dumps_model(model: LinearSvmModel) -> str:
    lines = [
        MAGIC,
        str(model.dim),
        " ".join(_fmt(v) for v in model.weights),
        _fmt(model.bias),
        f"{_label_str(model.positive_label)} {_label_str(model.negative_label)}",
    ]
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> LinearSvmModel:
    lines = text.splitlines()
    if len(lines) < 5 or lines[0].strip() != MAGIC:
        raise ModelFormatError(f"not a {MAGIC} model")
    try:
        dim = int(lines[1])
        weights = np.array([float(v) for v in lines[2].split()], dtype=np.float64)
        bias = float(lines[3])
        pos, neg = (int(v) for v in lines[4].split())
    except ValueError as exc:
        raise ModelFormatError(f"malformed model: {exc}") from exc
    if weights.size != dim:
        raise ModelFormatError(f"header says {dim} weights, found {weights.size}")
    try:
        return LinearSvmModel(weights, bias, pos, neg)
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc


def save_model(model: LinearSvmModel, path) -> None:
    Path(path).write_text(dumps_model(model))


def load_model(path) -> LinearSvmModel:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from exc
    return loads_model(text)
