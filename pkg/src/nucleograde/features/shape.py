"""Region size, intensity and boundary shape measures."""

from __future__ import annotations

import math

import numpy as np

from .. import morphology
from ..errors import EmptyRegion, MultipleComponents

# Moore neighbourhood as (dy, dx), clockwise on screen starting east.
_RING = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))
_RING_INDEX = {d: k for k, d in enumerate(_RING)}
_SQRT2 = math.sqrt(2.0)


def _nonempty(mask) -> np.ndarray:
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {m.shape}")
    if not m.any():
        raise EmptyRegion("region has no pixels")
    return m


def region_area(mask) -> int:
    return int(_nonempty(mask).sum())


def region_mean_intensity(img, mask) -> float:
    m = _nonempty(mask)
    a = np.asarray(img, dtype=np.float64)
    if a.shape != m.shape:
        raise ValueError(f"image {a.shape} and mask {m.shape} differ in shape")
    return float(a[m].mean())


def trace_boundary(mask) -> list[tuple[int, int]]:
    """Outer boundary of an 8-connected region as a closed list of ``(y, x)``.

    Moore-neighbour tracing from the first pixel in raster order, stopped
    when the start pixel is re-entered from the same side it was first
    left from. The start pixel is not repeated at the end.
    """
    m = _nonempty(mask)
    p = np.pad(m, 1)
    ys, xs = np.nonzero(p)
    start = (int(ys[0]), int(xs[0]))
    # raster order guarantees the west neighbour is background
    back = (start[0], start[1] - 1)
    cur = start
    path = [start]
    first_move = None
    while True:
        k0 = _RING_INDEX[(back[0] - cur[0], back[1] - cur[1])]
        nxt = None
        for i in range(1, 9):
            dy, dx = _RING[(k0 + i) % 8]
            cand = (cur[0] + dy, cur[1] + dx)
            if p[cand]:
                nxt = cand
                break
            back = cand
        if nxt is None:  # isolated pixel
            break
        if first_move is None:
            first_move = (nxt, back)
        elif cur == start and (nxt, back) == first_move:
            break
        cur = nxt
        path.append(cur)
    if len(path) > 1:
        path.pop()  # closing return to the start pixel
    return [(y - 1, x - 1) for y, x in path]


def _steps(points):
    return [(y1 - y0, x1 - x0) for (y0, x0), (y1, x1) in zip(points, points[1:] + points[:1])]


def boundary_perimeter(points, estimator: str = "corner") -> float:
    """Length of a closed traced boundary.

    ``"chain"`` charges 1 per axis step and sqrt(2) per diagonal step. It
    overstates circle perimeters by about 5% because of its octagonal bias.
    ``"corner"`` (default) reweights the same chain with a per-corner
    correction, ``0.980 n_axis + 1.406 n_diag - 0.091 n_corner``, which is
    nearly unbiased over all orientations.
    """
    if len(points) < 2:
        return 0.0
    steps = _steps(points)
    n_diag = sum(1 for dy, dx in steps if dy and dx)
    n_axis = len(steps) - n_diag
    if estimator == "chain":
        return n_axis + _SQRT2 * n_diag
    if estimator == "corner":
        n_corner = sum(1 for a, b in zip(steps, steps[1:] + steps[:1]) if a != b)
        return 0.980 * n_axis + 1.406 * n_diag - 0.091 * n_corner
    raise ValueError(f"unknown perimeter estimator {estimator!r}")


def region_perimeter(mask, estimator: str = "corner") -> float:
    return boundary_perimeter(trace_boundary(mask), estimator)


def region_circularity(mask, estimator: str = "corner") -> float:
    """``P^2 / A``; 4 pi for a circle and larger for irregular outlines.

    ``A`` is the pixel count and ``P`` the traced outer boundary length
    (see :func:`boundary_perimeter` for ``estimator``).

    Raises
    ------
    EmptyRegion
        If ``mask`` is empty.
    MultipleComponents
        If ``mask`` has more than one 8-connected component.
    """
    m = _nonempty(mask)
    _, n = morphology.label(m, 8)
    if n > 1:
        raise MultipleComponents(f"circularity needs one region, got {n}")
    per = region_perimeter(m, estimator)
    return per * per / float(m.sum())
