"""Diagnostic overlays: uncertainty and confidence maps.

Tiles are tinted by alpha-blending a flat color over the painting. In
the uncertainty map red saturation grows linearly with the ensemble
variance; in the confidence map tiles turn green above the threshold and
red below it, with saturation proportional to the distance from the
threshold normalized per side (so both colors can reach full saturation
even when the threshold is off-center). Tiles are drawn in row-major
order and each blend reads the original pixels, so on edge-anchored
overlaps the later tile's tint wins.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .ensemble import EnsemblePrediction
from .exceptions import EmptyPredictionsError, GridMismatchError
from .tiling import TileRect
from .validation import check_image


class OverlayMode(Enum):
    UNCERTAINTY = "uncertainty"
    CONFIDENCE = "confidence"


@dataclass(frozen=True)
class OverlaySpec:
    mode: OverlayMode = OverlayMode.UNCERTAINTY
    alpha_max: float = 0.6
    variance_full_scale: float = 0.25
    uncertainty_color: tuple[int, int, int] = (255, 0, 0)
    positive_color: tuple[int, int, int] = (0, 255, 0)
    negative_color: tuple[int, int, int] = (255, 0, 0)
    outline_color: tuple[int, int, int] = (128, 0, 128)
    outline_width: int = 4
    dash_on: int = 12
    dash_off: int = 8

    def __post_init__(self):
        if not 0.0 < self.alpha_max <= 1.0:
            raise ValueError(f"alpha_max must lie in (0, 1], got {self.alpha_max}")
        if self.variance_full_scale <= 0.0:
            raise ValueError("variance_full_scale must be positive")


def _check_alignment(grid: Sequence[TileRect], predictions: Sequence[EnsemblePrediction]):
    if len(grid) != len(predictions):
        raise GridMismatchError(f"{len(predictions)} predictions for {len(grid)} grid tiles")
    for rect, pred in zip(grid, predictions):
        if pred.rect is not None and (pred.rect.x, pred.rect.y) != (rect.x, rect.y):
            raise GridMismatchError(
                f"prediction for tile at ({pred.rect.x},{pred.rect.y}) paired with "
                f"grid rect at ({rect.x},{rect.y})"
            )


def _tint(out: np.ndarray, base: np.ndarray, rect: TileRect, color, alpha: float) -> None:
    if alpha <= 0.0:
        return
    ys = slice(rect.y, rect.y + rect.size)
    xs = slice(rect.x, rect.x + rect.size)
    tint = np.asarray(color, dtype=np.float64)
    blended = (1.0 - alpha) * base[ys, xs].astype(np.float64) + alpha * tint
    out[ys, xs] = np.clip(np.rint(blended), 0, 255).astype(np.uint8)


def uncertainty_alpha(variance: float, spec: OverlaySpec) -> float:
    return spec.alpha_max * min(variance / spec.variance_full_scale, 1.0)


def confidence_alpha(mean: float, threshold: float, spec: OverlaySpec) -> tuple[float, bool]:
    """(alpha, is_positive) for one tile; exact threshold renders transparent."""
    positive = mean >= threshold
    side = (1.0 - threshold) if positive else threshold
    distance = abs(mean - threshold)
    if side <= 0.0:
        return (0.0 if distance == 0.0 else spec.alpha_max), positive
    return spec.alpha_max * min(distance / side, 1.0), positive


def render_uncertainty(
    image,
    grid: Sequence[TileRect],
    predictions: Sequence[EnsemblePrediction],
    spec: OverlaySpec = OverlaySpec(),
) -> np.ndarray:
    """Red tint per tile, saturation proportional to member disagreement."""
    base = check_image(image)
    _check_alignment(grid, predictions)
    out = base.copy()
    for rect, pred in zip(grid, predictions):
        _tint(out, base, rect, spec.uncertainty_color, uncertainty_alpha(pred.variance, spec))
    return out


def render_confidence(
    image,
    grid: Sequence[TileRect],
    predictions: Sequence[EnsemblePrediction],
    threshold: float,
    spec: OverlaySpec = OverlaySpec(mode=OverlayMode.CONFIDENCE),
) -> np.ndarray:
    """Green above / red below the threshold, saturation by distance from it."""
    base = check_image(image)
    _check_alignment(grid, predictions)
    out = base.copy()
    for rect, pred in zip(grid, predictions):
        alpha, positive = confidence_alpha(pred.mean, threshold, spec)
        color = spec.positive_color if positive else spec.negative_color
        _tint(out, base, rect, color, alpha)
    return out


def _edge_runs(length: int, on: int, off: int):
    """Start/stop pairs of dash segments along one edge."""
    period = on + off
    starts = range(0, length, period)
    return [(s, min(s + on, length)) for s in starts]


def _draw_outline(out: np.ndarray, rect: TileRect, spec: OverlaySpec, dashed: bool) -> None:
    color = np.asarray(spec.outline_color, dtype=np.uint8)
    w = spec.outline_width
    x0, y0 = rect.x, rect.y
    x1, y1 = rect.x + rect.size, rect.y + rect.size
    runs = _edge_runs(rect.size, spec.dash_on, spec.dash_off) if dashed else [(0, rect.size)]
    for a, b in runs:
        out[y0 : y0 + w, x0 + a : x0 + b] = color  # top
        out[y1 - w : y1, x0 + a : x0 + b] = color  # bottom
        out[y0 + a : y0 + b, x0 : x0 + w] = color  # left
        out[y0 + a : y0 + b, x1 - w : x1] = color  # right


def annotate_extremes(
    overlay,
    grid: Sequence[TileRect],
    predictions: Sequence[EnsemblePrediction],
    spec: OverlaySpec = OverlaySpec(),
) -> np.ndarray:
    """Outline the highest-mean tile (solid) and lowest-mean tile (dashed).

    Ties resolve to the earlier tile in row-major order; on a single tile
    the solid outline is drawn over the dashed one.
    """
    if len(predictions) == 0:
        raise EmptyPredictionsError("need at least one prediction to annotate extremes")
    _check_alignment(grid, predictions)
    out = check_image(overlay).copy()
    means = np.array([p.mean for p in predictions])
    _draw_outline(out, grid[int(np.argmin(means))], spec, dashed=True)
    _draw_outline(out, grid[int(np.argmax(means))], spec, dashed=False)
    return out
