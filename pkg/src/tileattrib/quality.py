"""Automatic quality control for digitized artwork images.

Checks physical sampling density, glare (saturated pixels), residual
high-frequency noise, and a cheap perspective-distortion heuristic based
on the straightness of the picture's outer frame edges.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .exceptions import DimensionMismatchError
from .manifest import ArtworkRecord
from .validation import check_image


@dataclass(frozen=True)
class QcThresholds:
    """Operational QC defaults; configurable, not canonical values."""

    min_px_per_mm: float = 4.5
    glare_max: float = 0.05
    noise_max: float = 0.15
    saturation_quantile: float = 0.98  # saturated = all channels in the top 2% of range
    max_edge_skew_degrees: float = 2.0
    edge_min_contrast: float = 24.0  # intensity step required to count as a frame edge


@dataclass(frozen=True)
class QualityReport:
    artwork_id: str
    resolution_ok: bool
    glare_fraction: float
    noise_score: float
    distortion_flag: bool
    passed: bool

    def to_dict(self) -> dict:
        return {
            "artwork_id": self.artwork_id,
            "resolution_ok": self.resolution_ok,
            "glare_fraction": self.glare_fraction,
            "noise_score": self.noise_score,
            "distortion_flag": self.distortion_flag,
            "passed": self.passed,
        }


def glare_fraction(image: np.ndarray, saturation_quantile: float = 0.98) -> float:
    """Fraction of pixels whose every channel sits in the saturated top band."""
    level = saturation_quantile * 255.0
    saturated = np.all(image.astype(np.float64) >= level, axis=2)
    return float(saturated.mean())


def noise_score(image: np.ndarray) -> float:
    """Mean absolute residual against a 3x3 box blur, normalized to [0, 1]."""
    img = image.astype(np.float64)
    blurred = ndimage.uniform_filter(img, size=(3, 3, 1), mode="reflect")
    return float(np.abs(img - blurred).mean() / 255.0)


_EDGE_FIT_RMS = 2.0  # px; a real frame edge lies on a line, texture does not


def _edge_angle(gray: np.ndarray, side: str, min_contrast: float) -> float | None:
    """Angle (degrees) of the frame edge found along one image side.

    Scans the outer eighth of the image for the strongest gradient step
    per row/column. Returns None when fewer than half the scan lines
    carry a strong edge or when the detected positions do not lie on a
    straight line (texture rather than a frame).
    """
    height, width = gray.shape
    if side in ("top", "bottom"):
        band = max(8, height // 8)
        grad = np.abs(np.diff(gray, axis=0))  # (height-1, width)
        window = grad[:band] if side == "top" else grad[-band:]
        positions = np.argmax(window, axis=0).astype(np.float64)
        strengths = window[positions.astype(int), np.arange(width)]
        lateral = np.arange(width, dtype=np.float64)
    else:
        band = max(8, width // 8)
        grad = np.abs(np.diff(gray, axis=1))  # (height, width-1)
        window = grad[:, :band] if side == "left" else grad[:, -band:]
        positions = np.argmax(window, axis=1).astype(np.float64)
        strengths = window[np.arange(height), positions.astype(int)]
        lateral = np.arange(height, dtype=np.float64)

    found = strengths >= min_contrast
    if found.sum() < found.size / 2:
        return None
    slope, intercept = np.polyfit(lateral[found], positions[found], 1)
    residual = positions[found] - (slope * lateral[found] + intercept)
    if np.sqrt(np.mean(residual * residual)) > _EDGE_FIT_RMS:
        return None
    return float(np.degrees(np.arctan(slope)))


def distortion_flag(image: np.ndarray, thresholds: QcThresholds) -> bool:
    """True when opposite frame edges deviate from parallel by > 2 degrees."""
    gray = image.astype(np.float64).mean(axis=2)
    for pair in (("top", "bottom"), ("left", "right")):
        angles = [_edge_angle(gray, side, thresholds.edge_min_contrast) for side in pair]
        if None not in angles and abs(angles[0] - angles[1]) > thresholds.max_edge_skew_degrees:
            return True
    return False


def quality_check(
    record: ArtworkRecord,
    image,
    thresholds: QcThresholds = QcThresholds(),
) -> QualityReport:
    """Run all QC gates on one artwork image."""
    arr = check_image(image)
    height, width = arr.shape[:2]
    if record.width_px and record.height_px and (width, height) != (record.width_px, record.height_px):
        raise DimensionMismatchError(
            f"{record.artwork_id}: image is {width}x{height}, "
            f"record says {record.width_px}x{record.height_px}"
        )
    resolution_ok = record.px_per_mm >= thresholds.min_px_per_mm
    glare = glare_fraction(arr, thresholds.saturation_quantile)
    noise = noise_score(arr)
    distorted = distortion_flag(arr, thresholds)
    passed = (
        resolution_ok
        and glare <= thresholds.glare_max
        and noise <= thresholds.noise_max
        and not distorted
    )
    return QualityReport(
        artwork_id=record.artwork_id,
        resolution_ok=resolution_ok,
        glare_fraction=glare,
        noise_score=noise,
        distortion_flag=distorted,
        passed=passed,
    )
