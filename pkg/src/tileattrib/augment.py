"""Stochastic tile augmentation battery.

Applied per sample, per epoch: random crop-and-resize, rotation,
horizontal flip, perspective jitter, elastic deformation, then contrast,
per-channel color balance, and additive Gaussian noise. Geometric
transforms are composed into a single homography (plus the elastic
displacement field) and resampled once with bilinear interpolation and
reflect padding.

Every transform degrades gracefully to the identity: when a drawn
parameter equals its identity value the corresponding stage is skipped,
so fully collapsed parameter ranges return the input bit-for-bit. The
tile's label and dimensions are never altered.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .tiling import TileSample
from .validation import TILE_SIZE, check_tile


@dataclass(frozen=True)
class AugmentParams:
    """Parameter ranges for one augmentation draw.

    Ranges are inclusive (low, high) bounds; a collapsed range pins the
    parameter. Magnitudes are fractions of the channel range or of the
    tile side where noted.
    """

    crop_fraction: tuple[float, float] = (0.8, 1.0)
    rotation_degrees: tuple[float, float] = (-15.0, 15.0)
    flip_probability: float = 0.5
    noise_sigma: tuple[float, float] = (0.0, 0.02)  # fraction of channel range
    contrast: tuple[float, float] = (0.8, 1.2)
    color_scale: tuple[float, float] = (0.9, 1.1)  # per channel
    perspective_jitter: float = 0.03  # max corner shift, fraction of side
    elastic_displacement: float = 8.0  # px, std of the displacement field
    elastic_smoothing: float = 34.0  # px, Gaussian smoothing of the field

    def __post_init__(self):
        for name in ("crop_fraction", "rotation_degrees", "noise_sigma", "contrast", "color_scale"):
            low, high = getattr(self, name)
            if not low <= high:
                raise ValueError(f"{name}: invalid range ({low}, {high})")
        if not 0.0 < self.crop_fraction[0] <= self.crop_fraction[1] <= 1.0:
            raise ValueError(f"crop_fraction must lie in (0, 1], got {self.crop_fraction}")
        if not 0.0 <= self.flip_probability <= 1.0:
            raise ValueError(f"flip_probability must lie in [0, 1], got {self.flip_probability}")
        if self.noise_sigma[0] < 0 or self.perspective_jitter < 0:
            raise ValueError("noise and perspective magnitudes must be non-negative")
        if self.elastic_displacement < 0 or self.elastic_smoothing <= 0:
            raise ValueError("elastic field parameters out of range")

    @classmethod
    def identity(cls) -> "AugmentParams":
        """Parameters that make augment() a bit-exact no-op."""
        return cls(
            crop_fraction=(1.0, 1.0),
            rotation_degrees=(0.0, 0.0),
            flip_probability=0.0,
            noise_sigma=(0.0, 0.0),
            contrast=(1.0, 1.0),
            color_scale=(1.0, 1.0),
            perspective_jitter=0.0,
            elastic_displacement=0.0,
        )

    @property
    def is_identity(self) -> bool:
        return (
            self.crop_fraction == (1.0, 1.0)
            and self.rotation_degrees == (0.0, 0.0)
            and self.flip_probability == 0.0
            and self.noise_sigma == (0.0, 0.0)
            and self.contrast == (1.0, 1.0)
            and self.color_scale == (1.0, 1.0)
            and self.perspective_jitter == 0.0
            and self.elastic_displacement == 0.0
        )


_EYE = np.eye(3)
_CENTER = (TILE_SIZE - 1) / 2.0


def _crop_matrix(fraction: float, u_x: float, u_y: float) -> np.ndarray:
    """Map output pixel centers onto a random crop window (inverse transform)."""
    crop = int(round(TILE_SIZE * fraction))
    crop = max(1, min(TILE_SIZE, crop))
    if crop == TILE_SIZE:
        return _EYE
    x0 = u_x * (TILE_SIZE - crop)
    y0 = u_y * (TILE_SIZE - crop)
    scale = crop / TILE_SIZE
    m = np.eye(3)
    m[0, 0] = m[1, 1] = scale
    m[0, 2] = x0 + 0.5 * scale - 0.5
    m[1, 2] = y0 + 0.5 * scale - 0.5
    return m


def _rotation_matrix(degrees: float) -> np.ndarray:
    if degrees == 0.0:
        return _EYE
    theta = np.radians(degrees)
    c, s = np.cos(theta), np.sin(theta)
    # inverse rotation about the tile center
    m = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    offset = np.array([_CENTER, _CENTER, 0.0])
    m[:2, 2] = offset[:2] - m[:2, :2] @ offset[:2]
    return m


def _flip_matrix() -> np.ndarray:
    m = np.eye(3)
    m[0, 0] = -1.0
    m[0, 2] = TILE_SIZE - 1
    return m


def _perspective_matrix(jitter: np.ndarray) -> np.ndarray:
    """Homography sending output corners to jittered source corners."""
    if not jitter.any():
        return _EYE
    last = TILE_SIZE - 1
    dst = np.array([[0, 0], [last, 0], [last, last], [0, last]], dtype=np.float64)
    src = dst + jitter
    a = np.zeros((8, 8))
    rhs = np.zeros(8)
    for i, ((x, y), (u, v)) in enumerate(zip(dst, src)):
        a[2 * i] = [x, y, 1, 0, 0, 0, -u * x, -u * y]
        a[2 * i + 1] = [0, 0, 0, x, y, 1, -v * x, -v * y]
        rhs[2 * i] = u
        rhs[2 * i + 1] = v
    h = np.linalg.solve(a, rhs)
    return np.array([[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]])


def _elastic_field(rng: np.random.Generator, displacement: float, smoothing: float):
    fields = []
    for _ in range(2):
        raw = rng.standard_normal((TILE_SIZE, TILE_SIZE))
        smooth = ndimage.gaussian_filter(raw, sigma=smoothing, mode="reflect")
        std = smooth.std()
        fields.append(smooth * (displacement / std) if std > 0 else np.zeros_like(smooth))
    return fields[0], fields[1]


def _warp(pixels: np.ndarray, matrix: np.ndarray, dx, dy) -> np.ndarray:
    grid_y, grid_x = np.mgrid[0:TILE_SIZE, 0:TILE_SIZE].astype(np.float64)
    if matrix is _EYE or np.array_equal(matrix, _EYE):
        src_x, src_y = grid_x, grid_y
    else:
        denom = matrix[2, 0] * grid_x + matrix[2, 1] * grid_y + matrix[2, 2]
        src_x = (matrix[0, 0] * grid_x + matrix[0, 1] * grid_y + matrix[0, 2]) / denom
        src_y = (matrix[1, 0] * grid_x + matrix[1, 1] * grid_y + matrix[1, 2]) / denom
    if dx is not None:
        src_x = src_x + dx
        src_y = src_y + dy
    coords = np.stack([src_y.ravel(), src_x.ravel()])
    out = np.empty((TILE_SIZE, TILE_SIZE, 3), dtype=np.float64)
    for ch in range(3):
        out[:, :, ch] = ndimage.map_coordinates(
            pixels[:, :, ch].astype(np.float64), coords, order=1, mode="reflect"
        ).reshape(TILE_SIZE, TILE_SIZE)
    return out


def augment(sample: TileSample, params: AugmentParams, rng: np.random.Generator) -> TileSample:
    """Draw one augmented variant of a tile.

    Deterministic for a given rng state; label and rect pass through
    unchanged and the output is clamped 8-bit 512x512x3.
    """
    pixels = check_tile(sample.pixels)

    # parameter draws happen in a fixed order to keep streams stable
    fraction = rng.uniform(*params.crop_fraction)
    crop_u = rng.uniform(size=2)
    angle = rng.uniform(*params.rotation_degrees)
    do_flip = rng.uniform() < params.flip_probability
    jit_max = params.perspective_jitter * TILE_SIZE
    jitter = rng.uniform(-jit_max, jit_max, size=(4, 2)) if jit_max > 0 else np.zeros((4, 2))
    sigma = rng.uniform(*params.noise_sigma)
    contrast = rng.uniform(*params.contrast)
    color = rng.uniform(*params.color_scale, size=3)

    # stages listed in forward application order; each entry is that
    # stage's inverse (sampling) map, so the composite chains left-to-right
    matrix = _EYE
    for stage in (
        _crop_matrix(fraction, *crop_u),
        _rotation_matrix(angle),
        _flip_matrix() if do_flip else _EYE,
        _perspective_matrix(jitter),
    ):
        if stage is not _EYE:
            matrix = matrix @ stage if matrix is not _EYE else stage

    dx = dy = None
    if params.elastic_displacement > 0:
        dx, dy = _elastic_field(rng, params.elastic_displacement, params.elastic_smoothing)

    if matrix is _EYE and dx is None:
        out = pixels.astype(np.float64)
        resampled = False
    else:
        out = _warp(pixels, matrix, dx, dy)
        resampled = True

    changed = resampled
    if contrast != 1.0:
        out = (out - 127.5) * contrast + 127.5
        changed = True
    if np.any(color != 1.0):
        out = out * color
        changed = True
    if sigma > 0.0:
        out = out + rng.standard_normal(out.shape) * (sigma * 255.0)
        changed = True

    if not changed:
        return replace(sample, pixels=pixels.copy())
    out = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return replace(sample, pixels=out)
