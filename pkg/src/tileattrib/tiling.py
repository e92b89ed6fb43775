"""Deterministic 512x512 tiling with full-coverage edge anchoring.

The grid walks the image at stride 512. When a dimension is not an exact
multiple of 512 the final row/column is anchored at ``dim - 512`` so the
union of rectangles covers every pixel without padding; the duplicated
strip near the edge is accepted.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ImageTooSmallError, RectOutOfBoundsError
from .validation import TILE_SIZE, check_image


@dataclass(frozen=True)
class TileRect:
    """One tile's placement inside an artwork image."""

    artwork_id: str
    row_index: int
    col_index: int
    x: int
    y: int
    size: int = TILE_SIZE

    @property
    def tile_id(self) -> str:
        return f"r{self.row_index}_c{self.col_index}"

    def to_dict(self) -> dict:
        return {
            "row": self.row_index,
            "col": self.col_index,
            "x": self.x,
            "y": self.y,
            "size": self.size,
        }

    @classmethod
    def from_dict(cls, d: dict, artwork_id: str = "") -> "TileRect":
        return cls(
            artwork_id=artwork_id,
            row_index=int(d["row"]),
            col_index=int(d["col"]),
            x=int(d["x"]),
            y=int(d["y"]),
            size=int(d.get("size", TILE_SIZE)),
        )


@dataclass
class TileSample:
    """Extracted tile pixels plus their provenance and class label."""

    pixels: np.ndarray  # (512, 512, 3) uint8
    rect: TileRect
    label: Optional[int] = None  # 1 positive, 0 negative, None unlabeled

    @property
    def artwork_id(self) -> str:
        return self.rect.artwork_id


def _axis_offsets(extent: int) -> list[int]:
    offsets = list(range(0, extent - TILE_SIZE + 1, TILE_SIZE))
    if extent % TILE_SIZE != 0:
        offsets.append(extent - TILE_SIZE)
    return offsets


def grid_shape(width_px: int, height_px: int) -> tuple[int, int]:
    """(rows, cols) of the tile grid: ceil(dim / 512) per axis."""
    return (-(-height_px // TILE_SIZE), -(-width_px // TILE_SIZE))


def tile_grid(width_px: int, height_px: int, artwork_id: str = "") -> list[TileRect]:
    """Enumerate the covering tile grid in row-major order.

    Raises ImageTooSmallError when either dimension is below 512.
    """
    if width_px < TILE_SIZE or height_px < TILE_SIZE:
        raise ImageTooSmallError(
            f"image {width_px}x{height_px} is smaller than one {TILE_SIZE}px tile"
        )
    xs = _axis_offsets(width_px)
    ys = _axis_offsets(height_px)
    return [
        TileRect(artwork_id=artwork_id, row_index=r, col_index=c, x=x, y=y)
        for r, y in enumerate(ys)
        for c, x in enumerate(xs)
    ]


def extract_tiles(
    image,
    grid: list[TileRect],
    label: Optional[int] = None,
) -> list[TileSample]:
    """Cut the image into samples, one per grid rectangle.

    Each sample's pixel buffer is an independent copy; the label is
    inherited from the artwork.
    """
    arr = check_image(image)
    height, width = arr.shape[:2]
    samples = []
    for rect in grid:
        if rect.x < 0 or rect.y < 0 or rect.x + rect.size > width or rect.y + rect.size > height:
            raise RectOutOfBoundsError(
                f"rect {rect.tile_id} at ({rect.x},{rect.y}) exceeds {width}x{height} image"
            )
        pixels = arr[rect.y : rect.y + rect.size, rect.x : rect.x + rect.size].copy()
        samples.append(TileSample(pixels=pixels, rect=rect, label=label))
    return samples
