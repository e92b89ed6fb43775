"""Procedural two-texture corpus: oriented strokes vs isotropic noise.

Positive images carry horizontally streaked texture (anisotropic
smoothing of white noise), negatives an isotropically smoothed field.
Palette and tonal statistics are matched across classes so only the
texture separates them; the classes are linearly separable in the
orientation-energy features.
"""

import csv
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from .imgio import save_png

DEFAULT_SIZES = ((512, 512), (512, 512), (1024, 512), (512, 768))


def _to_paint(field: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    std = field.std()
    normed = (field - field.mean()) / (std if std > 0 else 1.0)
    base = 128.0 + 42.0 * normed
    tint = np.array([1.0, 0.92, 0.78]) * rng.uniform(0.94, 1.06, size=3)
    return np.clip(base[:, :, None] * tint, 0, 255).astype(np.uint8)


def make_texture_image(
    rng: np.random.Generator,
    width: int,
    height: int,
    oriented: bool,
) -> np.ndarray:
    """One synthetic painting surface, HxWx3 uint8."""
    raw = rng.standard_normal((height, width))
    if oriented:
        sigma = (rng.uniform(1.2, 2.0), rng.uniform(10.0, 16.0))  # (y, x): horizontal strokes
    else:
        iso = rng.uniform(3.5, 5.5)
        sigma = (iso, iso)
    return _to_paint(ndimage.gaussian_filter(raw, sigma=sigma, mode="reflect"), rng)


def oriented_tile(rng: np.random.Generator) -> np.ndarray:
    return make_texture_image(rng, 512, 512, oriented=True)


def isotropic_tile(rng: np.random.Generator) -> np.ndarray:
    return make_texture_image(rng, 512, 512, oriented=False)


def make_tile_corpus(n_per_class: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """(tiles, labels) with n oriented positives and n isotropic negatives."""
    rng = np.random.default_rng(seed)
    tiles = [oriented_tile(rng) for _ in range(n_per_class)]
    tiles += [isotropic_tile(rng) for _ in range(n_per_class)]
    labels = np.array([1] * n_per_class + [0] * n_per_class)
    return np.stack(tiles), labels


def write_corpus(
    directory: Union[str, Path],
    n_positive: int = 40,
    n_negative: int = 40,
    seed: int = 0,
    sizes: Sequence[tuple[int, int]] = DEFAULT_SIZES,
    n_disputed: int = 0,
    px_per_mm: float = 5.0,
) -> Path:
    """Write a full synthetic corpus (PNG images + CSV manifest).

    Returns the manifest path. Disputed works are extra oriented images
    marked certainty=disputed, usable by `analyze` but never split.
    """
    directory = Path(directory)
    (directory / "images").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []

    def emit(index: int, oriented: bool, certainty: str):
        width, height = sizes[index % len(sizes)]
        kind = "stroke" if oriented else "noise"
        prefix = "d" if certainty == "disputed" else ("p" if oriented else "n")
        artwork_id = f"{prefix}{index:03d}"
        image = make_texture_image(rng, width, height, oriented)
        rel = f"images/{artwork_id}.png"
        save_png(directory / rel, image)
        rows.append(
            {
                "artwork_id": artwork_id,
                "title": f"synthetic {kind} {index}",
                "label": "positive" if oriented else "negative",
                "certainty": certainty,
                "image_path": rel,
                "px_per_mm": px_per_mm,
                "width_px": width,
                "height_px": height,
            }
        )

    for i in range(n_positive):
        emit(i, True, "1")
    for i in range(n_negative):
        emit(i, False, "1")
    for i in range(n_disputed):
        emit(n_positive + i, True, "disputed")

    manifest = directory / "manifest.csv"
    with manifest.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return manifest
