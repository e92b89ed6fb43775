"""Input validation helpers shared by the estimators and pipeline stages."""

import numpy as np

from .exceptions import BadTileShapeError, UntrainedClassifierError

TILE_SIZE = 512


def check_image(pixels) -> np.ndarray:
    """Coerce a pixel buffer to HxWx3 uint8.

    Grayscale (HxW or HxWx1) input is replicated to three channels.
    """
    arr = np.asarray(pixels)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    elif arr.ndim == 3 and arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise BadTileShapeError(f"expected HxWx3 pixel buffer, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer):
            raise BadTileShapeError(f"expected 8-bit integer pixels, got dtype {arr.dtype}")
        if arr.min() < 0 or arr.max() > 255:
            raise BadTileShapeError("integer pixel values outside [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def check_tile(pixels) -> np.ndarray:
    """Validate one 512x512x3 8-bit tile."""
    arr = check_image(pixels)
    if arr.shape[0] != TILE_SIZE or arr.shape[1] != TILE_SIZE:
        raise BadTileShapeError(
            f"expected {TILE_SIZE}x{TILE_SIZE} tile, got {arr.shape[0]}x{arr.shape[1]}"
        )
    return arr


def check_tile_batch(X) -> np.ndarray:
    """Validate a batch of tiles, shape (n, 512, 512, 3) uint8."""
    if isinstance(X, np.ndarray) and X.ndim == 4:
        if X.shape[1:] != (TILE_SIZE, TILE_SIZE, 3):
            raise BadTileShapeError(f"expected (n, 512, 512, 3), got {X.shape}")
        if X.dtype != np.uint8:
            return np.stack([check_tile(t) for t in X])
        return X
    return np.stack([check_tile(t) for t in X])


def check_binary_labels(y, n: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {y.shape}")
    y = y.astype(np.float64)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("labels must be 0 or 1")
    return y


def check_is_fitted(estimator, attribute: str, message: str) -> None:
    if getattr(estimator, attribute, None) is None:
        raise UntrainedClassifierError(message)
