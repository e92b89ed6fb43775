"""PNG/TIFF image loading and saving (8-bit RGB)."""

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from .exceptions import MissingImageFileError


def load_image(path: Union[str, Path]) -> np.ndarray:
    """Read an image as HxWx3 uint8; grayscale is replicated to RGB."""
    path = Path(path)
    if not path.is_file():
        raise MissingImageFileError(f"image file not found: {path}")
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_png(path: Union[str, Path], pixels: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(pixels), mode="RGB").save(path, format="PNG")
