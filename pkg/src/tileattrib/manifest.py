"""Artwork manifest ingestion.

The manifest is UTF-8 CSV with header
``artwork_id,title,label,certainty,image_path,px_per_mm`` or a JSON array
with the same field names. Optional ``width_px``/``height_px`` columns may
carry the image dimensions directly; otherwise they are read from the
image file header, which must then exist.
"""

import csv
import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from PIL import Image

from .exceptions import DuplicateIdError, MalformedManifestError, MissingImageFileError

MANIFEST_FIELDS = ("artwork_id", "title", "label", "certainty", "image_path", "px_per_mm")
OPTIONAL_FIELDS = ("width_px", "height_px")


class Label(Enum):
    POSITIVE = "positive"  # target artist
    NEGATIVE = "negative"  # comparative artist

    @property
    def binary(self) -> int:
        return 1 if self is Label.POSITIVE else 0


class Certainty(Enum):
    CERTAIN = "1"  # undisputed authorship, eligible for training
    DISPUTED = "disputed"


@dataclass(frozen=True)
class ArtworkRecord:
    """One painting: identity, class label, certainty, and physical scale."""

    artwork_id: str
    title: str
    label: Label
    certainty: Certainty
    image_path: Path
    px_per_mm: float
    width_px: int = 0
    height_px: int = 0

    def __post_init__(self):
        if not self.artwork_id:
            raise MalformedManifestError("artwork_id must be non-empty")
        if not self.px_per_mm > 0:
            raise MalformedManifestError(
                f"{self.artwork_id}: px_per_mm must be positive, got {self.px_per_mm}"
            )
        if self.width_px < 0 or self.height_px < 0:
            raise MalformedManifestError(f"{self.artwork_id}: negative image dimensions")

    @property
    def eligible_for_training(self) -> bool:
        return self.certainty is Certainty.CERTAIN


def _parse_row(row: dict, source: str) -> ArtworkRecord:
    missing = [f for f in MANIFEST_FIELDS if row.get(f) in (None, "")]
    if missing:
        raise MalformedManifestError(f"{source}: missing fields {missing}")
    try:
        label = Label(str(row["label"]).strip().lower())
    except ValueError:
        raise MalformedManifestError(f"{source}: label must be positive/negative, got {row['label']!r}")
    try:
        certainty = Certainty(str(row["certainty"]).strip().lower())
    except ValueError:
        raise MalformedManifestError(f"{source}: certainty must be 1/disputed, got {row['certainty']!r}")
    try:
        px_per_mm = float(row["px_per_mm"])
    except (TypeError, ValueError):
        raise MalformedManifestError(f"{source}: px_per_mm is not a number: {row['px_per_mm']!r}")
    dims = {}
    for field in OPTIONAL_FIELDS:
        value = row.get(field)
        if value not in (None, ""):
            try:
                dims[field] = int(value)
            except (TypeError, ValueError):
                raise MalformedManifestError(f"{source}: {field} is not an integer: {value!r}")
    return ArtworkRecord(
        artwork_id=str(row["artwork_id"]).strip(),
        title=str(row["title"]).strip(),
        label=label,
        certainty=certainty,
        image_path=Path(str(row["image_path"]).strip()),
        px_per_mm=px_per_mm,
        **dims,
    )


def _fill_dimensions(record: ArtworkRecord, image_root: Path) -> ArtworkRecord:
    if record.width_px > 0 and record.height_px > 0:
        return record
    path = resolve_image_path(record, image_root)
    if not path.is_file():
        raise MissingImageFileError(f"{record.artwork_id}: image file not found: {path}")
    try:
        with Image.open(path) as img:
            width, height = img.size
    except Exception as exc:
        raise MalformedManifestError(f"{record.artwork_id}: cannot read image {path}: {exc}")
    return replace(record, width_px=width, height_px=height)


def resolve_image_path(record: ArtworkRecord, image_root: Union[str, Path]) -> Path:
    path = record.image_path
    return path if path.is_absolute() else Path(image_root) / path


def load_manifest(path: Union[str, Path], image_root: Optional[Union[str, Path]] = None) -> list[ArtworkRecord]:
    """Load and validate all artwork records from a CSV or JSON manifest.

    ``image_root`` anchors relative image paths (defaults to the
    manifest's directory). Records without explicit dimensions get them
    from the image file header.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingImageFileError(f"manifest not found: {path}")
    root = Path(image_root) if image_root is not None else path.parent

    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json" or text.lstrip().startswith("["):
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedManifestError(f"{path}: invalid JSON manifest: {exc}")
        if not isinstance(rows, list) or not all(isinstance(r, dict) for r in rows):
            raise MalformedManifestError(f"{path}: JSON manifest must be an array of objects")
        raw = [(f"{path}:{i}", row) for i, row in enumerate(rows)]
    else:
        reader = csv.DictReader(text.splitlines())
        header = reader.fieldnames or []
        missing = [f for f in MANIFEST_FIELDS if f not in header]
        if missing:
            raise MalformedManifestError(f"{path}: header missing columns {missing}")
        raw = [(f"{path}:{i + 2}", row) for i, row in enumerate(reader)]

    records = []
    seen: set[str] = set()
    for source, row in raw:
        record = _parse_row(row, source)
        if record.artwork_id in seen:
            raise DuplicateIdError(f"{source}: duplicate artwork_id {record.artwork_id!r}")
        seen.add(record.artwork_id)
        records.append(_fill_dimensions(record, root))
    return records


def class_counts(records: list[ArtworkRecord]) -> dict[str, int]:
    counts = {"positive": 0, "negative": 0}
    for record in records:
        counts[record.label.value] += 1
    return counts
