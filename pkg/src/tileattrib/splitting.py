"""Group-aware train/val/test splitting with per-class tile balancing.

Assignment is always by whole artwork, never by tile, so no painting can
leak across splits. Work counts per split follow the configured ratios;
within each split the two classes' tile totals are balanced greedily.

Algorithm: per class, work quotas are the rounded ratio shares (largest
split absorbs the remainder); quota donations keep every split
non-empty. Works are then sorted by descending tile count and each is
assigned to the split with the largest remaining tile deficit for its
class. The seed only permutes works with equal tile counts, so the split
sizes are seed-independent.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Union

import numpy as np

from .exceptions import ClassMissingError, MalformedManifestError, TooFewWorksError
from .manifest import ArtworkRecord, Label


class Split(Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


SPLIT_ORDER = (Split.TRAIN, Split.VAL, Split.TEST)
DEFAULT_RATIOS = (0.8, 0.1, 0.1)


@dataclass
class SplitAssignment:
    """Artwork-to-split map plus the per-split class summary."""

    assignment: dict[str, Split]
    work_counts: dict[Split, dict[Label, int]]
    tile_counts: dict[Split, dict[Label, int]]
    seed: int
    ratios: tuple[float, float, float] = DEFAULT_RATIOS

    def works_in(self, split: Split) -> int:
        return sum(self.work_counts[split].values())

    def tiles_in(self, split: Split) -> int:
        return sum(self.tile_counts[split].values())

    @property
    def sizes(self) -> tuple[int, int, int]:
        return tuple(self.works_in(s) for s in SPLIT_ORDER)

    def to_dict(self) -> dict:
        summary = {}
        for split in SPLIT_ORDER:
            summary[split.value] = {
                "works": {
                    "negative": self.work_counts[split][Label.NEGATIVE],
                    "positive": self.work_counts[split][Label.POSITIVE],
                    "total": self.works_in(split),
                },
                "tiles": {
                    "negative": self.tile_counts[split][Label.NEGATIVE],
                    "positive": self.tile_counts[split][Label.POSITIVE],
                    "total": self.tiles_in(split),
                },
            }
        return {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "splits": {aid: s.value for aid, s in sorted(self.assignment.items())},
            "summary": summary,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SplitAssignment":
        assignment = {aid: Split(name) for aid, name in d["splits"].items()}
        work_counts = {s: {Label.POSITIVE: 0, Label.NEGATIVE: 0} for s in SPLIT_ORDER}
        tile_counts = {s: {Label.POSITIVE: 0, Label.NEGATIVE: 0} for s in SPLIT_ORDER}
        for split in SPLIT_ORDER:
            entry = d["summary"][split.value]
            for label in (Label.POSITIVE, Label.NEGATIVE):
                work_counts[split][label] = entry["works"][label.value]
                tile_counts[split][label] = entry["tiles"][label.value]
        return cls(
            assignment=assignment,
            work_counts=work_counts,
            tile_counts=tile_counts,
            seed=int(d.get("seed", 0)),
            ratios=tuple(d.get("ratios", DEFAULT_RATIOS)),
        )


def save_split(assignment: SplitAssignment, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(assignment.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_split(path: Union[str, Path]) -> SplitAssignment:
    return SplitAssignment.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _class_quotas(n_works: int, ratios: tuple[float, float, float]) -> list[int]:
    quotas = [round(ratios[0] * n_works), round(ratios[1] * n_works)]
    quotas.append(n_works - quotas[0] - quotas[1])
    while quotas[2] < 0:  # rounding overshoot on tiny classes
        quotas[int(np.argmax(quotas[:2]))] -= 1
        quotas[2] += 1
    return quotas


def _ensure_nonempty(quotas: dict[Label, list[int]], n_works: dict[Label, int],
                     ratios: tuple[float, float, float]) -> None:
    """Donate single work quotas so that no split ends up empty."""
    total = sum(n_works.values())
    while True:
        totals = [sum(quotas[lab][i] for lab in quotas) for i in range(3)]
        if min(totals) > 0:
            return
        receiver = totals.index(0)
        # donor: split with the largest excess over its ideal share
        excess = [totals[i] - ratios[i] * total for i in range(3)]
        excess[receiver] = -np.inf
        donor = int(np.argmax(excess))
        if totals[donor] <= 1 and donor != int(np.argmax(totals)):
            donor = int(np.argmax(totals))
        # donate from the class holding the most quota in the donor split
        label = max(quotas, key=lambda lab: (quotas[lab][donor], n_works[lab], lab.value))
        if quotas[label][donor] == 0:
            label = max(quotas, key=lambda lab: quotas[lab][donor])
        quotas[label][donor] -= 1
        quotas[label][receiver] += 1


def split_corpus(
    records: list[ArtworkRecord],
    tile_counts: dict[str, int],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> SplitAssignment:
    """Assign training-eligible artworks to train/val/test.

    Disputed works are excluded from all three splits. Raises
    ClassMissingError when a class has no eligible work and
    TooFewWorksError when a split would necessarily stay empty.
    """
    if abs(sum(ratios) - 1.0) > 1e-9 or any(r <= 0 for r in ratios):
        raise ValueError(f"ratios must be positive and sum to 1, got {ratios}")
    eligible = [r for r in records if r.eligible_for_training]
    by_class: dict[Label, list[ArtworkRecord]] = {Label.POSITIVE: [], Label.NEGATIVE: []}
    for record in eligible:
        if record.artwork_id not in tile_counts:
            raise MalformedManifestError(f"no tile count for artwork {record.artwork_id!r}")
        if tile_counts[record.artwork_id] <= 0:
            raise MalformedManifestError(
                f"tile count for {record.artwork_id!r} must be positive"
            )
        by_class[record.label].append(record)

    for label, works in by_class.items():
        if not works:
            raise ClassMissingError(f"no training-eligible {label.value} works")
    if len(eligible) < len(SPLIT_ORDER):
        raise TooFewWorksError(
            f"{len(eligible)} eligible works cannot populate {len(SPLIT_ORDER)} splits"
        )

    n_works = {label: len(works) for label, works in by_class.items()}
    quotas = {label: _class_quotas(n, ratios) for label, n in n_works.items()}
    _ensure_nonempty(quotas, n_works, ratios)

    rng = np.random.default_rng(seed)
    assignment: dict[str, Split] = {}
    work_counts = {s: {Label.POSITIVE: 0, Label.NEGATIVE: 0} for s in SPLIT_ORDER}
    assigned_tiles = {s: {Label.POSITIVE: 0, Label.NEGATIVE: 0} for s in SPLIT_ORDER}

    for label in (Label.POSITIVE, Label.NEGATIVE):
        works = list(by_class[label])
        rng.shuffle(works)  # randomizes order among equal tile counts only
        works.sort(key=lambda r: -tile_counts[r.artwork_id])
        class_tiles = sum(tile_counts[r.artwork_id] for r in works)
        remaining = list(quotas[label])
        targets = [class_tiles * q / n_works[label] for q in remaining]
        for record in works:
            open_splits = [i for i in range(3) if remaining[i] > 0]
            deficits = [targets[i] - assigned_tiles[SPLIT_ORDER[i]][label] for i in open_splits]
            chosen = open_splits[int(np.argmax(deficits))]
            split = SPLIT_ORDER[chosen]
            assignment[record.artwork_id] = split
            remaining[chosen] -= 1
            work_counts[split][label] += 1
            assigned_tiles[split][label] += tile_counts[record.artwork_id]

    return SplitAssignment(
        assignment=assignment,
        work_counts=work_counts,
        tile_counts=assigned_tiles,
        seed=seed,
        ratios=tuple(ratios),
    )
