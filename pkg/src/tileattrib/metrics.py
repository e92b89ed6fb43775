"""Tile- and image-level evaluation plus ensemble agreement statistics."""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ensemble import Decision, EnsemblePrediction, ImageVerdict, TileEnsemble, aggregate_image
from .exceptions import EmptyInputError, EmptySplitError
from .tiling import TileSample

AGREEMENT_BINS = 10
MAX_VARIANCE = 0.25


def apply_threshold(scores, threshold: float, strict: bool = False) -> np.ndarray:
    """Positive decisions per score; >= by convention, > when strict."""
    scores = np.asarray(scores, dtype=np.float64)
    return scores > threshold if strict else scores >= threshold


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}

    @classmethod
    def from_decisions(cls, predicted: np.ndarray, actual: np.ndarray) -> "Confusion":
        predicted = np.asarray(predicted, dtype=bool)
        actual = np.asarray(actual, dtype=bool)
        return cls(
            tp=int(np.count_nonzero(predicted & actual)),
            fp=int(np.count_nonzero(predicted & ~actual)),
            tn=int(np.count_nonzero(~predicted & ~actual)),
            fn=int(np.count_nonzero(~predicted & actual)),
        )


@dataclass
class EvaluationReport:
    tile_accuracy: float
    image_accuracy: float
    tile_confusion: Confusion
    image_confusion: Confusion
    mean_variance: float
    threshold: float
    verdicts: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "tile_accuracy": self.tile_accuracy,
            "image_accuracy": self.image_accuracy,
            "tile_confusion": self.tile_confusion.to_dict(),
            "image_confusion": self.image_confusion.to_dict(),
            "mean_variance": self.mean_variance,
            "artworks": self.verdicts,
        }


def _group_by_artwork(samples: Sequence[TileSample]) -> dict[str, list[int]]:
    groups: dict[str, list[int]] = {}
    for i, sample in enumerate(samples):
        groups.setdefault(sample.artwork_id, []).append(i)
    return groups


def evaluate(
    ensemble: TileEnsemble,
    samples: Sequence[TileSample],
    threshold: Optional[float] = None,
) -> EvaluationReport:
    """Score every labeled tile and artwork in a split.

    Image decisions use the mean tile probability; the per-artwork rows
    also report the majority-vote decision as an auxiliary column.
    """
    samples = list(samples)
    if not samples:
        raise EmptySplitError("cannot evaluate an empty split")
    if any(s.label is None for s in samples):
        raise EmptySplitError("evaluation requires labeled tiles")
    tau = ensemble._effective_threshold(threshold)
    predictions = ensemble.predict_samples(samples, threshold=tau)
    means = np.array([p.mean for p in predictions])
    variances = np.array([p.variance for p in predictions])
    tile_labels = np.array([s.label for s in samples], dtype=bool)
    tile_confusion = Confusion.from_decisions(apply_threshold(means, tau), tile_labels)

    verdict_rows = []
    image_pred, image_actual = [], []
    for artwork_id, idxs in _group_by_artwork(samples).items():
        verdict = aggregate_image([predictions[i] for i in idxs], tau, artwork_id=artwork_id)
        label = bool(samples[idxs[0]].label)
        positive = verdict.decision is Decision.CONSISTENT
        image_pred.append(positive)
        image_actual.append(label)
        verdict_rows.append(
            {
                "artwork_id": artwork_id,
                "label": "positive" if label else "negative",
                "image_prob": verdict.image_prob,
                "tiles_total": verdict.tiles_total,
                "tiles_positive": verdict.tiles_positive,
                "decision": verdict.decision.value,
                "majority_decision": (
                    Decision.CONSISTENT if verdict.tiles_positive * 2 > verdict.tiles_total
                    else Decision.INCONSISTENT
                ).value,
                "correct": positive == label,
            }
        )
    image_confusion = Confusion.from_decisions(np.array(image_pred), np.array(image_actual))

    return EvaluationReport(
        tile_accuracy=tile_confusion.accuracy,
        image_accuracy=image_confusion.accuracy,
        tile_confusion=tile_confusion,
        image_confusion=image_confusion,
        mean_variance=float(variances.mean()),
        threshold=tau,
        verdicts=verdict_rows,
    )


@dataclass(frozen=True)
class AgreementSummary:
    mean_variance: float
    unanimous_fraction: float
    histogram: tuple[int, ...]  # 10 equal bins over [0, 0.25]

    def to_dict(self) -> dict:
        return {
            "mean_variance": self.mean_variance,
            "unanimous_fraction": self.unanimous_fraction,
            "histogram": list(self.histogram),
        }


def agreement_stats(predictions: Sequence[EnsemblePrediction]) -> AgreementSummary:
    """Summarize member disagreement; unanimous means variance exactly zero."""
    if len(predictions) == 0:
        raise EmptyInputError("no predictions to summarize")
    variances = np.array([p.variance for p in predictions])
    counts, _ = np.histogram(variances, bins=AGREEMENT_BINS, range=(0.0, MAX_VARIANCE))
    return AgreementSummary(
        mean_variance=float(variances.mean()),
        unanimous_fraction=float((variances == 0.0).mean()),
        histogram=tuple(int(c) for c in counts),
    )


def format_report_table(report: EvaluationReport) -> str:
    """Plain-text summary of an evaluation report."""
    lines = [
        f"threshold          {report.threshold:.4f}",
        f"tile accuracy      {report.tile_accuracy:.4f}   "
        f"(tp={report.tile_confusion.tp} fp={report.tile_confusion.fp} "
        f"tn={report.tile_confusion.tn} fn={report.tile_confusion.fn})",
        f"image accuracy     {report.image_accuracy:.4f}   "
        f"(tp={report.image_confusion.tp} fp={report.image_confusion.fp} "
        f"tn={report.image_confusion.tn} fn={report.image_confusion.fn})",
        f"mean variance      {report.mean_variance:.6f}",
        "",
        f"{'artwork':<20} {'label':<9} {'prob':>7} {'tiles+':>7} {'total':>6}  decision",
    ]
    for row in report.verdicts:
        lines.append(
            f"{row['artwork_id']:<20} {row['label']:<9} {row['image_prob']:>7.4f} "
            f"{row['tiles_positive']:>7} {row['tiles_total']:>6}  {row['decision']}"
            + ("" if row["correct"] else "  [x]")
        )
    return "\n".join(lines)
