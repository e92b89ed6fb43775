"""Five-member ensemble, threshold calibration, and image aggregation.

Member i is trained with seed ``base_seed + i`` so initialization,
shuffling, and augmentation streams are all independent. Per tile the
members' probabilities are fused by arithmetic mean (median and majority
vote are available through :func:`fuse_probs` but the mean is the
contract default); the population variance of the five outputs is the
tile's uncertainty. A tile or image counts as positive when its score is
greater than or equal to the threshold.

The decision threshold is calibrated on validation tiles by sweeping
every midpoint between consecutive distinct scores (plus 0 and 1) and
keeping the candidate with the best balanced accuracy, ties resolved
toward 0.5.
"""

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .classifier import TileClassifier, TileScorer
from .exceptions import (
    ClassMissingError,
    EmptyTileListError,
    MixedArtworksError,
    UntrainedMemberError,
)
from .features import extract_feature_matrix
from .tiling import TileRect, TileSample
from .validation import check_binary_labels, check_tile_batch

MEMBER_COUNT = 5

# Threshold used by the shipped reference fixtures; a deployment artifact
# of the original ensemble, not reproducible from local data.
REFERENCE_THRESHOLD = 0.6080


class Decision(Enum):
    CONSISTENT = "consistent_with_artist"
    INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class EnsemblePrediction:
    """Per-tile member probabilities with their fused statistics."""

    member_probs: tuple[float, ...]
    mean: float
    variance: float
    above_threshold: bool
    rect: Optional[TileRect] = None

    def to_dict(self) -> dict:
        d = {
            "member_probs": list(self.member_probs),
            "mean": self.mean,
            "variance": self.variance,
            "above_threshold": self.above_threshold,
        }
        if self.rect is not None:
            d["rect"] = self.rect.to_dict()
        return d


@dataclass(frozen=True)
class ImageVerdict:
    """Image-level aggregation of all tile predictions of one artwork."""

    artwork_id: str
    image_prob: float
    tiles_total: int
    tiles_positive: int
    decision: Decision
    threshold: float
    tile_predictions: tuple[EnsemblePrediction, ...] = field(default=(), repr=False)


def make_prediction(member_probs, threshold: float, rect: Optional[TileRect] = None) -> EnsemblePrediction:
    """Fuse one tile's member probabilities (mean, population variance)."""
    probs = np.asarray(member_probs, dtype=np.float64)
    mean = float(probs.mean())
    return EnsemblePrediction(
        member_probs=tuple(float(p) for p in probs),
        mean=mean,
        variance=float(probs.var()),
        above_threshold=mean >= threshold,
        rect=rect,
    )


def fuse_probs(member_probs: np.ndarray, method: str = "mean") -> np.ndarray:
    """Alternative fusion statistics over a (tiles, members) matrix."""
    matrix = np.atleast_2d(np.asarray(member_probs, dtype=np.float64))
    if method == "mean":
        return matrix.mean(axis=1)
    if method == "median":
        return np.median(matrix, axis=1)
    if method == "vote":
        return (matrix >= 0.5).mean(axis=1)
    raise ValueError(f"unknown fusion method {method!r}")


def aggregate_image(
    tile_preds: Sequence[EnsemblePrediction],
    threshold: float,
    artwork_id: Optional[str] = None,
) -> ImageVerdict:
    """Average tile means into the image probability and decide.

    All predictions must come from one artwork; the verdict is
    independent of tile order.
    """
    if len(tile_preds) == 0:
        raise EmptyTileListError("cannot aggregate an empty tile list")
    ids = {p.rect.artwork_id for p in tile_preds if p.rect is not None}
    if len(ids) > 1:
        raise MixedArtworksError(f"predictions span several artworks: {sorted(ids)}")
    if artwork_id is None:
        artwork_id = ids.pop() if ids else ""
    means = np.array([p.mean for p in tile_preds])
    image_prob = float(means.mean())
    positive = int(np.count_nonzero(means >= threshold))
    decision = Decision.CONSISTENT if image_prob >= threshold else Decision.INCONSISTENT
    return ImageVerdict(
        artwork_id=artwork_id,
        image_prob=image_prob,
        tiles_total=len(tile_preds),
        tiles_positive=positive,
        decision=decision,
        threshold=threshold,
        tile_predictions=tuple(tile_preds),
    )


def calibrate_threshold(probs, labels) -> tuple[float, list[tuple[float, float]]]:
    """Pick the threshold maximizing balanced accuracy on validation tiles.

    Candidates are 0, 1, and every midpoint between consecutive distinct
    scores; ties break toward the candidate closest to 0.5 (then the
    smaller one). Returns the threshold and the full (candidate,
    balanced accuracy) search trace.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = check_binary_labels(labels, len(probs))
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == len(labels):
        raise ClassMissingError("validation split must contain both classes")

    distinct = np.unique(probs)
    candidates = np.unique(np.concatenate([[0.0, 1.0], (distinct[:-1] + distinct[1:]) / 2.0]))
    pos, neg = probs[labels == 1.0], probs[labels == 0.0]
    trace = []
    for tau in candidates:
        tpr = float((pos >= tau).mean())
        tnr = float((neg < tau).mean())
        trace.append((float(tau), (tpr + tnr) / 2.0))
    best = max(acc for _, acc in trace)
    winners = [tau for tau, acc in trace if acc == best]
    winners.sort(key=lambda t: (abs(t - 0.5), t))
    return winners[0], trace


class TileEnsemble(BaseEstimator, ClassifierMixin):
    """Exactly five independently seeded tile classifiers plus a threshold.

    Training parameters are forwarded to every member; only the seed
    differs. The ensemble is immutable after calibration in normal use.
    """

    def __init__(
        self,
        base_seed: int = 42,
        hidden_dim: int = 32,
        epochs: int = 200,
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        batch_size: int = 64,
        augment_params=None,
        threshold: Optional[float] = None,
    ):
        self.base_seed = base_seed
        self.hidden_dim = hidden_dim
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.batch_size = batch_size
        self.augment_params = augment_params
        self.threshold = threshold

    # -- training ----------------------------------------------------------

    def member_seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(MEMBER_COUNT)]

    def fit(self, X, y) -> "TileEnsemble":
        """Train all five members on the same tiles, seeds base_seed + i."""
        tiles = check_tile_batch(X)
        y = check_binary_labels(y, len(tiles))
        base_features = extract_feature_matrix(tiles)
        members = []
        for seed in self.member_seeds():
            member = TileClassifier(
                hidden_dim=self.hidden_dim,
                epochs=self.epochs,
                learning_rate=self.learning_rate,
                beta1=self.beta1,
                beta2=self.beta2,
                epsilon=self.epsilon,
                batch_size=self.batch_size,
                augment_params=self.augment_params,
                seed=seed,
            )
            member.fit(tiles, y, base_features=base_features)
            members.append(member)
        self.members_ = members
        if self.threshold is not None:
            self.threshold_ = float(self.threshold)
            self.calibration_ = {"objective": None, "trace": [], "source": "override"}
        return self

    def calibrate(self, X_val, y_val) -> float:
        """Calibrate the decision threshold on the validation split."""
        scores = self.member_prob_matrix(X_val).mean(axis=1)
        tau, trace = calibrate_threshold(scores, y_val)
        if self.threshold is not None:
            tau = float(self.threshold)
        self.threshold_ = tau
        best = max(acc for _, acc in trace)
        self.calibration_ = {
            "objective": best,
            "trace": [[t, a] for t, a in trace],
            "source": "override" if self.threshold is not None else "balanced_accuracy",
        }
        return tau

    # -- inference -----------------------------------------------------------

    def _check_members(self):
        members = getattr(self, "members_", None)
        if not members:
            raise UntrainedMemberError("ensemble members have not been trained")
        for i, member in enumerate(members):
            if not isinstance(member, TileScorer):
                raise UntrainedMemberError(f"member {i} does not expose score_tiles")

    def _effective_threshold(self, threshold: Optional[float]) -> float:
        if threshold is not None:
            return float(threshold)
        tau = getattr(self, "threshold_", None)
        if tau is None:
            raise UntrainedMemberError("ensemble threshold is not calibrated")
        return tau

    def member_prob_matrix(self, X) -> np.ndarray:
        """(tiles, members) probability matrix; descriptor computed once."""
        self._check_members()
        if all(isinstance(m, TileClassifier) for m in self.members_):
            feats = extract_feature_matrix(check_tile_batch(X))
            cols = [m.score_features(feats) for m in self.members_]
        else:
            cols = [np.asarray(m.score_tiles(X), dtype=np.float64) for m in self.members_]
        return np.column_stack(cols)

    def predict_samples(
        self, samples: Sequence[TileSample], threshold: Optional[float] = None
    ) -> list[EnsemblePrediction]:
        tau = self._effective_threshold(threshold)
        matrix = self.member_prob_matrix(np.stack([s.pixels for s in samples]))
        return [make_prediction(row, tau, rect=s.rect) for row, s in zip(matrix, samples)]

    def predict_tile(self, tile, threshold: Optional[float] = None) -> EnsemblePrediction:
        tau = self._effective_threshold(threshold)
        matrix = self.member_prob_matrix(np.asarray(tile)[None])
        return make_prediction(matrix[0], tau)

    def score_tiles(self, X) -> np.ndarray:
        return self.member_prob_matrix(X).mean(axis=1)

    def predict_proba(self, X) -> np.ndarray:
        pos = self.score_tiles(X)
        return np.column_stack([1.0 - pos, pos])

    def predict(self, X) -> np.ndarray:
        tau = self._effective_threshold(None)
        return (self.score_tiles(X) >= tau).astype(int)


# -- persistence ---------------------------------------------------------

ENSEMBLE_MANIFEST = "ensemble.json"


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def save_ensemble(ensemble: TileEnsemble, directory: Union[str, Path]) -> Path:
    """Write member model files plus the ensemble manifest."""
    ensemble._check_members()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files, digests = [], []
    for i, member in enumerate(ensemble.members_):
        name = f"member_{i}.json"
        member.save(directory / name)
        files.append(name)
        digests.append(_file_digest(directory / name))
    manifest = {
        "member_count": len(files),
        "member_files": files,
        "member_digests": digests,
        "base_seed": ensemble.base_seed,
        "threshold": getattr(ensemble, "threshold_", None),
        "calibration": getattr(ensemble, "calibration_", None),
    }
    path = directory / ENSEMBLE_MANIFEST
    path.write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    return path


def load_ensemble(directory: Union[str, Path]) -> TileEnsemble:
    directory = Path(directory)
    manifest = json.loads((directory / ENSEMBLE_MANIFEST).read_text(encoding="utf-8"))
    members = []
    for name, digest in zip(manifest["member_files"], manifest["member_digests"]):
        path = directory / name
        actual = _file_digest(path)
        if actual != digest:
            raise ValueError(f"member file {name} digest mismatch (corrupted ensemble?)")
        members.append(TileClassifier.load(path))
    first = members[0]
    ensemble = TileEnsemble(
        base_seed=manifest["base_seed"],
        hidden_dim=first.hidden_dim,
        epochs=first.epochs,
        learning_rate=first.learning_rate,
        beta1=first.beta1,
        beta2=first.beta2,
        epsilon=first.epsilon,
        batch_size=first.batch_size,
        augment_params=first.augment_params,
    )
    ensemble.members_ = members
    if manifest.get("threshold") is not None:
        ensemble.threshold_ = float(manifest["threshold"])
        ensemble.calibration_ = manifest.get("calibration")
    return ensemble


def ensemble_digest(directory: Union[str, Path]) -> str:
    """Identity of a stored ensemble: hash of its manifest bytes."""
    return _file_digest(Path(directory) / ENSEMBLE_MANIFEST)


# -- reference fixtures -----------------------------------------------------

def list_fixtures() -> list[str]:
    root = resources.files("tileattrib") / "fixtures"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_fixture(name: str) -> dict:
    """Load one shipped regression fixture (per-tile member 5-vectors)."""
    root = resources.files("tileattrib") / "fixtures"
    data = json.loads((root / f"{name}.json").read_text(encoding="utf-8"))
    data["member_probs"] = np.asarray(data["member_probs"], dtype=np.float64)
    return data


def fixture_predictions(fixture: dict) -> list[EnsemblePrediction]:
    tau = fixture.get("threshold", REFERENCE_THRESHOLD)
    aid = fixture.get("artwork_id", "")
    preds = []
    for i, row in enumerate(fixture["member_probs"]):
        rect = TileRect(artwork_id=aid, row_index=0, col_index=i, x=0, y=0)
        preds.append(make_prediction(row, tau, rect=rect))
    return preds
