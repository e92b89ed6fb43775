"""Reference tile classifier: 88-d descriptor into a small sigmoid network.

The network (88 -> 32 rectified units -> 1 sigmoid) is trained with
mini-batch Adam on binary cross-entropy, 200 epochs by default, with
per-epoch reshuffling and fresh augmentation of every sample each epoch.
Feature normalization statistics come from the un-augmented training
tiles and are frozen afterwards.

Anything that maps a batch of 512x512x3 tiles to probabilities can stand
in as a classifier elsewhere in the pipeline (see TileScorer); externally
trained models plug in by implementing that single method over their own
exported weights.
"""

import hashlib
import json
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Protocol, Union, runtime_checkable

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .augment import AugmentParams, augment
from .exceptions import NonFiniteLossError, SingleClassDataError, UntrainedClassifierError
from .features import FEATURE_DIM, extract_feature_matrix, extract_features
from .tiling import TileRect, TileSample
from .validation import check_binary_labels, check_tile_batch

MODEL_FORMAT_VERSION = 1

_LOG_EPS = 1e-12


@runtime_checkable
class TileScorer(Protocol):
    """Plug-in boundary: batch of 512x512x3 tiles in, probabilities out."""

    def score_tiles(self, tiles) -> np.ndarray: ...


def bce_loss(probs: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(probs, _LOG_EPS, 1.0 - _LOG_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class _Network:
    """Weights plus forward/backward passes for the two-layer net."""

    def __init__(self, w1, b1, w2, b2):
        self.w1 = np.asarray(w1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.w2 = np.asarray(w2, dtype=np.float64)
        self.b2 = np.asarray(b2, dtype=np.float64)  # 0-d, updated in place

    @classmethod
    def init(cls, feature_dim: int, hidden_dim: int, rng: np.random.Generator) -> "_Network":
        w1 = rng.normal(0.0, np.sqrt(2.0 / feature_dim), size=(feature_dim, hidden_dim))
        w2 = rng.normal(0.0, np.sqrt(1.0 / hidden_dim), size=hidden_dim)
        return cls(w1, np.zeros(hidden_dim), w2, 0.0)

    def params(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def forward(self, x: np.ndarray):
        z1 = x @ self.w1 + self.b1
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ self.w2 + self.b2
        return _sigmoid(z2), z1, a1

    def gradients(self, x: np.ndarray, y: np.ndarray):
        """Analytic gradients of the mean BCE over the batch."""
        probs, z1, a1 = self.forward(x)
        dz2 = (probs - y) / len(y)
        dw2 = a1.T @ dz2
        db2 = dz2.sum()
        dz1 = np.outer(dz2, self.w2)
        dz1[z1 <= 0.0] = 0.0
        dw1 = x.T @ dz1
        db1 = dz1.sum(axis=0)
        return {"w1": dw1, "b1": db1, "w2": dw2, "b2": np.asarray(db2)}, probs


class _Adam:
    """Adam with bias correction; one step counter across all parameters."""

    def __init__(self, shapes: dict, learning_rate: float, beta1: float, beta2: float, epsilon: float):
        self.lr, self.b1, self.b2, self.eps = learning_rate, beta1, beta2, epsilon
        self.m = {k: np.zeros_like(v, dtype=np.float64) for k, v in shapes.items()}
        self.v = {k: np.zeros_like(v, dtype=np.float64) for k, v in shapes.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        correct1 = 1.0 - self.b1**self.t
        correct2 = 1.0 - self.b2**self.t
        for key, grad in grads.items():
            self.m[key] = self.b1 * self.m[key] + (1.0 - self.b1) * grad
            self.v[key] = self.b2 * self.v[key] + (1.0 - self.b2) * grad * grad
            m_hat = self.m[key] / correct1
            v_hat = self.v[key] / correct2
            params[key] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class TileClassifier(BaseEstimator, ClassifierMixin):
    """Probability emitter over tiles, sklearn-style.

    Parameters mirror the training recipe: Adam step size and moment
    decays, BCE loss, batch size 64, 200 epochs, and the augmentation
    battery applied independently per sample per epoch. ``augment_params
    = None`` disables augmentation (and enables feature caching across
    epochs, since the descriptor is then constant per tile).
    """

    def __init__(
        self,
        hidden_dim: int = 32,
        epochs: int = 200,
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        batch_size: int = 64,
        augment_params: Optional[AugmentParams] = AugmentParams(),
        seed: int = 0,
    ):
        self.hidden_dim = hidden_dim
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.batch_size = batch_size
        self.augment_params = augment_params
        self.seed = seed

    # -- training --------------------------------------------------------

    def fit(self, X, y, base_features: Optional[np.ndarray] = None) -> "TileClassifier":
        """Train on labeled tiles.

        ``base_features`` may carry precomputed descriptors of the
        un-augmented tiles (one row per tile) to avoid re-extraction.
        """
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        tiles = check_tile_batch(X)
        y = check_binary_labels(y, len(tiles))
        if y.min() == y.max():
            raise SingleClassDataError("training data contains a single class")

        if base_features is None:
            base_features = extract_feature_matrix(tiles)
        mean = base_features.mean(axis=0)
        scale = base_features.std(axis=0)
        scale[scale == 0.0] = 1.0

        augmenting = self.augment_params is not None and not self.augment_params.is_identity
        rng = np.random.default_rng(self.seed)
        net = _Network.init(base_features.shape[1], self.hidden_dim, rng)
        params = net.params()
        adam = _Adam(params, self.learning_rate, self.beta1, self.beta2, self.epsilon)
        cached = (base_features - mean) / scale
        losses = []

        for epoch in range(self.epochs):
            order = rng.permutation(len(tiles))
            if augmenting:
                fresh = np.empty_like(base_features)
                for i, tile in enumerate(tiles):
                    drawn = augment(TileSample(pixels=tile, rect=_SCRATCH_RECT), self.augment_params, rng)
                    fresh[i] = extract_features(drawn.pixels)
                feats = (fresh - mean) / scale
            else:
                feats = cached
            total = 0.0
            for start in range(0, len(order), self.batch_size):
                batch = order[start : start + self.batch_size]
                grads, probs = net.gradients(feats[batch], y[batch])
                total += bce_loss(probs, y[batch]) * len(batch)
                adam.step(params, grads)
            epoch_loss = total / len(order)
            if not np.isfinite(epoch_loss):
                raise NonFiniteLossError(
                    f"training diverged: loss={epoch_loss} at epoch {epoch + 1}/{self.epochs}"
                )
            losses.append(epoch_loss)

        self.network_ = net
        self.norm_mean_ = mean
        self.norm_scale_ = scale
        self.loss_history_ = losses
        self.classes_ = np.array([0, 1])
        return self

    # -- inference ---------------------------------------------------------

    def _check_fitted(self):
        if getattr(self, "network_", None) is None:
            raise UntrainedClassifierError("classifier has not been trained")

    def score_features(self, features: np.ndarray) -> np.ndarray:
        self._check_fitted()
        feats = np.atleast_2d(np.asarray(features, dtype=np.float64))
        normed = (feats - self.norm_mean_) / self.norm_scale_
        return self.network_.forward(normed)[0]

    def score_tiles(self, tiles) -> np.ndarray:
        """Positive-class probability per tile; no augmentation at inference."""
        return self.score_features(extract_feature_matrix(check_tile_batch(tiles)))

    def score_tile(self, tile) -> float:
        return float(self.score_features(extract_features(tile))[0])

    def predict_proba(self, X) -> np.ndarray:
        pos = self.score_tiles(X)
        return np.column_stack([1.0 - pos, pos])

    def predict(self, X) -> np.ndarray:
        return (self.score_tiles(X) >= 0.5).astype(int)

    # -- persistence -------------------------------------------------------

    def config_digest(self) -> str:
        """Digest of the training recipe (everything except the seed)."""
        params = self.get_params()
        params.pop("seed")
        aug = params.pop("augment_params")
        params["augment_params"] = None if aug is None else asdict(aug)
        blob = json.dumps(params, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_dict(self) -> dict:
        self._check_fitted()
        aug = self.augment_params
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "feature_dim": int(self.network_.w1.shape[0]),
            "hidden_dim": int(self.network_.w1.shape[1]),
            "w1": self.network_.w1.tolist(),
            "b1": self.network_.b1.tolist(),
            "w2": self.network_.w2.tolist(),
            "b2": float(self.network_.b2),
            "norm_mean": self.norm_mean_.tolist(),
            "norm_scale": self.norm_scale_.tolist(),
            "seed": self.seed,
            "epochs": self.epochs,
            "config_digest": self.config_digest(),
            "config": {
                "learning_rate": self.learning_rate,
                "beta1": self.beta1,
                "beta2": self.beta2,
                "epsilon": self.epsilon,
                "batch_size": self.batch_size,
                "hidden_dim": self.hidden_dim,
                "augment_params": None if aug is None else asdict(aug),
            },
            "loss_history": self.loss_history_,
        }

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, d: dict) -> "TileClassifier":
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {d.get('format_version')!r}")
        cfg = d["config"]
        aug = cfg.get("augment_params")
        clf = cls(
            hidden_dim=d["hidden_dim"],
            epochs=d["epochs"],
            learning_rate=cfg["learning_rate"],
            beta1=cfg["beta1"],
            beta2=cfg["beta2"],
            epsilon=cfg["epsilon"],
            batch_size=cfg["batch_size"],
            augment_params=None if aug is None else AugmentParams(
                crop_fraction=tuple(aug["crop_fraction"]),
                rotation_degrees=tuple(aug["rotation_degrees"]),
                flip_probability=aug["flip_probability"],
                noise_sigma=tuple(aug["noise_sigma"]),
                contrast=tuple(aug["contrast"]),
                color_scale=tuple(aug["color_scale"]),
                perspective_jitter=aug["perspective_jitter"],
                elastic_displacement=aug["elastic_displacement"],
                elastic_smoothing=aug["elastic_smoothing"],
            ),
            seed=d["seed"],
        )
        clf.network_ = _Network(
            np.asarray(d["w1"], dtype=np.float64),
            np.asarray(d["b1"], dtype=np.float64),
            np.asarray(d["w2"], dtype=np.float64),
            float(d["b2"]),
        )
        clf.norm_mean_ = np.asarray(d["norm_mean"], dtype=np.float64)
        clf.norm_scale_ = np.asarray(d["norm_scale"], dtype=np.float64)
        clf.loss_history_ = list(d.get("loss_history", []))
        clf.classes_ = np.array([0, 1])
        return clf

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TileClassifier":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


_SCRATCH_RECT = TileRect(artwork_id="", row_index=0, col_index=0, x=0, y=0)
