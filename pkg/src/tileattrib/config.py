"""Pipeline configuration: one JSON document shared by all subcommands."""

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

from .augment import AugmentParams
from .exceptions import ConfigError
from .overlay import OverlaySpec
from .quality import QcThresholds
from .splitting import DEFAULT_RATIOS


@dataclass
class TrainSettings:
    """Training recipe applied to every ensemble member."""

    base_seed: int = 42
    hidden_dim: int = 32
    epochs: int = 200
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 64
    augment: Optional[AugmentParams] = field(default_factory=AugmentParams)

    def ensemble_kwargs(self) -> dict:
        return {
            "base_seed": self.base_seed,
            "hidden_dim": self.hidden_dim,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "batch_size": self.batch_size,
            "augment_params": self.augment,
        }


@dataclass
class PipelineConfig:
    manifest: Path
    work_dir: Path
    image_root: Optional[Path] = None
    qc: QcThresholds = field(default_factory=QcThresholds)
    ratios: tuple[float, float, float] = DEFAULT_RATIOS
    split_seed: int = 7
    train: TrainSettings = field(default_factory=TrainSettings)
    overlay: OverlaySpec = field(default_factory=OverlaySpec)
    threshold_override: Optional[float] = None

    def resolved_image_root(self) -> Path:
        return self.image_root if self.image_root is not None else self.manifest.parent


def _take(section: dict, cls, what: str):
    known = {f.name for f in fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")
    return section


def _parse_augment(value) -> Optional[AugmentParams]:
    if value in (None, "off", False):
        return None
    if value in ("full", "default", True):
        return AugmentParams()
    if isinstance(value, dict):
        known = {f.name for f in fields(AugmentParams)}
        unknown = set(value) - known
        if unknown:
            raise ConfigError(f"unknown augment keys: {sorted(unknown)}")
        kwargs = {
            k: tuple(v) if isinstance(v, list) else v
            for k, v in value.items()
        }
        try:
            return AugmentParams(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"invalid augment parameters: {exc}")
    raise ConfigError(f"augment must be 'full', 'off', or a parameter object, got {value!r}")


def load_config(path: Union[str, Path]) -> PipelineConfig:
    """Parse and validate the pipeline configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")

    for key in ("manifest", "work_dir"):
        if key not in doc:
            raise ConfigError(f"{path}: missing required key {key!r}")

    base = path.parent

    def respath(value) -> Path:
        p = Path(value)
        return p if p.is_absolute() else base / p

    ratios = tuple(doc.get("ratios", DEFAULT_RATIOS))
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or any(r <= 0 for r in ratios):
        raise ConfigError(f"ratios must be three positive numbers summing to 1, got {ratios}")

    try:
        qc = QcThresholds(**_take(doc.get("qc", {}), QcThresholds, "qc"))
    except TypeError as exc:
        raise ConfigError(f"invalid qc section: {exc}")

    train_section = dict(doc.get("train", {}))
    augment = _parse_augment(train_section.pop("augment", "full"))
    _take(train_section, TrainSettings, "train")
    train_section.pop("augment", None)
    try:
        train = TrainSettings(augment=augment, **train_section)
    except TypeError as exc:
        raise ConfigError(f"invalid train section: {exc}")
    if train.epochs < 1 or train.batch_size < 1:
        raise ConfigError("train.epochs and train.batch_size must be >= 1")

    overlay_section = dict(doc.get("overlay", {}))
    overlay_section.pop("mode", None)
    for key in ("uncertainty_color", "positive_color", "negative_color", "outline_color"):
        if key in overlay_section:
            overlay_section[key] = tuple(overlay_section[key])
    try:
        overlay = OverlaySpec(**_take(overlay_section, OverlaySpec, "overlay"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid overlay section: {exc}")

    threshold = doc.get("threshold_override")
    if threshold is not None and not 0.0 < float(threshold) < 1.0:
        raise ConfigError(f"threshold_override must lie in (0, 1), got {threshold}")

    return PipelineConfig(
        manifest=respath(doc["manifest"]),
        work_dir=respath(doc["work_dir"]),
        image_root=respath(doc["image_root"]) if "image_root" in doc else None,
        qc=qc,
        ratios=ratios,
        split_seed=int(doc.get("split_seed", 7)),
        train=train,
        overlay=overlay,
        threshold_override=None if threshold is None else float(threshold),
    )
