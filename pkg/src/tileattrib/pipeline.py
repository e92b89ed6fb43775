"""Pipeline stages behind the CLI subcommands.

Every stage validates its inputs before writing anything, produces
deterministic artifacts for fixed inputs and seeds (the analysis
report's timestamp is the single exception), and takes an advisory lock
on the work directory while mutating it. Artifact layout:

    work/records.json      normalized manifest
    work/qc.json           quality reports
    work/split.json        artwork -> split map plus summary
    work/tiles/...         tile store, <split>/<label>/<artwork>/r#_c#.png
    work/tile_index.json   tile store index
    work/ensemble/         five member models + ensemble manifest
    work/evaluation.json   metrics report (plus evaluation.txt)
    work/reports/<id>.json analysis reports
    work/renders/          overlay images
"""

import json
import os
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import PipelineConfig
from .ensemble import (
    Decision,
    TileEnsemble,
    aggregate_image,
    ensemble_digest,
    load_ensemble,
    make_prediction,
    save_ensemble,
)
from .exceptions import ConfigError, TileAttribError, WorkDirLockedError
from .imgio import load_image, save_png
from .manifest import ArtworkRecord, Certainty, Label, load_manifest, resolve_image_path
from .metrics import evaluate, format_report_table
from .overlay import annotate_extremes, render_confidence, render_uncertainty
from .quality import quality_check
from .splitting import Split, SplitAssignment, load_split, save_split, split_corpus
from .tiling import TileRect, TileSample, extract_tiles, grid_shape, tile_grid

LOCK_NAME = ".lock"


@contextmanager
def workdir_lock(work_dir: Path):
    """Advisory single-writer lock on the work directory."""
    work_dir.mkdir(parents=True, exist_ok=True)
    lock = work_dir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise WorkDirLockedError(
            f"work dir {work_dir} is locked by another run (stale? remove {lock})"
        )
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def _read_json(path: Path, what: str):
    if not path.is_file():
        raise ConfigError(f"{what} not found at {path}; run the earlier stages first")
    return json.loads(path.read_text(encoding="utf-8"))


# -- records ------------------------------------------------------------------

def _record_to_dict(r: ArtworkRecord) -> dict:
    return {
        "artwork_id": r.artwork_id,
        "title": r.title,
        "label": r.label.value,
        "certainty": r.certainty.value,
        "image_path": str(r.image_path),
        "px_per_mm": r.px_per_mm,
        "width_px": r.width_px,
        "height_px": r.height_px,
    }


def _record_from_dict(d: dict) -> ArtworkRecord:
    return ArtworkRecord(
        artwork_id=d["artwork_id"],
        title=d["title"],
        label=Label(d["label"]),
        certainty=Certainty(d["certainty"]),
        image_path=Path(d["image_path"]),
        px_per_mm=d["px_per_mm"],
        width_px=d["width_px"],
        height_px=d["height_px"],
    )


def load_records(config: PipelineConfig) -> list[ArtworkRecord]:
    cached = config.work_dir / "records.json"
    if cached.is_file():
        return [_record_from_dict(d) for d in json.loads(cached.read_text(encoding="utf-8"))]
    return load_manifest(config.manifest, config.resolved_image_root())


def _record_by_id(config: PipelineConfig, artwork_id: str) -> ArtworkRecord:
    for record in load_records(config):
        if record.artwork_id == artwork_id:
            return record
    raise ConfigError(f"artwork {artwork_id!r} not found in the manifest")


def run_ingest(config: PipelineConfig) -> list[ArtworkRecord]:
    records = load_manifest(config.manifest, config.resolved_image_root())
    with workdir_lock(config.work_dir):
        _write_json(config.work_dir / "records.json", [_record_to_dict(r) for r in records])
    return records


# -- qc -----------------------------------------------------------------------

def run_qc(config: PipelineConfig) -> dict:
    records = load_records(config)
    root = config.resolved_image_root()
    reports = []
    for record in records:
        image = load_image(resolve_image_path(record, root))
        reports.append(quality_check(record, image, config.qc).to_dict())
    payload = {
        "thresholds": {
            "min_px_per_mm": config.qc.min_px_per_mm,
            "glare_max": config.qc.glare_max,
            "noise_max": config.qc.noise_max,
            "saturation_quantile": config.qc.saturation_quantile,
            "max_edge_skew_degrees": config.qc.max_edge_skew_degrees,
        },
        "reports": reports,
        "passed": [r["artwork_id"] for r in reports if r["passed"]],
    }
    with workdir_lock(config.work_dir):
        _write_json(config.work_dir / "qc.json", payload)
    return payload


def _passed_ids(config: PipelineConfig, records: list[ArtworkRecord]) -> set[str]:
    qc_path = config.work_dir / "qc.json"
    if qc_path.is_file():
        return set(json.loads(qc_path.read_text(encoding="utf-8"))["passed"])
    return {r.artwork_id for r in records}


# -- split ---------------------------------------------------------------------

def run_split(config: PipelineConfig, seed: Optional[int] = None) -> SplitAssignment:
    records = load_records(config)
    passed = _passed_ids(config, records)
    usable = [r for r in records if r.artwork_id in passed]
    tile_counts = {
        r.artwork_id: int(np.prod(grid_shape(r.width_px, r.height_px)))
        for r in usable
        if r.width_px >= 512 and r.height_px >= 512
    }
    usable = [r for r in usable if r.artwork_id in tile_counts]
    assignment = split_corpus(
        usable,
        tile_counts,
        ratios=config.ratios,
        seed=config.split_seed if seed is None else seed,
    )
    with workdir_lock(config.work_dir):
        save_split(assignment, config.work_dir / "split.json")
    return assignment


def _load_assignment(config: PipelineConfig) -> SplitAssignment:
    path = config.work_dir / "split.json"
    if not path.is_file():
        raise ConfigError(f"split file not found at {path}; run `attrib split` first")
    return load_split(path)


# -- tile store ------------------------------------------------------------------

def run_tile(config: PipelineConfig) -> dict:
    records = load_records(config)
    assignment = _load_assignment(config)
    passed = _passed_ids(config, records)
    index = []
    staged = []
    for record in records:
        if record.artwork_id not in passed:
            continue
        if record.width_px < 512 or record.height_px < 512:
            continue
        split = assignment.assignment.get(record.artwork_id)
        split_name = split.value if split is not None else "unassigned"
        image = load_image(resolve_image_path(record, config.resolved_image_root()))
        grid = tile_grid(record.width_px, record.height_px, record.artwork_id)
        samples = extract_tiles(image, grid, label=record.label.binary)
        for sample in samples:
            rel = (
                f"tiles/{split_name}/{record.label.value}/"
                f"{record.artwork_id}/{sample.rect.tile_id}.png"
            )
            staged.append((rel, sample.pixels))
            index.append(
                {
                    "artwork_id": record.artwork_id,
                    "split": split_name,
                    "label": record.label.value,
                    "rect": sample.rect.to_dict(),
                    "path": rel,
                }
            )
    with workdir_lock(config.work_dir):
        for rel, pixels in staged:
            save_png(config.work_dir / rel, pixels)
        _write_json(config.work_dir / "tile_index.json", index)
    return {"tiles": len(index)}


def load_split_samples(config: PipelineConfig, split: Split) -> list[TileSample]:
    """Read one split's tiles (pixels, rects, labels) from the tile store."""
    index = _read_json(config.work_dir / "tile_index.json", "tile index")
    samples = []
    for entry in index:
        if entry["split"] != split.value:
            continue
        rect = TileRect.from_dict(entry["rect"], artwork_id=entry["artwork_id"])
        pixels = load_image(config.work_dir / entry["path"])
        samples.append(
            TileSample(pixels=pixels, rect=rect, label=Label(entry["label"]).binary)
        )
    if not samples:
        raise ConfigError(f"tile store has no {split.value} tiles; run `attrib tile` first")
    return samples


# -- training / calibration / evaluation --------------------------------------

def run_train(config: PipelineConfig, seed: Optional[int] = None) -> Path:
    samples = load_split_samples(config, Split.TRAIN)
    kwargs = config.train.ensemble_kwargs()
    if seed is not None:
        kwargs["base_seed"] = seed
    ensemble = TileEnsemble(threshold=config.threshold_override, **kwargs)
    X = np.stack([s.pixels for s in samples])
    y = np.array([s.label for s in samples])
    ensemble.fit(X, y)
    with workdir_lock(config.work_dir):
        return save_ensemble(ensemble, config.work_dir / "ensemble")


def _load_pipeline_ensemble(config: PipelineConfig) -> TileEnsemble:
    directory = config.work_dir / "ensemble"
    if not (directory / "ensemble.json").is_file():
        raise ConfigError(f"no trained ensemble at {directory}; run `attrib train` first")
    return load_ensemble(directory)


def run_calibrate(config: PipelineConfig) -> float:
    ensemble = _load_pipeline_ensemble(config)
    samples = load_split_samples(config, Split.VAL)
    ensemble.threshold = config.threshold_override
    X = np.stack([s.pixels for s in samples])
    y = np.array([s.label for s in samples])
    tau = ensemble.calibrate(X, y)
    with workdir_lock(config.work_dir):
        save_ensemble(ensemble, config.work_dir / "ensemble")
    return tau


def run_evaluate(config: PipelineConfig):
    ensemble = _load_pipeline_ensemble(config)
    samples = load_split_samples(config, Split.TEST)
    threshold = config.threshold_override
    report = evaluate(ensemble, samples, threshold=threshold)
    with workdir_lock(config.work_dir):
        _write_json(config.work_dir / "evaluation.json", report.to_dict())
        (config.work_dir / "evaluation.txt").write_text(
            format_report_table(report) + "\n", encoding="utf-8"
        )
    return report


# -- analysis report --------------------------------------------------------------

@dataclass
class AnalysisReport:
    """Machine-readable verdict for one artwork."""

    artwork_id: str
    decision: str
    image_prob: float
    threshold: float
    tiles_total: int
    tiles_positive: int
    tiles: list
    extremes: dict
    digest: str
    version: str
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "artwork_id": self.artwork_id,
            "decision": self.decision,
            "image_prob": self.image_prob,
            "threshold": self.threshold,
            "tiles_total": self.tiles_total,
            "tiles_positive": self.tiles_positive,
            "tiles": self.tiles,
            "extremes": self.extremes,
            "digest": self.digest,
            "version": self.version,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisReport":
        return cls(**{k: d[k] for k in (
            "artwork_id", "decision", "image_prob", "threshold", "tiles_total",
            "tiles_positive", "tiles", "extremes", "digest", "version", "timestamp",
        )})

    def save(self, path: Path) -> None:
        _write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: Path) -> "AnalysisReport":
        return cls.from_dict(_read_json(Path(path), "analysis report"))


def run_analyze(
    config: PipelineConfig,
    artwork_id: str,
    threshold: Optional[float] = None,
    out_dir: Optional[Path] = None,
) -> AnalysisReport:
    """Predict, aggregate, and report one artwork (disputed works welcome)."""
    record = _record_by_id(config, artwork_id)
    ensemble = _load_pipeline_ensemble(config)
    if threshold is None:
        threshold = config.threshold_override
    tau = ensemble._effective_threshold(threshold)

    image = load_image(resolve_image_path(record, config.resolved_image_root()))
    grid = tile_grid(record.width_px or image.shape[1], record.height_px or image.shape[0],
                     record.artwork_id)
    samples = extract_tiles(image, grid, label=None)
    predictions = ensemble.predict_samples(samples, threshold=tau)
    verdict = aggregate_image(predictions, tau, artwork_id=artwork_id)

    means = [p.mean for p in predictions]
    highest = grid[int(np.argmax(means))].tile_id
    lowest = grid[int(np.argmin(means))].tile_id
    report = AnalysisReport(
        artwork_id=artwork_id,
        decision=verdict.decision.value,
        image_prob=verdict.image_prob,
        threshold=tau,
        tiles_total=verdict.tiles_total,
        tiles_positive=verdict.tiles_positive,
        tiles=[p.to_dict() for p in predictions],
        extremes={"highest": highest, "lowest": lowest},
        digest=ensemble_digest(config.work_dir / "ensemble"),
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )
    target = Path(out_dir) if out_dir else config.work_dir / "reports"
    with workdir_lock(config.work_dir):
        report.save(target / f"{artwork_id}.json")
    return report


def run_render(
    config: PipelineConfig,
    artwork_id: str,
    out_dir: Optional[Path] = None,
) -> tuple[Path, Path]:
    """Render both overlays from an existing analysis report."""
    report = AnalysisReport.load(config.work_dir / "reports" / f"{artwork_id}.json")
    record = _record_by_id(config, artwork_id)
    image = load_image(resolve_image_path(record, config.resolved_image_root()))
    grid = [TileRect.from_dict(t["rect"], artwork_id=artwork_id) for t in report.tiles]
    predictions = [
        make_prediction(t["member_probs"], report.threshold,
                        rect=TileRect.from_dict(t["rect"], artwork_id=artwork_id))
        for t in report.tiles
    ]
    spec = config.overlay
    uncertainty = annotate_extremes(
        render_uncertainty(image, grid, predictions, spec), grid, predictions, spec
    )
    confidence = annotate_extremes(
        render_confidence(image, grid, predictions, report.threshold, spec),
        grid, predictions, spec,
    )
    target = Path(out_dir) if out_dir else config.work_dir / "renders"
    with workdir_lock(config.work_dir):
        upath = target / f"{artwork_id}.uncertainty.png"
        cpath = target / f"{artwork_id}.confidence.png"
        save_png(upath, uncertainty)
        save_png(cpath, confidence)
    return upath, cpath
