"""Tile-based artwork attribution pipeline.

Corpus curation and 512x512 tiling, balanced group-aware splitting, a
five-member ensemble of tile classifiers with a validation-calibrated
decision threshold, tile-to-image verdict aggregation, and uncertainty /
confidence overlay rendering.
"""

__version__ = "0.1.0"

from .augment import AugmentParams, augment
from .classifier import TileClassifier, TileScorer
from .ensemble import (
    MEMBER_COUNT,
    REFERENCE_THRESHOLD,
    Decision,
    EnsemblePrediction,
    ImageVerdict,
    TileEnsemble,
    aggregate_image,
    calibrate_threshold,
    fixture_predictions,
    list_fixtures,
    load_ensemble,
    load_fixture,
    save_ensemble,
)
from .features import FEATURE_DIM, TileFeaturizer, extract_feature_matrix, extract_features
from .manifest import ArtworkRecord, Certainty, Label, load_manifest
from .metrics import AgreementSummary, EvaluationReport, agreement_stats, evaluate
from .overlay import (
    OverlayMode,
    OverlaySpec,
    annotate_extremes,
    render_confidence,
    render_uncertainty,
)
from .quality import QcThresholds, QualityReport, quality_check
from .splitting import Split, SplitAssignment, split_corpus
from .tiling import TileRect, TileSample, extract_tiles, grid_shape, tile_grid

__all__ = [
    "AgreementSummary",
    "ArtworkRecord",
    "AugmentParams",
    "Certainty",
    "Decision",
    "EnsemblePrediction",
    "EvaluationReport",
    "FEATURE_DIM",
    "ImageVerdict",
    "Label",
    "MEMBER_COUNT",
    "OverlayMode",
    "OverlaySpec",
    "QcThresholds",
    "QualityReport",
    "REFERENCE_THRESHOLD",
    "Split",
    "SplitAssignment",
    "TileClassifier",
    "TileEnsemble",
    "TileFeaturizer",
    "TileRect",
    "TileSample",
    "TileScorer",
    "aggregate_image",
    "agreement_stats",
    "annotate_extremes",
    "augment",
    "calibrate_threshold",
    "evaluate",
    "extract_feature_matrix",
    "extract_features",
    "extract_tiles",
    "fixture_predictions",
    "grid_shape",
    "list_fixtures",
    "load_ensemble",
    "load_fixture",
    "load_manifest",
    "quality_check",
    "render_confidence",
    "render_uncertainty",
    "save_ensemble",
    "split_corpus",
    "tile_grid",
]
