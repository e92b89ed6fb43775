"""Exception hierarchy for the attribution pipeline.

Errors fall into two broad families: input/validation problems (bad
manifests, malformed tiles, impossible splits) and state problems
(using a classifier before it was trained). The CLI maps the former to
exit code 2 and anything unexpected to exit code 3.
"""

from sklearn.exceptions import NotFittedError


class TileAttribError(Exception):
    """Base class for all package-specific errors."""


# -- corpus ------------------------------------------------------------------

class MalformedManifestError(TileAttribError):
    """Manifest file cannot be parsed or a row has invalid fields."""


class DuplicateIdError(MalformedManifestError):
    """Two manifest rows share the same artwork_id."""


class MissingImageFileError(TileAttribError):
    """A manifest row references an image file that does not exist."""


class DimensionMismatchError(TileAttribError):
    """Pixel buffer dimensions disagree with the artwork record."""


class ImageTooSmallError(TileAttribError):
    """Image is smaller than one tile along some axis."""


class RectOutOfBoundsError(TileAttribError):
    """A tile rectangle extends past the image bounds."""


class ClassMissingError(TileAttribError):
    """An operation requires both classes but one is absent."""


class TooFewWorksError(TileAttribError):
    """Not enough artworks to populate every split."""


# -- backbone ----------------------------------------------------------------

class BadTileShapeError(TileAttribError):
    """Tile is not a 512x512x3 8-bit buffer."""


class SingleClassDataError(ClassMissingError):
    """Training data contains only one label."""


class NonFiniteLossError(TileAttribError):
    """Training loss became NaN or infinite (divergence)."""


class UntrainedClassifierError(TileAttribError, NotFittedError):
    """Prediction was requested from an unfitted classifier."""


class UntrainedMemberError(UntrainedClassifierError):
    """An ensemble member has not been trained."""


# -- ensemble / metrics ------------------------------------------------------

class EmptyTileListError(TileAttribError):
    """Image aggregation received no tile predictions."""


class MixedArtworksError(TileAttribError):
    """Tile predictions from several artworks were aggregated together."""


class EmptySplitError(TileAttribError):
    """Evaluation was requested on an empty split."""


class EmptyInputError(TileAttribError):
    """A statistics operation received no data."""


# -- overlay -----------------------------------------------------------------

class GridMismatchError(TileAttribError):
    """Predictions do not align 1:1 with the tile grid."""


class EmptyPredictionsError(TileAttribError):
    """Extreme-tile annotation needs at least one prediction."""


# -- cli / config ------------------------------------------------------------

class ConfigError(TileAttribError):
    """Pipeline configuration is invalid or incomplete."""


class WorkDirLockedError(TileAttribError):
    """Another process holds the work directory's advisory lock."""
