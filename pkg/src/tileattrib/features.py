"""Handcrafted texture descriptor for 512x512 tiles.

Stands in for a learned representation at desk scale: the descriptor
targets the micro-level cues the pipeline classifies on (stroke
orientation, surface texture, tonal and color structure).

Vector layout (88 dimensions):

    [ 0:48]  intensity histograms, 16 bins per RGB channel (each sums to 1)
    [48:56]  gradient-orientation energies, 8 bins over [0, pi)
    [56:72]  oriented band-pass energies, 4 scales x 4 orientations
    [72:80]  local-variance pyramid, mean/std of the local-std map at 4 windows
    [80:88]  color interaction summaries (channel-pair covariance and
             mean absolute difference, saturation mean, gray std)

All energy blocks are zero on constant tiles; every entry is finite and
scale-normalized. Extraction is pure and deterministic.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import check_tile

FEATURE_DIM = 88
HIST_BINS = 16
ORIENT_BINS = 8
BANDPASS_SCALES = (1, 2, 4, 8)
VARIANCE_WINDOWS = (8, 16, 32, 64)

_RANGE = 255.0


def _intensity_histograms(tile: np.ndarray) -> np.ndarray:
    out = np.empty(3 * HIST_BINS)
    n = tile.shape[0] * tile.shape[1]
    for ch in range(3):
        counts = np.bincount((tile[:, :, ch] >> 4).ravel(), minlength=HIST_BINS)
        out[ch * HIST_BINS : (ch + 1) * HIST_BINS] = counts / n
    return out


def _orientation_energies(gray: np.ndarray) -> np.ndarray:
    # forward finite differences on the shared interior
    gx = gray[:-1, 1:] - gray[:-1, :-1]
    gy = gray[1:, :-1] - gray[:-1, :-1]
    energy = gx * gx + gy * gy
    theta = np.mod(np.arctan2(gy, gx), np.pi)
    bins = np.minimum((theta * (ORIENT_BINS / np.pi)).astype(np.intp), ORIENT_BINS - 1)
    sums = np.bincount(bins.ravel(), weights=energy.ravel(), minlength=ORIENT_BINS)
    return sums / (energy.size * _RANGE * _RANGE)


def _bandpass_energies(gray: np.ndarray) -> np.ndarray:
    out = np.empty(len(BANDPASS_SCALES) * 4)
    i = 0
    for d in BANDPASS_SCALES:
        for dy, dx in ((0, d), (d, d), (d, 0), (d, -d)):
            a = gray[max(dy, 0) : gray.shape[0] + min(dy, 0) or None,
                     max(dx, 0) : gray.shape[1] + min(dx, 0) or None]
            b = gray[max(-dy, 0) : gray.shape[0] + min(-dy, 0) or None,
                     max(-dx, 0) : gray.shape[1] + min(-dx, 0) or None]
            diff = a - b
            out[i] = np.mean(diff * diff, dtype=np.float64) / (_RANGE * _RANGE)
            i += 1
    return out


def _variance_pyramid(gray: np.ndarray) -> np.ndarray:
    # non-overlapping blocks; 512 is divisible by every window size
    out = np.empty(len(VARIANCE_WINDOWS) * 2)
    h, w_img = gray.shape
    sq = gray * gray
    for i, w in enumerate(VARIANCE_WINDOWS):
        blocks = (h // w, w, w_img // w, w)
        mean = gray.reshape(blocks).mean(axis=(1, 3))
        mean_sq = sq.reshape(blocks).mean(axis=(1, 3))
        local_std = np.sqrt(np.maximum(mean_sq - mean * mean, 0.0))
        out[2 * i] = local_std.mean() / _RANGE
        out[2 * i + 1] = local_std.std() / _RANGE
    return out


def _color_summaries(channels: list[np.ndarray], gray: np.ndarray) -> np.ndarray:
    n = channels[0].size
    flat = [c.ravel() for c in channels]
    means = [c.mean() for c in flat]
    out = np.empty(8)
    for i, (ia, ic) in enumerate(((0, 1), (0, 2), (1, 2))):
        a, c = flat[ia], flat[ic]
        out[i] = (a @ c / n - means[ia] * means[ic]) / (_RANGE * _RANGE)
        out[3 + i] = np.abs(a - c).mean() / _RANGE
    saturation = np.maximum(np.maximum(flat[0], flat[1]), flat[2])
    saturation -= np.minimum(np.minimum(flat[0], flat[1]), flat[2])
    out[6] = saturation.mean() / _RANGE
    out[7] = gray.std() / _RANGE
    return out


def extract_features(tile) -> np.ndarray:
    """Compute the 88-dimensional descriptor of one tile."""
    arr = check_tile(tile)
    channels = [arr[:, :, ch].astype(np.float64) for ch in range(3)]
    gray = (channels[0] + channels[1] + channels[2]) / 3.0
    return np.concatenate(
        [
            _intensity_histograms(arr),
            _orientation_energies(gray),
            _bandpass_energies(gray),
            _variance_pyramid(gray),
            _color_summaries(channels, gray),
        ]
    )


def extract_feature_matrix(tiles) -> np.ndarray:
    """Stack descriptors for a batch of tiles into an (n, 88) matrix."""
    return np.stack([extract_features(t) for t in tiles])


class TileFeaturizer(BaseEstimator, TransformerMixin):
    """Stateless transformer: batch of tiles in, (n, 88) descriptors out."""

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return extract_feature_matrix(X)
