"""Preprocessing: dark-current correction, ROI crop, tanh contrast mapping.

Stage order is fixed: absolute-difference dark correction, then cropping the
shared 100x100 window from every band, then the bounded tanh normalization
using the mean/std of each dark-corrected cropped band. All arithmetic is
float64 from the dark correction onward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import N_BANDS, ROI_SIDE, DarkFrame, Roi, SpectralCube
from .errors import DimensionMismatch

ROI_PIXELS = ROI_SIDE * ROI_SIDE


@dataclass(frozen=True)
class BandStats:
    """Population mean/std of one band inside the ROI (1/N denominator)."""

    mean: float
    std: float


@dataclass(frozen=True)
class NormalizationParams:
    """Steepness of the tanh contrast mapping."""

    kappa: float = 0.03

    def __post_init__(self) -> None:
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")


@dataclass(frozen=True)
class PreprocessedRoi:
    """13 normalized 100x100 planes plus the per-band stats used to map them.

    Every pixel of band i lies in [stats[i].mean - std, stats[i].mean + std].
    """

    planes: np.ndarray  # (13, 100, 100) float64
    stats: tuple[BandStats, ...]  # length 13


def _as_planes(cube: SpectralCube | np.ndarray) -> np.ndarray:
    planes = cube.planes if isinstance(cube, SpectralCube) else np.asarray(cube)
    if planes.ndim != 3:
        raise DimensionMismatch(f"expected (bands, h, w) planes, got {planes.shape}")
    return planes


def dark_correct(cube: SpectralCube | np.ndarray, dark: DarkFrame | np.ndarray) -> np.ndarray:
    """Absolute difference |band - dark| per pixel; output is float64, >= 0."""
    planes = _as_planes(cube)
    dark_plane = dark.plane if isinstance(dark, DarkFrame) else np.asarray(dark)
    if dark_plane.shape != planes.shape[1:]:
        raise DimensionMismatch(
            f"dark frame {dark_plane.shape} does not match bands {planes.shape[1:]}"
        )
    return np.abs(planes.astype(np.float64) - dark_plane.astype(np.float64))


def crop_roi(cube: SpectralCube | np.ndarray, roi: Roi) -> np.ndarray:
    """Crop the same window from every band: rows [y1, y1+side), cols [x1, x1+side)."""
    planes = _as_planes(cube)
    _, height, width = planes.shape
    roi.check_fits(height, width)
    return planes[:, roi.y1 : roi.y1 + roi.side, roi.x1 : roi.x1 + roi.side].copy()


def roi_stats(plane: np.ndarray) -> BandStats:
    """Population mean and standard deviation over the 10,000 ROI pixels."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.size != ROI_PIXELS:
        raise DimensionMismatch(f"expected {ROI_PIXELS} pixels, got {plane.size}")
    return BandStats(mean=float(plane.mean()), std=float(plane.std()))


def normalize_contrast(
    plane: np.ndarray, stats: BandStats, params: NormalizationParams
) -> np.ndarray:
    """Bounded tanh intensity mapping.

    out = (mean - std) + 2*std * (tanh(kappa*(in - mean)) + 1) / 2

    Monotone in the input, fixes the mean, and compresses everything into
    [mean - std, mean + std]. A constant band (std = 0) maps to the constant
    mean plane, the continuous limit of the transform.
    """
    plane = np.asarray(plane, dtype=np.float64)
    mu, sigma = stats.mean, stats.std
    if sigma == 0.0:
        return np.full_like(plane, mu)
    out = (mu - sigma) + 2.0 * sigma * (np.tanh(params.kappa * (plane - mu)) + 1.0) / 2.0
    # Guard the closed range against last-ulp rounding of the affine map.
    return np.clip(out, mu - sigma, mu + sigma)


def preprocess_cube(
    cube: SpectralCube,
    dark: DarkFrame,
    roi: Roi,
    params: NormalizationParams = NormalizationParams(),
) -> PreprocessedRoi:
    """Dark-correct, crop, then normalize each band with its own ROI stats."""
    corrected = dark_correct(cube, dark)
    cropped = crop_roi(corrected, roi)
    stats = []
    planes = np.empty((N_BANDS, roi.side, roi.side), dtype=np.float64)
    for i in range(N_BANDS):
        band_stats = roi_stats(cropped[i])
        planes[i] = normalize_contrast(cropped[i], band_stats, params)
        stats.append(band_stats)
    return PreprocessedRoi(planes=planes, stats=tuple(stats))
