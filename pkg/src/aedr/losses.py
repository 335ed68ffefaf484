"""Reconstruction-loss metrics: MSE (default), MAE, and SSIM-as-loss.

All three satisfy "lower = more faithful", which the downstream loss ratio
relies on. SSIM is turned into a loss as 1 - meanSSIM, so its range is [0, 2].
"""

from __future__ import annotations

from enum import Enum

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DimensionMismatchError
from .image import Image


class LossMetric(Enum):
    MSE = "mse"
    MAE = "mae"
    SSIM_LOSS = "ssim"


# SSIM constants: 11x11 Gaussian window (sigma 1.5), K1/K2 and unit dynamic
# range from the original index definition.
_SSIM_SIGMA = 1.5
_SSIM_RADIUS = 5
_SSIM_TRUNCATE = 3.5  # int(3.5 * 1.5 + 0.5) == 5 taps per side
_SSIM_C1 = 0.01**2
_SSIM_C2 = 0.03**2


def _check_same_shape(a: Image, b: Image) -> None:
    if not a.same_shape(b):
        raise DimensionMismatchError(
            f"loss inputs disagree on shape: {a.data.shape} vs {b.data.shape}"
        )


def mse(a: Image, b: Image) -> float:
    _check_same_shape(a, b)
    diff = a.data - b.data
    return float(np.mean(diff * diff))


def mae(a: Image, b: Image) -> float:
    _check_same_shape(a, b)
    return float(np.mean(np.abs(a.data - b.data)))


def _ssim_plane(x: np.ndarray, y: np.ndarray) -> float:
    """Mean SSIM of two 2-D planes over the window-valid interior."""

    def smooth(arr: np.ndarray) -> np.ndarray:
        return gaussian_filter(arr, sigma=_SSIM_SIGMA, truncate=_SSIM_TRUNCATE)

    ux, uy = smooth(x), smooth(y)
    uxx, uyy, uxy = smooth(x * x), smooth(y * y), smooth(x * y)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    vxy = uxy - ux * uy
    s = ((2 * ux * uy + _SSIM_C1) * (2 * vxy + _SSIM_C2)) / (
        (ux * ux + uy * uy + _SSIM_C1) * (vx + vy + _SSIM_C2)
    )
    # Interior points are independent of the filter's boundary handling.
    r = _SSIM_RADIUS
    return float(s[r:-r, r:-r].mean())


def ssim(a: Image, b: Image) -> float:
    """Mean SSIM in [-1, 1], computed per channel and averaged."""
    _check_same_shape(a, b)
    if min(a.height, a.width) < 2 * _SSIM_RADIUS + 1:
        raise DimensionMismatchError(
            f"SSIM needs images at least {2 * _SSIM_RADIUS + 1} px on each side, "
            f"got {a.height}x{a.width}"
        )
    per_channel = [
        _ssim_plane(a.data[:, :, c], b.data[:, :, c]) for c in range(a.channels)
    ]
    return float(np.mean(per_channel))


def loss(metric: LossMetric, a: Image, b: Image) -> float:
    """Dispatch to the selected metric; result is >= 0 for all three."""
    if metric is LossMetric.MSE:
        return mse(a, b)
    if metric is LossMetric.MAE:
        return mae(a, b)
    if metric is LossMetric.SSIM_LOSS:
        return 1.0 - ssim(a, b)
    raise TypeError(f"unknown loss metric: {metric!r}")


def metric_name(metric) -> str:
    """Stable name for a metric, including injected callables."""
    if isinstance(metric, LossMetric):
        return metric.value
    return getattr(metric, "__name__", "custom")


def evaluate_metric(metric, a: Image, b: Image) -> float:
    """Apply either a LossMetric or a custom callable loss(a, b) -> float."""
    if isinstance(metric, LossMetric):
        return loss(metric, a, b)
    if callable(metric):
        return float(metric(a, b))
    raise TypeError(f"metric must be a LossMetric or callable, got {type(metric)!r}")
