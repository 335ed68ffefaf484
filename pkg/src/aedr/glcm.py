"""Gray-level co-occurrence matrix and its homogeneity statistic.

The GLCM counts how often gray codes i and j co-occur at a fixed pixel offset,
normalized to probabilities P(i, j). Homogeneity is

    H = sum_ij P(i, j) / (1 + |i - j|)

which is 1 exactly when all mass sits on the diagonal (uniform images) and
falls toward 1/levels for maximally contrasting texture. H multiplies the
attribution signal downstream to cancel complexity-driven loss bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AedrError
from .image import QuantizedImage

DEFAULT_LEVELS = 32


@dataclass(frozen=True)
class GlcmConfig:
    """Quantization depth and pixel-pair geometry for the GLCM."""

    levels: int = DEFAULT_LEVELS
    offset: tuple[int, int] = (1, 0)  # (dx, dy): +x right, +y down
    symmetric: bool = True

    def __post_init__(self) -> None:
        if self.levels < 2:
            raise AedrError(f"levels must be >= 2, got {self.levels}")
        if self.offset == (0, 0):
            raise AedrError("offset must be nonzero")

    def to_json_dict(self) -> dict:
        return {
            "levels": self.levels,
            "dx": self.offset[0],
            "dy": self.offset[1],
            "symmetric": self.symmetric,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "GlcmConfig":
        return cls(
            levels=int(d["levels"]),
            offset=(int(d["dx"]), int(d["dy"])),
            symmetric=bool(d["symmetric"]),
        )


@dataclass(frozen=True)
class GlcmMatrix:
    """Normalized co-occurrence probabilities, shape (levels, levels)."""

    probs: np.ndarray
    levels: int

    def __post_init__(self) -> None:
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        if probs.shape != (self.levels, self.levels):
            raise AedrError(
                f"GLCM must be {self.levels}x{self.levels}, got {probs.shape}"
            )
        if probs.min() < 0.0:
            raise AedrError("GLCM entries must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > 1e-9:
            raise AedrError("GLCM entries must sum to 1")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)


def compute_glcm(img: QuantizedImage, cfg: GlcmConfig = GlcmConfig()) -> GlcmMatrix:
    """Count all in-bounds pixel pairs (p, p + offset) and normalize.

    With symmetric=True each pair is also counted in the reversed order, so
    P(i, j) = P(j, i).
    """
    if img.levels != cfg.levels:
        raise AedrError(
            f"quantized image has {img.levels} levels but config expects {cfg.levels}"
        )
    dx, dy = cfg.offset
    h, w = img.codes.shape
    y0, y1 = max(0, -dy), h - max(0, dy)
    x0, x1 = max(0, -dx), w - max(0, dx)
    if y1 <= y0 or x1 <= x0:
        raise AedrError(
            f"no valid pixel pairs: image {w}x{h} cannot host offset ({dx}, {dy})"
        )
    a = img.codes[y0:y1, x0:x1]
    b = img.codes[y0 + dy:y1 + dy, x0 + dx:x1 + dx]
    flat = a.ravel() * cfg.levels + b.ravel()
    counts = np.bincount(flat, minlength=cfg.levels * cfg.levels).astype(np.float64)
    counts = counts.reshape(cfg.levels, cfg.levels)
    if cfg.symmetric:
        counts = counts + counts.T
    return GlcmMatrix(counts / counts.sum(), cfg.levels)


def homogeneity(glcm: GlcmMatrix) -> float:
    """H = sum_ij P(i, j) / (1 + |i - j|), always in (0, 1]."""
    idx = np.arange(glcm.levels)
    weights = 1.0 / (1.0 + np.abs(idx[:, None] - idx[None, :]))
    return float(np.sum(glcm.probs * weights))
