"""Image representation, PNG I/O, grayscale conversion, and gray-level quantization.

Pixels live in [0, 1] as float64 everywhere inside the toolkit; 8-bit integer
samples exist only at the PNG boundary (mapped by v/255 on load and
round(p*255) on save, which round-trips 8-bit files exactly).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PilImage
from PIL import UnidentifiedImageError

from .errors import AedrError

# BT.601 luma weights for RGB -> gray, kept as exact integers over 1000 so a
# constant (1, 1, 1) pixel maps to exactly 1.0.
_LUMA = np.array([299.0, 587.0, 114.0])


@dataclass(frozen=True)
class Image:
    """A normalized pixel tensor of shape (height, width, channels).

    Every sample is in [0, 1]; channels is 1 (gray) or 3 (RGB). The backing
    array is locked read-only so instances can be shared across threads.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise AedrError(f"image must be (h, w) or (h, w, 1|3), got shape {self.data.shape}")
        if arr.size == 0:
            raise AedrError("image must contain at least one pixel")
        if not np.isfinite(arr).all():
            raise AedrError("image contains non-finite samples")
        lo, hi = float(arr.min()), float(arr.max())
        if lo < 0.0 or hi > 1.0:
            raise AedrError(f"pixel values must lie in [0, 1], got range [{lo}, {hi}]")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def pixels(self) -> np.ndarray:
        """Row-major, channel-interleaved flat view of the samples."""
        return self.data.reshape(-1)

    def same_shape(self, other: "Image") -> bool:
        return self.data.shape == other.data.shape


@dataclass(frozen=True)
class QuantizedImage:
    """Gray-level codes in [0, levels-1], shape (height, width)."""

    codes: np.ndarray
    levels: int

    def __post_init__(self) -> None:
        codes = np.ascontiguousarray(self.codes, dtype=np.int64)
        if codes.ndim != 2 or codes.size == 0:
            raise AedrError(f"quantized image must be a nonempty 2-D grid, got shape {self.codes.shape}")
        if self.levels < 2:
            raise AedrError(f"levels must be >= 2, got {self.levels}")
        if codes.min() < 0 or codes.max() >= self.levels:
            raise AedrError("codes must lie in [0, levels-1]")
        codes.flags.writeable = False
        object.__setattr__(self, "codes", codes)

    @property
    def height(self) -> int:
        return self.codes.shape[0]

    @property
    def width(self) -> int:
        return self.codes.shape[1]


def load_png(path: str | Path) -> Image:
    """Load an 8-bit gray or RGB PNG, mapping samples to [0, 1] by v/255."""
    path = Path(path)
    try:
        with PilImage.open(path) as im:
            if im.format != "PNG":
                raise AedrError(f"{path}: not a PNG file (format={im.format})")
            if im.mode not in ("L", "RGB"):
                raise AedrError(f"{path}: unsupported bit depth or color type (mode={im.mode})")
            raw = np.asarray(im, dtype=np.uint8)
    except FileNotFoundError:
        raise AedrError(f"{path}: file not found") from None
    except UnidentifiedImageError:
        raise AedrError(f"{path}: unreadable image file") from None
    except OSError as exc:
        raise AedrError(f"{path}: unreadable image file ({exc})") from None
    return Image(raw.astype(np.float64) / 255.0)


def save_png(img: Image, path: str | Path) -> None:
    """Write an Image as an 8-bit PNG (gray for 1 channel, RGB for 3)."""
    path = Path(path)
    samples = np.rint(img.data * 255.0).astype(np.uint8)
    if img.channels == 1:
        pil = PilImage.fromarray(samples[:, :, 0], mode="L")
    else:
        pil = PilImage.fromarray(samples, mode="RGB")
    pil.save(path, format="PNG")


def to_grayscale(img: Image) -> Image:
    """Collapse to a single channel using BT.601 luma; gray input is returned as-is."""
    if img.channels == 1:
        return img
    gray = (img.data @ _LUMA) / 1000.0
    np.clip(gray, 0.0, 1.0, out=gray)
    return Image(gray)


def quantize(img: Image, levels: int) -> QuantizedImage:
    """Uniformly bin a single-channel image into `levels` gray codes.

    code = floor(p * levels), with p = 1.0 clamped into the top bin.
    """
    if img.channels != 1:
        raise AedrError(f"quantize expects a single-channel image, got {img.channels} channels")
    if levels < 2:
        raise AedrError(f"levels must be >= 2, got {levels}")
    codes = np.floor(img.data[:, :, 0] * levels).astype(np.int64)
    np.clip(codes, 0, levels - 1, out=codes)
    return QuantizedImage(codes, levels)
