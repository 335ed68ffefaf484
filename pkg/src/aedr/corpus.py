"""Corpora: labeled image collections, PNG directories, and synthetic textures.

A corpus on disk is a directory of PNGs plus a manifest.json listing
(id, file, truth, source). Synthetic corpora are seeded Gaussian random
fields whose spatial correlation length and amplitude control how smooth or
busy (and therefore how homogeneous) each texture family looks.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import CorpusError
from .image import Image, load_png, save_png

MANIFEST_NAME = "manifest.json"
MANIFEST_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    image: Image
    truth: str | None = None  # "belonging" | "non_belonging" | None
    source: str = ""


def call_seed_for(image_id: str) -> int:
    """Stable per-image seed so batch results are independent of scheduling."""
    digest = hashlib.sha256(image_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1  # keep it positive


def gaussian_field_corpus(
    count: int,
    width: int,
    height: int,
    *,
    correlation: float,
    amplitude: float,
    channels: int = 1,
    base: float = 0.5,
    seed: int = 0,
    id_prefix: str = "img",
    truth: str | None = None,
    source: str = "gaussian_field",
) -> list[CorpusEntry]:
    """Draw seeded Gaussian random fields clipped into [0, 1].

    White noise is smoothed with a Gaussian kernel of width `correlation`
    (pixels), normalized to unit variance per image, scaled by `amplitude`,
    and shifted to `base`. Small amplitudes give near-constant images (high
    homogeneity); large amplitudes with short correlation give busy texture.
    """
    if count < 1:
        raise CorpusError(f"count must be >= 1, got {count}")
    entries = []
    for i in range(count):
        rng = np.random.default_rng([seed % 2**63, i])
        planes = []
        for _ in range(channels):
            white = rng.standard_normal((height, width))
            field = gaussian_filter(white, sigma=correlation, mode="wrap")
            field -= field.mean()
            std = field.std()
            if std > 0:
                field /= std
            planes.append(field)
        stack = np.stack(planes, axis=-1)
        pixels = np.clip(base + amplitude * stack, 0.0, 1.0)
        entries.append(
            CorpusEntry(id=f"{id_prefix}-{i:05d}", image=Image(pixels), truth=truth, source=source)
        )
    return entries


def save_corpus(entries: list[CorpusEntry], directory: str | Path) -> None:
    """Write PNGs plus a manifest; output bytes are deterministic."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {"schema_version": MANIFEST_SCHEMA_VERSION, "entries": []}
    for entry in entries:
        filename = f"{entry.id}.png"
        save_png(entry.image, directory / filename)
        manifest["entries"].append(
            {"id": entry.id, "file": filename, "truth": entry.truth, "source": entry.source}
        )
    (directory / MANIFEST_NAME).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def load_corpus(directory: str | Path) -> list[CorpusEntry]:
    """Read a corpus directory; without a manifest, fall back to sorted *.png."""
    directory = Path(directory)
    if not directory.is_dir():
        raise CorpusError(f"{directory}: not a directory")
    manifest_path = directory / MANIFEST_NAME
    entries: list[CorpusEntry] = []
    if manifest_path.exists():
        try:
            manifest = json.loads(manifest_path.read_text())
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{manifest_path}: invalid manifest ({exc})") from None
        if manifest.get("schema_version") != MANIFEST_SCHEMA_VERSION:
            raise CorpusError(
                f"{manifest_path}: unsupported schema_version {manifest.get('schema_version')!r}"
            )
        for row in manifest.get("entries", []):
            entries.append(
                CorpusEntry(
                    id=str(row["id"]),
                    image=load_png(directory / row["file"]),
                    truth=row.get("truth"),
                    source=str(row.get("source", "")),
                )
            )
    else:
        for png in sorted(directory.glob("*.png")):
            entries.append(CorpusEntry(id=png.stem, image=load_png(png)))
    if not entries:
        raise CorpusError(f"{directory}: corpus is empty")
    return entries
