"""Reconstructor backends: the encode/decode round trip behind the signal.

Three implementations share one interface:

* IdentityBackend      -- returns the input unchanged (degenerate reference).
* LinearAEBackend      -- PCA projection with seeded Gaussian latent noise; a
                          desk-scale stand-in for a continuous VAE. Trained
                          from an image corpus, persisted as versioned JSON.
* ExternalBackend      -- client for an out-of-process reconstructor speaking
                          newline-delimited JSON over stdin/stdout.

CountingBackend wraps any of them and counts reconstruct calls, which is how
the two-forward-passes efficiency property is asserted.
"""

from __future__ import annotations

import base64
import json
import queue
import subprocess
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AedrError, CorpusError, DimensionMismatchError, ExternalBackendError
from .image import Image

_SEED_MOD = 2**63
_ORTHO_TOL = 1e-8


def _rng_for(backend_seed: int, call_seed: int) -> np.random.Generator:
    """Generator keyed by (backend seed, per-call seed); reproducible under any scheduling."""
    return np.random.default_rng([backend_seed % _SEED_MOD, call_seed % _SEED_MOD])


class Reconstructor(ABC):
    """Uniform interface over x -> decode(encode(x)).

    Implementations preserve width/height/channels and clamp outputs to [0, 1].
    `dims` is the accepted (width, height, channels) contract, or None for any.
    """

    id: str = "reconstructor"
    deterministic: bool = False
    dims: tuple[int, int, int] | None = None

    @abstractmethod
    def reconstruct(self, image: Image, call_seed: int = 0) -> Image:
        ...

    def check_dims(self, image: Image) -> None:
        if self.dims is not None:
            got = (image.width, image.height, image.channels)
            if got != self.dims:
                raise DimensionMismatchError(
                    f"backend {self.id!r} expects (w, h, c)={self.dims}, got {got}"
                )


class IdentityBackend(Reconstructor):
    """Returns every image unchanged. Useful as a degenerate reference."""

    id = "identity"
    deterministic = True
    dims = None

    def reconstruct(self, image: Image, call_seed: int = 0) -> Image:
        return image


@dataclass(frozen=True)
class LinearAEBackend(Reconstructor):
    """Principal-component autoencoder with Gaussian latent sampling.

    encode(x) = W (x - mu); decode(z) = clamp(W^T z + mu). `basis` W holds k
    orthonormal rows. With noise_sigma > 0 each reconstruct draws z' = z +
    sigma * g from an RNG keyed by (seed, call_seed); with noise_sigma = 0 the
    map is an exact projection, so a second pass reproduces the first.
    """

    width: int
    height: int
    channels: int
    mean: np.ndarray
    basis: np.ndarray
    noise_sigma: float
    seed: int
    latent_scales: np.ndarray | None = None
    backend_id: str = "linear_ae"

    def __post_init__(self) -> None:
        d = self.width * self.height * self.channels
        mean = np.ascontiguousarray(self.mean, dtype=np.float64)
        basis = np.ascontiguousarray(self.basis, dtype=np.float64)
        if mean.shape != (d,):
            raise AedrError(f"mean must have shape ({d},), got {mean.shape}")
        if basis.ndim != 2 or basis.shape[1] != d or basis.shape[0] < 1:
            raise AedrError(f"basis must be (k, {d}), got {basis.shape}")
        gram = basis @ basis.T
        if not np.allclose(gram, np.eye(basis.shape[0]), atol=_ORTHO_TOL):
            raise AedrError("basis rows are not orthonormal")
        if self.noise_sigma < 0:
            raise AedrError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        scales = self.latent_scales
        if scales is not None:
            scales = np.ascontiguousarray(scales, dtype=np.float64)
            if scales.shape != (basis.shape[0],):
                raise AedrError("latent_scales must have one entry per component")
            scales.flags.writeable = False
        mean.flags.writeable = False
        basis.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "latent_scales", scales)

    @property
    def id(self) -> str:  # type: ignore[override]
        return self.backend_id

    @property
    def deterministic(self) -> bool:  # type: ignore[override]
        return self.noise_sigma == 0.0

    @property
    def dims(self) -> tuple[int, int, int]:  # type: ignore[override]
        return (self.width, self.height, self.channels)

    @property
    def latent_dim(self) -> int:
        return self.basis.shape[0]

    def encode(self, image: Image) -> np.ndarray:
        self.check_dims(image)
        return self.basis @ (image.pixels - self.mean)

    def decode(self, z: np.ndarray) -> Image:
        flat = self.basis.T @ np.asarray(z, dtype=np.float64) + self.mean
        np.clip(flat, 0.0, 1.0, out=flat)
        return Image(flat.reshape(self.height, self.width, self.channels))

    def reconstruct(self, image: Image, call_seed: int = 0) -> Image:
        z = self.encode(image)
        if self.noise_sigma > 0.0:
            g = _rng_for(self.seed, call_seed).standard_normal(self.latent_dim)
            z = z + self.noise_sigma * g
        return self.decode(z)


def _fill_orthonormal(rows: list[np.ndarray], needed: int, d: int, seed: int) -> None:
    """Extend `rows` with `needed` deterministic orthonormal vectors."""
    rng = _rng_for(seed, 0x0F111)
    while needed > 0:
        v = rng.standard_normal(d)
        for r in rows:
            v -= (r @ v) * r
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            rows.append(v / norm)
            needed -= 1


def train_linear_backend(
    corpus: Sequence[Image],
    latent_dim: int,
    noise_sigma: float | None = None,
    seed: int = 0,
    backend_id: str = "linear_ae",
) -> LinearAEBackend:
    """Fit mean and top-k principal components of an image corpus.

    The covariance is eigendecomposed directly when the pixel count is small,
    otherwise via the Gram matrix of the centered corpus (exact for desk-scale
    corpora). When noise_sigma is None it defaults to 0.05x the mean latent
    standard deviation of the training corpus. Deterministic given (corpus
    order, latent_dim, seed).
    """
    if len(corpus) == 0:
        raise CorpusError("training corpus is empty")
    first = corpus[0]
    dims = (first.width, first.height, first.channels)
    for im in corpus:
        if (im.width, im.height, im.channels) != dims:
            raise CorpusError("training corpus mixes image dimensions")
    n = len(corpus)
    d = first.width * first.height * first.channels
    if not (1 <= latent_dim <= min(n - 1, d)):
        raise CorpusError(
            f"latent_dim must be in [1, min(corpus-1, pixels)] = [1, {min(n - 1, d)}], got {latent_dim}"
        )

    x = np.stack([im.pixels for im in corpus])
    mu = x.mean(axis=0)
    xc = x - mu

    tiny = 1e-12 * max(1.0, float(np.sum(xc * xc)))
    rows: list[np.ndarray] = []
    if d <= n:
        cov = (xc.T @ xc) / (n - 1)
        evals, evecs = np.linalg.eigh(cov)
        order = np.argsort(evals)[::-1][:latent_dim]
        for i in order:
            if evals[i] > tiny:
                rows.append(evecs[:, i].copy())
    else:
        gram = (xc @ xc.T) / (n - 1)
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1][:latent_dim]
        for i in order:
            if evals[i] > tiny:
                v = xc.T @ evecs[:, i]
                rows.append(v / np.linalg.norm(v))
    _fill_orthonormal(rows, latent_dim - len(rows), d, seed)

    w = np.stack(rows[:latent_dim])
    # Fix eigenvector signs so training is reproducible across BLAS builds.
    for i in range(latent_dim):
        j = int(np.argmax(np.abs(w[i])))
        if w[i, j] < 0:
            w[i] = -w[i]

    latents = xc @ w.T
    scales = latents.std(axis=0, ddof=1) if n > 1 else np.zeros(latent_dim)
    if noise_sigma is None:
        noise_sigma = 0.05 * float(scales.mean())

    return LinearAEBackend(
        width=dims[0],
        height=dims[1],
        channels=dims[2],
        mean=mu,
        basis=w,
        noise_sigma=float(noise_sigma),
        seed=seed,
        latent_scales=scales,
        backend_id=backend_id,
    )


BACKEND_SCHEMA_VERSION = 1


def save_backend(backend: LinearAEBackend, path: str | Path) -> None:
    """Persist a linear backend as versioned JSON (floats round-trip exactly)."""
    doc = {
        "schema_version": BACKEND_SCHEMA_VERSION,
        "kind": "linear_ae",
        "id": backend.backend_id,
        "width": backend.width,
        "height": backend.height,
        "channels": backend.channels,
        "latent_dim": backend.latent_dim,
        "noise_sigma": backend.noise_sigma,
        "seed": backend.seed,
        "mean": backend.mean.tolist(),
        "basis": backend.basis.tolist(),
        "latent_scales": None if backend.latent_scales is None else backend.latent_scales.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_backend(path: str | Path) -> LinearAEBackend:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise CorpusError(f"{path}: backend file not found") from None
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: invalid backend JSON ({exc})") from None
    if doc.get("schema_version") != BACKEND_SCHEMA_VERSION:
        raise CorpusError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    if doc.get("kind") != "linear_ae":
        raise CorpusError(f"{path}: unsupported backend kind {doc.get('kind')!r}")
    basis = np.array(doc["basis"], dtype=np.float64)
    if basis.ndim != 2 or basis.shape[0] != int(doc["latent_dim"]):
        raise CorpusError(f"{path}: basis shape disagrees with latent_dim")
    scales = doc.get("latent_scales")
    return LinearAEBackend(
        width=int(doc["width"]),
        height=int(doc["height"]),
        channels=int(doc["channels"]),
        mean=np.array(doc["mean"], dtype=np.float64),
        basis=basis,
        noise_sigma=float(doc["noise_sigma"]),
        seed=int(doc["seed"]),
        latent_scales=None if scales is None else np.array(scales, dtype=np.float64),
        backend_id=str(doc.get("id", "linear_ae")),
    )


class CountingBackend(Reconstructor):
    """Delegating wrapper that counts reconstruct calls (thread-safe)."""

    def __init__(self, inner: Reconstructor) -> None:
        self.inner = inner
        self._lock = threading.Lock()
        self._calls = 0

    @property
    def id(self) -> str:  # type: ignore[override]
        return self.inner.id

    @property
    def deterministic(self) -> bool:  # type: ignore[override]
        return self.inner.deterministic

    @property
    def dims(self) -> tuple[int, int, int] | None:  # type: ignore[override]
        return self.inner.dims

    @property
    def calls(self) -> int:
        with self._lock:
            return self._calls

    def reset(self) -> None:
        with self._lock:
            self._calls = 0

    def reconstruct(self, image: Image, call_seed: int = 0) -> Image:
        with self._lock:
            self._calls += 1
        return self.inner.reconstruct(image, call_seed)


# ---------------------------------------------------------------------------
# External adapter client (newline-delimited JSON over a child process)
# ---------------------------------------------------------------------------

def encode_pixels(image: Image) -> str:
    """Base64 of the row-major little-endian float32 samples."""
    return base64.b64encode(image.pixels.astype("<f4").tobytes()).decode("ascii")


def decode_pixels(pixels_b64: str, width: int, height: int, channels: int) -> Image:
    raw = base64.b64decode(pixels_b64.encode("ascii"), validate=True)
    expected = width * height * channels * 4
    if len(raw) != expected:
        raise ExternalBackendError(
            f"payload is {len(raw)} bytes, expected {expected} for {width}x{height}x{channels}"
        )
    flat = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    np.clip(flat, 0.0, 1.0, out=flat)
    return Image(flat.reshape(height, width, channels))


class _AdapterProcess:
    """One child process; requests are serialized, responses matched by id."""

    def __init__(self, command: Sequence[str], timeout: float) -> None:
        self.timeout = timeout
        try:
            self._proc = subprocess.Popen(
                list(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
            )
        except OSError as exc:
            raise ExternalBackendError(f"failed to start adapter {command!r}: {exc}") from None
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._next_id = 0
        self._lock = threading.Lock()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def request(self, op: str, **payload) -> dict:
        with self._lock:
            self._next_id += 1
            req_id = self._next_id
            msg = {"id": req_id, "op": op, **payload}
            try:
                assert self._proc.stdin is not None
                self._proc.stdin.write(json.dumps(msg) + "\n")
                self._proc.stdin.flush()
            except (OSError, ValueError) as exc:
                raise ExternalBackendError(f"adapter write failed: {exc}") from None
            try:
                line = self._lines.get(timeout=self.timeout)
            except queue.Empty:
                raise ExternalBackendError(
                    f"adapter did not answer {op!r} within {self.timeout}s"
                ) from None
        if line is None:
            raise ExternalBackendError("adapter closed its output stream")
        try:
            resp = json.loads(line)
        except json.JSONDecodeError:
            raise ExternalBackendError(f"adapter sent invalid JSON: {line!r}") from None
        if resp.get("id") != req_id:
            raise ExternalBackendError(
                f"adapter answered id {resp.get('id')!r} for request {req_id}"
            )
        if not resp.get("ok", False):
            raise ExternalBackendError(f"adapter error: {resp.get('error', 'unknown')}")
        return resp

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                assert self._proc.stdin is not None
                self._proc.stdin.write(json.dumps({"id": self._next_id + 1, "op": "shutdown"}) + "\n")
                self._proc.stdin.flush()
            except (OSError, ValueError):
                pass
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        if self._proc.stdin is not None:
            self._proc.stdin.close()


class ExternalBackend(Reconstructor):
    """Client for an external reconstructor process.

    Each child process handles one request at a time; `processes` > 1 spawns a
    pool and reconstruct() checks a free process out per call. The handshake
    reports the adapter's name, determinism, and native dimensions (which are
    enforced when the adapter declares them).
    """

    def __init__(
        self,
        command: Sequence[str],
        processes: int = 1,
        timeout: float = 60.0,
    ) -> None:
        if processes < 1:
            raise AedrError("processes must be >= 1")
        self._command = list(command)
        self._procs: list[_AdapterProcess] = []
        self._free: queue.Queue[_AdapterProcess] = queue.Queue()
        hello = None
        try:
            for _ in range(processes):
                proc = _AdapterProcess(self._command, timeout)
                self._procs.append(proc)
                hello = proc.request("hello")
                self._free.put(proc)
        except ExternalBackendError:
            self.close()
            raise
        assert hello is not None
        self.id = f"extern:{hello.get('name', 'unknown')}@{hello.get('version', '?')}"
        self.deterministic = bool(hello.get("deterministic", False))
        nw, nh = hello.get("native_width"), hello.get("native_height")
        self._native = (int(nw), int(nh)) if nw is not None and nh is not None else None

    @property
    def dims(self) -> tuple[int, int, int] | None:  # type: ignore[override]
        return None  # native size is width/height only; channels are free

    def check_dims(self, image: Image) -> None:
        if self._native is not None and (image.width, image.height) != self._native:
            raise DimensionMismatchError(
                f"adapter {self.id!r} is native {self._native[0]}x{self._native[1]}, "
                f"got {image.width}x{image.height}"
            )

    def reconstruct(self, image: Image, call_seed: int = 0) -> Image:
        self.check_dims(image)
        proc = self._free.get()
        try:
            resp = proc.request(
                "reconstruct",
                width=image.width,
                height=image.height,
                channels=image.channels,
                pixels_b64=encode_pixels(image),
            )
        finally:
            self._free.put(proc)
        for key in ("width", "height", "channels"):
            if int(resp.get(key, -1)) != getattr(image, key):
                raise ExternalBackendError(f"adapter changed image {key}")
        return decode_pixels(resp["pixels_b64"], image.width, image.height, image.channels)

    def close(self) -> None:
        for p in self._procs:
            p.close()

    def __enter__(self) -> "ExternalBackend":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
