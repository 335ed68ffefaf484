"""The double-reconstruction attribution signal.

A test image x is passed through the backend twice:

    x*  = R(x)      L1 = L(x*, x)
    x** = R(x*)     L2 = L(x**, x*)

Images the backend's model produced reconstruct consistently (L1 ~= L2), while
foreign images are projected into the learned distribution by the first pass,
so their second loss drops sharply. The ratio t = L1/L2 is therefore ~1 for
belonging images and >> 1 for non-belonging ones, and multiplying by the
homogeneity H of the original image cancels texture-complexity bias:
t' = t * H.

Deterministic backends can legitimately produce L2 = 0; such records carry a
`degenerate` flag instead of raising, and are scored by classify(): L1 ~ 0 too
means the image is a fixed point of the backend (belonging), otherwise the
backend visibly altered it once and never again (non-belonging).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from .backends import Reconstructor
from .errors import AedrError
from .glcm import GlcmConfig, compute_glcm, homogeneity
from .image import Image, quantize, to_grayscale
from .losses import LossMetric, evaluate_metric, metric_name
from .threshold import Decision, decide

EPSILON = 1e-12

RECORD_CSV_HEADER = "image_id,l1,l2,ratio,homogeneity,calibrated,degenerate"


@dataclass(frozen=True)
class ReconstructionRecord:
    """Per-image attribution measurements (one double reconstruction)."""

    image_id: str
    l1: float
    l2: float
    ratio: float
    homogeneity: float
    calibrated: float
    degenerate: bool
    metric: str

    def csv_row(self) -> str:
        return (
            f"{self.image_id},{self.l1!r},{self.l2!r},{self.ratio!r},"
            f"{self.homogeneity!r},{self.calibrated!r},{str(self.degenerate).lower()}"
        )


@dataclass(frozen=True)
class ChainRecord:
    """Losses of n consecutive reconstructions (each vs. its own input)."""

    steps: int
    single_losses: tuple[float, ...]
    cumulative_losses: tuple[float, ...]


def loss_ratio(l1: float, l2: float, eps: float = EPSILON) -> tuple[float, bool]:
    """Ratio t = L1 / max(L2, eps) plus the degenerate flag (L2 < eps)."""
    if l1 < 0 or l2 < 0:
        raise AedrError("losses must be nonnegative")
    degenerate = l2 < eps
    return l1 / max(l2, eps), degenerate


def image_homogeneity(image: Image, cfg: GlcmConfig = GlcmConfig()) -> float:
    """H of the original test image: grayscale -> quantize -> GLCM -> H."""
    return homogeneity(compute_glcm(quantize(to_grayscale(image), cfg.levels), cfg))


def double_reconstruct(
    backend: Reconstructor,
    image: Image,
    metric=LossMetric.MSE,
    cfg: GlcmConfig = GlcmConfig(),
    call_seed: int = 0,
    image_id: str = "",
) -> ReconstructionRecord:
    """Run both reconstruction passes and assemble the calibrated signal.

    The second pass draws independent noise (call_seed + 1). Exactly two
    backend invocations occur.
    """
    first = backend.reconstruct(image, call_seed)
    second = backend.reconstruct(first, call_seed + 1)
    l1 = evaluate_metric(metric, first, image)
    l2 = evaluate_metric(metric, second, first)
    ratio, degenerate = loss_ratio(l1, l2)
    h = image_homogeneity(image, cfg)
    return ReconstructionRecord(
        image_id=image_id,
        l1=l1,
        l2=l2,
        ratio=ratio,
        homogeneity=h,
        calibrated=ratio * h,
        degenerate=degenerate,
        metric=metric_name(metric),
    )


def baseline_signal(
    backend: Reconstructor,
    image: Image,
    metric=LossMetric.MSE,
    call_seed: int = 0,
) -> float:
    """Single-reconstruction loss L1: the signal older methods threshold on."""
    return evaluate_metric(metric, backend.reconstruct(image, call_seed), image)


def chain_reconstruct(
    backend: Reconstructor,
    image: Image,
    steps: int,
    metric=LossMetric.MSE,
    call_seed: int = 0,
) -> ChainRecord:
    """Feed each reconstruction back as the next input for `steps` rounds.

    Loss k compares step k's output to its own input (not the original image).
    chain_reconstruct(n=2) reproduces double_reconstruct's (L1, L2).
    """
    if steps < 1:
        raise AedrError(f"steps must be >= 1, got {steps}")
    singles: list[float] = []
    cumulative: list[float] = []
    total = 0.0
    current = image
    for k in range(steps):
        nxt = backend.reconstruct(current, call_seed + k)
        lk = evaluate_metric(metric, nxt, current)
        singles.append(lk)
        total += lk
        cumulative.append(total)
        current = nxt
    return ChainRecord(steps=steps, single_losses=tuple(singles), cumulative_losses=tuple(cumulative))


def classify(record: ReconstructionRecord, tau: float, use_calibration: bool = True) -> Decision:
    """Decide belonging/non-belonging for a record, honoring the degenerate policy."""
    if record.degenerate:
        return Decision.BELONGING if record.l1 < EPSILON else Decision.NON_BELONGING
    signal = record.calibrated if use_calibration else record.ratio
    return decide(signal, tau)


def records_to_csv(records) -> str:
    """Serialize records with the documented column order."""
    buf = io.StringIO()
    buf.write(RECORD_CSV_HEADER + "\n")
    for rec in records:
        buf.write(rec.csv_row() + "\n")
    return buf.getvalue()
