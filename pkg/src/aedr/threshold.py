"""Decision threshold from a Gaussian-kernel density estimate.

The threshold tau is the (1 - alpha) quantile of the smoothed distribution of
calibrated signals from known-belonging images,

    tau = inf{ u : (1/N) sum_i Phi((u - s_i) / h) >= 1 - alpha },

where Phi is the standard normal CDF (the mixture CDF in closed form). The
default bandwidth is Silverman's rule of thumb,

    h = 0.9 * min(sd, IQR / 1.34) * N^(-1/5)

with sd at ddof=1; when the IQR collapses to zero but the spread is nonzero,
sd alone is used. A test image is belonging iff its signal is strictly below
tau.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .errors import AedrError, CorpusError
from .glcm import GlcmConfig

THRESHOLD_SCHEMA_VERSION = 1


class Decision(Enum):
    BELONGING = "belonging"
    NON_BELONGING = "non_belonging"


@dataclass(frozen=True)
class ThresholdModel:
    """Fitted KDE samples plus, once solved, the quantile and threshold.

    Immutable; solve_threshold returns a new instance with alpha/tau filled in.
    `calibrated` records whether the samples are homogeneity-calibrated signals
    (t') or raw ratios (t); `sample_ids` are the calibration image ids used for
    the evaluation-overlap check.
    """

    samples: np.ndarray
    bandwidth: float
    alpha: float | None = None
    tau: float | None = None
    metric: str = "mse"
    glcm: GlcmConfig = GlcmConfig()
    backend_id: str = ""
    calibrated: bool = True
    sample_ids: tuple[str, ...] = ()
    schema_version: int = THRESHOLD_SCHEMA_VERSION

    def __post_init__(self) -> None:
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise AedrError("samples must be a nonempty 1-D sequence")
        if not np.isfinite(samples).all():
            raise AedrError("samples must all be finite")
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise AedrError(f"bandwidth must be positive and finite, got {self.bandwidth}")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)


def silverman_bandwidth(samples: np.ndarray) -> float:
    """Rule-of-thumb bandwidth; requires >= 2 samples with nonzero spread."""
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.size
    if n < 2:
        raise AedrError(f"need at least 2 samples to choose a bandwidth, got {n}")
    sd = float(samples.std(ddof=1))
    if sd == 0.0:
        raise AedrError("samples have zero spread; provide an explicit bandwidth")
    q75, q25 = np.percentile(samples, [75, 25])
    iqr = float(q75 - q25)
    a = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * a * n ** (-0.2)


def fit_kde(
    samples,
    bandwidth: float | None = None,
    *,
    metric: str = "mse",
    glcm: GlcmConfig = GlcmConfig(),
    backend_id: str = "",
    calibrated: bool = True,
    sample_ids: tuple[str, ...] = (),
) -> ThresholdModel:
    """Build a ThresholdModel (without tau) from signal samples.

    An explicit bandwidth overrides Silverman's rule and is the only way to
    fit zero-spread samples.
    """
    arr = np.asarray(list(samples), dtype=np.float64)
    if arr.size < 2:
        raise AedrError(f"need at least 2 samples to fit, got {arr.size}")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(arr)
    return ThresholdModel(
        samples=arr,
        bandwidth=float(bandwidth),
        metric=metric,
        glcm=glcm,
        backend_id=backend_id,
        calibrated=calibrated,
        sample_ids=tuple(sample_ids),
    )


def kde_cdf(model: ThresholdModel, u) -> float | np.ndarray:
    """Mixture CDF (1/N) sum_i Phi((u - s_i) / h); exact for Gaussian kernels."""
    u_arr = np.asarray(u, dtype=np.float64)
    z = (u_arr[..., np.newaxis] - model.samples) / model.bandwidth
    out = ndtr(z).mean(axis=-1)
    return float(out) if np.isscalar(u) or u_arr.ndim == 0 else out


def solve_threshold(model: ThresholdModel, alpha: float) -> ThresholdModel:
    """Locate tau by bisection on the monotone CDF.

    The bracket starts at [min - 10h, max + 10h] and expands if needed; the
    returned endpoint satisfies cdf(tau) >= 1 - alpha while any point more
    than the solver tolerance below tau does not.
    """
    if not (0.0 < alpha < 1.0):
        raise AedrError(f"alpha must be in (0, 1), got {alpha}")
    target = 1.0 - alpha
    h = model.bandwidth
    lo = float(model.samples.min()) - 10.0 * h
    hi = float(model.samples.max()) + 10.0 * h
    for _ in range(64):
        if kde_cdf(model, lo) < target:
            break
        lo -= 10.0 * h
    else:
        raise AedrError("could not bracket the threshold from below")
    for _ in range(64):
        if kde_cdf(model, hi) >= target:
            break
        hi += 10.0 * h
    else:
        raise AedrError("could not bracket the threshold from above")

    span = float(model.samples.max() - model.samples.min())
    tol = 1e-12 * (span + 2.0 * h)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # float resolution exhausted
            break
        if kde_cdf(model, mid) >= target:
            hi = mid
        else:
            lo = mid
    return replace(model, alpha=float(alpha), tau=float(hi))


def decide(signal: float, tau: float) -> Decision:
    """Belonging iff the signal is strictly below the threshold."""
    if not (math.isfinite(signal) and math.isfinite(tau)):
        raise AedrError(f"decide() needs finite inputs, got signal={signal}, tau={tau}")
    return Decision.BELONGING if signal < tau else Decision.NON_BELONGING


def save_threshold(model: ThresholdModel, path: str | Path) -> None:
    """Persist as versioned JSON; floats keep full precision."""
    if model.alpha is None or model.tau is None:
        raise AedrError("threshold model has no tau yet; call solve_threshold first")
    doc = {
        "schema_version": THRESHOLD_SCHEMA_VERSION,
        "backend_id": model.backend_id,
        "metric": model.metric,
        "glcm": model.glcm.to_json_dict(),
        "alpha": model.alpha,
        "bandwidth": model.bandwidth,
        "tau": model.tau,
        "samples": model.samples.tolist(),
        "calibrated": model.calibrated,
        "sample_ids": list(model.sample_ids),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_threshold(path: str | Path) -> ThresholdModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise CorpusError(f"{path}: threshold file not found") from None
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: invalid threshold JSON ({exc})") from None
    if doc.get("schema_version") != THRESHOLD_SCHEMA_VERSION:
        raise CorpusError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    return ThresholdModel(
        samples=np.array(doc["samples"], dtype=np.float64),
        bandwidth=float(doc["bandwidth"]),
        alpha=float(doc["alpha"]),
        tau=float(doc["tau"]),
        metric=str(doc["metric"]),
        glcm=GlcmConfig.from_json_dict(doc["glcm"]),
        backend_id=str(doc["backend_id"]),
        calibrated=bool(doc.get("calibrated", True)),
        sample_ids=tuple(doc.get("sample_ids", ())),
    )
