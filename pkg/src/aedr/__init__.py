"""Training-free origin attribution for generative models with continuous autoencoders.

The pipeline: reconstruct a test image twice through the model's autoencoder,
take the ratio of the two reconstruction losses, calibrate it by the image's
GLCM homogeneity, and compare against a KDE-derived threshold fitted on
signals from known-belonging images.
"""

from .backends import (
    CountingBackend,
    ExternalBackend,
    IdentityBackend,
    LinearAEBackend,
    Reconstructor,
    load_backend,
    save_backend,
    train_linear_backend,
)
from .corpus import CorpusEntry, call_seed_for, gaussian_field_corpus, load_corpus, save_corpus
from .errors import (
    AedrError,
    CorpusError,
    DimensionMismatchError,
    ExternalBackendError,
)
from .glcm import GlcmConfig, GlcmMatrix, compute_glcm, homogeneity
from .harness import (
    AlphaSweepReport,
    BenchReport,
    ConfusionReport,
    baseline_scores,
    bench,
    calibrate,
    calibration_ablation,
    evaluate,
    run_attribution_experiment,
    score_corpus,
    sweep_alpha,
    synthesize_corpus,
)
from .image import Image, QuantizedImage, load_png, quantize, save_png, to_grayscale
from .losses import LossMetric, loss
from .signal import (
    ChainRecord,
    EPSILON,
    ReconstructionRecord,
    baseline_signal,
    chain_reconstruct,
    classify,
    double_reconstruct,
    image_homogeneity,
    loss_ratio,
    records_to_csv,
)
from .threshold import (
    Decision,
    ThresholdModel,
    decide,
    fit_kde,
    kde_cdf,
    load_threshold,
    save_threshold,
    silverman_bandwidth,
    solve_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "AedrError",
    "AlphaSweepReport",
    "BenchReport",
    "ChainRecord",
    "ConfusionReport",
    "CorpusEntry",
    "CorpusError",
    "CountingBackend",
    "Decision",
    "DimensionMismatchError",
    "EPSILON",
    "ExternalBackend",
    "ExternalBackendError",
    "GlcmConfig",
    "GlcmMatrix",
    "IdentityBackend",
    "Image",
    "LinearAEBackend",
    "LossMetric",
    "QuantizedImage",
    "Reconstructor",
    "ReconstructionRecord",
    "ThresholdModel",
    "baseline_scores",
    "baseline_signal",
    "bench",
    "calibrate",
    "calibration_ablation",
    "call_seed_for",
    "chain_reconstruct",
    "classify",
    "compute_glcm",
    "decide",
    "double_reconstruct",
    "evaluate",
    "fit_kde",
    "gaussian_field_corpus",
    "homogeneity",
    "image_homogeneity",
    "kde_cdf",
    "load_backend",
    "load_corpus",
    "load_png",
    "load_threshold",
    "loss",
    "loss_ratio",
    "quantize",
    "records_to_csv",
    "run_attribution_experiment",
    "save_backend",
    "save_corpus",
    "save_png",
    "save_threshold",
    "score_corpus",
    "silverman_bandwidth",
    "solve_threshold",
    "sweep_alpha",
    "synthesize_corpus",
    "to_grayscale",
    "train_linear_backend",
]
