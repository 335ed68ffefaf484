"""Experiment orchestration: calibration, evaluation, sweeps, and benchmarks.

Positive class is "belonging" throughout: tp counts belonging images accepted,
fp counts non-belonging images accepted. Per-image scoring is deterministic
for any worker count because every image's RNG seed derives from its id.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .backends import CountingBackend, LinearAEBackend, Reconstructor, train_linear_backend
from .corpus import CorpusEntry, call_seed_for, gaussian_field_corpus
from .errors import AedrError, CorpusError
from .glcm import GlcmConfig
from .image import Image
from .losses import LossMetric, metric_name
from .signal import ReconstructionRecord, baseline_signal, classify, double_reconstruct
from .threshold import Decision, ThresholdModel, decide, fit_kde, solve_threshold

WORKERS_ENV = "AEDR_WORKERS"


def resolve_workers(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


@dataclass(frozen=True)
class PerImageResult:
    image_id: str
    signal: float
    decision: str
    truth: str

    def to_json_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "signal": self.signal,
            "decision": self.decision,
            "truth": self.truth,
        }


@dataclass(frozen=True)
class ConfusionReport:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    per_image: tuple[PerImageResult, ...]
    records: tuple[ReconstructionRecord, ...]
    backend_id: str = ""
    calibrated: bool = True
    positive_class: str = "belonging"

    def to_json_dict(self, include_per_image: bool = True) -> dict:
        doc = {
            "positive_class": self.positive_class,
            "backend_id": self.backend_id,
            "calibrated": self.calibrated,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "accuracy": self.accuracy,
        }
        if include_per_image:
            doc["per_image"] = [row.to_json_dict() for row in self.per_image]
        return doc


@dataclass(frozen=True)
class AlphaSweepRow:
    alpha: float
    estimation_acc: float
    evaluation_acc: float
    avg_acc: float


@dataclass(frozen=True)
class AlphaSweepReport:
    rows: tuple[AlphaSweepRow, ...]
    best_alpha: float

    def to_json_dict(self) -> dict:
        return {
            "best_alpha": self.best_alpha,
            "rows": [
                {
                    "alpha": r.alpha,
                    "estimation_acc": r.estimation_acc,
                    "evaluation_acc": r.evaluation_acc,
                    "avg_acc": r.avg_acc,
                }
                for r in self.rows
            ],
        }


@dataclass(frozen=True)
class BenchReport:
    backend_id: str
    metric: str
    images: int
    reconstruct_calls: int
    total_seconds: float
    seconds_per_image: float

    def to_json_dict(self) -> dict:
        return {
            "backend_id": self.backend_id,
            "metric": self.metric,
            "images": self.images,
            "reconstruct_calls": self.reconstruct_calls,
            "total_seconds": self.total_seconds,
            "seconds_per_image": self.seconds_per_image,
        }


def synthesize_corpus(
    backend: LinearAEBackend,
    n: int,
    seed: int = 0,
    id_prefix: str = "synth",
    truth: str | None = None,
) -> list[CorpusEntry]:
    """Decode n latent draws z ~ N(0, diag(latent_scales^2)) from the backend.

    The outputs are, by construction, images the backend's model produces.
    """
    if n < 1:
        raise CorpusError(f"n must be >= 1, got {n}")
    if backend.latent_scales is None:
        raise CorpusError(
            f"backend {backend.id!r} has no latent_scales; cannot synthesize from it"
        )
    entries = []
    for i in range(n):
        rng = np.random.default_rng([seed % 2**63, i])
        z = backend.latent_scales * rng.standard_normal(backend.latent_dim)
        entries.append(
            CorpusEntry(
                id=f"{id_prefix}-{i:05d}",
                image=backend.decode(z),
                truth=truth,
                source=backend.id,
            )
        )
    return entries


def score_corpus(
    backend: Reconstructor,
    corpus: list[CorpusEntry],
    metric=LossMetric.MSE,
    cfg: GlcmConfig = GlcmConfig(),
    workers: int | None = None,
) -> list[ReconstructionRecord]:
    """Double-reconstruct every entry; results are ordered like the input."""

    def one(entry: CorpusEntry) -> ReconstructionRecord:
        return double_reconstruct(
            backend,
            entry.image,
            metric=metric,
            cfg=cfg,
            call_seed=call_seed_for(entry.id),
            image_id=entry.id,
        )

    nworkers = resolve_workers(workers)
    if nworkers == 1:
        return [one(e) for e in corpus]
    with ThreadPoolExecutor(max_workers=nworkers) as pool:
        return list(pool.map(one, corpus))


def baseline_scores(
    backend: Reconstructor,
    corpus: list[CorpusEntry],
    metric=LossMetric.MSE,
    workers: int | None = None,
) -> list[float]:
    """Single-reconstruction losses, the baseline attribution signal."""

    def one(entry: CorpusEntry) -> float:
        return baseline_signal(backend, entry.image, metric=metric, call_seed=call_seed_for(entry.id))

    nworkers = resolve_workers(workers)
    if nworkers == 1:
        return [one(e) for e in corpus]
    with ThreadPoolExecutor(max_workers=nworkers) as pool:
        return list(pool.map(one, corpus))


def calibrate(
    backend: Reconstructor,
    corpus: list[CorpusEntry],
    alpha: float,
    metric=LossMetric.MSE,
    cfg: GlcmConfig = GlcmConfig(),
    use_calibration: bool = True,
    bandwidth: float | None = None,
    workers: int | None = None,
) -> ThresholdModel:
    """Fit the KDE threshold on signals from known-belonging images."""
    if len(corpus) < 2:
        raise CorpusError(f"calibration needs >= 2 images, got {len(corpus)}")
    records = score_corpus(backend, corpus, metric=metric, cfg=cfg, workers=workers)
    samples = [r.calibrated if use_calibration else r.ratio for r in records]
    model = fit_kde(
        samples,
        bandwidth,
        metric=metric_name(metric),
        glcm=cfg,
        backend_id=backend.id,
        calibrated=use_calibration,
        sample_ids=tuple(e.id for e in corpus),
    )
    return solve_threshold(model, alpha)


def _tally(
    records: list[ReconstructionRecord],
    truths: list[str],
    tau: float,
    use_calibration: bool,
    backend_id: str,
) -> ConfusionReport:
    tp = fp = tn = fn = 0
    per_image = []
    for rec, truth in zip(records, truths):
        decision = classify(rec, tau, use_calibration)
        signal = rec.calibrated if use_calibration else rec.ratio
        accepted = decision is Decision.BELONGING
        if truth == "belonging":
            tp += accepted
            fn += not accepted
        else:
            fp += accepted
            tn += not accepted
        per_image.append(
            PerImageResult(
                image_id=rec.image_id,
                signal=signal,
                decision=decision.value,
                truth=truth,
            )
        )
    total = tp + fp + tn + fn
    return ConfusionReport(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        accuracy=(tp + tn) / total,
        per_image=tuple(per_image),
        records=tuple(records),
        backend_id=backend_id,
        calibrated=use_calibration,
    )


def _check_overlap(model: ThresholdModel, corpora: list[list[CorpusEntry]]) -> None:
    calibration_ids = set(model.sample_ids)
    if not calibration_ids:
        return
    for corpus in corpora:
        overlap = calibration_ids.intersection(e.id for e in corpus)
        if overlap:
            sample = sorted(overlap)[:3]
            raise CorpusError(
                f"evaluation corpus overlaps the calibration corpus ({len(overlap)} shared ids, "
                f"e.g. {sample}); score held-out images only"
            )


def evaluate(
    backend: Reconstructor,
    model: ThresholdModel,
    belonging: list[CorpusEntry],
    non_belonging: list[CorpusEntry],
    use_calibration: bool | None = None,
    metric=None,
    cfg: GlcmConfig | None = None,
    workers: int | None = None,
    allow_overlap: bool = False,
) -> ConfusionReport:
    """Score both corpora against a fitted threshold and tally the confusion.

    The signal definition must match the one the threshold was fitted on;
    passing use_calibration explicitly asserts it.
    """
    if not belonging or not non_belonging:
        raise CorpusError("evaluation corpora must be nonempty")
    if model.tau is None:
        raise AedrError("threshold model has no tau; call solve_threshold first")
    if use_calibration is None:
        use_calibration = model.calibrated
    elif use_calibration != model.calibrated:
        raise AedrError(
            "threshold was fitted on "
            + ("calibrated t'" if model.calibrated else "raw t")
            + " but evaluation requested the other signal; refit the threshold"
        )
    if not allow_overlap:
        _check_overlap(model, [belonging, non_belonging])
    if metric is None:
        metric = LossMetric(model.metric) if model.metric in {m.value for m in LossMetric} else LossMetric.MSE
    if cfg is None:
        cfg = model.glcm
    records = score_corpus(backend, belonging + non_belonging, metric=metric, cfg=cfg, workers=workers)
    truths = ["belonging"] * len(belonging) + ["non_belonging"] * len(non_belonging)
    return _tally(records, truths, model.tau, use_calibration, backend.id)


def calibration_ablation(
    backend: Reconstructor,
    calibration_corpus: list[CorpusEntry],
    belonging: list[CorpusEntry],
    non_belonging: list[CorpusEntry],
    alpha: float,
    metric=LossMetric.MSE,
    cfg: GlcmConfig = GlcmConfig(),
    workers: int | None = None,
) -> dict:
    """Evaluate with and without homogeneity calibration in one report."""
    out = {}
    for use_calibration, key in ((True, "with_calibration"), (False, "without_calibration")):
        model = calibrate(
            backend,
            calibration_corpus,
            alpha,
            metric=metric,
            cfg=cfg,
            use_calibration=use_calibration,
            workers=workers,
        )
        report = evaluate(backend, model, belonging, non_belonging, workers=workers)
        out[key] = {"tau": model.tau, **report.to_json_dict(include_per_image=False)}
    return out


def sweep_alpha(
    backend: Reconstructor,
    est_corpus: list[CorpusEntry],
    eval_corpus: list[CorpusEntry],
    non_belonging_est: list[CorpusEntry],
    non_belonging_eval: list[CorpusEntry],
    grid: list[float],
    metric=LossMetric.MSE,
    cfg: GlcmConfig = GlcmConfig(),
    use_calibration: bool = True,
    workers: int | None = None,
) -> AlphaSweepReport:
    """Refit tau for each alpha and report estimation/evaluation accuracies.

    Estimation accuracy is in-sample by protocol (the threshold is fitted on
    est_corpus); the estimation and evaluation splits themselves must be
    disjoint. Records are scored once and reused across the grid since the
    signal does not depend on alpha.
    """
    if not grid:
        raise AedrError("alpha grid must be nonempty")
    est_ids = {e.id for e in est_corpus}
    if est_ids.intersection(e.id for e in eval_corpus):
        raise CorpusError("estimation and evaluation corpora overlap")

    est_records = score_corpus(backend, est_corpus, metric=metric, cfg=cfg, workers=workers)
    est_truths = ["belonging"] * len(est_corpus)
    non_est_records = score_corpus(backend, non_belonging_est, metric=metric, cfg=cfg, workers=workers)
    eval_records = score_corpus(
        backend, eval_corpus + non_belonging_eval, metric=metric, cfg=cfg, workers=workers
    )
    eval_truths = ["belonging"] * len(eval_corpus) + ["non_belonging"] * len(non_belonging_eval)

    samples = [r.calibrated if use_calibration else r.ratio for r in est_records]
    base = fit_kde(
        samples,
        metric=metric_name(metric),
        glcm=cfg,
        backend_id=backend.id,
        calibrated=use_calibration,
        sample_ids=tuple(e.id for e in est_corpus),
    )

    rows = []
    for alpha in grid:
        model = solve_threshold(base, alpha)
        est_report = _tally(
            est_records + non_est_records,
            est_truths + ["non_belonging"] * len(non_belonging_est),
            model.tau,
            use_calibration,
            backend.id,
        )
        eval_report = _tally(eval_records, eval_truths, model.tau, use_calibration, backend.id)
        rows.append(
            AlphaSweepRow(
                alpha=float(alpha),
                estimation_acc=est_report.accuracy,
                evaluation_acc=eval_report.accuracy,
                avg_acc=0.5 * (est_report.accuracy + eval_report.accuracy),
            )
        )

    best = rows[0]
    for row in rows[1:]:
        if row.avg_acc > best.avg_acc or (row.avg_acc == best.avg_acc and row.alpha < best.alpha):
            best = row
    return AlphaSweepReport(rows=tuple(rows), best_alpha=best.alpha)


def bench(
    backend: Reconstructor,
    corpus: list[CorpusEntry],
    metric=LossMetric.MSE,
    cfg: GlcmConfig = GlcmConfig(),
    workers: int | None = None,
) -> BenchReport:
    """Time double-reconstruction scoring; asserts exactly 2 calls per image."""
    if not corpus:
        raise CorpusError("bench corpus is empty")
    counter = CountingBackend(backend)
    start = time.perf_counter()
    score_corpus(counter, corpus, metric=metric, cfg=cfg, workers=workers)
    elapsed = time.perf_counter() - start
    expected = 2 * len(corpus)
    if counter.calls != expected:
        raise AedrError(
            f"reconstruct-call counter is {counter.calls}, expected {expected}"
        )
    return BenchReport(
        backend_id=backend.id,
        metric=metric_name(metric),
        images=len(corpus),
        reconstruct_calls=counter.calls,
        total_seconds=elapsed,
        seconds_per_image=elapsed / len(corpus),
    )


# ---------------------------------------------------------------------------
# Desk-scale two-backend attribution experiment
# ---------------------------------------------------------------------------

# Defaults chosen so the single-loss baseline visibly suffers from the
# complexity bias the ratio cancels: the target family clips enough at the
# [0,1] boundary to spread its first-pass losses, and the other family's
# losses land inside that spread while its loss *ratio* stays well separated.
TARGET_FAMILY = {"correlation": 3.0, "amplitude": 0.42}
OTHER_FAMILY = {"correlation": 1.5, "amplitude": 0.012}


def _train_family_backend(
    family: dict,
    n_train: int,
    width: int,
    height: int,
    latent_dim: int,
    seed: int,
    backend_id: str,
) -> LinearAEBackend:
    train = gaussian_field_corpus(
        n_train,
        width,
        height,
        correlation=family["correlation"],
        amplitude=family["amplitude"],
        seed=seed,
        id_prefix=f"{backend_id}-train",
        source=backend_id,
    )
    return train_linear_backend(
        [e.image for e in train], latent_dim, seed=seed, backend_id=backend_id
    )


def run_attribution_experiment(
    seed: int = 0,
    n_train: int = 320,
    n_calibrate: int = 500,
    n_eval: int = 500,
    width: int = 64,
    height: int = 64,
    latent_dim: int = 16,
    alpha: float = 0.05,
    metric=LossMetric.MSE,
    cfg: GlcmConfig = GlcmConfig(),
    target_family: dict = TARGET_FAMILY,
    other_family: dict = OTHER_FAMILY,
    include_baseline: bool = True,
    include_per_image: bool = True,
    workers: int | None = None,
) -> dict:
    """Two stochastic linear backends on disjoint texture families.

    The target backend is calibrated on n_calibrate synthesized belonging
    images and evaluated on held-out belonging plus non-belonging images
    synthesized by the other backend. Optionally also scores the single-loss
    baseline signal with its own KDE threshold for comparison. The returned
    dict is JSON-serializable and fully determined by the arguments.
    """
    target = _train_family_backend(
        target_family, n_train, width, height, latent_dim, seed, "target"
    )
    other = _train_family_backend(
        other_family, n_train, width, height, latent_dim, seed + 1, "other"
    )

    cal = synthesize_corpus(target, n_calibrate, seed=seed + 10, id_prefix="cal", truth="belonging")
    bel = synthesize_corpus(target, n_eval, seed=seed + 11, id_prefix="bel", truth="belonging")
    non = synthesize_corpus(other, n_eval, seed=seed + 12, id_prefix="non", truth="non_belonging")

    model = calibrate(target, cal, alpha, metric=metric, cfg=cfg, workers=workers)
    report = evaluate(target, model, bel, non, workers=workers)
    fn_rate = report.fn / (report.tp + report.fn)

    doc = {
        "config": {
            "seed": seed,
            "n_train": n_train,
            "n_calibrate": n_calibrate,
            "n_eval": n_eval,
            "width": width,
            "height": height,
            "latent_dim": latent_dim,
            "alpha": alpha,
            "metric": metric_name(metric),
            "glcm": cfg.to_json_dict(),
            "target_family": target_family,
            "other_family": other_family,
        },
        "backend": {
            "id": target.id,
            "latent_dim": target.latent_dim,
            "noise_sigma": target.noise_sigma,
        },
        "threshold": {"alpha": alpha, "bandwidth": model.bandwidth, "tau": model.tau},
        "ratio_signal": {
            **report.to_json_dict(include_per_image=False),
            "belonging_false_negative_rate": fn_rate,
        },
    }
    if include_per_image:
        doc["per_image"] = [
            {
                "image_id": rec.image_id,
                "l1": rec.l1,
                "l2": rec.l2,
                "ratio": rec.ratio,
                "homogeneity": rec.homogeneity,
                "calibrated": rec.calibrated,
                "degenerate": rec.degenerate,
                "decision": row.decision,
                "truth": row.truth,
            }
            for rec, row in zip(report.records, report.per_image)
        ]

    if include_baseline:
        cal_losses = baseline_scores(target, cal, metric=metric, workers=workers)
        base_model = solve_threshold(
            fit_kde(cal_losses, metric=metric_name(metric), backend_id=target.id, calibrated=False),
            alpha,
        )
        eval_losses = baseline_scores(target, bel + non, metric=metric, workers=workers)
        truths = ["belonging"] * len(bel) + ["non_belonging"] * len(non)
        tp = fp = tn = fn = 0
        for value, truth in zip(eval_losses, truths):
            accepted = decide(value, base_model.tau) is Decision.BELONGING
            if truth == "belonging":
                tp += accepted
                fn += not accepted
            else:
                fp += accepted
                tn += not accepted
        doc["baseline_signal"] = {
            "tau": base_model.tau,
            "tp": tp,
            "fp": fp,
            "tn": tn,
            "fn": fn,
            "accuracy": (tp + tn) / len(eval_losses),
        }
    return doc
