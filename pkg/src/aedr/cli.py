"""Command-line surface.

Commands emit JSON on stdout (human-readable tables behind --pretty) and
diagnostics on stderr. Exit codes: 0 success, 1 usage error, 2 data or
computation error. AEDR_WORKERS caps internal parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backends import load_backend, save_backend, train_linear_backend
from .corpus import call_seed_for, load_corpus, save_corpus
from .errors import AedrError
from .glcm import GlcmConfig
from .harness import (
    bench,
    calibrate,
    evaluate,
    resolve_workers,
    run_attribution_experiment,
    sweep_alpha,
    synthesize_corpus,
)
from .image import load_png
from .losses import LossMetric
from .signal import chain_reconstruct, classify, double_reconstruct, records_to_csv
from .threshold import load_threshold, save_threshold


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise _UsageError(message)


def _emit(doc: dict, pretty_lines=None, pretty: bool = False) -> None:
    if pretty and pretty_lines is not None:
        for line in pretty_lines:
            print(line)
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))


def _metric_from(name: str) -> LossMetric:
    return LossMetric(name)


def _offset(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise _UsageError(f"--glcm-offset expects 'dx,dy', got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise _UsageError(f"--glcm-offset expects integers, got {text!r}") from None


def _alpha_grid(text: str) -> list[float]:
    try:
        grid = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise _UsageError(f"--grid expects comma-separated floats, got {text!r}") from None
    if not grid:
        raise _UsageError("--grid is empty")
    return grid


def _add_loss_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--loss", choices=[m.value for m in LossMetric], default="mse",
                   help="reconstruction loss metric (default mse)")


def _add_glcm_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--glcm-levels", type=int, default=32, help="gray levels for the GLCM (default 32)")
    p.add_argument("--glcm-offset", default="1,0", help="co-occurrence offset dx,dy (default 1,0)")
    p.add_argument("--glcm-asymmetric", action="store_true", help="do not symmetrize the GLCM")


def _glcm_from(args) -> GlcmConfig:
    return GlcmConfig(
        levels=args.glcm_levels,
        offset=_offset(args.glcm_offset),
        symmetric=not args.glcm_asymmetric,
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="aedr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-backend", help="fit a linear autoencoder backend on a PNG corpus")
    p.add_argument("--corpus", required=True, help="directory of training PNGs")
    p.add_argument("--components", required=True, type=int, help="latent dimension k")
    p.add_argument("--sigma", type=float, default=None,
                   help="latent noise sigma (default: 0.05 x mean latent std)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="backend JSON output path")

    p = sub.add_parser("calibrate", help="fit the KDE threshold on belonging images")
    p.add_argument("--backend", required=True)
    p.add_argument("--images", required=True, help="directory of belonging PNGs")
    p.add_argument("--alpha", required=True, type=float)
    p.add_argument("--out", required=True, help="threshold JSON output path")
    p.add_argument("--bandwidth", type=float, default=None, help="override Silverman's rule")
    p.add_argument("--no-calibration", action="store_true",
                   help="threshold the raw ratio t instead of t' = t x H")
    p.add_argument("--workers", type=int, default=None)
    _add_loss_flag(p)
    _add_glcm_flags(p)

    p = sub.add_parser("attribute", help="decide whether one image belongs to the backend's model")
    p.add_argument("--backend", required=True)
    p.add_argument("--threshold", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--pretty", action="store_true")

    p = sub.add_parser("evaluate", help="confusion report over belonging/non-belonging corpora")
    p.add_argument("--backend", required=True)
    p.add_argument("--threshold", required=True)
    p.add_argument("--belonging", required=True)
    p.add_argument("--non-belonging", required=True)
    p.add_argument("--no-calibration", action="store_true")
    p.add_argument("--out", default=None, help="write the full per-image report JSON here")
    p.add_argument("--records-csv", default=None, help="write per-image signal records CSV here")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--pretty", action="store_true")

    p = sub.add_parser("sweep-alpha", help="grid-search the quantile parameter")
    p.add_argument("--backend", required=True)
    p.add_argument("--est", required=True, help="belonging estimation corpus dir")
    p.add_argument("--eval", required=True, help="belonging evaluation corpus dir")
    p.add_argument("--non-belonging-est", required=True)
    p.add_argument("--non-belonging-eval", required=True)
    p.add_argument("--grid", required=True, help="comma-separated alphas, e.g. 0.01,0.02,0.05")
    p.add_argument("--no-calibration", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--pretty", action="store_true")
    _add_loss_flag(p)
    _add_glcm_flags(p)

    p = sub.add_parser("chain", help="losses of n consecutive reconstructions")
    p.add_argument("--backend", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--steps", required=True, type=int)
    p.add_argument("--seed", type=int, default=None, help="call seed (default: derived from file name)")
    p.add_argument("--pretty", action="store_true")
    _add_loss_flag(p)

    p = sub.add_parser("bench", help="mean seconds/image and reconstruct-call count")
    p.add_argument("--backend", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--workers", type=int, default=None)
    _add_loss_flag(p)
    _add_glcm_flags(p)

    p = sub.add_parser("synth", help="synthesize belonging images from a backend")
    p.add_argument("--backend", required=True)
    p.add_argument("--count", required=True, type=int)
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--id-prefix", default=None,
                   help="image id prefix (default synth-s<seed>, keeping ids distinct across seeds)")

    p = sub.add_parser("experiment", help="run the two-backend desk-scale attribution experiment")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", default=None, help="write the full report JSON here")
    p.add_argument("--workers", type=int, default=None)

    return parser


def _cmd_train_backend(args) -> int:
    corpus = load_corpus(args.corpus)
    backend = train_linear_backend(
        [e.image for e in corpus],
        latent_dim=args.components,
        noise_sigma=args.sigma,
        seed=args.seed,
    )
    save_backend(backend, args.out)
    _emit({
        "id": backend.id,
        "width": backend.width,
        "height": backend.height,
        "channels": backend.channels,
        "latent_dim": backend.latent_dim,
        "noise_sigma": backend.noise_sigma,
        "trained_on": len(corpus),
        "out": str(args.out),
    })
    return 0


def _cmd_calibrate(args) -> int:
    backend = load_backend(args.backend)
    corpus = load_corpus(args.images)
    model = calibrate(
        backend,
        corpus,
        alpha=args.alpha,
        metric=_metric_from(args.loss),
        cfg=_glcm_from(args),
        use_calibration=not args.no_calibration,
        bandwidth=args.bandwidth,
        workers=resolve_workers(args.workers),
    )
    save_threshold(model, args.out)
    _emit({
        "backend_id": model.backend_id,
        "metric": model.metric,
        "calibrated": model.calibrated,
        "alpha": model.alpha,
        "bandwidth": model.bandwidth,
        "tau": model.tau,
        "samples": len(model.samples),
        "out": str(args.out),
    })
    return 0


def _cmd_attribute(args) -> int:
    backend = load_backend(args.backend)
    model = load_threshold(args.threshold)
    image = load_png(args.image)
    image_id = Path(args.image).stem
    metric = _metric_from(model.metric)
    record = double_reconstruct(
        backend,
        image,
        metric=metric,
        cfg=model.glcm,
        call_seed=call_seed_for(image_id),
        image_id=image_id,
    )
    verdict = classify(record, model.tau, model.calibrated)
    doc = {
        "image": str(args.image),
        "l1": record.l1,
        "l2": record.l2,
        "ratio": record.ratio,
        "homogeneity": record.homogeneity,
        "calibrated": record.calibrated,
        "tau": model.tau,
        "verdict": verdict.value,
    }
    pretty = [
        f"image        {args.image}",
        f"L1           {record.l1:.8g}",
        f"L2           {record.l2:.8g}",
        f"ratio t      {record.ratio:.6g}",
        f"homogeneity  {record.homogeneity:.6g}",
        f"signal t'    {record.calibrated:.6g}",
        f"threshold    {model.tau:.6g}",
        f"verdict      {verdict.value}",
    ]
    _emit(doc, pretty, args.pretty)
    return 0


def _cmd_evaluate(args) -> int:
    backend = load_backend(args.backend)
    model = load_threshold(args.threshold)
    belonging = load_corpus(args.belonging)
    non_belonging = load_corpus(args.non_belonging)
    report = evaluate(
        backend,
        model,
        belonging,
        non_belonging,
        use_calibration=not args.no_calibration,
        workers=resolve_workers(args.workers),
    )
    doc = {"alpha": model.alpha, "tau": model.tau, **report.to_json_dict(include_per_image=False)}
    if args.out:
        full = {"alpha": model.alpha, "tau": model.tau, **report.to_json_dict(include_per_image=True)}
        Path(args.out).write_text(json.dumps(full, indent=2, sort_keys=True) + "\n")
        doc["out"] = str(args.out)
    if args.records_csv:
        Path(args.records_csv).write_text(records_to_csv(report.records))
        doc["records_csv"] = str(args.records_csv)
    pretty = [
        f"threshold tau  {model.tau:.6g}  (alpha={model.alpha})",
        f"TP {report.tp}  FP {report.fp}  TN {report.tn}  FN {report.fn}",
        f"accuracy       {report.accuracy:.4f}",
    ]
    _emit(doc, pretty, args.pretty)
    return 0


def _cmd_sweep_alpha(args) -> int:
    backend = load_backend(args.backend)
    report = sweep_alpha(
        backend,
        load_corpus(args.est),
        load_corpus(getattr(args, "eval")),
        load_corpus(args.non_belonging_est),
        load_corpus(args.non_belonging_eval),
        grid=_alpha_grid(args.grid),
        metric=_metric_from(args.loss),
        cfg=_glcm_from(args),
        use_calibration=not args.no_calibration,
        workers=resolve_workers(args.workers),
    )
    doc = report.to_json_dict()
    pretty = ["alpha      estimation  evaluation  avg"]
    for row in report.rows:
        marker = " *" if row.alpha == report.best_alpha else ""
        pretty.append(
            f"{row.alpha:<10g} {row.estimation_acc:<11.4f} {row.evaluation_acc:<11.4f} "
            f"{row.avg_acc:.4f}{marker}"
        )
    _emit(doc, pretty, args.pretty)
    return 0


def _cmd_chain(args) -> int:
    backend = load_backend(args.backend)
    image = load_png(args.image)
    image_id = Path(args.image).stem
    seed = args.seed if args.seed is not None else call_seed_for(image_id)
    record = chain_reconstruct(
        backend, image, steps=args.steps, metric=_metric_from(args.loss), call_seed=seed
    )
    doc = {
        "image": str(args.image),
        "backend_id": backend.id,
        "metric": args.loss,
        "steps": record.steps,
        "rows": [
            {"step": k + 1, "single_loss": s, "cumulative_loss": c}
            for k, (s, c) in enumerate(zip(record.single_losses, record.cumulative_losses))
        ],
    }
    pretty = ["step  single_loss     cumulative_loss"]
    for row in doc["rows"]:
        pretty.append(f"{row['step']:<5d} {row['single_loss']:<15.8g} {row['cumulative_loss']:.8g}")
    _emit(doc, pretty, args.pretty)
    return 0


def _cmd_bench(args) -> int:
    backend = load_backend(args.backend)
    corpus = load_corpus(args.images)
    report = bench(
        backend,
        corpus,
        metric=_metric_from(args.loss),
        cfg=_glcm_from(args),
        workers=resolve_workers(args.workers),
    )
    _emit(report.to_json_dict())
    return 0


def _cmd_synth(args) -> int:
    backend = load_backend(args.backend)
    prefix = args.id_prefix if args.id_prefix is not None else f"synth-s{args.seed}"
    entries = synthesize_corpus(backend, args.count, seed=args.seed, id_prefix=prefix, truth="belonging")
    save_corpus(entries, args.out)
    _emit({"backend_id": backend.id, "count": len(entries), "out": str(args.out)})
    return 0


def _cmd_experiment(args) -> int:
    report = run_attribution_experiment(
        seed=args.seed,
        alpha=args.alpha,
        include_per_image=args.out is not None,
        workers=resolve_workers(args.workers),
    )
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        report = {k: v for k, v in report.items() if k != "per_image"}
        report["out"] = str(args.out)
    _emit(report)
    return 0


_HANDLERS = {
    "train-backend": _cmd_train_backend,
    "calibrate": _cmd_calibrate,
    "attribute": _cmd_attribute,
    "evaluate": _cmd_evaluate,
    "sweep-alpha": _cmd_sweep_alpha,
    "chain": _cmd_chain,
    "bench": _cmd_bench,
    "synth": _cmd_synth,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except AedrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
