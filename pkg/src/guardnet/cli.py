from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

import numpy as np

from guardnet import ANOMALY_CLASS, CLASS_NAMES
from guardnet.analysis.bench import dataset_frames, run_benchmark
from guardnet.analysis.metrics import report
from guardnet.analysis.stats import load_samples, two_sample_t_test
from guardnet.config import (
    SYNTHETIC_SOURCE,
    BenchConfig,
    EvalConfig,
    ModelSettings,
    PredictConfig,
    TrainConfig,
    TTestConfig,
    load_config,
    log_level_name,
)
from guardnet.core.tracing import TraceWriter
from guardnet.data.dataset import SplitConfig, load_dataset, split_dataset
from guardnet.data.ppm import read_ppm
from guardnet.data.synthetic import synthetic_frames
from guardnet.data.transforms import normalize, resize_bilinear
from guardnet.errors import EXIT_DOMAIN, EXIT_OK, GuardnetError
from guardnet.models.mobilenet import Model, build_model, freeze_backbone, predict
from guardnet.models.registry import list_variants
from guardnet.models.weights import load_weights, save_weights
from guardnet.optim.optimizers import get_optimizer, list_optimizers
from guardnet.training.trainer import TrainOptions, evaluate_model, train_model

logger = logging.getLogger(__name__)

_PARSER_ONLY = {"command", "func", "config"}


def _emit_json(payload: dict[str, Any], out: Path | None) -> None:
    text = json.dumps(payload, indent=2)
    print(text)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n", encoding="utf-8")


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {key: value for key, value in vars(args).items() if key not in _PARSER_ONLY}


def _image_size(model: Model) -> tuple[int, int]:
    height, width, _ = model.input_shape
    return height, width


def _load_model(settings: ModelSettings, weights: Path | None) -> Model:
    model = build_model(settings.model_config())
    if weights is not None:
        load_weights(weights, model)
    return model


def trace_path_for(out: Path) -> Path:
    return out.with_name(out.name + ".trace.jsonl")


def _train_command(args: argparse.Namespace) -> int:
    config: TrainConfig = load_config("train", args.config, _overrides(args))
    model = _load_model(config, config.init_weights)
    if config.freeze_backbone:
        if config.init_weights is None:
            logger.warning("freezing a randomly initialised backbone")
        freeze_backbone(model)

    dataset = load_dataset(config.dataset, image_size=_image_size(model))
    val_set = None
    train_set = dataset
    if config.val_fraction > 0:
        split = SplitConfig(1.0 - config.val_fraction, config.val_fraction, 0.0, config.seed)
        train_set, val_set, _ = split_dataset(dataset, split)

    optimizer = get_optimizer(config.optimizer, lr=config.lr)
    options = TrainOptions(
        epochs=config.epochs,
        batch_size=config.batch_size,
        seed=config.seed,
        augment=config.augment_config(),
        prefetch=config.prefetch,
    )
    trace_path = trace_path_for(config.out)
    trace_path.unlink(missing_ok=True)
    tracer = TraceWriter(trace_path)
    history = train_model(
        model,
        train_set,
        optimizer,
        options,
        val_set=val_set,
        tracer=tracer,
        on_epoch=lambda stats: print(stats.format_line(), flush=True),
    )
    save_weights(model, config.out)
    tracer.emit("weights_saved", path=str(config.out), parameters=model.num_parameters())
    tracer.emit("train_done", epochs_run=len(history), seed=config.seed)
    print(f"weights saved to {config.out}")
    return EXIT_OK


def _eval_command(args: argparse.Namespace) -> int:
    config: EvalConfig = load_config("eval", args.config, _overrides(args))
    model = _load_model(config, config.weights)
    dataset = load_dataset(config.dataset, image_size=_image_size(model))
    cm = evaluate_model(model, dataset, config.batch_size)
    payload = report(cm).to_json()
    payload["variant"] = config.variant
    payload["seed"] = config.seed
    payload["skipped_files"] = len(dataset.errors)
    _emit_json(payload, config.out)
    return EXIT_OK


def _predict_command(args: argparse.Namespace) -> int:
    config: PredictConfig = load_config("predict", args.config, _overrides(args))
    model = _load_model(config, config.weights)
    pixels = read_ppm(config.image).astype(np.float32)
    size = _image_size(model)
    if pixels.shape[:2] != size:
        pixels = resize_bilinear(pixels, size)
    index, probs = predict(model, normalize(pixels))
    name = CLASS_NAMES[index]
    payload = {
        "class": name,
        "index": index,
        "probabilities": {label: float(p) for label, p in zip(CLASS_NAMES, probs)},
        "anomaly": name == ANOMALY_CLASS,
        "seed": config.seed,
    }
    _emit_json(payload, config.out)
    return EXIT_OK


def _bench_command(args: argparse.Namespace) -> int:
    config: BenchConfig = load_config("bench", args.config, _overrides(args))
    model = _load_model(config, config.weights)
    size = _image_size(model)
    if config.source == SYNTHETIC_SOURCE:
        frames = synthetic_frames(size[0], seed=config.seed)
    else:
        frames = dataset_frames(load_dataset(Path(config.source), image_size=size), size)
    result = run_benchmark(
        model, frames, config.frames, warmup=config.warmup, seed=config.seed
    )
    payload = result.to_json()
    payload["variant"] = config.variant
    _emit_json(payload, config.out)
    return EXIT_OK


def _ttest_command(args: argparse.Namespace) -> int:
    config: TTestConfig = load_config("ttest", args.config, _overrides(args))
    result = two_sample_t_test(
        load_samples(config.file_a),
        load_samples(config.file_b),
        tails=config.tails,
        alpha=config.alpha,
    )
    payload: dict[str, Any] = {}
    if config.label is not None:
        payload["label"] = config.label
    payload.update(result.to_json())
    payload["seed"] = config.seed
    _emit_json(payload, config.out)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="INI file with a section per command")
    parser.add_argument("--seed", type=int, help="root seed for every random stream")
    parser.add_argument("--out", type=Path)


def _add_model(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--variant", choices=list_variants())
    parser.add_argument("--head-hidden", type=int, dest="head_hidden")
    parser.add_argument("--width-multiplier", type=float, dest="width_multiplier")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="guardnet", description="Admin / Intruder / No Human frame classifier"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    train_parser = subparsers.add_parser("train", help="Train a classifier on a PPM dataset")
    _add_common(train_parser)
    _add_model(train_parser)
    train_parser.add_argument("--dataset", type=Path)
    train_parser.add_argument("--epochs", type=int)
    train_parser.add_argument("--batch-size", type=int, dest="batch_size")
    train_parser.add_argument("--lr", type=float)
    train_parser.add_argument("--optimizer", choices=list_optimizers())
    train_parser.add_argument("--val-fraction", type=float, dest="val_fraction")
    train_parser.add_argument(
        "--no-augment", action="store_false", dest="augment", default=None
    )
    train_parser.add_argument("--init-weights", type=Path, dest="init_weights")
    train_parser.add_argument(
        "--freeze-backbone", action="store_true", dest="freeze_backbone", default=None
    )
    train_parser.add_argument("--prefetch", type=int)
    train_parser.set_defaults(func=_train_command)

    eval_parser = subparsers.add_parser("eval", help="Confusion matrix and per-class metrics")
    _add_common(eval_parser)
    _add_model(eval_parser)
    eval_parser.add_argument("--weights", type=Path)
    eval_parser.add_argument("--dataset", type=Path)
    eval_parser.add_argument("--batch-size", type=int, dest="batch_size")
    eval_parser.set_defaults(func=_eval_command)

    predict_parser = subparsers.add_parser("predict", help="Classify a single P6 image")
    _add_common(predict_parser)
    _add_model(predict_parser)
    predict_parser.add_argument("--weights", type=Path)
    predict_parser.add_argument("--image", type=Path)
    predict_parser.set_defaults(func=_predict_command)

    bench_parser = subparsers.add_parser("bench", help="Per-frame latency and FPS")
    _add_common(bench_parser)
    _add_model(bench_parser)
    bench_parser.add_argument("--weights", type=Path)
    bench_parser.add_argument(
        "--source", help=f"'{SYNTHETIC_SOURCE}' or a dataset directory"
    )
    bench_parser.add_argument("-n", "--frames", type=int, dest="frames")
    bench_parser.add_argument("--warmup", type=int)
    bench_parser.set_defaults(func=_bench_command)

    ttest_parser = subparsers.add_parser("ttest", help="Pooled-variance two-sample t-test")
    _add_common(ttest_parser)
    ttest_parser.add_argument("file_a", type=Path, nargs="?")
    ttest_parser.add_argument("file_b", type=Path, nargs="?")
    ttest_parser.add_argument("--tails", choices=["one", "two"])
    ttest_parser.add_argument("--alpha", type=float)
    ttest_parser.add_argument("--label")
    ttest_parser.set_defaults(func=_ttest_command)

    return parser


def _configure_logging() -> None:
    level = log_level_name()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GuardnetError as exc:
        print(f"guardnet {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"guardnet {args.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    raise SystemExit(main())
