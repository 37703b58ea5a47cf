"""Command-line interface: train models, run recoveries, benchmark sweeps.

Exit codes: 0 on success, 1 on runtime failure, 2 on usage/config errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .crossscale import CrossScaleModel, predicted_speedup
from .errors import CrossdictError
from .fileio import SingleScaleModel, load_model, load_signal, save_model, save_signal
from .learn import TrainConfig, ksvd, train_cross_scale
from .patchwork import extract_patches
from .pipelines import (BenchmarkRow, PipelineConfig, append_metrics_row,
                        benchmark_sweep, demosaic, denoise, inpaint,
                        lightfield_cs, video_cs, write_benchmark_csv)
from .scaling import DEFAULT_FACTORS, ScaleSpec
from .tensor import snr


def _dims(text: str, what: str):
    try:
        dims = tuple(int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what} must look like 8x8, got {text!r}")
    if not dims or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"{what} entries must be positive")
    return dims


def _int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossdict",
        description="Two-scale predictive dictionaries: training, recovery, benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train a dictionary model and write a .csd file")
    tr.add_argument("--data", nargs="+", required=True, help="training signals (.ten/.pgm/.ppm)")
    tr.add_argument("--patch", type=lambda s: _dims(s, "--patch"), required=True)
    tr.add_argument("--t-high", type=int, required=True, help="fine-scale atom count")
    tr.add_argument("--t-low", type=int, help="coarse atom count; omit for single-scale")
    tr.add_argument("--k-low", type=int, default=8)
    tr.add_argument("--k-high", type=int, help="defaults to --k-low")
    tr.add_argument("--scale-factors", type=lambda s: _dims(s, "--scale-factors"),
                    help="per-axis decimation, e.g. 2x2; default 2 per axis")
    tr.add_argument("--stride", type=lambda s: _dims(s, "--stride"))
    tr.add_argument("--iters", type=int, default=20)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--keep-dc", action="store_true", help="train on raw patches (no mean removal)")
    tr.add_argument("--out", required=True)

    rc = sub.add_parser("recover", help="recover a signal with a trained model")
    rc.add_argument("application", choices=["denoise", "inpaint", "demosaic", "video-cs", "lf-cs"])
    rc.add_argument("--model", required=True)
    rc.add_argument("--input", required=True)
    rc.add_argument("--method", choices=["omp", "zerotree"], default="zerotree")
    rc.add_argument("--mask", help="0/1 tensor of known cells (inpaint)")
    rc.add_argument("--assignment", help="per-pixel channel index tensor (demosaic)")
    rc.add_argument("--code", help="binary exposure code tensor (video-cs)")
    rc.add_argument("--kept-views", type=_int_list, help="1-based view ids (lf-cs)")
    rc.add_argument("--noise-snr", type=float, help="inject white noise at this input SNR (dB)")
    rc.add_argument("--stride", type=lambda s: _dims(s, "--stride"))
    rc.add_argument("--seed", type=int, default=0)
    rc.add_argument("--reference", help="clean signal for the reported SNR")
    rc.add_argument("--out", help="estimate output (.ten/.pgm/.ppm)")
    rc.add_argument("--metrics", help="append one CSV metrics row here")
    rc.add_argument("--threads", type=int, default=1)

    bm = sub.add_parser("benchmark", help="train per-config models and time the coding stage")
    bm.add_argument("--data", required=True)
    bm.add_argument("--sweep", required=True, help="JSON sweep configuration file")
    bm.add_argument("--application", default="denoise")
    bm.add_argument("--out", required=True)
    bm.add_argument("--threads", type=int, default=1)
    return parser


def _check_threads(threads: int):
    if threads != 1:
        warnings.warn("parallel execution is not implemented; running single-threaded")


def _load_training_patches(paths, patch, stride, remove_dc):
    blocks = []
    for path in paths:
        signal = load_signal(path)
        cols, _ = extract_patches(signal, patch, stride, remove_dc=remove_dc)
        blocks.append(cols)
    return np.hstack(blocks)


def _cmd_train(args, parser) -> int:
    k_high = args.k_high if args.k_high is not None else args.k_low
    stride = args.stride or tuple(max(1, p // 2) for p in args.patch)
    if args.t_low is not None and args.t_high % args.t_low:
        parser.error(f"--t-high {args.t_high} must be a multiple of --t-low {args.t_low}")
    cols = _load_training_patches(args.data, args.patch, stride, not args.keep_dc)
    if args.t_low is None:
        config = TrainConfig(args.t_high, k_high, iterations=args.iters, seed=args.seed)
        dictionary, _, _ = ksvd(cols, config)
        save_model(args.out, SingleScaleModel(dictionary, args.patch, k_high))
    else:
        factors = args.scale_factors or DEFAULT_FACTORS.get(len(args.patch), (2,) * len(args.patch))
        scale = ScaleSpec(args.patch, factors)
        model, _ = train_cross_scale(
            cols, scale, args.t_low, args.t_high, args.k_low, k_high,
            iterations=args.iters, seed=args.seed,
        )
        save_model(args.out, model)
    print(f"wrote {args.out}")
    return 0


def _require(parser, condition, message):
    if not condition:
        parser.error(message)


def _cmd_recover(args, parser) -> int:
    _check_threads(args.threads)
    loaded = load_model(args.model)
    method = "omp-single" if args.method == "omp" else "zerotree"
    if method == "zerotree" and not isinstance(loaded, CrossScaleModel):
        parser.error("zerotree recovery needs a two-scale model file")
    signal = load_signal(args.input)
    config = PipelineConfig(
        method=method, model=loaded, stride=args.stride,
        noise_snr_db=args.noise_snr, seed=args.seed,
    )

    app = args.application
    if app == "denoise":
        estimate, metrics = denoise(signal, config)
    elif app == "inpaint":
        _require(parser, args.mask, "inpaint needs --mask")
        estimate, metrics = inpaint(signal, load_signal(args.mask), config)
    elif app == "demosaic":
        _require(parser, args.assignment, "demosaic needs --assignment")
        patch = loaded.scale.fine_shape if isinstance(loaded, CrossScaleModel) else loaded.patch_shape
        estimate, metrics = demosaic(signal, load_signal(args.assignment), patch[-1], config)
    elif app == "video-cs":
        _require(parser, args.code, "video-cs needs --code")
        estimate, metrics = video_cs(signal, load_signal(args.code), config)
    else:
        _require(parser, args.kept_views, "lf-cs needs --kept-views")
        patch = loaded.scale.fine_shape if isinstance(loaded, CrossScaleModel) else loaded.patch_shape
        estimate, metrics = lightfield_cs(signal, patch[-2:], args.kept_views, config)

    if args.out:
        save_signal(args.out, estimate)
    snr_db = float("nan")
    if args.reference:
        snr_db = snr(load_signal(args.reference), estimate)
    elif args.noise_snr is not None and app == "denoise":
        snr_db = snr(signal, estimate)
    if isinstance(loaded, CrossScaleModel):
        t_high, t_low, k = loaded.t_high, loaded.t_low, loaded.k_high
        predicted = predicted_speedup(t_high, t_low, loaded.k_low, loaded.q)
        n = loaded.scale.fine_size
    else:
        t_high, t_low, k = loaded.dictionary.num_atoms, 0, loaded.sparsity
        predicted = 1.0
        n = loaded.dictionary.atom_dim
    row = BenchmarkRow(app, method, n, t_high, t_low, k,
                       metrics.coding_time_s * 1e3, snr_db, 1.0,
                       predicted if method == "zerotree" else 1.0)
    if args.metrics:
        append_metrics_row(args.metrics, row)
    print(f"{app} [{method}]: {metrics.patch_count} patches, "
          f"coding {metrics.coding_time_s * 1e3:.1f} ms, snr {snr_db:.2f} dB")
    return 0


def _cmd_benchmark(args, parser) -> int:
    _check_threads(args.threads)
    try:
        spec = json.loads(Path(args.sweep).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read sweep file {args.sweep}: {exc}")
    if isinstance(spec, list):
        configs, options = spec, {}
    elif isinstance(spec, dict) and isinstance(spec.get("configs"), list):
        configs = spec["configs"]
        options = {k: v for k, v in spec.items() if k != "configs"}
    else:
        parser.error(f"{args.sweep}: expected a JSON list or an object with a 'configs' list")
    for i, entry in enumerate(configs):
        if not isinstance(entry, dict) or not ({"t", "t_high"} & entry.keys()):
            parser.error(f"{args.sweep}: config {i + 1} needs a 't' or 't_high' entry")

    dataset = load_signal(args.data)
    rows = benchmark_sweep(
        dataset, configs, args.application,
        patch_shape=tuple(options.get("patch", (8, 8))),
        stride=tuple(options["stride"]) if "stride" in options else None,
        iterations=int(options.get("iterations", 8)),
        seed=int(options.get("seed", 0)),
        noise_snr_db=options.get("noise_snr_db"),
        repetitions=int(options.get("repetitions", 5)),
    )
    write_benchmark_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            return _cmd_train(args, parser)
        if args.command == "recover":
            return _cmd_recover(args, parser)
        return _cmd_benchmark(args, parser)
    except (CrossdictError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
