"""Command-line surface: validate, train, generate, evaluate, decompose, benchmark.

Exit codes: 0 on success, 1 on runtime failure (single machine-parsable
`timemar-error:` line on stderr), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np
import torch

from . import io as artifact_io
from .armodel import ar_sample
from .config import (
    config_hash,
    format_resolved,
    load_config_file,
    resolve_config,
    validate_config,
)
from .data import gen_sines
from .decompose import coarse_seasonal
from .errors import ConfigError, TimemarError
from .metrics import context_fid, discriminative_score, predictive_score, train_embedder
from .pipeline import (
    SamplingOptions,
    TrainSchedule,
    extract_tokens,
    generate,
    load_stage1_checkpoint,
    load_stage2_checkpoint,
    train_stage1,
    train_stage2,
)
from .runtime import apply_thread_cap, seed_everything
from .viz import pca_kde_export

ERROR_PREFIX = "timemar-error:"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="YAML config file")
    parser.add_argument("--profile", help="bundled dataset profile name")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--seed", type=int, help="override every seed field")
    parser.add_argument(
        "--strict", action="store_true",
        help="single-threaded bitwise-reproducible mode",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="timemar")
    sub = parser.add_subparsers(dest="command", required=True)

    sub_validate = sub.add_parser("validate", help="resolve and check a configuration")
    _add_common(sub_validate)

    sub_tv = sub.add_parser("train-vqvae", help="stage 1: train the tokenizer")
    _add_common(sub_tv)

    sub_ta = sub.add_parser("train-ar", help="stage 2: train the token prior")
    _add_common(sub_ta)
    sub_ta.add_argument("--vqvae-checkpoint", type=Path, help="stage-1 checkpoint path")

    sub_gen = sub.add_parser("generate", help="sample new windows from trained checkpoints")
    _add_common(sub_gen)
    sub_gen.add_argument("--vqvae-checkpoint", type=Path)
    sub_gen.add_argument("--ar-checkpoint", type=Path)
    sub_gen.add_argument("--n", type=int, default=256, help="number of windows")
    sub_gen.add_argument("--temperature", type=float)
    sub_gen.add_argument("--top-k", type=int)
    sub_gen.add_argument("--greedy", action="store_true")
    sub_gen.add_argument(
        "--raw-units", action="store_true",
        help="inverse-scale samples back to original units",
    )

    sub_eval = sub.add_parser("evaluate", help="score generated samples against real data")
    _add_common(sub_eval)
    sub_eval.add_argument("--samples", type=Path, help="generated samples (.npy sidecar)")

    sub_dec = sub.add_parser("decompose", help="export decomposition components as CSV")
    _add_common(sub_dec)
    sub_dec.add_argument("--checkpoint", type=Path, help="reuse a trained decomposer")
    sub_dec.add_argument("--limit", type=int, default=8, help="windows to export")

    sub_bench = sub.add_parser("benchmark", help="wall-clock sampling time per batch")
    _add_common(sub_bench)
    sub_bench.add_argument("--vqvae-checkpoint", type=Path)
    sub_bench.add_argument("--ar-checkpoint", type=Path)
    sub_bench.add_argument("--batch-sizes", default="16,64,256")
    return parser


def _resolve(args: argparse.Namespace) -> tuple[dict, dict]:
    user_config = load_config_file(args.config) if args.config else {}
    overrides: dict = {}
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    if args.seed is not None:
        overrides.setdefault("data", {})["seed"] = args.seed
        overrides.setdefault("schedule_stage1", {})["seed"] = args.seed
        overrides.setdefault("schedule_stage2", {})["seed"] = args.seed
        overrides.setdefault("metrics", {})["seed"] = args.seed
    config, origin = resolve_config(user_config, args.profile, overrides)
    return config, origin


def _schedule(section: dict) -> TrainSchedule:
    return TrainSchedule(
        epochs=section["epochs"],
        base_lr=section["base_lr"],
        decay_epoch=section["decay_epoch"],
        decay_rate=section["decay_rate"],
        batch_size=section["batch_size"],
        seed=section["seed"],
    )


def cmd_validate(args: argparse.Namespace) -> int:
    config, origin = _resolve(args)
    print(format_resolved(config, origin))
    errors = validate_config(config)
    if errors:
        for error in errors:
            print(f"invalid: {error}", file=sys.stderr)
        return 2
    print("config ok")
    return 0


def _prepare(args: argparse.Namespace, command: str) -> tuple[dict, Path, int, float]:
    config, _ = _resolve(args)
    errors = validate_config(config)
    if errors:
        raise ConfigError("; ".join(errors))
    apply_thread_cap(strict=args.strict)
    out_dir = Path(config["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = config["data"]["seed"] if args.seed is None else args.seed
    seed_everything(seed)
    return config, out_dir, seed, time.time()


def cmd_train_vqvae(args: argparse.Namespace) -> int:
    config, out_dir, seed, started = _prepare(args, "train-vqvae")
    dataset = artifact_io.dataset_from_config(config)
    checkpoint = out_dir / "vqvae.ckpt"
    log_path = out_dir / "train_vqvae_log.csv"
    train_stage1(
        dataset,
        config,
        _schedule(config["schedule_stage1"]),
        checkpoint_path=checkpoint,
        log_path=log_path,
    )
    manifest = artifact_io.write_manifest(
        out_dir, "train-vqvae", config_hash(config), seed, started,
        [checkpoint, log_path],
    )
    print(f"wrote {checkpoint} and {manifest}")
    return 0


def cmd_train_ar(args: argparse.Namespace) -> int:
    config, out_dir, seed, started = _prepare(args, "train-ar")
    vq_path = args.vqvae_checkpoint or out_dir / "vqvae.ckpt"
    vq_model, vq_config, _ = load_stage1_checkpoint(vq_path)
    dataset = artifact_io.dataset_from_config(config)
    corpus = extract_tokens(dataset, vq_model)
    checkpoint = out_dir / "ar.ckpt"
    log_path = out_dir / "train_ar_log.csv"
    train_stage2(
        corpus,
        vq_config,
        _schedule(config["schedule_stage2"]),
        checkpoint_path=checkpoint,
        log_path=log_path,
    )
    manifest = artifact_io.write_manifest(
        out_dir, "train-ar", config_hash(config), seed, started,
        [checkpoint, log_path],
    )
    print(f"wrote {checkpoint} and {manifest}")
    return 0


def _load_pair(args: argparse.Namespace, out_dir: Path):
    vq_path = args.vqvae_checkpoint or out_dir / "vqvae.ckpt"
    ar_path = args.ar_checkpoint or out_dir / "ar.ckpt"
    vq_model, vq_config, scaler = load_stage1_checkpoint(vq_path)
    ar_model, _ = load_stage2_checkpoint(ar_path)
    return vq_model, ar_model, vq_config, scaler


def cmd_generate(args: argparse.Namespace) -> int:
    config, out_dir, seed, started = _prepare(args, "generate")
    vq_model, ar_model, _, scaler = _load_pair(args, out_dir)
    sampling = config["sampling"]
    options = SamplingOptions(
        temperature=args.temperature if args.temperature is not None else sampling["temperature"],
        top_k=args.top_k if args.top_k is not None else sampling["top_k"],
        greedy=args.greedy or sampling["greedy"],
    )
    samples = generate(
        vq_model, ar_model, args.n, options, seed=seed,
        scaler=scaler if args.raw_units else None,
    )
    artifacts = artifact_io.save_samples(out_dir, samples, stem="samples")
    manifest = artifact_io.write_manifest(
        out_dir, "generate", config_hash(config), seed, started, artifacts
    )
    print(f"wrote {artifacts[0]} {artifacts[1]} and {manifest}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config, out_dir, seed, started = _prepare(args, "evaluate")
    samples_path = args.samples or out_dir / "samples.npy"
    synth = artifact_io.load_samples(samples_path)
    dataset = artifact_io.dataset_from_config(config)
    real = dataset.windows
    runs = config["metrics"]["runs"]
    metric_seed = config["metrics"]["seed"]
    reports = [
        discriminative_score(real, synth, seed=metric_seed, runs=runs),
        predictive_score(real, synth, seed=metric_seed, runs=runs),
    ]
    embedder = train_embedder(real, seed=metric_seed, embed_dim=config["metrics"]["embed_dim"])
    reports.append(context_fid(real, synth, embedder, runs=runs, seed=metric_seed))
    metrics_path = out_dir / "metrics.csv"
    with metrics_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "mean", "std", "runs"])
        for report in reports:
            writer.writerow([report.name, f"{report.mean:.6f}", f"{report.std:.6f}", report.runs])
    for report in reports:
        print(f"{report.name}: {report.summary()} over {report.runs} runs")
    exports = pca_kde_export(real, synth, out_dir)
    manifest = artifact_io.write_manifest(
        out_dir, "evaluate", config_hash(config), seed, started,
        [metrics_path, exports["pca"], exports["kde"]],
    )
    print(f"wrote {metrics_path} and {manifest}")
    return 0


def cmd_decompose(args: argparse.Namespace) -> int:
    config, out_dir, seed, started = _prepare(args, "decompose")
    dataset = artifact_io.dataset_from_config(config)
    windows = torch.from_numpy(dataset.windows[: args.limit]).float()
    if args.checkpoint:
        model, _, _ = load_stage1_checkpoint(args.checkpoint)
        decomposer = model.decomposer
        factor = model.downsample_factor
    else:
        from .decompose import Decomposer

        decomposer = Decomposer(
            dataset.num_features,
            tuple(config["decompose"]["kernel_sizes"]),
            config["decompose"]["downsample_factor"],
        )
        factor = config["decompose"]["downsample_factor"]
    with torch.no_grad():
        trend, seasonal = decomposer(windows)
        coarse = coarse_seasonal(seasonal, factor)
    artifacts = [
        artifact_io.save_windows_csv(out_dir / "input.csv", windows.numpy()),
        artifact_io.save_windows_csv(out_dir / "trend.csv", trend.numpy()),
        artifact_io.save_windows_csv(out_dir / "seasonal.csv", seasonal.numpy()),
        artifact_io.save_windows_csv(out_dir / "coarse.csv", coarse.numpy()),
    ]
    manifest = artifact_io.write_manifest(
        out_dir, "decompose", config_hash(config), seed, started, artifacts
    )
    print("wrote " + " ".join(str(a) for a in artifacts) + f" and {manifest}")
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    config, out_dir, seed, started = _prepare(args, "benchmark")
    vq_model, ar_model, _, _ = _load_pair(args, out_dir)
    del vq_model
    try:
        batch_sizes = [int(b) for b in str(args.batch_sizes).split(",") if b.strip()]
    except ValueError as exc:
        raise ConfigError(f"--batch-sizes must be comma-separated integers: {exc}") from exc
    rows = []
    for batch_size in batch_sizes:
        # Cumulative elapsed time at each token milestone of one sampling pass,
        # so seconds are non-decreasing in tokens_per_sequence by construction.
        milestones = _timed_sampling(ar_model, batch_size, seed)
        for tokens_per_sequence, seconds in milestones:
            rows.append((batch_size, tokens_per_sequence, seconds))
    bench_path = out_dir / "benchmark.csv"
    with bench_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["batch_size", "tokens_per_sequence", "seconds"])
        for row in rows:
            writer.writerow([row[0], row[1], f"{row[2]:.6f}"])
    manifest = artifact_io.write_manifest(
        out_dir, "benchmark", config_hash(config), seed, started, [bench_path]
    )
    print(f"wrote {bench_path} and {manifest}")
    return 0


@torch.no_grad()
def _timed_sampling(ar_model, batch_size: int, seed: int) -> list[tuple[int, float]]:
    ar_model.eval()
    generator = torch.Generator().manual_seed(seed)
    tokens = torch.full((batch_size, 1), ar_model.config.bos_id, dtype=torch.long)
    milestones = []
    begin = time.perf_counter()
    for step in range(ar_model.config.seq_length):
        logits = ar_model(tokens)[:, -1, :].clone()
        logits[:, ar_model.config.bos_id] = float("-inf")
        probs = torch.softmax(logits, dim=-1)
        nxt = torch.multinomial(probs, 1, generator=generator)
        tokens = torch.cat([tokens, nxt], dim=1)
        milestones.append((step + 1, time.perf_counter() - begin))
    return milestones


COMMANDS = {
    "validate": cmd_validate,
    "train-vqvae": cmd_train_vqvae,
    "train-ar": cmd_train_ar,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "decompose": cmd_decompose,
    "benchmark": cmd_benchmark,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"{ERROR_PREFIX} config: {exc}", file=sys.stderr)
        return 2
    except TimemarError as exc:
        print(f"{ERROR_PREFIX} {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{ERROR_PREFIX} {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
