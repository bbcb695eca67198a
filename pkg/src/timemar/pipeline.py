"""Two-stage training orchestration, token extraction, generation, persistence."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .armodel import ArConfig, ArModel, ar_loss, ar_sample
from .checkpoint import load_checkpoint, save_checkpoint
from .data import ScalerState, TimeSeriesDataset, inverse_scale
from .errors import ConfigError, TrainingDiverged
from .vqvae import DualPathVqvae, TokenSequence, VqvaeConfig


@dataclass
class TrainSchedule:
    epochs: int
    base_lr: float = 1e-4
    decay_epoch: int = 500
    decay_rate: float = 0.5
    batch_size: int = 128
    seed: int = 0

    def validate(self) -> None:
        if self.epochs < 0:
            raise ConfigError(f"schedule.epochs must be >= 0, got {self.epochs}")
        if self.base_lr <= 0:
            raise ConfigError(f"schedule.base_lr must be positive, got {self.base_lr}")
        if self.decay_epoch < 1:
            raise ConfigError(f"schedule.decay_epoch must be >= 1, got {self.decay_epoch}")
        if not 0.0 < self.decay_rate <= 1.0:
            raise ConfigError(
                f"schedule.decay_rate must be in (0, 1], got {self.decay_rate}"
            )
        if self.batch_size < 1:
            raise ConfigError(f"schedule.batch_size must be >= 1, got {self.batch_size}")

    def lr_at(self, epoch: int) -> float:
        return self.base_lr * self.decay_rate ** (epoch // self.decay_epoch)


def _make_optimizer(model: torch.nn.Module, lr: float) -> torch.optim.AdamW:
    # Standard decoupled weight decay: matrix weights only; biases, norm
    # parameters, embeddings, and the codebook stay decay-free.
    decay, no_decay = [], []
    for name, parameter in model.named_parameters():
        if parameter.dim() >= 2 and "codebook" not in name and "emb" not in name:
            decay.append(parameter)
        else:
            no_decay.append(parameter)
    groups = [
        {"params": decay, "weight_decay": 0.01},
        {"params": no_decay, "weight_decay": 0.0},
    ]
    return torch.optim.AdamW(groups, lr=lr, betas=(0.9, 0.95))


def _batches(n: int, batch_size: int, generator: torch.Generator):
    order = torch.randperm(n, generator=generator)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _check_finite(breakdown: dict, epoch: int) -> None:
    for name, value in breakdown.items():
        if not math.isfinite(value):
            raise TrainingDiverged(
                f"non-finite loss term '{name}' ({value}) at epoch {epoch}"
            )


def token_usage_entropy(tokens: torch.Tensor, vocab_size: int) -> float:
    """Shannon entropy (nats) of the empirical codebook usage histogram."""
    counts = torch.bincount(tokens.reshape(-1), minlength=vocab_size).double()
    probs = counts / counts.sum()
    nonzero = probs[probs > 0]
    return float(-(nonzero * nonzero.log()).sum())


class _EpochLog:
    """Append-only CSV training log, one row per epoch."""

    def __init__(self, path: str | Path | None, fields: list[str]):
        self.path = Path(path) if path else None
        self.fields = fields
        if self.path and not self.path.exists():
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("w", newline="") as fh:
                csv.writer(fh).writerow(fields)

    def append(self, row: dict) -> None:
        if not self.path:
            return
        with self.path.open("a", newline="") as fh:
            csv.writer(fh).writerow([row[f] for f in self.fields])


def _state_to_arrays(model: torch.nn.Module) -> dict[str, np.ndarray]:
    return {
        name: tensor.detach().cpu().numpy().astype(np.float32)
        for name, tensor in model.state_dict().items()
    }


def _load_state_from_arrays(model: torch.nn.Module, tensors: dict[str, np.ndarray]) -> None:
    state = {name: torch.from_numpy(array.copy()) for name, array in tensors.items()}
    model.load_state_dict(state)


def build_vqvae(config_dict: dict) -> DualPathVqvae:
    vq_cfg = VqvaeConfig(
        vocab_size=config_dict["vqvae"]["vocab_size"],
        z_channels=config_dict["vqvae"]["z_channels"],
        ch=config_dict["vqvae"]["ch"],
        ch_mult=tuple(config_dict["vqvae"]["ch_mult"]),
        enc_dec_layers=config_dict["vqvae"]["enc_dec_layers"],
        patch_nums=tuple(config_dict["vqvae"]["patch_nums"]),
        beta=config_dict["vqvae"]["beta"],
        lambdas=dict(config_dict["vqvae"]["lambdas"]),
        phi_enabled=config_dict["vqvae"]["phi_enabled"],
    )
    return DualPathVqvae(
        vq_cfg,
        window_length=config_dict["data"]["T"],
        num_features=config_dict["data"]["D"],
        kernel_sizes=tuple(config_dict["decompose"]["kernel_sizes"]),
        downsample_factor=config_dict["decompose"]["downsample_factor"],
    )


def build_armodel(config_dict: dict) -> ArModel:
    ar_cfg = ArConfig(
        vocab_size=config_dict["vqvae"]["vocab_size"],
        patch_nums=tuple(config_dict["vqvae"]["patch_nums"]),
        embed_dim=config_dict["ar"]["embed_dim"],
        layers=config_dict["ar"]["layers"],
        heads=config_dict["ar"]["heads"],
        fc_rate=config_dict["ar"]["fc_rate"],
        dropout=config_dict["ar"]["dropout"],
    )
    return ArModel(ar_cfg)


def train_stage1(
    dataset: TimeSeriesDataset,
    config_dict: dict,
    schedule: TrainSchedule,
    checkpoint_path: str | Path | None = None,
    log_path: str | Path | None = None,
) -> DualPathVqvae:
    """Train the tokenizer; returns the model and optionally saves a checkpoint."""
    schedule.validate()
    if dataset.num_windows < 1:
        raise ConfigError("dataset is empty")
    torch.manual_seed(schedule.seed)
    model = build_vqvae(config_dict)
    optimizer = _make_optimizer(model, schedule.base_lr)
    windows = torch.from_numpy(dataset.windows).float()
    batcher = torch.Generator().manual_seed(schedule.seed)
    fields = [
        "epoch", "lr", "rec", "vq", "rec_trend", "rec_season", "rec_coarse",
        "fourier", "total", "codebook_usage_entropy",
    ]
    log = _EpochLog(log_path, fields)
    history: list[dict] = []
    model.train()
    for epoch in range(schedule.epochs):
        lr = schedule.lr_at(epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr
        sums = {f: 0.0 for f in fields[2:-1]}
        token_chunks = []
        batches = 0
        for index in _batches(len(windows), schedule.batch_size, batcher):
            batch = windows[index]
            out = model(batch)
            breakdown = model.loss(batch, out)
            optimizer.zero_grad(set_to_none=True)
            breakdown.total.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), 1.0)
            optimizer.step()
            values = breakdown.to_floats()
            _check_finite(values, epoch)
            for key in sums:
                sums[key] += values[key]
            token_chunks.append(out.quant.tokens.flat.detach())
            batches += 1
        entropy = token_usage_entropy(
            torch.cat(token_chunks), config_dict["vqvae"]["vocab_size"]
        )
        row = {"epoch": epoch, "lr": lr, "codebook_usage_entropy": entropy}
        row.update({key: sums[key] / batches for key in sums})
        log.append(row)
        history.append({k: row[k] for k in ("epoch", "lr", "total", "rec")})
    if checkpoint_path is not None:
        save_stage1_checkpoint(checkpoint_path, model, config_dict, dataset.scaler, history)
    return model


def save_stage1_checkpoint(
    path: str | Path,
    model: DualPathVqvae,
    config_dict: dict,
    scaler: ScalerState | None,
    history: list[dict],
) -> None:
    config = {
        "kind": "vqvae",
        "config": config_dict,
        "scaler": scaler.to_dict() if scaler is not None else None,
        "history": history,
    }
    save_checkpoint(path, config, _state_to_arrays(model))


def load_stage1_checkpoint(path: str | Path) -> tuple[DualPathVqvae, dict, ScalerState | None]:
    meta, tensors = load_checkpoint(path)
    if meta.get("kind") != "vqvae":
        raise ConfigError(f"checkpoint at {path} is not a stage-1 checkpoint")
    config_dict = meta["config"]
    model = build_vqvae(config_dict)
    _load_state_from_arrays(model, tensors)
    model.eval()
    scaler = ScalerState.from_dict(meta["scaler"]) if meta.get("scaler") else None
    return model, config_dict, scaler


@torch.no_grad()
def extract_tokens(
    dataset: TimeSeriesDataset, model: DualPathVqvae, batch_size: int = 256
) -> np.ndarray:
    """Token corpus [n, L] for a scaled dataset under a trained tokenizer."""
    if dataset.num_windows < 1:
        raise ConfigError("dataset is empty")
    if (
        dataset.window_length != model.window_length
        or dataset.num_features != model.num_features
    ):
        raise ConfigError(
            f"dataset [T={dataset.window_length}, D={dataset.num_features}] does not "
            f"match checkpoint [T={model.window_length}, D={model.num_features}]"
        )
    model.eval()
    windows = torch.from_numpy(dataset.windows).float()
    chunks = []
    for start in range(0, len(windows), batch_size):
        tokens = model.encode_to_tokens(windows[start : start + batch_size])
        chunks.append(tokens.flat)
    return torch.cat(chunks).numpy().astype(np.int64)


def train_stage2(
    corpus: np.ndarray,
    config_dict: dict,
    schedule: TrainSchedule,
    checkpoint_path: str | Path | None = None,
    log_path: str | Path | None = None,
) -> ArModel:
    """Train the autoregressive prior on a frozen token corpus."""
    schedule.validate()
    expected = sum(config_dict["vqvae"]["patch_nums"])
    if corpus.ndim != 2 or corpus.shape[1] != expected:
        raise ConfigError(
            f"token corpus width {corpus.shape[-1] if corpus.ndim == 2 else '?'} "
            f"!= ar sequence length {expected}"
        )
    torch.manual_seed(schedule.seed)
    model = build_armodel(config_dict)
    optimizer = _make_optimizer(model, schedule.base_lr)
    tokens = torch.from_numpy(corpus.astype(np.int64))
    batcher = torch.Generator().manual_seed(schedule.seed)
    log = _EpochLog(log_path, ["epoch", "lr", "nll"])
    history: list[dict] = []
    model.train()
    final_nll = float("nan")
    for epoch in range(schedule.epochs):
        lr = schedule.lr_at(epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr
        total = 0.0
        batches = 0
        for index in _batches(len(tokens), schedule.batch_size, batcher):
            loss = ar_loss(model, tokens[index])
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), 1.0)
            optimizer.step()
            value = float(loss)
            _check_finite({"nll": value}, epoch)
            total += value
            batches += 1
        final_nll = total / batches
        log.append({"epoch": epoch, "lr": lr, "nll": final_nll})
        history.append({"epoch": epoch, "lr": lr, "nll": final_nll})
    if checkpoint_path is not None:
        config = {
            "kind": "ar",
            "config": config_dict,
            "final_nll": None if math.isnan(final_nll) else final_nll,
            "history": history,
        }
        save_checkpoint(checkpoint_path, config, _state_to_arrays(model))
    return model


def load_stage2_checkpoint(path: str | Path) -> tuple[ArModel, dict]:
    meta, tensors = load_checkpoint(path)
    if meta.get("kind") != "ar":
        raise ConfigError(f"checkpoint at {path} is not a stage-2 checkpoint")
    config_dict = meta["config"]
    model = build_armodel(config_dict)
    _load_state_from_arrays(model, tensors)
    model.eval()
    return model, config_dict


@dataclass
class SamplingOptions:
    temperature: float = 1.0
    top_k: int | None = None
    greedy: bool = False


@torch.no_grad()
def generate(
    vq_model: DualPathVqvae,
    ar_model: ArModel,
    count: int,
    options: SamplingOptions | None = None,
    seed: int = 0,
    scaler: ScalerState | None = None,
    chunk_size: int = 512,
) -> np.ndarray:
    """Sample new windows [count, T, D]; inverse-scaled when a scaler is given."""
    options = options or SamplingOptions()
    if vq_model.config.vocab_size != ar_model.config.vocab_size or tuple(
        vq_model.config.patch_nums
    ) != tuple(ar_model.config.patch_nums):
        raise ConfigError(
            "incompatible checkpoints: vocab/patch_nums differ between stages"
        )
    vq_model.eval()
    ar_model.eval()
    outputs = []
    produced = 0
    chunk_index = 0
    while produced < count:
        take = min(chunk_size, count - produced)
        flat = ar_sample(
            ar_model,
            take,
            temperature=options.temperature,
            top_k=options.top_k,
            seed=seed * 1_000_003 + chunk_index,
            greedy=options.greedy,
        )
        tokens = TokenSequence.from_flat(flat, tuple(vq_model.config.patch_nums))
        _, _, _, x_hat = vq_model.decode_tokens(tokens)
        outputs.append(x_hat.numpy().astype(np.float64))
        produced += take
        chunk_index += 1
    samples = np.concatenate(outputs, axis=0)
    if scaler is not None:
        samples = inverse_scale(samples, scaler)
    return samples
