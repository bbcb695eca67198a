"""Experiment configuration: defaults, profile merging, validation, hashing."""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import yaml

from .errors import ConfigError
from .profiles import get_profile
from .vqvae.config import DEFAULT_LAMBDAS

DEFAULTS: dict = {
    "data": {
        "source": "sines",
        "n": 2000,
        "T": 24,
        "D": 5,
        "seed": 0,
        "path": None,
        "stride": 1,
        "has_header": True,
        "drop_timestamp_column": False,
    },
    "decompose": {"kernel_sizes": [5, 9, 13], "downsample_factor": 4},
    "vqvae": {
        "vocab_size": 512,
        "z_channels": 256,
        "ch": 256,
        "ch_mult": [1, 1, 2],
        "enc_dec_layers": 3,
        "patch_nums": [1, 2, 3, 4, 5, 6],
        "beta": 0.25,
        "lambdas": dict(DEFAULT_LAMBDAS),
        "phi_enabled": True,
    },
    "ar": {
        "embed_dim": 1024,
        "layers": 1,
        "heads": 16,
        "fc_rate": 4,
        "dropout": 0.1,
        # Optional cross-checks; when present they must match the vqvae section.
        "vocab_size": None,
        "L": None,
    },
    "schedule_stage1": {
        "epochs": 5000,
        "base_lr": 1e-4,
        "decay_epoch": 500,
        "decay_rate": 0.5,
        "batch_size": 128,
        "seed": 0,
    },
    "schedule_stage2": {
        "epochs": 900,
        "base_lr": 1e-4,
        "decay_epoch": 90,
        "decay_rate": 0.5,
        "batch_size": 512,
        "seed": 0,
    },
    "metrics": {"runs": 10, "seed": 0, "embed_dim": 32},
    "sampling": {"temperature": 1.0, "top_k": None, "greedy": False},
    "output_dir": "runs/out",
}


def _deep_merge(base: dict, override: dict, origin: dict, label: str, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value, origin, label, prefix=path + ".")
        else:
            out[key] = copy.deepcopy(value)
            origin[path] = label
    return out


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        loaded = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file does not parse: {exc}") from exc
    if loaded is None:
        return {}
    if not isinstance(loaded, dict):
        raise ConfigError("config file must contain a mapping at the top level")
    return loaded


def resolve_config(
    user_config: dict | None = None,
    profile: str | None = None,
    cli_overrides: dict | None = None,
) -> tuple[dict, dict]:
    """Merge defaults <- profile <- config file <- CLI flags.

    Returns (resolved config, origin map of dotted field path -> source label);
    fields absent from the origin map kept their default.
    """
    origin: dict[str, str] = {}
    resolved = copy.deepcopy(DEFAULTS)
    if profile:
        try:
            fragment = get_profile(profile)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
        resolved = _deep_merge(resolved, fragment, origin, f"profile:{profile}")
    if user_config:
        unknown = set(user_config) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        resolved = _deep_merge(resolved, user_config, origin, "config")
    if cli_overrides:
        resolved = _deep_merge(resolved, cli_overrides, origin, "cli")
    return resolved, origin


def validate_config(config: dict) -> list[str]:
    """All violated invariants, each tagged with its field path."""
    errors: list[str] = []
    data = config["data"]
    t = data.get("T", 0)
    if data.get("source") not in ("sines", "csv"):
        errors.append(f"data.source: must be 'sines' or 'csv', got {data.get('source')!r}")
    if not isinstance(t, int) or t < 1:
        errors.append(f"data.T: must be a positive integer, got {t!r}")
    if data.get("source") == "sines":
        for key in ("n", "D"):
            if not isinstance(data.get(key), int) or data[key] < 1:
                errors.append(f"data.{key}: must be a positive integer, got {data.get(key)!r}")
    if data.get("source") == "csv":
        if not data.get("path"):
            errors.append("data.path: required when data.source is 'csv'")
        if not isinstance(data.get("stride"), int) or data["stride"] < 1:
            errors.append(f"data.stride: must be >= 1, got {data.get('stride')!r}")

    dec = config["decompose"]
    kernels = dec.get("kernel_sizes", [])
    if not kernels:
        errors.append("decompose.kernel_sizes: must list at least one kernel")
    for k in kernels:
        if not isinstance(k, int) or k < 1 or k % 2 == 0:
            errors.append(f"decompose.kernel_sizes: entries must be odd positive integers, got {k!r}")
        elif isinstance(t, int) and t >= 1 and k > t:
            errors.append(f"decompose.kernel_sizes: kernel {k} exceeds data.T={t}")
    factor = dec.get("downsample_factor")
    if not isinstance(factor, int) or factor < 1:
        errors.append(f"decompose.downsample_factor: must be a positive integer, got {factor!r}")
    elif isinstance(t, int) and t >= 1 and t % factor != 0:
        errors.append(f"decompose.downsample_factor: {factor} does not divide data.T={t}")

    vq = config["vqvae"]
    if vq.get("vocab_size", 0) < 2:
        errors.append(f"vqvae.vocab_size: must be >= 2, got {vq.get('vocab_size')!r}")
    for key in ("z_channels", "ch", "enc_dec_layers"):
        if not isinstance(vq.get(key), int) or vq[key] < 1:
            errors.append(f"vqvae.{key}: must be a positive integer, got {vq.get(key)!r}")
    ch_mult = vq.get("ch_mult", [])
    if not ch_mult or any((not isinstance(m, int)) or m < 1 for m in ch_mult):
        errors.append(f"vqvae.ch_mult: must be non-empty positive integers, got {ch_mult!r}")
    patch_nums = vq.get("patch_nums", [])
    if not patch_nums or any((not isinstance(p, int)) or p < 1 for p in patch_nums):
        errors.append(f"vqvae.patch_nums: must be non-empty positive integers, got {patch_nums!r}")
    elif list(patch_nums) != sorted(set(patch_nums)):
        errors.append(f"vqvae.patch_nums: must be strictly increasing, got {patch_nums!r}")
    elif ch_mult and isinstance(t, int) and t >= 1:
        ratio = 2 ** (len(ch_mult) - 1)
        if t % ratio != 0:
            errors.append(
                f"vqvae.ch_mult: data.T={t} is not divisible by 2^(len(ch_mult)-1)={ratio}"
            )
        elif max(patch_nums) != t // ratio:
            errors.append(
                f"vqvae.patch_nums: max(patch_nums)={max(patch_nums)} must equal "
                f"T/2^(len(ch_mult)-1)={t // ratio}"
            )
    if vq.get("beta", 0) < 0:
        errors.append(f"vqvae.beta: must be non-negative, got {vq.get('beta')!r}")
    for key, value in vq.get("lambdas", {}).items():
        if key not in DEFAULT_LAMBDAS:
            errors.append(f"vqvae.lambdas.{key}: unknown loss weight")
        elif value < 0:
            errors.append(f"vqvae.lambdas.{key}: must be non-negative, got {value!r}")

    ar = config["ar"]
    for key in ("embed_dim", "layers", "heads", "fc_rate"):
        if not isinstance(ar.get(key), int) or ar[key] < 1:
            errors.append(f"ar.{key}: must be a positive integer, got {ar.get(key)!r}")
    if (
        isinstance(ar.get("embed_dim"), int)
        and isinstance(ar.get("heads"), int)
        and ar["heads"] >= 1
        and ar["embed_dim"] % ar["heads"] != 0
    ):
        errors.append(
            f"ar.embed_dim: {ar['embed_dim']} is not divisible by ar.heads={ar['heads']}"
        )
    if not 0.0 <= ar.get("dropout", 0.0) < 1.0:
        errors.append(f"ar.dropout: must be in [0, 1), got {ar.get('dropout')!r}")
    if patch_nums:
        token_length = sum(patch_nums)
        if ar.get("L") is not None and ar["L"] != token_length:
            errors.append(
                f"ar.L: {ar['L']} does not match sum(vqvae.patch_nums)={token_length}"
            )
        if ar.get("vocab_size") is not None and ar["vocab_size"] != vq.get("vocab_size"):
            errors.append(
                f"ar.vocab_size: {ar['vocab_size']} does not match "
                f"vqvae.vocab_size={vq.get('vocab_size')}"
            )

    for section in ("schedule_stage1", "schedule_stage2"):
        sched = config[section]
        if not isinstance(sched.get("epochs"), int) or sched["epochs"] < 0:
            errors.append(f"{section}.epochs: must be >= 0, got {sched.get('epochs')!r}")
        if sched.get("base_lr", 0) <= 0:
            errors.append(f"{section}.base_lr: must be positive, got {sched.get('base_lr')!r}")
        if not isinstance(sched.get("decay_epoch"), int) or sched["decay_epoch"] < 1:
            errors.append(f"{section}.decay_epoch: must be >= 1, got {sched.get('decay_epoch')!r}")
        if not 0.0 < sched.get("decay_rate", 0.0) <= 1.0:
            errors.append(f"{section}.decay_rate: must be in (0, 1], got {sched.get('decay_rate')!r}")
        if not isinstance(sched.get("batch_size"), int) or sched["batch_size"] < 1:
            errors.append(f"{section}.batch_size: must be >= 1, got {sched.get('batch_size')!r}")

    metrics = config["metrics"]
    if not isinstance(metrics.get("runs"), int) or metrics["runs"] < 1:
        errors.append(f"metrics.runs: must be >= 1, got {metrics.get('runs')!r}")
    if not isinstance(metrics.get("embed_dim"), int) or metrics["embed_dim"] < 1:
        errors.append(f"metrics.embed_dim: must be >= 1, got {metrics.get('embed_dim')!r}")

    sampling = config["sampling"]
    if not sampling.get("greedy", False) and sampling.get("temperature", 0) <= 0:
        errors.append(f"sampling.temperature: must be positive, got {sampling.get('temperature')!r}")
    if sampling.get("top_k") is not None and sampling["top_k"] < 1:
        errors.append(f"sampling.top_k: must be >= 1, got {sampling.get('top_k')!r}")
    return errors


def require_valid(config: dict) -> None:
    errors = validate_config(config)
    if errors:
        raise ConfigError("; ".join(errors))


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def format_resolved(config: dict, origin: dict) -> str:
    """Pretty listing of every resolved field, annotating defaulted ones."""
    lines = []

    def walk(node: dict, prefix: str = "") -> None:
        for key in sorted(node):
            value = node[key]
            path = f"{prefix}{key}"
            if isinstance(value, dict):
                walk(value, prefix=path + ".")
            else:
                source = origin.get(path, "default")
                lines.append(f"{path} = {value!r}  [{source}]")

    walk(config)
    return "\n".join(lines)
