"""Artifact readers/writers shared by CLI commands."""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

import numpy as np

from .data import TimeSeriesDataset, gen_sines, load_csv, make_windows, minmax_scale
from .errors import ConfigError


def dataset_from_config(config: dict) -> TimeSeriesDataset:
    """Materialize the scaled window set described by the data section."""
    data = config["data"]
    if data["source"] == "sines":
        dataset = gen_sines(data["n"], data["T"], data["D"], data["seed"])
    elif data["source"] == "csv":
        raw = load_csv(
            data["path"],
            has_header=data.get("has_header", True),
            drop_timestamp_column=data.get("drop_timestamp_column", False),
        )
        if raw.num_features != data["D"]:
            raise ConfigError(
                f"data.D={data['D']} but {data['path']} has {raw.num_features} features"
            )
        dataset = make_windows(raw, data["T"], data.get("stride", 1))
    else:
        raise ConfigError(f"data.source: unknown source {data['source']!r}")
    return minmax_scale(dataset)


def save_windows_csv(path: str | Path, windows: np.ndarray) -> Path:
    """Windows as rows of (window, t, c0..cD-1)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    num_features = windows.shape[2]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window", "t"] + [f"c{j}" for j in range(num_features)])
        for i, window in enumerate(windows):
            for t, row in enumerate(window):
                writer.writerow([i, t] + [f"{v:.10g}" for v in row])
    return path


def save_samples(out_dir: str | Path, windows: np.ndarray, stem: str = "samples") -> list[Path]:
    """CSV for inspection plus a binary sidecar for lossless round trips."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    npy_path = out_dir / f"{stem}.npy"
    np.save(npy_path, windows.astype(np.float32))
    csv_path = save_windows_csv(out_dir / f"{stem}.csv", windows)
    return [csv_path, npy_path]


def load_samples(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing input: {path}")
    return np.load(path).astype(np.float64)


def write_manifest(
    out_dir: str | Path,
    command: str,
    config_hash_value: str,
    seed: int,
    started: float,
    artifacts: list[Path],
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config_hash": config_hash_value,
        "seed": seed,
        "wall_clock_seconds": round(time.time() - started, 3),
        "artifacts": [str(p) for p in artifacts],
    }
    path = out_dir / f"manifest-{command}.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path
