"""Dataset ingestion, synthetic data generation, windowing, and scaling.

Windows are kept in float64 so the scale/inverse round trip stays well below
the 1e-6 identity tolerance even for large-magnitude inputs; the training
pipeline casts to float32 at the tensor boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass
class RawSeries:
    """A full-length multivariate series straight from its source."""

    values: np.ndarray  # [length, D] float64
    column_names: list[str]
    source: str

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def num_features(self) -> int:
        return self.values.shape[1]


@dataclass
class ScalerState:
    """Per-feature min/max fitted over an entire window set.

    Degenerate (constant) features scale to 0 and invert exactly via the mask.
    """

    minimum: np.ndarray  # [D]
    maximum: np.ndarray  # [D]
    degenerate_mask: np.ndarray  # [D] bool, True where min == max

    def to_dict(self) -> dict:
        return {
            "minimum": self.minimum.tolist(),
            "maximum": self.maximum.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerState":
        lo = np.asarray(d["minimum"], dtype=np.float64)
        hi = np.asarray(d["maximum"], dtype=np.float64)
        return cls(minimum=lo, maximum=hi, degenerate_mask=(lo == hi))


@dataclass
class TimeSeriesDataset:
    """A batch of fixed-length windows, optionally min-max scaled to [0, 1]."""

    windows: np.ndarray  # [n, T, D] float64
    scaler: ScalerState | None = None
    seed: int = 0

    @property
    def num_windows(self) -> int:
        return self.windows.shape[0]

    @property
    def window_length(self) -> int:
        return self.windows.shape[1]

    @property
    def num_features(self) -> int:
        return self.windows.shape[2]


def load_csv(
    path: str | Path,
    has_header: bool = True,
    drop_timestamp_column: bool = False,
) -> RawSeries:
    """Read a UTF-8 comma-separated numeric matrix into a RawSeries.

    One row per time step; a single header row is skipped when
    ``has_header`` is set; a leading non-numeric timestamp column may be
    dropped with ``drop_timestamp_column``.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")

    rows: list[list[float]] = []
    column_names: list[str] = []
    width: int | None = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            cells = line.split(",")
            if drop_timestamp_column:
                cells = cells[1:]
            if has_header and not rows and not column_names:
                column_names = [c.strip() for c in cells]
                continue
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise DataError(
                    f"ragged rows: line {lineno} has {len(cells)} columns, expected {width}"
                )
            parsed = []
            for col, cell in enumerate(cells):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"non-numeric cell at row {lineno}, column {col + 1}: {cell!r}"
                    ) from None
                if not math.isfinite(parsed[-1]):
                    raise DataError(
                        f"non-finite cell at row {lineno}, column {col + 1}: {cell!r}"
                    )
            rows.append(parsed)

    if not rows:
        raise DataError("empty data body")
    values = np.asarray(rows, dtype=np.float64)
    if not column_names:
        column_names = [f"c{i}" for i in range(values.shape[1])]
    return RawSeries(values=values, column_names=column_names, source=str(path))


def make_windows(raw: RawSeries, window_length: int, stride: int = 1) -> TimeSeriesDataset:
    """Slice a raw series into overlapping windows (unscaled).

    Produces floor((length - T) / stride) + 1 windows; window i starts at
    offset i * stride, so no window reads past the end of the series.
    """
    if window_length < 1:
        raise DataError(f"window length must be >= 1, got {window_length}")
    if stride < 1:
        raise DataError(f"stride must be >= 1, got {stride}")
    if window_length > raw.length:
        raise DataError(
            f"window length {window_length} exceeds series length {raw.length}"
        )
    n = (raw.length - window_length) // stride + 1
    windows = np.stack(
        [raw.values[i * stride : i * stride + window_length] for i in range(n)]
    )
    return TimeSeriesDataset(windows=windows.astype(np.float64), scaler=None)


def minmax_scale(dataset: TimeSeriesDataset) -> TimeSeriesDataset:
    """Scale every feature to [0, 1] using min/max over the whole window set."""
    x = dataset.windows
    if not np.isfinite(x).all():
        raise DataError("dataset contains non-finite values")
    lo = x.min(axis=(0, 1))
    hi = x.max(axis=(0, 1))
    degenerate = lo == hi
    span = np.where(degenerate, 1.0, hi - lo)
    scaled = (x - lo) / span
    scaled[..., degenerate] = 0.0
    np.clip(scaled, 0.0, 1.0, out=scaled)
    scaler = ScalerState(minimum=lo, maximum=hi, degenerate_mask=degenerate)
    return TimeSeriesDataset(windows=scaled, scaler=scaler, seed=dataset.seed)


def inverse_scale(windows: np.ndarray, scaler: ScalerState) -> np.ndarray:
    """Map scaled windows back to original units (exact for constant features)."""
    lo = scaler.minimum
    hi = scaler.maximum
    span = np.where(scaler.degenerate_mask, 0.0, hi - lo)
    return windows.astype(np.float64) * span + lo


def gen_sines(n: int, window_length: int, num_features: int, seed: int) -> TimeSeriesDataset:
    """Generate sinusoid windows x[t, j] = (sin(2*pi*eta_j*t + theta_j) + 1) / 2.

    Frequencies eta are uniform on [0, 1) and phases theta uniform on
    [-pi, pi), drawn independently per window and dimension; the output is a
    pure function of (n, window_length, num_features, seed).
    """
    if n < 1 or window_length < 1 or num_features < 1:
        raise DataError("n, window length, and feature count must all be >= 1")
    rng = np.random.default_rng(seed)
    eta = rng.uniform(0.0, 1.0, size=(n, num_features))
    theta = rng.uniform(-np.pi, np.pi, size=(n, num_features))
    t = np.arange(window_length, dtype=np.float64)
    phase = 2.0 * np.pi * eta[:, None, :] * t[None, :, None] + theta[:, None, :]
    windows = (np.sin(phase) + 1.0) / 2.0
    return TimeSeriesDataset(windows=windows, scaler=None, seed=seed)
