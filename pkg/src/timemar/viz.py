"""CSV exports for offline figures: PCA projection and pooled-value KDE."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from scipy.stats import gaussian_kde

from .errors import DataError

KDE_GRID_POINTS = 256


def fit_pca(real_flat: np.ndarray, components: int = 2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """PCA basis fit on real data only: (mean, components [k, d], explained ratio)."""
    mean = real_flat.mean(axis=0)
    centered = real_flat - mean
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    variance = singular**2
    total = variance.sum()
    ratio = variance[:components] / total if total > 0 else np.zeros(components)
    return mean, vt[:components], ratio


def pca_kde_export(
    real: np.ndarray, synth: np.ndarray, out_dir: str | Path
) -> dict[str, Path]:
    """Write pca.csv (x, y, label) and kde.csv (grid, real_density, synth_density).

    The PCA basis is fit on the real set only; KDE uses a Gaussian kernel with
    Silverman bandwidth over all pooled scalar values of each set.
    """
    real = np.asarray(real, dtype=np.float64)
    synth = np.asarray(synth, dtype=np.float64)
    if real.size == 0 or synth.size == 0:
        raise DataError("window sets must be non-empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    real_flat = real.reshape(real.shape[0], -1)
    synth_flat = synth.reshape(synth.shape[0], -1)
    if real_flat.shape[1] != synth_flat.shape[1]:
        raise DataError("real and synthetic windows must share [T, D]")
    mean, basis, _ = fit_pca(real_flat)
    real_xy = (real_flat - mean) @ basis.T
    synth_xy = (synth_flat - mean) @ basis.T

    pca_path = out_dir / "pca.csv"
    with pca_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "label"])
        for row in real_xy:
            writer.writerow([f"{row[0]:.10g}", f"{row[1]:.10g}", "real"])
        for row in synth_xy:
            writer.writerow([f"{row[0]:.10g}", f"{row[1]:.10g}", "synthetic"])

    real_values = real.ravel()
    synth_values = synth.ravel()
    real_kde = gaussian_kde(real_values, bw_method="silverman")
    synth_kde = gaussian_kde(synth_values, bw_method="silverman")
    pad = 4.0 * max(
        float(np.sqrt(real_kde.covariance[0, 0])),
        float(np.sqrt(synth_kde.covariance[0, 0])),
    )
    lo = min(real_values.min(), synth_values.min()) - pad
    hi = max(real_values.max(), synth_values.max()) + pad
    grid = np.linspace(lo, hi, KDE_GRID_POINTS)
    kde_path = out_dir / "kde.csv"
    with kde_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["grid", "real_density", "synth_density"])
        for g, r, s in zip(grid, real_kde(grid), synth_kde(grid)):
            writer.writerow([f"{g:.10g}", f"{r:.10g}", f"{s:.10g}"])
    return {"pca": pca_path, "kde": kde_path}
