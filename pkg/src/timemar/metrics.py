"""Generation-quality metrics: discriminative/predictive scores and Context-FID.

The Context-FID embedder here is a self-contained causal dilated conv encoder
trained by masked-span reconstruction on the real data, not the contrastively
trained representation model the published benchmarks use. Absolute values
are therefore NOT comparable to published tables; only orderings and
self-consistency properties are meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .errors import ConfigError, DataError


@dataclass
class MetricReport:
    name: str
    mean: float
    std: float
    runs: int
    values: list[float] = field(default_factory=list)

    def summary(self) -> str:
        return f"{self.mean:.3f}±{self.std:.3f}"

    @classmethod
    def from_values(cls, name: str, values: list[float]) -> "MetricReport":
        mean = float(np.mean(values))
        std = float(np.std(values, ddof=1)) if len(values) >= 2 else 0.0
        return cls(name=name, mean=mean, std=std, runs=len(values), values=list(values))


def _as_tensor(windows: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.asarray(windows, dtype=np.float64)).float()


def _check_pair(real: np.ndarray, synth: np.ndarray, minimum: int = 1) -> None:
    if real.ndim != 3 or synth.ndim != 3:
        raise DataError("window sets must have shape [n, T, D]")
    if real.shape[1:] != synth.shape[1:]:
        raise DataError(
            f"window shapes differ: {real.shape[1:]} vs {synth.shape[1:]}"
        )
    if real.shape[0] < minimum or synth.shape[0] < minimum:
        raise DataError(f"need at least {minimum} windows per class")


class _Gru(nn.Module):
    """Two-layer GRU trunk with a linear head on the chosen output."""

    def __init__(self, num_features: int, hidden: int, out_dim: int, last_only: bool):
        super().__init__()
        self.rnn = nn.GRU(num_features, hidden, num_layers=2, batch_first=True)
        self.head = nn.Linear(hidden, out_dim)
        self.last_only = last_only

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        outputs, _ = self.rnn(x)
        if self.last_only:
            return self.head(outputs[:, -1])
        return self.head(outputs)


def _hidden_size(num_features: int) -> int:
    return max(8, 4 * num_features)


def _train_test_split(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    order = rng.permutation(n)
    cut = max(1, int(round(0.8 * n)))
    if cut >= n:
        cut = n - 1
    return order[:cut], order[cut:]


def _discriminative_once(
    real: np.ndarray, synth: np.ndarray, seed: int, iterations: int = 2000
) -> float:
    rng = np.random.default_rng(seed)
    torch.manual_seed(seed)
    model = _Gru(real.shape[2], _hidden_size(real.shape[2]), 1, last_only=True)
    optimizer = torch.optim.Adam(model.parameters(), lr=1e-3)
    r_train, r_test = _train_test_split(real.shape[0], rng)
    s_train, s_test = _train_test_split(synth.shape[0], rng)
    x_train = _as_tensor(np.concatenate([real[r_train], synth[s_train]]))
    y_train = torch.cat(
        [torch.ones(len(r_train)), torch.zeros(len(s_train))]
    )
    x_test = _as_tensor(np.concatenate([real[r_test], synth[s_test]]))
    y_test = torch.cat([torch.ones(len(r_test)), torch.zeros(len(s_test))])
    n = len(x_train)
    batcher = torch.Generator().manual_seed(seed)
    model.train()
    for _ in range(iterations):
        index = torch.randint(0, n, (min(128, n),), generator=batcher)
        logits = model(x_train[index]).squeeze(-1)
        loss = F.binary_cross_entropy_with_logits(logits, y_train[index])
        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        optimizer.step()
    model.eval()
    with torch.no_grad():
        predictions = (model(x_test).squeeze(-1) > 0).float()
    accuracy = float((predictions == y_test).float().mean())
    return abs(accuracy - 0.5)


def discriminative_score(
    real: np.ndarray, synth: np.ndarray, seed: int = 0, runs: int = 10
) -> MetricReport:
    """|test accuracy - 0.5| of a recurrent real-vs-synthetic classifier."""
    _check_pair(real, synth, minimum=10)
    values = [
        _discriminative_once(real, synth, seed + 7919 * run) for run in range(runs)
    ]
    return MetricReport.from_values("discriminative_score", values)


def _predictive_once(
    real: np.ndarray, synth: np.ndarray, seed: int, iterations: int = 2000
) -> float:
    torch.manual_seed(seed)
    num_features = real.shape[2]
    model = _Gru(num_features, _hidden_size(num_features), num_features, last_only=False)
    optimizer = torch.optim.Adam(model.parameters(), lr=1e-3)
    x_synth = _as_tensor(synth)
    batcher = torch.Generator().manual_seed(seed)
    model.train()
    for _ in range(iterations):
        index = torch.randint(0, len(x_synth), (min(128, len(x_synth)),), generator=batcher)
        batch = x_synth[index]
        prediction = model(batch[:, :-1])
        loss = (prediction - batch[:, 1:]).abs().mean()
        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        optimizer.step()
    model.eval()
    x_real = _as_tensor(real)
    with torch.no_grad():
        prediction = model(x_real[:, :-1])
        mae = float((prediction - x_real[:, 1:]).abs().mean())
    return mae


def predictive_score(
    real: np.ndarray, synth: np.ndarray, seed: int = 0, runs: int = 10
) -> MetricReport:
    """Train-on-synthetic, test-on-real MAE of a one-step-ahead predictor."""
    _check_pair(real, synth)
    if real.shape[1] < 2:
        raise DataError("predictive score needs window length >= 2")
    values = [
        _predictive_once(real, synth, seed + 104729 * run) for run in range(runs)
    ]
    return MetricReport.from_values("predictive_score", values)


# --- Context-FID -------------------------------------------------------------


def frechet_distance(
    mu1: np.ndarray, cov1: np.ndarray, mu2: np.ndarray, cov2: np.ndarray
) -> float:
    """Frechet distance between two Gaussians.

    The cross-covariance square root uses a symmetric eigendecomposition of
    (cov1 @ cov2 + cov2 @ cov1) / 2 with negative eigenvalues clamped to 0.
    """
    mu1 = np.asarray(mu1, dtype=np.float64).ravel()
    mu2 = np.asarray(mu2, dtype=np.float64).ravel()
    cov1 = np.atleast_2d(np.asarray(cov1, dtype=np.float64))
    cov2 = np.atleast_2d(np.asarray(cov2, dtype=np.float64))
    for name, cov in (("cov1", cov1), ("cov2", cov2)):
        if cov.shape[0] != cov.shape[1]:
            raise ConfigError(f"{name} must be square, got {cov.shape}")
        asym = float(np.abs(cov - cov.T).max())
        if asym > 1e-6:
            raise ConfigError(f"{name} is asymmetric beyond 1e-6 (max |c - c.T| = {asym:g})")
    product = (cov1 @ cov2 + cov2 @ cov1) / 2.0
    eigenvalues = np.linalg.eigvalsh(product)
    sqrt_trace = float(np.sqrt(np.clip(eigenvalues, 0.0, None)).sum())
    value = float(
        np.sum((mu1 - mu2) ** 2) + np.trace(cov1) + np.trace(cov2) - 2.0 * sqrt_trace
    )
    return max(value, 0.0)


class SpanMaskEmbedder(nn.Module):
    """Causal dilated conv encoder trained by masked-span reconstruction."""

    def __init__(self, num_features: int, embed_dim: int = 32, hidden: int = 64):
        super().__init__()
        self.embed_dim = embed_dim
        self.convs = nn.ModuleList(
            [
                nn.Conv1d(num_features, hidden, 3, dilation=1),
                nn.Conv1d(hidden, hidden, 3, dilation=2),
                nn.Conv1d(hidden, hidden, 3, dilation=4),
            ]
        )
        self.dilations = (1, 2, 4)
        self.out = nn.Linear(hidden, embed_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """x: [B, T, D] -> embeddings [B, E]."""
        h = x.transpose(1, 2)
        for conv, dilation in zip(self.convs, self.dilations):
            h = F.silu(conv(F.pad(h, (2 * dilation, 0))))  # left-pad keeps causality
        return self.out(h.mean(dim=2))


class _EmbedderTrainer(nn.Module):
    def __init__(self, encoder: SpanMaskEmbedder, window_length: int, num_features: int):
        super().__init__()
        self.encoder = encoder
        self.decoder = nn.Sequential(
            nn.Linear(encoder.embed_dim, 128),
            nn.SiLU(),
            nn.Linear(128, window_length * num_features),
        )
        self.window_length = window_length
        self.num_features = num_features

    def forward(self, masked: torch.Tensor) -> torch.Tensor:
        rebuilt = self.decoder(self.encoder(masked))
        return rebuilt.view(-1, self.window_length, self.num_features)


def train_embedder(
    real: np.ndarray, seed: int = 0, embed_dim: int = 32, epochs: int = 30
) -> SpanMaskEmbedder:
    """Fit the Context-FID embedder on real windows only; frozen afterwards."""
    real = np.asarray(real, dtype=np.float64)
    if real.ndim != 3:
        raise DataError("window set must have shape [n, T, D]")
    n, window_length, num_features = real.shape
    torch.manual_seed(seed)
    encoder = SpanMaskEmbedder(num_features, embed_dim)
    trainer = _EmbedderTrainer(encoder, window_length, num_features)
    optimizer = torch.optim.Adam(trainer.parameters(), lr=1e-3)
    x = _as_tensor(real)
    rng = np.random.default_rng(seed)
    batcher = torch.Generator().manual_seed(seed)
    trainer.train()
    for _ in range(epochs):
        order = torch.randperm(n, generator=batcher)
        for start in range(0, n, 128):
            batch = x[order[start : start + 128]]
            span = max(1, window_length // 4)
            begin = int(rng.integers(0, window_length - span + 1))
            masked = batch.clone()
            masked[:, begin : begin + span, :] = 0.0
            rebuilt = trainer(masked)
            loss = F.mse_loss(
                rebuilt[:, begin : begin + span], batch[:, begin : begin + span]
            )
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
    encoder.eval()
    for parameter in encoder.parameters():
        parameter.requires_grad_(False)
    return encoder


@torch.no_grad()
def embed_windows(embedder: SpanMaskEmbedder, windows: np.ndarray) -> np.ndarray:
    embedder.eval()
    chunks = []
    x = _as_tensor(windows)
    for start in range(0, len(x), 512):
        chunks.append(embedder(x[start : start + 512]).numpy().astype(np.float64))
    return np.concatenate(chunks, axis=0)


def _gaussian_fit(embeddings: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    mu = embeddings.mean(axis=0)
    cov = np.cov(embeddings, rowvar=False)
    cov = np.atleast_2d(cov)
    rank_deficient = embeddings.shape[0] < embeddings.shape[1] + 1
    if rank_deficient:
        cov = cov + 1e-6 * np.eye(cov.shape[0])
    return mu, cov, rank_deficient


def context_fid(
    real: np.ndarray,
    synth: np.ndarray,
    embedder: SpanMaskEmbedder,
    runs: int = 1,
    seed: int = 0,
) -> MetricReport:
    """Frechet distance between Gaussian fits to embedded real/synthetic sets.

    Extra runs re-embed bootstrap subsamples (derived seeds) to expose
    sampling spread; run 0 always uses the full sets.
    """
    _check_pair(real, synth)
    real_emb = embed_windows(embedder, real)
    synth_emb = embed_windows(embedder, synth)
    values = []
    for run in range(runs):
        if run == 0:
            r_emb, s_emb = real_emb, synth_emb
        else:
            rng = np.random.default_rng(seed + 15485863 * run)
            r_emb = real_emb[rng.integers(0, len(real_emb), len(real_emb))]
            s_emb = synth_emb[rng.integers(0, len(synth_emb), len(synth_emb))]
        mu_r, cov_r, deficient_r = _gaussian_fit(r_emb)
        mu_s, cov_s, deficient_s = _gaussian_fit(s_emb)
        if deficient_r or deficient_s:
            import warnings

            warnings.warn(
                "covariance is rank-deficient (fewer samples than embed_dim + 1); "
                "1e-6 shrinkage applied",
                stacklevel=2,
            )
        values.append(frechet_distance(mu_r, cov_r, mu_s, cov_s))
    return MetricReport.from_values("context_fid", values)
