"""Frequency-domain features and the Fourier reconstruction loss."""

from __future__ import annotations

import torch
from torch import nn

from ..errors import ConfigError

# Bins whose amplitude falls below this are treated as dead: their phase is
# forced to 0 through a masked atan2 so no NaN gradient can leak out of (0, 0).
_DEAD_BIN_THRESHOLD = 1e-8


def amplitude_phase(x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Per-channel real-FFT amplitude and phase over time.

    x: [B, T, D] -> two tensors [B, F, D] with F = floor(T/2) + 1.
    """
    if x.shape[1] < 2:
        raise ConfigError(f"window length must be >= 2 for FFT, got {x.shape[1]}")
    spectrum = torch.fft.rfft(x, dim=1)
    re, im = spectrum.real, spectrum.imag
    amplitude = torch.sqrt(re * re + im * im + 1e-24)
    alive = (amplitude > _DEAD_BIN_THRESHOLD).to(x.dtype)
    phase = torch.atan2(im * alive, re * alive + (1.0 - alive))
    return amplitude, phase


class FrequencyEmbedder(nn.Module):
    """Maps concatenated per-bin (amplitude, phase) of all channels to width C."""

    def __init__(self, num_features: int, z_channels: int, hidden: int | None = None):
        super().__init__()
        hidden = hidden or max(2 * num_features, z_channels)
        self.net = nn.Sequential(
            nn.Linear(2 * num_features, hidden),
            nn.SiLU(),
            nn.Linear(hidden, z_channels),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """x: [B, T, D] -> frequency features [B, F, C]."""
        amplitude, phase = amplitude_phase(x)
        return self.net(torch.cat([amplitude, phase], dim=-1))


def fourier_loss(x: torch.Tensor, x_hat: torch.Tensor) -> torch.Tensor:
    """Mean absolute error between real-FFT spectra (complex modulus of the diff).

    The squared modulus is clamped away from exactly 0 before the square root
    so the gradient stays finite when both spectra coincide at a bin; the bias
    this introduces is ~1e-12 per dead bin.
    """
    if x.shape != x_hat.shape:
        raise ConfigError(f"shape mismatch: {tuple(x.shape)} vs {tuple(x_hat.shape)}")
    diff = torch.fft.rfft(x, dim=1) - torch.fft.rfft(x_hat, dim=1)
    modulus_sq = diff.real * diff.real + diff.imag * diff.imag
    return torch.sqrt(modulus_sq.clamp(min=1e-24)).mean()
