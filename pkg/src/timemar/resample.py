"""Length changes along the time axis, shared by decomposition and quantization."""

from __future__ import annotations

import torch


def linear_resample(x: torch.Tensor, new_length: int) -> torch.Tensor:
    """Resample [B, L, C] to [B, new_length, C] by linear interpolation.

    Sample centers follow the half-pixel convention; coordinates outside the
    input are clamped to the endpoints. When new_length == L this is an exact
    identity (output positions land on integer input coordinates).
    """
    length = x.shape[1]
    if new_length == length:
        return x
    if new_length < 1:
        raise ValueError(f"target length must be >= 1, got {new_length}")
    pos = (
        (torch.arange(new_length, dtype=x.dtype, device=x.device) + 0.5)
        * (length / new_length)
        - 0.5
    ).clamp(0.0, float(length - 1))
    left = pos.floor().long()
    right = torch.clamp(left + 1, max=length - 1)
    frac = (pos - left.to(x.dtype)).view(1, -1, 1)
    return x[:, left] * (1.0 - frac) + x[:, right] * frac


def block_mean_downsample(x: torch.Tensor, factor: int) -> torch.Tensor:
    """Mean over non-overlapping blocks of size ``factor`` along time."""
    batch, length, channels = x.shape
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if length % factor != 0:
        raise ValueError(f"factor {factor} does not divide length {length}")
    return x.reshape(batch, length // factor, factor, channels).mean(dim=2)
