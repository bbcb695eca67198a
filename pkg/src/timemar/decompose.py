"""Mixture-of-experts trend/seasonal decomposition and coarse seasonal extraction.

The trend is a softmax-weighted mixture of moving averages at several kernel
sizes; the weights come from a per-time-step affine map of the channel vector
and are shared across channels. The seasonal part is the exact residual, and
the coarse seasonal signal is a block-mean downsample followed by linear
upsampling back to full length.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .errors import ConfigError
from .resample import block_mean_downsample, linear_resample

DEFAULT_KERNEL_SIZES = (5, 9, 13)
DEFAULT_DOWNSAMPLE_FACTOR = 4


def moving_average(x: torch.Tensor, kernel_size: int) -> torch.Tensor:
    """Centered moving average over time with replicate padding, length-preserving.

    x: [B, T, D]; kernel_size must be odd and <= T.
    """
    if kernel_size % 2 != 1 or kernel_size < 1:
        raise ConfigError(f"kernel size must be odd and positive, got {kernel_size}")
    if kernel_size > x.shape[1]:
        raise ConfigError(
            f"kernel size {kernel_size} exceeds window length {x.shape[1]}"
        )
    if kernel_size == 1:
        return x
    half = (kernel_size - 1) // 2
    xt = x.transpose(1, 2)  # [B, D, T]
    padded = F.pad(xt, (half, half), mode="replicate")
    return F.avg_pool1d(padded, kernel_size, stride=1).transpose(1, 2)


class Decomposer(nn.Module):
    """Softmax mixture of moving-average experts with a learnable weight map."""

    def __init__(
        self,
        num_features: int,
        kernel_sizes: tuple[int, ...] = DEFAULT_KERNEL_SIZES,
        downsample_factor: int = DEFAULT_DOWNSAMPLE_FACTOR,
    ):
        super().__init__()
        if len(kernel_sizes) < 1:
            raise ConfigError("at least one kernel size is required")
        for k in kernel_sizes:
            if k < 1 or k % 2 != 1:
                raise ConfigError(f"kernel sizes must be odd and positive, got {k}")
        if downsample_factor < 1:
            raise ConfigError(
                f"downsample factor must be >= 1, got {downsample_factor}"
            )
        self.kernel_sizes = tuple(kernel_sizes)
        self.downsample_factor = downsample_factor
        self.weight_net = nn.Linear(num_features, len(kernel_sizes))

    def mixing_weights(self, x: torch.Tensor) -> torch.Tensor:
        """Per-time-step softmax over the experts, shared across channels: [B, T, M]."""
        return torch.softmax(self.weight_net(x), dim=-1)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Decompose [B, T, D] into (trend, seasonal) with trend + seasonal == x."""
        max_kernel = max(self.kernel_sizes)
        if x.shape[1] < max_kernel:
            raise ConfigError(
                f"window length {x.shape[1]} is smaller than kernel {max_kernel}"
            )
        candidates = torch.stack(
            [moving_average(x, k) for k in self.kernel_sizes], dim=-1
        )  # [B, T, D, M]
        weights = self.mixing_weights(x)  # [B, T, M]
        trend = (candidates * weights.unsqueeze(2)).sum(dim=-1)
        seasonal = x - trend
        return trend, seasonal


def coarse_seasonal(seasonal: torch.Tensor, factor: int) -> torch.Tensor:
    """Downsample-then-upsample smoothing of the seasonal component.

    Block means of size ``factor`` (which must divide T) followed by linear
    interpolation back to full length with clamped endpoints.
    """
    if factor < 1:
        raise ConfigError(f"downsample factor must be >= 1, got {factor}")
    if seasonal.shape[1] % factor != 0:
        raise ConfigError(
            f"downsample factor {factor} does not divide window length {seasonal.shape[1]}"
        )
    if factor == 1:
        return seasonal
    coarse = block_mean_downsample(seasonal, factor)
    return linear_resample(coarse, seasonal.shape[1])
