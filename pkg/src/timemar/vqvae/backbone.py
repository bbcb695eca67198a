"""1-D convolutional encoder/decoder backbones.

Both follow the same geometry: len(ch_mult) stages of residual blocks at width
ch * ch_mult[s], a stride-2 transition between consecutive stages (so the
latent length is T / 2^(len(ch_mult)-1)), and a two-block bottleneck section
at the innermost width.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from ..errors import ConfigError


def _norm(width: int) -> nn.Module:
    groups = 8 if width % 8 == 0 else 1
    return nn.GroupNorm(groups, width)


class ResBlock1d(nn.Module):
    """Two 3-wide convolutions with pre-activation norms and a residual skip."""

    def __init__(self, width: int):
        super().__init__()
        self.norm1 = _norm(width)
        self.conv1 = nn.Conv1d(width, width, 3, padding=1)
        self.norm2 = _norm(width)
        self.conv2 = nn.Conv1d(width, width, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        h = self.conv2(F.silu(self.norm2(h)))
        return x + h


class Encoder1d(nn.Module):
    """Maps [B, T, D] to latent features [B, T / 2^(S-1), C]."""

    def __init__(
        self,
        num_features: int,
        z_channels: int,
        ch: int,
        ch_mult: tuple[int, ...],
        num_res_blocks: int,
    ):
        super().__init__()
        widths = [ch * m for m in ch_mult]
        self.stem = nn.Conv1d(num_features, widths[0], 3, padding=1)
        stages = []
        for s, width in enumerate(widths):
            for _ in range(num_res_blocks):
                stages.append(ResBlock1d(width))
            if s < len(widths) - 1:
                stages.append(nn.Conv1d(width, widths[s + 1], 3, stride=2, padding=1))
        self.stages = nn.Sequential(*stages)
        self.mid = nn.Sequential(ResBlock1d(widths[-1]), ResBlock1d(widths[-1]))
        self.head_norm = _norm(widths[-1])
        self.head = nn.Conv1d(widths[-1], z_channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.stem(x.transpose(1, 2))
        h = self.stages(h)
        h = self.mid(h)
        h = self.head(F.silu(self.head_norm(h)))
        return h.transpose(1, 2)


class Decoder1d(nn.Module):
    """Maps latent features [B, L_base, C] back to [B, T, D]."""

    def __init__(
        self,
        num_features: int,
        z_channels: int,
        ch: int,
        ch_mult: tuple[int, ...],
        num_res_blocks: int,
    ):
        super().__init__()
        widths = [ch * m for m in ch_mult]
        self.stem = nn.Conv1d(z_channels, widths[-1], 3, padding=1)
        self.mid = nn.Sequential(ResBlock1d(widths[-1]), ResBlock1d(widths[-1]))
        stages = []
        for s in reversed(range(len(widths))):
            for _ in range(num_res_blocks):
                stages.append(ResBlock1d(widths[s]))
            if s > 0:
                stages.append(_Upsample(widths[s], widths[s - 1]))
        self.stages = nn.Sequential(*stages)
        self.out_norm = _norm(widths[0])
        self.out = nn.Conv1d(widths[0], num_features, 3, padding=1)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        h = self.stem(z.transpose(1, 2))
        h = self.mid(h)
        h = self.stages(h)
        h = self.out(F.silu(self.out_norm(h)))
        return h.transpose(1, 2)


class _Upsample(nn.Module):
    """Nearest-neighbor doubling followed by a 3-wide convolution."""

    def __init__(self, in_width: int, out_width: int):
        super().__init__()
        self.conv = nn.Conv1d(in_width, out_width, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(F.interpolate(x, scale_factor=2.0, mode="nearest"))


class GuidanceEmbedder(nn.Module):
    """Re-embeds a decoded [B, T, D] signal to latent resolution [B, L_base, C]."""

    def __init__(self, num_features: int, z_channels: int, num_stages: int):
        super().__init__()
        layers: list[nn.Module] = [nn.Conv1d(num_features, z_channels, 3, padding=1)]
        for _ in range(num_stages - 1):
            layers += [nn.SiLU(), nn.Conv1d(z_channels, z_channels, 3, stride=2, padding=1)]
        self.net = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x.transpose(1, 2)).transpose(1, 2)


def check_length(window_length: int, ch_mult: tuple[int, ...]) -> int:
    """Latent length for a window, raising if the geometry does not divide."""
    ratio = 2 ** (len(ch_mult) - 1)
    if window_length % ratio != 0:
        raise ConfigError(
            f"window length {window_length} is not divisible by 2^(stages-1)={ratio}"
        )
    return window_length // ratio
