"""Shared-codebook hierarchical multi-scale residual quantization.

At each scale k the current residual is linearly resampled to length l_k,
each position is replaced by its nearest codebook row, and the refined,
upsampled lookup is subtracted before moving to the next scale. The token
sequence flattens scale-major (all of scale 1, then scale 2, ...), time
ascending within a scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from ..errors import ConfigError
from ..resample import linear_resample


@dataclass
class TokenSequence:
    """Per-scale index maps plus their scale-major flattening."""

    per_scale: list[torch.Tensor]  # K tensors [B, l_k] long
    patch_nums: tuple[int, ...]

    @property
    def flat(self) -> torch.Tensor:
        return torch.cat(self.per_scale, dim=1)

    @property
    def total_length(self) -> int:
        return sum(self.patch_nums)

    @classmethod
    def from_flat(cls, flat: torch.Tensor, patch_nums: tuple[int, ...]) -> "TokenSequence":
        if flat.shape[1] != sum(patch_nums):
            raise ConfigError(
                f"token width {flat.shape[1]} does not match sum(patch_nums)={sum(patch_nums)}"
            )
        return cls(
            per_scale=list(torch.split(flat, list(patch_nums), dim=1)),
            patch_nums=tuple(patch_nums),
        )


@dataclass
class QuantizeResult:
    tokens: TokenSequence
    z_hat: torch.Tensor  # [B, L_base, C], sum of refined per-scale lookups
    final_residual: torch.Tensor  # [B, L_base, C]
    per_scale_features: list[torch.Tensor]  # pre-quantization residuals f_k [B, l_k, C]
    per_scale_codes: list[torch.Tensor]  # selected codes e_k [B, l_k, C]


def nearest_code(vectors: torch.Tensor, codebook: torch.Tensor) -> torch.Tensor:
    """Index of the closest codebook row per vector (squared Euclidean).

    Distances expand to |v|^2 - 2 v.e + |e|^2 in float64, so the search runs
    as one GEMM; ties resolve to the lowest index (argmin keeps the first
    minimum). vectors: [..., C] -> long [...].
    """
    if codebook.shape[0] < 1:
        raise ConfigError("codebook must be non-empty")
    flat = vectors.reshape(-1, vectors.shape[-1]).double()
    rows = codebook.double()
    dist = (
        flat.pow(2).sum(1, keepdim=True)
        - 2.0 * flat @ rows.t()
        + rows.pow(2).sum(1).unsqueeze(0)
    )  # [P, N]
    idx = torch.argmin(dist, dim=1)
    return idx.reshape(vectors.shape[:-1])


def identity_conv1d(channels: int) -> nn.Conv1d:
    """3-wide conv initialized to the identity map (center tap = I)."""
    conv = nn.Conv1d(channels, channels, 3, padding=1)
    with torch.no_grad():
        conv.weight.zero_()
        conv.weight[:, :, 1] = torch.eye(channels)
        conv.bias.zero_()
    return conv


class MultiScaleQuantizer(nn.Module):
    """Residual quantizer over increasing temporal resolutions, one shared codebook."""

    def __init__(
        self,
        vocab_size: int,
        z_channels: int,
        patch_nums: tuple[int, ...],
        phi_enabled: bool = True,
    ):
        super().__init__()
        self.vocab_size = vocab_size
        self.z_channels = z_channels
        self.patch_nums = tuple(patch_nums)
        self.phi_enabled = phi_enabled
        init = 1.0 / vocab_size
        self.codebook = nn.Parameter(
            torch.empty(vocab_size, z_channels).uniform_(-init, init)
        )
        self.phi = nn.ModuleList(
            identity_conv1d(z_channels) for _ in self.patch_nums
        )

    @property
    def base_length(self) -> int:
        return max(self.patch_nums)

    def _refine(self, k: int, z: torch.Tensor) -> torch.Tensor:
        if not self.phi_enabled:
            return z
        return self.phi[k](z.transpose(1, 2)).transpose(1, 2)

    def lookup(self, indices: torch.Tensor) -> torch.Tensor:
        if indices.min() < 0 or indices.max() >= self.vocab_size:
            raise ConfigError(
                f"token index out of range [0, {self.vocab_size}): "
                f"min={int(indices.min())}, max={int(indices.max())}"
            )
        return self.codebook[indices]

    def forward(self, z_fus: torch.Tensor, tokens: TokenSequence | None = None) -> QuantizeResult:
        """Quantize [B, L_base, C] into multi-scale tokens.

        When ``tokens`` is given, the stored indices are reused instead of the
        nearest-code search (for teacher-forced evaluation); the arithmetic is
        otherwise identical, so dequantize shares this code path bit-for-bit.
        """
        if z_fus.shape[1] != self.base_length:
            raise ConfigError(
                f"latent length {z_fus.shape[1]} != max(patch_nums)={self.base_length}"
            )
        residual = z_fus
        z_hat = torch.zeros_like(z_fus)
        per_scale_tokens: list[torch.Tensor] = []
        features: list[torch.Tensor] = []
        codes: list[torch.Tensor] = []
        for k, length in enumerate(self.patch_nums):
            f_k = linear_resample(residual, length)
            if tokens is None:
                r_k = nearest_code(f_k.detach(), self.codebook.detach())
            else:
                r_k = tokens.per_scale[k]
            e_k = self.lookup(r_k)
            contribution = self._refine(k, linear_resample(e_k, self.base_length))
            residual = residual - contribution
            z_hat = z_hat + contribution
            per_scale_tokens.append(r_k)
            features.append(f_k)
            codes.append(e_k)
        return QuantizeResult(
            tokens=TokenSequence(per_scale=per_scale_tokens, patch_nums=self.patch_nums),
            z_hat=z_hat,
            final_residual=residual,
            per_scale_features=features,
            per_scale_codes=codes,
        )

    def dequantize(self, tokens: TokenSequence) -> torch.Tensor:
        """Rebuild z_hat from stored indices alone: sum_k phi_k(up(lookup(r_k)))."""
        batch = tokens.per_scale[0].shape[0]
        z_hat = torch.zeros(
            batch, self.base_length, self.z_channels,
            dtype=self.codebook.dtype, device=self.codebook.device,
        )
        for k in range(len(self.patch_nums)):
            e_k = self.lookup(tokens.per_scale[k])
            z_hat = z_hat + self._refine(k, linear_resample(e_k, self.base_length))
        return z_hat
