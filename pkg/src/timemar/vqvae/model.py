"""Dual-path VQ autoencoder: decompose, encode, fuse, quantize, split, decode.

The trend and coarse seasonal components share one encoder/decoder pair; the
fine seasonal component gets its own pair plus a frequency-aware enhancement
on the encode side and coarse-signal guidance on the decode side. The final
output is always trend_hat + seasonal_hat.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from ..decompose import Decomposer, coarse_seasonal
from ..errors import ConfigError
from .attention import CrossAttention
from .backbone import Decoder1d, Encoder1d, GuidanceEmbedder, check_length
from .config import VqvaeConfig
from .quantize import MultiScaleQuantizer, QuantizeResult, TokenSequence
from .spectral import FrequencyEmbedder, fourier_loss


@dataclass
class ForwardOutput:
    trend: torch.Tensor
    seasonal: torch.Tensor
    coarse: torch.Tensor
    z_trend: torch.Tensor
    z_coarse: torch.Tensor
    z_seasonal: torch.Tensor
    z_fused: torch.Tensor
    quant: QuantizeResult
    trend_hat: torch.Tensor
    coarse_hat: torch.Tensor
    seasonal_hat: torch.Tensor
    x_hat: torch.Tensor


@dataclass
class LossBreakdown:
    rec: torch.Tensor
    vq: torch.Tensor
    rec_trend: torch.Tensor
    rec_season: torch.Tensor
    rec_coarse: torch.Tensor
    fourier: torch.Tensor
    total: torch.Tensor

    def terms(self) -> dict:
        return {
            "rec": self.rec,
            "vq": self.vq,
            "rec_trend": self.rec_trend,
            "rec_season": self.rec_season,
            "rec_coarse": self.rec_coarse,
            "fourier": self.fourier,
            "total": self.total,
        }

    def to_floats(self) -> dict:
        return {name: float(value) for name, value in self.terms().items()}


class DualPathVqvae(nn.Module):
    def __init__(
        self,
        config: VqvaeConfig,
        window_length: int,
        num_features: int,
        kernel_sizes: tuple[int, ...] = (5, 9, 13),
        downsample_factor: int = 4,
    ):
        super().__init__()
        config.validate(window_length)
        if window_length % downsample_factor != 0:
            raise ConfigError(
                f"decompose.downsample_factor={downsample_factor} does not divide T={window_length}"
            )
        self.config = config
        self.window_length = window_length
        self.num_features = num_features
        self.downsample_factor = downsample_factor
        self.base_length = check_length(window_length, config.ch_mult)

        c = config.z_channels
        backbone_args = (num_features, c, config.ch, config.ch_mult, config.enc_dec_layers)
        self.decomposer = Decomposer(num_features, kernel_sizes, downsample_factor)
        self.enc_coarse = Encoder1d(*backbone_args)
        self.enc_fine_time = Encoder1d(*backbone_args)
        self.freq_embedder = FrequencyEmbedder(num_features, c)
        self.enc_attn = CrossAttention(c)
        self.fuse = nn.Sequential(nn.Linear(3 * c, 2 * c), nn.SiLU(), nn.Linear(2 * c, c))
        self.quantizer = MultiScaleQuantizer(
            config.vocab_size, c, config.patch_nums, config.phi_enabled
        )
        self.split = nn.Sequential(nn.Linear(c, 2 * c), nn.SiLU(), nn.Linear(2 * c, 3 * c))
        self.dec_coarse = Decoder1d(*backbone_args)
        self.dec_fine = Decoder1d(*backbone_args)
        self.guidance_embedder = GuidanceEmbedder(num_features, c, len(config.ch_mult))
        self.dec_attn = CrossAttention(c)

    # --- encoding -----------------------------------------------------------

    def _check_input(self, x: torch.Tensor) -> None:
        if x.dim() != 3 or x.shape[1] != self.window_length or x.shape[2] != self.num_features:
            raise ConfigError(
                f"expected input [B, {self.window_length}, {self.num_features}], "
                f"got {tuple(x.shape)}"
            )

    def encode_coarse(self, component: torch.Tensor) -> torch.Tensor:
        """Shared encoder for the trend and coarse seasonal paths."""
        self._check_input(component)
        return self.enc_coarse(component)

    def encode_fine(self, seasonal: torch.Tensor) -> torch.Tensor:
        """Time backbone plus a frequency cross-attention residual."""
        self._check_input(seasonal)
        h_time = self.enc_fine_time(seasonal)
        h_freq = self.freq_embedder(seasonal)
        return h_time + self.enc_attn(h_time, h_freq)

    def fuse_latents(
        self, z_trend: torch.Tensor, z_coarse: torch.Tensor, z_seasonal: torch.Tensor
    ) -> torch.Tensor:
        if not (z_trend.shape == z_coarse.shape == z_seasonal.shape):
            raise ConfigError("fused latents must share one shape")
        return self.fuse(torch.cat([z_trend, z_coarse, z_seasonal], dim=-1))

    # --- decoding -----------------------------------------------------------

    def split_latent(self, z_hat: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        parts = self.split(z_hat)
        c = self.config.z_channels
        return parts[..., :c], parts[..., c : 2 * c], parts[..., 2 * c :]

    def decode(
        self,
        zt_hat: torch.Tensor,
        zc_hat: torch.Tensor,
        zs_hat: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
        """Guided dual-path decoding; returns (trend, coarse, seasonal, total)."""
        if not (zt_hat.shape == zc_hat.shape == zs_hat.shape):
            raise ConfigError("decoder latents must share one shape")
        both = self.dec_coarse(torch.cat([zt_hat, zc_hat], dim=0))
        trend_hat, coarse_hat = both.chunk(2, dim=0)
        guidance = self.guidance_embedder(coarse_hat)
        zs_guided = zs_hat + self.dec_attn(zs_hat, guidance)
        seasonal_hat = self.dec_fine(zs_guided)
        return trend_hat, coarse_hat, seasonal_hat, trend_hat + seasonal_hat

    # --- full passes ----------------------------------------------------------

    def forward(self, x: torch.Tensor, tokens: TokenSequence | None = None) -> ForwardOutput:
        """Full autoencoding pass; ``tokens`` teacher-forces the quantizer."""
        self._check_input(x)
        trend, seasonal = self.decomposer(x)
        coarse = coarse_seasonal(seasonal, self.downsample_factor)
        # One batched pass through the shared encoder covers both inputs.
        z_both = self.enc_coarse(torch.cat([trend, coarse], dim=0))
        z_trend, z_coarse = z_both.chunk(2, dim=0)
        z_seasonal = self.encode_fine(seasonal)
        z_fused = self.fuse_latents(z_trend, z_coarse, z_seasonal)
        quant = self.quantizer(z_fused, tokens=tokens)
        # Value == z_hat; the encoder path receives the straight-through
        # reconstruction gradient while codebook/phi keep their real path.
        z_decoder = quant.z_hat + z_fused - z_fused.detach()
        zt_hat, zc_hat, zs_hat = self.split_latent(z_decoder)
        trend_hat, coarse_hat, seasonal_hat, x_hat = self.decode(zt_hat, zc_hat, zs_hat)
        return ForwardOutput(
            trend=trend,
            seasonal=seasonal,
            coarse=coarse,
            z_trend=z_trend,
            z_coarse=z_coarse,
            z_seasonal=z_seasonal,
            z_fused=z_fused,
            quant=quant,
            trend_hat=trend_hat,
            coarse_hat=coarse_hat,
            seasonal_hat=seasonal_hat,
            x_hat=x_hat,
        )

    @torch.no_grad()
    def encode_to_tokens(self, x: torch.Tensor) -> TokenSequence:
        return self.forward(x).quant.tokens

    @torch.no_grad()
    def decode_tokens(
        self, tokens: TokenSequence
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
        """Generation path: indices -> (trend, coarse, seasonal, total)."""
        z_hat = self.quantizer.dequantize(tokens)
        zt_hat, zc_hat, zs_hat = self.split_latent(z_hat)
        return self.decode(zt_hat, zc_hat, zs_hat)

    # --- objective ------------------------------------------------------------

    def vq_loss_terms(self, quant: QuantizeResult) -> tuple[torch.Tensor, torch.Tensor]:
        """(codebook term, commitment term), each averaged over scales and positions."""
        codebook_term = torch.zeros((), dtype=quant.z_hat.dtype, device=quant.z_hat.device)
        commit_term = torch.zeros_like(codebook_term)
        for f_k, e_k in zip(quant.per_scale_features, quant.per_scale_codes):
            codebook_term = codebook_term + (f_k.detach() - e_k).pow(2).mean()
            commit_term = commit_term + (f_k - e_k.detach()).pow(2).mean()
        scales = len(quant.per_scale_features)
        return codebook_term / scales, commit_term / scales

    def loss(self, x: torch.Tensor, out: ForwardOutput) -> LossBreakdown:
        lambdas = self.config.resolved_lambdas()
        if any(v < 0 for v in lambdas.values()):
            raise ConfigError(f"loss weights must be non-negative, got {lambdas}")
        mse = nn.functional.mse_loss
        rec = mse(out.x_hat, x)
        rec_trend = mse(out.trend_hat, out.trend)
        rec_season = mse(out.seasonal_hat, out.seasonal)
        rec_coarse = mse(out.coarse_hat, out.coarse)
        codebook_term, commit_term = self.vq_loss_terms(out.quant)
        vq = codebook_term + self.config.beta * commit_term
        fourier = fourier_loss(out.seasonal, out.seasonal_hat)
        total = (
            lambdas["rec"] * rec
            + lambdas["vq"] * vq
            + lambdas["trend"] * rec_trend
            + lambdas["season"] * rec_season
            + lambdas["coarse"] * rec_coarse
            + lambdas["fourier"] * fourier
        )
        return LossBreakdown(
            rec=rec,
            vq=vq,
            rec_trend=rec_trend,
            rec_season=rec_season,
            rec_coarse=rec_coarse,
            fourier=fourier,
            total=total,
        )
