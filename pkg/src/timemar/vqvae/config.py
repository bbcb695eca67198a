"""Configuration for the dual-path multi-scale VQ autoencoder."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigError

LAMBDA_KEYS = ("rec", "vq", "trend", "season", "fourier", "coarse")

DEFAULT_LAMBDAS = {
    "rec": 1.0,
    "vq": 1.0,
    "trend": 0.5,
    "season": 0.5,
    "coarse": 0.5,
    "fourier": 0.1,
}


@dataclass
class VqvaeConfig:
    vocab_size: int = 512
    z_channels: int = 256
    ch: int = 256
    ch_mult: tuple[int, ...] = (1, 1, 2)
    enc_dec_layers: int = 3
    patch_nums: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    beta: float = 0.25
    lambdas: dict = field(default_factory=lambda: dict(DEFAULT_LAMBDAS))
    phi_enabled: bool = True

    @property
    def num_scales(self) -> int:
        return len(self.patch_nums)

    @property
    def base_length(self) -> int:
        return max(self.patch_nums)

    @property
    def token_length(self) -> int:
        return sum(self.patch_nums)

    def downsample_ratio(self) -> int:
        return 2 ** (len(self.ch_mult) - 1)

    def validate(self, window_length: int | None = None) -> None:
        """Raise ConfigError on any violated invariant, naming the field."""
        if self.vocab_size < 2:
            raise ConfigError(f"vqvae.vocab_size must be >= 2, got {self.vocab_size}")
        if self.z_channels < 1:
            raise ConfigError(f"vqvae.z_channels must be >= 1, got {self.z_channels}")
        if self.ch < 1:
            raise ConfigError(f"vqvae.ch must be >= 1, got {self.ch}")
        if len(self.ch_mult) < 1:
            raise ConfigError("vqvae.ch_mult must not be empty")
        if any(m < 1 for m in self.ch_mult):
            raise ConfigError(f"vqvae.ch_mult entries must be >= 1, got {self.ch_mult}")
        if self.enc_dec_layers < 1:
            raise ConfigError(
                f"vqvae.enc_dec_layers must be >= 1, got {self.enc_dec_layers}"
            )
        if len(self.patch_nums) < 1:
            raise ConfigError("vqvae.patch_nums must not be empty")
        if any(p < 1 for p in self.patch_nums):
            raise ConfigError(
                f"vqvae.patch_nums entries must be positive, got {self.patch_nums}"
            )
        if list(self.patch_nums) != sorted(set(self.patch_nums)):
            raise ConfigError(
                f"vqvae.patch_nums must be strictly increasing, got {self.patch_nums}"
            )
        if self.beta < 0:
            raise ConfigError(f"vqvae.beta must be non-negative, got {self.beta}")
        unknown = set(self.lambdas) - set(LAMBDA_KEYS)
        if unknown:
            raise ConfigError(f"vqvae.lambdas has unknown keys: {sorted(unknown)}")
        for key in LAMBDA_KEYS:
            value = self.lambdas.get(key, DEFAULT_LAMBDAS[key])
            if value < 0:
                raise ConfigError(f"vqvae.lambdas.{key} must be non-negative, got {value}")
        if window_length is not None:
            ratio = self.downsample_ratio()
            if window_length % ratio != 0:
                raise ConfigError(
                    f"data.T={window_length} is not divisible by the encoder "
                    f"downsampling factor 2^(len(ch_mult)-1)={ratio}"
                )
            base = window_length // ratio
            if self.base_length != base:
                raise ConfigError(
                    f"vqvae.patch_nums: max(patch_nums)={self.base_length} must equal "
                    f"T/2^(len(ch_mult)-1)={base} for T={window_length}"
                )

    def resolved_lambdas(self) -> dict:
        out = dict(DEFAULT_LAMBDAS)
        out.update(self.lambdas)
        return out
