"""GPT-style decoder over the flattened multi-scale token sequence.

The vocabulary is the codebook indices plus one BOS token (id == vocab size).
Each input position gets a learned absolute position embedding plus a learned
embedding of the scale its token belongs to; blocks are pre-norm. The output
head is zero-initialized, so an untrained model predicts the uniform
distribution over all vocab + BOS entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F
from torch import nn

from .errors import ConfigError
from .vqvae.quantize import TokenSequence


@dataclass
class ArConfig:
    vocab_size: int
    patch_nums: tuple[int, ...]
    embed_dim: int = 1024
    layers: int = 1
    heads: int = 16
    fc_rate: int = 4
    dropout: float = 0.1

    @property
    def seq_length(self) -> int:
        return sum(self.patch_nums)

    @property
    def bos_id(self) -> int:
        return self.vocab_size

    def validate(self) -> None:
        if self.vocab_size < 2:
            raise ConfigError(f"ar.vocab_size must be >= 2, got {self.vocab_size}")
        if self.embed_dim < 1 or self.layers < 1 or self.heads < 1 or self.fc_rate < 1:
            raise ConfigError("ar.embed_dim, layers, heads, and fc_rate must be positive")
        if self.embed_dim % self.heads != 0:
            raise ConfigError(
                f"ar.embed_dim={self.embed_dim} must be divisible by ar.heads={self.heads}"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"ar.dropout must be in [0, 1), got {self.dropout}")
        if len(self.patch_nums) < 1:
            raise ConfigError("ar.patch_nums must not be empty")


class CausalSelfAttention(nn.Module):
    def __init__(self, dim: int, heads: int, dropout: float):
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.proj = nn.Linear(dim, dim)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch, length, dim = x.shape
        qkv = self.qkv(x).reshape(batch, length, 3, self.heads, self.head_dim)
        q, k, v = (t.transpose(1, 2) for t in qkv.unbind(dim=2))  # [B, H, L, hd]
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        mask = torch.triu(
            torch.ones(length, length, dtype=torch.bool, device=x.device), diagonal=1
        )
        scores = scores.masked_fill(mask, float("-inf"))
        weights = self.dropout(torch.softmax(scores, dim=-1))
        out = (weights @ v).transpose(1, 2).reshape(batch, length, dim)
        return self.proj(out)


class DecoderBlock(nn.Module):
    """Pre-norm self-attention + feed-forward with residuals."""

    def __init__(self, dim: int, heads: int, fc_rate: int, dropout: float):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = CausalSelfAttention(dim, heads, dropout)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, fc_rate * dim),
            nn.GELU(),
            nn.Linear(fc_rate * dim, dim),
            nn.Dropout(dropout),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.norm1(x))
        return x + self.mlp(self.norm2(x))


class ArModel(nn.Module):
    def __init__(self, config: ArConfig):
        super().__init__()
        config.validate()
        self.config = config
        dim = config.embed_dim
        length = config.seq_length
        self.tok_emb = nn.Embedding(config.vocab_size + 1, dim)
        self.pos_emb = nn.Embedding(length + 1, dim)
        self.scale_emb = nn.Embedding(len(config.patch_nums), dim)
        self.drop = nn.Dropout(config.dropout)
        self.blocks = nn.ModuleList(
            DecoderBlock(dim, config.heads, config.fc_rate, config.dropout)
            for _ in range(config.layers)
        )
        self.norm_f = nn.LayerNorm(dim)
        self.head = nn.Linear(dim, config.vocab_size + 1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)
        # Scale of the token at each input position: BOS rides with scale 0,
        # then flat position j (0-based) belongs to the scale containing j.
        ids = [0]
        for scale, count in enumerate(config.patch_nums):
            ids.extend([scale] * count)
        self.register_buffer(
            "input_scale_ids", torch.tensor(ids[:length], dtype=torch.long), persistent=False
        )

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        """tokens: [B, len <= L] with values in [0, vocab]; returns [B, len, vocab+1]."""
        if tokens.dim() != 2:
            raise ConfigError(f"expected [B, len] token tensor, got {tuple(tokens.shape)}")
        length = tokens.shape[1]
        if length > self.config.seq_length:
            raise ConfigError(
                f"input length {length} exceeds model length {self.config.seq_length}"
            )
        if tokens.numel() and (tokens.min() < 0 or tokens.max() > self.config.vocab_size):
            raise ConfigError(
                f"token id out of range [0, {self.config.vocab_size}]: "
                f"min={int(tokens.min())}, max={int(tokens.max())}"
            )
        positions = torch.arange(length, device=tokens.device)
        h = (
            self.tok_emb(tokens)
            + self.pos_emb(positions)
            + self.scale_emb(self.input_scale_ids[:length])
        )
        h = self.drop(h)
        for block in self.blocks:
            h = block(h)
        return self.head(self.norm_f(h))

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def ar_loss(model: ArModel, targets: torch.Tensor) -> torch.Tensor:
    """Mean NLL of targets [B, L] under teacher forcing from BOS."""
    length = model.config.seq_length
    if targets.shape[1] != length:
        raise ConfigError(
            f"target length {targets.shape[1]} != model length {length}"
        )
    bos = torch.full(
        (targets.shape[0], 1), model.config.bos_id, dtype=targets.dtype,
        device=targets.device,
    )
    inputs = torch.cat([bos, targets[:, :-1]], dim=1)
    logits = model(inputs)
    return F.cross_entropy(logits.reshape(-1, logits.shape[-1]), targets.reshape(-1))


@torch.no_grad()
def ar_sample(
    model: ArModel,
    count: int,
    temperature: float = 1.0,
    top_k: int | None = None,
    seed: int = 0,
    greedy: bool = False,
) -> torch.Tensor:
    """Sample ``count`` token sequences of the model's full length.

    The BOS logit is masked to -inf at every step so BOS is never emitted;
    output is a pure function of (parameters, count, temperature, top_k, seed).
    """
    if not greedy and temperature <= 0:
        raise ConfigError(f"temperature must be positive, got {temperature}")
    if top_k is not None and top_k < 1:
        raise ConfigError(f"top_k must be >= 1, got {top_k}")
    was_training = model.training
    model.eval()
    generator = torch.Generator(device="cpu").manual_seed(seed)
    tokens = torch.full((count, 1), model.config.bos_id, dtype=torch.long)
    for _ in range(model.config.seq_length):
        logits = model(tokens)[:, -1, :].clone()
        logits[:, model.config.bos_id] = float("-inf")
        if greedy:
            nxt = torch.argmax(logits, dim=-1, keepdim=True)
        else:
            logits = logits / temperature
            if top_k is not None and top_k < logits.shape[-1]:
                # Keep exactly k entries; stable argsort breaks ties toward the
                # lowest index, so top_k=1 coincides with greedy always.
                order = torch.argsort(-logits, dim=-1, stable=True)[:, :top_k]
                filtered = torch.full_like(logits, float("-inf"))
                logits = filtered.scatter(-1, order, logits.gather(-1, order))
            probs = torch.softmax(logits, dim=-1)
            nxt = torch.multinomial(probs, 1, generator=generator)
        tokens = torch.cat([tokens, nxt], dim=1)
    if was_training:
        model.train()
    return tokens[:, 1:]


def tokens_to_sequences(flat: torch.Tensor, patch_nums: tuple[int, ...]) -> TokenSequence:
    return TokenSequence.from_flat(flat, patch_nums)
