"""Single-head scaled dot-product cross-attention."""

from __future__ import annotations

import math

import torch
from torch import nn

from ..errors import ConfigError


class CrossAttention(nn.Module):
    """softmax(P_q(Q) P_k(KV)^T / sqrt(d)) P_v(KV) with one head.

    Every attention row is a probability vector over the key positions.
    """

    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim
        self.proj_q = nn.Linear(dim, dim)
        self.proj_k = nn.Linear(dim, dim)
        self.proj_v = nn.Linear(dim, dim)

    def attention_weights(self, queries: torch.Tensor, keys_values: torch.Tensor) -> torch.Tensor:
        if keys_values.shape[1] == 0:
            raise ConfigError("cross-attention requires at least one key/value position")
        if queries.shape[-1] != self.dim or keys_values.shape[-1] != self.dim:
            raise ConfigError(
                f"feature width mismatch: expected {self.dim}, "
                f"got {queries.shape[-1]} / {keys_values.shape[-1]}"
            )
        q = self.proj_q(queries)
        k = self.proj_k(keys_values)
        scores = q @ k.transpose(1, 2) / math.sqrt(self.dim)
        return torch.softmax(scores, dim=-1)

    def forward(self, queries: torch.Tensor, keys_values: torch.Tensor) -> torch.Tensor:
        """queries: [B, Lq, C], keys_values: [B, Lk, C] -> [B, Lq, C]."""
        weights = self.attention_weights(queries, keys_values)
        return weights @ self.proj_v(keys_values)
