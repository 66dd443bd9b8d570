"""Edge-augmented graph transformer encoder.

Node and edge embeddings are updated jointly. Attention scores are the
clipped scaled dot product plus a per-head edge bias; a sigmoid edge gate
multiplies the softmax weights, and the aggregated values are scaled by the
log of the summed gates (a soft degree term).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn


@dataclass
class EncoderConfig:
    node_dim: int
    edge_dim: int
    layers: int = 4
    d_model: int = 128
    heads: int = 8
    edge_channels: int = 32
    clip: float = 5.0
    hop_clip: int = 8
    ffn_mult: int = 2

    def __post_init__(self):
        if self.d_model % self.heads:
            raise ValueError("d_model must be divisible by heads")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.heads


def _ffn(width: int, mult: int) -> nn.Sequential:
    return nn.Sequential(nn.Linear(width, width * mult), nn.ELU(), nn.Linear(width * mult, width))


def pair_mask(mask: torch.Tensor) -> torch.Tensor:
    return mask[:, :, None] & mask[:, None, :]


def symmetrize(e: torch.Tensor) -> torch.Tensor:
    """Average a (B, n, n, ...) tensor with its node-axes transpose."""
    return 0.5 * (e + e.transpose(1, 2))


class EdgeAugmentedLayer(nn.Module):
    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        d, c, h = cfg.d_model, cfg.edge_channels, cfg.heads
        self.qkv = nn.Linear(d, 3 * d)
        self.edge_bias = nn.Linear(c, h)
        self.edge_gate = nn.Linear(c, h)
        self.node_out = nn.Linear(d, d)
        self.edge_out = nn.Linear(h, c)
        self.node_ln1, self.node_ln2 = nn.LayerNorm(d), nn.LayerNorm(d)
        self.edge_ln1, self.edge_ln2 = nn.LayerNorm(c), nn.LayerNorm(c)
        self.node_ffn = _ffn(d, cfg.ffn_mult)
        self.edge_ffn = _ffn(c, cfg.ffn_mult)

    def attention(self, h, e, mask):
        """Return ``(scores, node_messages)``; scores are (B, heads, n, n) pre-softmax."""
        B, n, _ = h.shape
        heads, bk = self.cfg.heads, self.cfg.head_dim
        q, k, v = self.qkv(h).view(B, n, 3, heads, bk).permute(2, 0, 3, 1, 4)
        scores = (q @ k.transpose(-1, -2)) / math.sqrt(bk)
        scores = scores.clamp(-self.cfg.clip, self.cfg.clip)
        scores = scores + self.edge_bias(e).permute(0, 3, 1, 2)

        key_mask = mask[:, None, None, :]
        gates = torch.sigmoid(self.edge_gate(e)).permute(0, 3, 1, 2) * key_mask
        weights = torch.softmax(scores.masked_fill(~key_mask, float("-inf")), dim=-1) * gates
        centrality = torch.log1p(gates.sum(dim=-1, keepdim=True))
        out = centrality * (weights @ v)
        return scores, out.permute(0, 2, 1, 3).reshape(B, n, heads * bk)

    def forward(self, h, e, mask):
        scores, msg = self.attention(h, e, mask)
        h_hat = self.node_out(msg) + h
        h = self.node_ln2(self.node_ffn(self.node_ln1(h_hat)) + h_hat)
        e_hat = self.edge_out(scores.permute(0, 2, 3, 1)) + e
        e = self.edge_ln2(self.edge_ffn(self.edge_ln1(e_hat)) + e_hat)
        return h, symmetrize(e)


class EdgeAugmentedEncoder(nn.Module):
    """Stack of :class:`EdgeAugmentedLayer` over dense padded graphs.

    Inputs are ``X (B, n, d)``, ``A_e (B, n, n, c)``, ``mask (B, n)`` and
    ``hop (B, n, n)``; the outputs are node ``(B, n, d_model)`` and edge
    ``(B, n, n, edge_channels)`` embeddings.
    """

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        self.node_proj = nn.Linear(cfg.node_dim, cfg.d_model)
        self.edge_proj = nn.Linear(cfg.edge_dim, cfg.edge_channels)
        self.hop_embedding = nn.Embedding(cfg.hop_clip + 1, cfg.edge_channels)
        self.mask_embedding = nn.Parameter(torch.zeros(cfg.edge_channels))
        self.layers = nn.ModuleList(EdgeAugmentedLayer(cfg) for _ in range(cfg.layers))

    def embed_inputs(self, X, A_e, mask, hop):
        if X.shape[-1] != self.cfg.node_dim or A_e.shape[-1] != self.cfg.edge_dim:
            raise ValueError(
                f"feature dims ({X.shape[-1]}, {A_e.shape[-1]}) do not match encoder "
                f"({self.cfg.node_dim}, {self.cfg.edge_dim})")
        h = self.node_proj(X)
        e = self.edge_proj(A_e) + self.hop_embedding(hop.clamp(0, self.cfg.hop_clip))
        pm = pair_mask(mask)[..., None]
        e = torch.where(pm, e, self.mask_embedding.expand_as(e))
        return h, e

    def forward(self, X, A_e, mask, hop):
        h, e = self.embed_inputs(X, A_e, mask, hop)
        for layer in self.layers:
            h, e = layer(h, e, mask)
        return h, e
