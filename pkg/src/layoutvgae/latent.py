"""Latent disentanglement modules: Gaussian posterior, vector quantization, node/edge split."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import torch
from torch import nn

from .encoder import pair_mask

MODES = ("vae", "vq", "ned", "ned_vq")


@dataclass
class LatentConfig:
    in_dim: int          # encoder node width
    edge_channels: int   # encoder edge width
    n_max: int
    latent_dim: int = 512
    mode: str = "vae"
    codebook_size: int = 512

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown latent mode {self.mode!r}")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.uses_vq and self.codebook_size < 2:
            raise ValueError("codebook_size must be >= 2 with vector quantization")

    @property
    def uses_vq(self) -> bool:
        return self.mode in ("vq", "ned_vq")

    @property
    def uses_ned(self) -> bool:
        return self.mode in ("ned", "ned_vq")


@dataclass
class LatentCode:
    z: torch.Tensor
    z_mu: torch.Tensor
    z_logvar: torch.Tensor
    role: str
    noise: Optional[torch.Tensor] = None


def reparameterize(mu, logvar, generator=None, sample=True):
    """``z = mu + exp(logvar / 2) * r`` with ``r ~ N(0, I)``; returns ``(z, r)``."""
    if not sample:
        return mu, torch.zeros_like(mu)
    r = torch.randn(mu.shape, generator=generator, dtype=mu.dtype, device=mu.device)
    return mu + torch.exp(0.5 * logvar) * r, r


def _block(in_dim: int, out_dim: int) -> list:
    return [nn.Linear(in_dim, out_dim), nn.PReLU(), nn.LayerNorm(out_dim)]


class GaussianHead(nn.Module):
    """Two 2-layer stacks (Linear, PReLU, LayerNorm) giving mean and log-variance."""

    def __init__(self, in_dim: int, latent_dim: int):
        super().__init__()
        self.mu = nn.Sequential(*_block(in_dim, latent_dim), *_block(latent_dim, latent_dim))
        self.logvar = nn.Sequential(*_block(in_dim, latent_dim), *_block(latent_dim, latent_dim))

    def forward(self, pooled, role="graph", generator=None, sample=True) -> LatentCode:
        mu, logvar = self.mu(pooled), self.logvar(pooled)
        z, r = reparameterize(mu, logvar, generator, sample)
        return LatentCode(z, mu, logvar, role, r)


class GINPool(nn.Module):
    """One GIN-style update over the dense edge map followed by masked sum pooling."""

    def __init__(self, in_dim: int, edge_channels: int, edge_map: Optional[nn.Linear] = None):
        super().__init__()
        self.eps = nn.Parameter(torch.zeros(()))
        self.edge_map = edge_map if edge_map is not None else nn.Linear(edge_channels, 1)
        self.mlp = nn.Sequential(*_block(in_dim, in_dim))

    def scalar_edges(self, e, mask):
        return self.edge_map(e).squeeze(-1) * pair_mask(mask)

    def forward(self, x, e, mask):
        x_hat = (1 + self.eps) * x
        mixed = self.scalar_edges(e, mask) @ x_hat
        y = self.mlp(x_hat + mixed)
        return (y * mask[..., None]).sum(dim=1)


class _NearestPrototype(torch.autograd.Function):
    """Forward returns the prototype itself; backward hands the gradient to ``z`` unchanged."""

    @staticmethod
    def forward(ctx, z, prototypes):
        return prototypes.clone()

    @staticmethod
    def backward(ctx, grad):
        return grad, None


def nearest_prototype(z: torch.Tensor, book: torch.Tensor):
    """Index of the closest codebook row per batch row (ties go to the lowest index)."""
    dist = (z.detach()[:, None, :] - book.detach()[None, :, :]).pow(2).sum(-1)
    return torch.argmin(dist, dim=1)


class Codebook(nn.Module):
    def __init__(self, size: int, dim: int):
        super().__init__()
        self.weight = nn.Parameter(torch.empty(size, dim).uniform_(-1.0 / size, 1.0 / size))

    def forward(self, z):
        """Return ``(z_q, k, index)``: straight-through code, raw prototype, row index."""
        idx = nearest_prototype(z, self.weight)
        k = self.weight[idx]
        return _NearestPrototype.apply(z, k.detach()), k, idx


def quantize(z: torch.Tensor, book):
    """Functional form: nearest prototype of ``z`` in ``book`` (a tensor or :class:`Codebook`)."""
    weight = book.weight if isinstance(book, Codebook) else book
    idx = nearest_prototype(z, weight)
    return _NearestPrototype.apply(z, weight[idx].detach()), idx


@dataclass
class LatentOutput:
    codes: list            # LatentCodes entering the KL term
    z_node: torch.Tensor   # decoder inputs
    z_edge: torch.Tensor
    vq_pairs: list         # (pre-quantization z, selected prototype) for the VQ loss
    indices: list


class DisentanglementModule(nn.Module):
    """Maps encoder outputs to decoder inputs for one of the four latent modes."""

    def __init__(self, cfg: LatentConfig):
        super().__init__()
        self.cfg = cfg
        M = cfg.latent_dim
        self.gin = GINPool(cfg.in_dim, cfg.edge_channels)
        self.graph_head = GaussianHead(cfg.in_dim, M)
        if cfg.uses_ned:
            self.node_head = GaussianHead(cfg.in_dim, M)
            self.edge_flat = nn.Linear(cfg.n_max * cfg.n_max, M)
            self.edge_head = GaussianHead(M, M)
            self.fuse_node = nn.Linear(2 * M, M)
            self.fuse_edge = nn.Linear(2 * M, M)
        if cfg.mode == "vq":
            self.codebook = Codebook(cfg.codebook_size, M)
        elif cfg.mode == "ned_vq":
            self.codebook_node = Codebook(cfg.codebook_size, M)
            self.codebook_edge = Codebook(cfg.codebook_size, M)

    def pooled(self, x, e, mask):
        return self.gin(x, e, mask)

    def flat_edges(self, e, mask):
        """Scalar edge map with masked pairs zeroed, padded to ``n_max`` and flattened."""
        a = self.gin.scalar_edges(e, mask)
        n = a.shape[1]
        pad = self.cfg.n_max - n
        if pad:
            a = nn.functional.pad(a, (0, pad, 0, pad))
        return a.reshape(a.shape[0], -1)

    def ned_encode(self, x, e, mask, generator=None, sample=True):
        graph = self.graph_head(self.pooled(x, e, mask), "graph", generator, sample)
        node = self.node_head((x * mask[..., None]).sum(dim=1), "node", generator, sample)
        edge = self.edge_head(self.edge_flat(self.flat_edges(e, mask)), "edge", generator, sample)
        z_ng = self.fuse_node(torch.cat([node.z, graph.z], dim=-1))
        z_eg = self.fuse_edge(torch.cat([edge.z, graph.z], dim=-1))
        return graph, node, edge, z_ng, z_eg

    def forward(self, x, e, mask, generator=None, sample=True) -> LatentOutput:
        mode = self.cfg.mode
        if not self.cfg.uses_ned:
            code = self.graph_head(self.pooled(x, e, mask), "graph", generator, sample)
            if mode == "vae":
                return LatentOutput([code], code.z, code.z, [], [])
            z_q, k, idx = self.codebook(code.z)
            return LatentOutput([code], z_q, z_q, [(code.z, k)], [idx])
        graph, node, edge, z_ng, z_eg = self.ned_encode(x, e, mask, generator, sample)
        codes = [graph, node, edge]
        if mode == "ned":
            return LatentOutput(codes, z_ng, z_eg, [], [])
        q_n, k_n, i_n = self.codebook_node(z_ng)
        q_e, k_e, i_e = self.codebook_edge(z_eg)
        return LatentOutput(codes, q_n, q_e, [(z_ng, k_n), (z_eg, k_e)], [i_n, i_e])

    def quantize_prior(self, z_node, z_edge):
        """Quantize codes drawn from the prior, as used when sampling."""
        if self.cfg.mode == "vq":
            z_q, _, _ = self.codebook(z_node)
            return z_q, z_q
        if self.cfg.mode == "ned_vq":
            return self.codebook_node(z_node)[0], self.codebook_edge(z_edge)[0]
        return z_node, z_edge
