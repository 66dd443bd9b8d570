"""Full auto-encoder: encoder, disentanglement module, node/edge decoders."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .config import ModelConfig
from .decoders import DecodedGraph, GraphDecoder, discretize
from .encoder import EdgeAugmentedEncoder
from .features import DenseGraphBatch
from .latent import DisentanglementModule, LatentOutput


@dataclass
class TensorBatch:
    X: torch.Tensor
    A_e: torch.Tensor
    mask: torch.Tensor
    hop: torch.Tensor

    @classmethod
    def from_dense(cls, batch: DenseGraphBatch, dtype=torch.float32) -> "TensorBatch":
        return cls(torch.as_tensor(batch.X, dtype=dtype), torch.as_tensor(batch.A_e, dtype=dtype),
                   torch.as_tensor(batch.node_mask), torch.as_tensor(batch.hop))

    def trimmed(self) -> "TensorBatch":
        """Drop trailing padded positions shared by the whole batch."""
        n = int(self.mask.sum(dim=1).max())
        return TensorBatch(self.X[:, :n], self.A_e[:, :n, :n], self.mask[:, :n], self.hop[:, :n, :n])


class LayoutVGAE(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.features = cfg.feature_config()
        self.encoder = EdgeAugmentedEncoder(cfg.encoder_config())
        self.latent = DisentanglementModule(cfg.latent_config())
        self.decoder = GraphDecoder(
            cfg.z_dim, cfg.n_max, self.features.recon_node_dim, self.features.edge_dim,
            style=cfg.style, node_width=cfg.node_width, edge_width=cfg.edge_width,
            noise=cfg.style_noise, start_resolution=cfg.start_resolution)

    def encode(self, batch: TensorBatch, generator=None, sample=True) -> LatentOutput:
        b = batch.trimmed()
        h, e = self.encoder(b.X, b.A_e, b.mask, b.hop)
        return self.latent(h, e, b.mask, generator=generator, sample=sample)

    def decode(self, z_node, z_edge, generator=None, noise=True) -> DecodedGraph:
        return self.decoder(z_node, z_edge, generator, noise)

    def forward(self, batch: TensorBatch, generator=None, sample=True):
        lat = self.encode(batch, generator, sample)
        return self.decode(lat.z_node, lat.z_edge, generator), lat

    def draw_prior(self, count: int, generator=None):
        """Decoder inputs drawn from N(0, I); independent node/edge codes in NED modes."""
        M = self.cfg.z_dim
        z_node = torch.randn((count, M), generator=generator)
        z_edge = torch.randn((count, M), generator=generator) if self.latent.cfg.uses_ned else z_node
        return self.latent.quantize_prior(z_node, z_edge)

    def to_graphs(self, dec: DecodedGraph, ids=None, min_nodes=1) -> list:
        X = dec.X.detach().cpu().numpy()
        A = dec.A_e.detach().cpu().numpy()
        ids = ids or [f"gen-{i:06d}" for i in range(len(X))]
        return [discretize(X[i], A[i], self.features, ids[i], min_nodes=min_nodes)
                for i in range(len(X))]


def weight_fingerprint(module: nn.Module) -> str:
    """Hash of all parameter bytes; equal fingerprints mean identical weights."""
    h = hashlib.sha256()
    for name, p in sorted(module.state_dict().items()):
        h.update(name.encode())
        h.update(np.ascontiguousarray(p.detach().cpu().numpy()).tobytes())
    return h.hexdigest()
