"""Style-modulated and MLP decoders, plus discretization back to graphs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .encoder import symmetrize
from .features import FeatureConfig
from .graph import AAMG, AREA_EPS


@dataclass
class StyleDecoderConfig:
    latent_dim: int
    out_channels: int
    n_max: int = 128
    start_resolution: int = 8
    mapping_depth: int = 8
    width: int = 128
    min_width: int = 16
    noise: bool = True

    def __post_init__(self):
        ratio = self.n_max / self.start_resolution
        if ratio < 1 or ratio != 2 ** int(round(math.log2(ratio))):
            raise ValueError("n_max must be start_resolution times a power of two")
        if self.mapping_depth != 8:
            raise ValueError("the mapping network has exactly 8 layers")

    @property
    def resolutions(self) -> list:
        stages = int(round(math.log2(self.n_max / self.start_resolution))) + 1
        return [self.start_resolution * 2 ** s for s in range(stages)]

    @property
    def channels(self) -> list:
        return [max(self.width >> s, self.min_width) for s in range(len(self.resolutions))]


@dataclass
class DecodedGraph:
    X: torch.Tensor    # (B, n_max, d_rec) in (0, 1)
    A_e: torch.Tensor  # (B, n_max, n_max, c) in (0, 1), symmetric


class MappingNetwork(nn.Module):
    def __init__(self, dim: int, depth: int = 8):
        super().__init__()
        layers = []
        for _ in range(depth):
            layers += [nn.Linear(dim, dim), nn.LeakyReLU(0.2)]
        self.net = nn.Sequential(*layers)

    def forward(self, z):
        return self.net(z)


class SynthesisStage(nn.Module):
    """Channel-wise style scaling, convolution, optional per-position noise, activation."""

    def __init__(self, latent_dim, in_ch, out_ch, spatial_dims, upsample):
        super().__init__()
        conv = nn.Conv1d if spatial_dims == 1 else nn.Conv2d
        self.spatial_dims = spatial_dims
        self.upsample = upsample
        self.affine = nn.Linear(latent_dim, in_ch)
        nn.init.ones_(self.affine.bias)
        self.conv = conv(in_ch, out_ch, kernel_size=3, padding=1)
        self.noise_strength = nn.Parameter(torch.zeros(out_ch))
        self.act = nn.LeakyReLU(0.2)

    def forward(self, x, w, noise: Optional[torch.Tensor] = None):
        if self.upsample:
            x = F.interpolate(x, scale_factor=2, mode="nearest")
        scale = self.affine(w).reshape(w.shape[0], -1, *([1] * self.spatial_dims))
        x = self.conv(x * scale)
        if noise is not None:
            x = x + self.noise_strength.reshape(1, -1, *([1] * self.spatial_dims)) * noise
        return self.act(x)


class _StyleSynthesis(nn.Module):
    spatial_dims = 1

    def __init__(self, cfg: StyleDecoderConfig):
        super().__init__()
        self.cfg = cfg
        self.mapping = MappingNetwork(cfg.latent_dim, cfg.mapping_depth)
        ch = cfg.channels
        shape = (ch[0],) + (cfg.start_resolution,) * self.spatial_dims
        self.const = nn.Parameter(torch.randn(shape))
        self.stages = nn.ModuleList(
            SynthesisStage(cfg.latent_dim, ch[max(i - 1, 0)], ch[i], self.spatial_dims, i > 0)
            for i in range(len(ch)))
        conv = nn.Conv1d if self.spatial_dims == 1 else nn.Conv2d
        self.to_out = conv(ch[-1], cfg.out_channels, kernel_size=1)

    def _noise(self, x_shape, batch, generator, dtype):
        res = x_shape[-1]
        return torch.randn((batch, 1) + (res,) * self.spatial_dims, generator=generator, dtype=dtype)

    def synthesize(self, w, generator=None, noise=True):
        B = w.shape[0]
        x = self.const.unsqueeze(0).expand(B, *self.const.shape)
        for stage, res in zip(self.stages, self.cfg.resolutions):
            stage_noise = None
            if self.cfg.noise and noise:
                stage_noise = self._noise((res,), B, generator, w.dtype)
            x = stage(x, w, stage_noise)
        return self.to_out(x)


class StyleNodeDecoder(_StyleSynthesis):
    spatial_dims = 1

    def forward(self, z, generator=None, noise=True):
        out = self.synthesize(self.mapping(z), generator, noise)
        return torch.sigmoid(out.transpose(1, 2))


class StyleEdgeDecoder(_StyleSynthesis):
    spatial_dims = 2

    def forward(self, z, generator=None, noise=True):
        out = self.synthesize(self.mapping(z), generator, noise).permute(0, 2, 3, 1)
        return torch.sigmoid(symmetrize(out))


class MLPNodeDecoder(nn.Module):
    def __init__(self, latent_dim, n_max, out_channels):
        super().__init__()
        self.shape = (n_max, out_channels)
        self.net = nn.Sequential(
            nn.Linear(latent_dim, latent_dim), nn.PReLU(), nn.LayerNorm(latent_dim),
            nn.Linear(latent_dim, n_max * out_channels), nn.PReLU(),
            nn.LayerNorm(n_max * out_channels))

    def forward(self, z, generator=None, noise=True):
        return torch.sigmoid(self.net(z).reshape(z.shape[0], *self.shape))


class MLPEdgeDecoder(nn.Module):
    def __init__(self, latent_dim, n_max, out_channels):
        super().__init__()
        self.shape = (n_max, n_max, out_channels)
        width = n_max * n_max * out_channels
        self.net = nn.Sequential(
            nn.Linear(latent_dim, latent_dim), nn.PReLU(), nn.LayerNorm(latent_dim),
            nn.Linear(latent_dim, width), nn.PReLU(), nn.LayerNorm(width))

    def forward(self, z, generator=None, noise=True):
        return torch.sigmoid(symmetrize(self.net(z).reshape(z.shape[0], *self.shape)))


class GraphDecoder(nn.Module):
    """Node and edge sub-decoders, each with its own latent input."""

    def __init__(self, latent_dim, n_max, node_channels, edge_channels, style=True,
                 node_width=128, edge_width=64, noise=True, start_resolution=8):
        super().__init__()
        self.style = style
        if style:
            self.node = StyleNodeDecoder(StyleDecoderConfig(
                latent_dim, node_channels, n_max, start_resolution, width=node_width,
                min_width=16, noise=noise))
            self.edge = StyleEdgeDecoder(StyleDecoderConfig(
                latent_dim, edge_channels, n_max, start_resolution, width=edge_width,
                min_width=8, noise=noise))
        else:
            self.node = MLPNodeDecoder(latent_dim, n_max, node_channels)
            self.edge = MLPEdgeDecoder(latent_dim, n_max, edge_channels)

    def forward(self, z_node, z_edge, generator=None, noise=True) -> DecodedGraph:
        """``noise=False`` skips per-position noise, making the output a pure function of the codes."""
        return DecodedGraph(self.node(z_node, generator, noise), self.edge(z_edge, generator, noise))


def _polygon_from_row(values: np.ndarray) -> list:
    pts = np.clip(values.reshape(-1, 2), 0.0, 1.0)
    V = len(pts)
    for period in range(1, V + 1):
        if all((pts[i] == pts[i % period]).all() for i in range(V)):
            break
    return [(float(x), float(y)) for x, y in pts[:period]]


def discretize(node_probs, edge_probs, cfg: FeatureConfig, graph_id: str = "",
               min_nodes: int = 0) -> AAMG:
    """Threshold dense decoder output for one graph into an :class:`AAMG`.

    A row is a node when its class argmax is not the null channel. Edge type
    ``t`` between two kept nodes exists when channel ``t`` is at least 0.5 and
    the no-edge channel is below 0.5. With ``min_nodes=1`` the row least
    likely to be null is kept even if every row argmaxes to null.
    """
    X = np.asarray(node_probs, dtype=np.float64)
    A = np.asarray(edge_probs, dtype=np.float64)
    cls_block = X[:, :cfg.n_class_channels]
    cls = np.argmax(cls_block, axis=1)
    keep = np.flatnonzero(cls != cfg.null_channel)
    if len(keep) < min_nodes:
        order = np.argsort(cls_block[:, cfg.null_channel] - cls_block[:, :cfg.null_channel].max(1),
                           kind="stable")
        keep = np.sort(order[:min_nodes])
    node_class = [int(np.argmax(cls_block[i, :cfg.null_channel])) for i in keep]

    area = np.clip(X[keep, cfg.area_channel], 0.0, 1.0)
    interior = np.array([c != cfg.schema.outdoor_index for c in node_class], dtype=bool)
    total = area[interior].sum() if len(keep) else 0.0
    if total > 1.0 + AREA_EPS:
        area = np.where(interior, area / total, area)
        area = np.clip(area, 0.0, 1.0)
    center = np.clip(X[keep][:, cfg.center_slice], 0.0, 1.0)
    poly = None
    if cfg.use_poly:
        poly = [_polygon_from_row(X[i, cfg.poly_slice]) for i in keep]

    edges = []
    no_edge = cfg.no_edge_channel
    for a, u in enumerate(keep):
        for b in range(a + 1, len(keep)):
            v = keep[b]
            if A[u, v, no_edge] >= 0.5:
                continue
            for t in range(no_edge):
                if A[u, v, t] >= 0.5:
                    edges.append((a, b, t))
    return AAMG.build(node_class, area.tolist(), center.tolist(), edges, poly,
                      graph_id=graph_id, schema=cfg.schema.variant)
