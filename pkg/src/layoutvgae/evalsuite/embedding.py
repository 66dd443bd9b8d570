"""Fixed random GIN used as a model-agnostic graph embedder for evaluation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graph import AAMG, LabelSchema


@dataclass(frozen=True)
class EmbeddingConfig:
    layers: int = 3
    hidden: int = 64
    seed: int = 42


class RandomGIN:
    """Untrained GIN with edge-type messages and sum readout.

    Node inputs are one-hot class, area and center; SVD and polygon channels
    are deliberately left out so embeddings are comparable across model
    configurations. Weights are drawn once from ``cfg.seed``.
    """

    def __init__(self, schema: LabelSchema, cfg: EmbeddingConfig = EmbeddingConfig()):
        self.schema = schema
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        d_in = schema.n_node_classes + 3
        h = cfg.hidden

        def glorot(fan_in, fan_out):
            return rng.normal(0.0, np.sqrt(2.0 / (fan_in + fan_out)), size=(fan_in, fan_out))

        self.w_in = glorot(d_in, h)
        self.w_edge = [glorot(schema.n_edge_classes, h) for _ in range(cfg.layers)]
        self.w1 = [glorot(h, h) for _ in range(cfg.layers)]
        self.w2 = [glorot(h, h) for _ in range(cfg.layers)]

    def node_inputs(self, g: AAMG) -> np.ndarray:
        x = np.zeros((g.n, self.schema.n_node_classes + 3))
        x[np.arange(g.n), list(g.node_class)] = 1.0
        x[:, -3] = g.node_area
        if g.n:
            x[:, -2:] = np.asarray(g.node_center)
        return x

    def embed(self, g: AAMG) -> np.ndarray:
        n, c = g.n, self.schema.n_edge_classes
        types = np.zeros((n, n, c))
        for u, v, t in g.edges:
            types[u, v, t] = types[v, u, t] = 1.0
        adj = (types.sum(-1) > 0).astype(np.float64)
        h = self.node_inputs(g) @ self.w_in
        for layer in range(self.cfg.layers):
            edge_term = types @ self.w_edge[layer]                     # (n, n, h)
            msg = np.maximum(h[None, :, :] + edge_term, 0.0) * adj[..., None]
            agg = h + msg.sum(axis=1)
            h = np.maximum(agg @ self.w1[layer], 0.0) @ self.w2[layer]
        return h.sum(axis=0)


def embed_set(graphs, schema: LabelSchema, cfg: EmbeddingConfig = EmbeddingConfig()) -> np.ndarray:
    gin = RandomGIN(schema, cfg)
    return np.stack([gin.embed(g) for g in graphs]) if graphs else np.zeros((0, cfg.hidden))
