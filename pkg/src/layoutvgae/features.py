"""Dense node/edge feature assembly with optional SVD and polygon augmentation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .graph import AAMG, DEFAULT_HOP_CLIP, N_MAX, LabelSchema, check_graphs, hop_distances


@dataclass(frozen=True)
class FeatureConfig:
    schema: LabelSchema
    use_poly: bool = False
    poly_vertices: int = 8
    use_svd: bool = False
    svd_rank: int = 8
    n_max: int = N_MAX
    hop_clip: int = DEFAULT_HOP_CLIP

    def __post_init__(self):
        if self.poly_vertices < 3:
            raise ValueError("poly_vertices must be >= 3")
        if self.svd_rank < 1:
            raise ValueError("svd_rank must be >= 1")

    @property
    def n_class_channels(self) -> int:
        return self.schema.n_node_classes + 1

    @property
    def null_channel(self) -> int:
        return self.schema.n_node_classes

    @property
    def area_channel(self) -> int:
        return self.n_class_channels

    @property
    def center_slice(self) -> slice:
        return slice(self.area_channel + 1, self.area_channel + 3)

    @property
    def poly_slice(self) -> slice:
        start = self.area_channel + 3
        return slice(start, start + (2 * self.poly_vertices if self.use_poly else 0))

    @property
    def svd_slice(self) -> slice:
        start = self.poly_slice.stop
        return slice(start, start + (2 * self.svd_rank if self.use_svd else 0))

    @property
    def node_dim(self) -> int:
        return self.svd_slice.stop

    @property
    def recon_node_dim(self) -> int:
        """Channels the decoders reproduce; SVD channels are input-only."""
        return self.poly_slice.stop

    @property
    def edge_dim(self) -> int:
        return self.schema.n_edge_classes + 1

    @property
    def no_edge_channel(self) -> int:
        return self.schema.n_edge_classes


@dataclass
class DenseGraphBatch:
    X: np.ndarray          # (B, n_max, d)
    A_e: np.ndarray        # (B, n_max, n_max, c)
    node_mask: np.ndarray  # (B, n_max) bool
    hop: np.ndarray        # (B, n_max, n_max) int64

    def __len__(self):
        return self.X.shape[0]

    @property
    def n_nodes(self) -> np.ndarray:
        return self.node_mask.sum(axis=1)


def resample_polygon(poly: Sequence, n_vertices: int) -> np.ndarray:
    """Cycle short boundaries, uniformly subsample long ones, to exactly ``n_vertices``."""
    pts = np.asarray(poly, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("missing polygon data")
    if len(pts) <= n_vertices:
        idx = np.arange(n_vertices) % len(pts)
    else:
        idx = (np.arange(n_vertices) * len(pts)) // n_vertices
    return pts[idx]


def svd_positional_encoding(graph: AAMG, k: int) -> np.ndarray:
    """Scaled left/right singular vectors of the multiplicity adjacency, ``n x 2k``."""
    if k < 1:
        raise ValueError("svd rank must be >= 1")
    n = graph.n
    out = np.zeros((n, 2 * k), dtype=np.float64)
    if n == 0:
        return out
    u, s, vh = np.linalg.svd(graph.multiplicity_matrix())
    r = min(k, n)
    u, s, v = u[:, :r], s[:r], vh[:r, :].T
    # fix the sign of each singular pair: largest-magnitude entry of U's column is positive
    pivot = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[pivot, np.arange(r)])
    signs[signs == 0] = 1.0
    u, v = u * signs, v * signs
    root = np.sqrt(s)
    out[:, :r] = u * root
    out[:, k:k + r] = v * root
    return out


def build_node_features(graph: AAMG, cfg: FeatureConfig) -> np.ndarray:
    """Per-node feature rows for the real nodes only (no padding)."""
    x = np.zeros((graph.n, cfg.node_dim), dtype=np.float64)
    x[np.arange(graph.n), list(graph.node_class)] = 1.0
    x[:, cfg.area_channel] = graph.node_area
    if graph.n:
        x[:, cfg.center_slice] = np.asarray(graph.node_center, dtype=np.float64)
    if cfg.use_poly:
        if graph.node_poly is None:
            raise ValueError("missing polygon data")
        for i, poly in enumerate(graph.node_poly):
            x[i, cfg.poly_slice] = resample_polygon(poly, cfg.poly_vertices).reshape(-1)
    if cfg.use_svd:
        x[:, cfg.svd_slice] = svd_positional_encoding(graph, cfg.svd_rank)
    return x


def build_edge_features(graph: AAMG, cfg: FeatureConfig) -> np.ndarray:
    """Multi-hot typed edges plus a trailing no-edge channel, ``n x n x c``."""
    a = np.zeros((graph.n, graph.n, cfg.edge_dim), dtype=np.float64)
    for u, v, t in graph.edges:
        a[u, v, t] = 1.0
        a[v, u, t] = 1.0
    a[..., cfg.no_edge_channel] = (a[..., :cfg.no_edge_channel].sum(-1) == 0)
    return a


def pad_graph_arrays(x, a, hop, cfg: FeatureConfig):
    """Pad one graph's arrays to ``n_max``; padded rows are null nodes with no edges."""
    n = x.shape[0]
    if n > cfg.n_max:
        raise ValueError(f"graph with {n} nodes exceeds n_max={cfg.n_max}")
    X = np.zeros((cfg.n_max, cfg.node_dim), dtype=np.float64)
    X[:n] = x
    X[n:, cfg.null_channel] = 1.0
    A = np.zeros((cfg.n_max, cfg.n_max, cfg.edge_dim), dtype=np.float64)
    A[..., cfg.no_edge_channel] = 1.0
    A[:n, :n] = a
    H = np.full((cfg.n_max, cfg.n_max), cfg.hop_clip, dtype=np.int64)
    H[:n, :n] = hop
    mask = np.zeros(cfg.n_max, dtype=bool)
    mask[:n] = True
    return X, A, H, mask


def graph_arrays(graph: AAMG, cfg: FeatureConfig):
    """Unpadded ``(x, a, hop)`` for one graph."""
    return (build_node_features(graph, cfg), build_edge_features(graph, cfg),
            hop_distances(graph, cfg.hop_clip))


def stack_arrays(items, cfg: FeatureConfig) -> DenseGraphBatch:
    if not items:
        raise ValueError("cannot assemble an empty batch")
    padded = [pad_graph_arrays(x, a, h, cfg) for x, a, h in items]
    X, A, H, M = (np.stack(parts) for parts in zip(*padded))
    return DenseGraphBatch(X=X, A_e=A, node_mask=M, hop=H)


def assemble_batch(graphs: Sequence[AAMG], cfg: FeatureConfig) -> DenseGraphBatch:
    """Stack padded node/edge features, masks and hop matrices."""
    graphs = list(graphs)
    if not graphs:
        raise ValueError("cannot assemble an empty batch")
    return stack_arrays([graph_arrays(g, cfg) for g in graphs], cfg)


class FeatureAssembler(TransformerMixin, BaseEstimator):
    """Turn lists of graphs into a :class:`DenseGraphBatch`.

    Stateless apart from the configuration; ``fit`` only validates its input.
    """

    def __init__(self, schema="six", use_poly=False, poly_vertices=8, use_svd=False,
                 svd_rank=8, n_max=N_MAX, hop_clip=DEFAULT_HOP_CLIP):
        self.schema = schema
        self.use_poly = use_poly
        self.poly_vertices = poly_vertices
        self.use_svd = use_svd
        self.svd_rank = svd_rank
        self.n_max = n_max
        self.hop_clip = hop_clip

    def _config(self) -> FeatureConfig:
        return FeatureConfig(LabelSchema.get(self.schema), self.use_poly, self.poly_vertices,
                             self.use_svd, self.svd_rank, self.n_max, self.hop_clip)

    def fit(self, graphs, y=None):
        cfg = self._config()
        check_graphs(graphs, cfg.schema, cfg.n_max)
        self.config_ = cfg
        self.n_features_out_ = cfg.node_dim
        return self

    def transform(self, graphs) -> DenseGraphBatch:
        cfg = self._config()
        return assemble_batch(check_graphs(graphs, cfg.schema, cfg.n_max), cfg)
