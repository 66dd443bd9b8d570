"""scikit-learn style wrapper around training, encoding and generation."""
from __future__ import annotations

from dataclasses import replace

import numpy as np
import torch
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .config import ModelConfig
from .graph import check_graphs
from .trainer import Trainer, encode_means, interpolate, sample


class LayoutGraphVAE(TransformerMixin, BaseEstimator):
    """Variational graph auto-encoder for layout graphs.

    ``fit`` trains on a list of :class:`~layoutvgae.graph.AAMG`; ``transform``
    maps graphs to posterior means of their graph code; ``inverse_transform``
    decodes codes back to graphs; ``sample`` draws new graphs from the prior.
    """

    def __init__(self, style=True, svd=False, ned=False, vq=False, poly=False, labels=6,
                 z_dim=512, layers=4, d_model=128, heads=8, edge_channels=32, n_max=128,
                 epochs=10, batch_size=16, lr=1e-4, beta=1.0, orderings="all", random_state=0):
        self.style = style
        self.svd = svd
        self.ned = ned
        self.vq = vq
        self.poly = poly
        self.labels = labels
        self.z_dim = z_dim
        self.layers = layers
        self.d_model = d_model
        self.heads = heads
        self.edge_channels = edge_channels
        self.n_max = n_max
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.beta = beta
        self.orderings = orderings
        self.random_state = random_state

    def _model_config(self) -> ModelConfig:
        params = self.get_params()
        seed = params.pop("random_state")
        return replace(ModelConfig(), seed=int(seed or 0), holdout_mod=0, **params)

    def fit(self, graphs, y=None):
        cfg = self._model_config()
        trainer = Trainer(cfg, check_graphs(graphs, cfg.schema, cfg.n_max))
        self.history_ = [r.mean_loss for r in trainer.fit(evaluate=False)]
        self.model_ = trainer.model.eval()
        self.config_ = cfg
        return self

    def transform(self, graphs) -> np.ndarray:
        check_is_fitted(self, "model_")
        return encode_means(self.model_, graphs)

    def inverse_transform(self, Z, Z_edge=None) -> list:
        """Decode codes without style noise; ``Z_edge`` defaults to ``Z``."""
        check_is_fitted(self, "model_")
        z = torch.as_tensor(np.atleast_2d(Z), dtype=torch.float32)
        ze = z if Z_edge is None else torch.as_tensor(np.atleast_2d(Z_edge), dtype=torch.float32)
        with torch.no_grad():
            dec = self.model_.decode(z, ze, noise=False)
        return self.model_.to_graphs(dec, min_nodes=1)

    def sample(self, n_samples=1, random_state=0) -> list:
        check_is_fitted(self, "model_")
        return sample(self.model_, n_samples, int(random_state))[0]

    def interpolate(self, z_a, z_b, steps=8) -> list:
        check_is_fitted(self, "model_")
        return interpolate(self.model_, z_a, z_b, steps)
