"""Training loop, checkpoints, sampling and latent interpolation."""
from __future__ import annotations

import hashlib
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from .config import ModelConfig
from .features import FeatureConfig, graph_arrays, stack_arrays
from .graph import ORDERING_KINDS, AAMG, apply_permutation, canonical_order, check_graphs, validate
from .model import LayoutVGAE, TensorBatch
from .objective import (LossBreakdown, kl_loss, ordering_elbo, recon_edge_loss, recon_node_loss,
                        total_loss, vq_loss)

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 1
MIN_EVAL_GRAPHS = 6


def holdout_split(graphs: Sequence[AAMG], mod: int):
    """Indices of the train and held-out parts, decided by a hash of each graph id.

    A graph is held out when ``sha256(id) % mod == 0``. ``mod <= 0`` disables
    the split. If nothing would remain for training, everything is used for both.
    """
    idx = list(range(len(graphs)))
    if mod <= 0:
        return idx, []
    held = [i for i in idx if int(hashlib.sha256(graphs[i].graph_id.encode()).hexdigest(), 16) % mod == 0]
    train = [i for i in idx if i not in set(held)]
    if not train:
        return idx, held
    return train, held


def config_fingerprint(cfg: ModelConfig) -> str:
    return hashlib.sha256(cfg.to_text().encode()).hexdigest()[:16]


def model_dtype(model) -> torch.dtype:
    return next(model.parameters()).dtype


class OrderedArrayCache:
    """Unpadded feature arrays per (graph, ordering), built on first use."""

    def __init__(self, graphs: Sequence[AAMG], cfg: FeatureConfig):
        self.graphs = list(graphs)
        self.cfg = cfg
        self._store = {}

    def get(self, i: int, kind: str):
        key = (i, kind)
        if key not in self._store:
            g = apply_permutation(self.graphs[i], canonical_order(self.graphs[i], kind))
            self._store[key] = graph_arrays(g, self.cfg)
        return self._store[key]

    def batch(self, indices, kind: str, dtype) -> TensorBatch:
        dense = stack_arrays([self.get(i, kind) for i in indices], self.cfg)
        return TensorBatch.from_dense(dense, dtype)


def reconstruction_losses(model: LayoutVGAE, batch: TensorBatch, generator=None, sample=True):
    """Per-graph node and edge BCE for one ordering, plus the latent output."""
    dec, lat = model(batch, generator, sample)
    d_rec = model.features.recon_node_dim
    l_node = recon_node_loss(dec.X, batch.X[..., :d_rec])
    l_edge = recon_edge_loss(dec.A_e, batch.A_e)
    return l_node, l_edge, lat


def batch_objective(model: LayoutVGAE, cache: OrderedArrayCache, indices, kinds,
                    generator=None, sample=True) -> LossBreakdown:
    """Loss for one mini-batch over the given ordering kinds.

    Every ordering runs through the same module, so weights are shared across
    the passes. Reconstruction terms are combined per graph by the ordering
    bound; KL and VQ terms are averaged over orderings; everything is then
    averaged over the batch.
    """
    cfg = model.cfg
    dtype = model_dtype(model)
    rec, nodes, edges, kls, vqs = [], [], [], [], []
    for kind in kinds:
        batch = cache.batch(indices, kind, dtype)
        l_node, l_edge, lat = reconstruction_losses(model, batch, generator, sample)
        rec.append(l_node + l_edge)
        nodes.append(l_node)
        edges.append(l_edge)
        kls.append(kl_loss(lat.codes))
        if lat.vq_pairs:
            vqs.append(vq_loss(lat.vq_pairs, cfg.commitment_weight))
    per_ordering = torch.stack(rec, dim=-1)                       # (B, K)
    l_rec = ordering_elbo(per_ordering, hard_min=cfg.elbo_reduction == "min",
                          mean=cfg.elbo_reduction == "logmeanexp").mean()
    parts = {
        "l_rec": l_rec,
        "l_node": torch.stack(nodes).mean(),
        "l_edge": torch.stack(edges).mean(),
        "l_kl": torch.stack(kls).mean(),
        "per_ordering": per_ordering.mean(0).tolist(),
    }
    if vqs:
        parts["l_vq"] = torch.stack(vqs).mean()
    return total_loss(cfg.mode, parts, cfg.beta, cfg.vq_weight)


@dataclass
class EpochResult:
    epoch: int
    mean_loss: float
    steps: int


class Trainer:
    """Owns the model, optimizer and sampling generator for one run."""

    def __init__(self, cfg: ModelConfig, graphs: Sequence[AAMG], out_dir=None,
                 dtype=torch.float32):
        self.cfg = cfg
        self.graphs = check_graphs(list(graphs), cfg.schema, cfg.n_max)
        torch.manual_seed(cfg.seed)
        self.model = LayoutVGAE(cfg).to(dtype)
        self.optimizer = torch.optim.Adam(self.model.parameters(), lr=cfg.lr)
        self.generator = torch.Generator().manual_seed(cfg.seed)
        self.cache = OrderedArrayCache(self.graphs, self.model.features)
        self.train_idx, self.held_idx = holdout_split(self.graphs, cfg.holdout_mod)
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.epoch = 0
        self.step = 0
        self.history = []

    # -- one step ---------------------------------------------------------
    def orderings_for_step(self) -> list:
        if self.cfg.orderings == "all":
            return list(ORDERING_KINDS)
        rng = np.random.default_rng([self.cfg.seed, self.step, 7])
        return [ORDERING_KINDS[int(rng.integers(len(ORDERING_KINDS)))]]

    def train_step(self, indices) -> LossBreakdown:
        self.model.train()
        self.optimizer.zero_grad()
        loss = batch_objective(self.model, self.cache, indices, self.orderings_for_step(),
                               self.generator)
        if not torch.isfinite(loss.total):
            self._dump_nan(indices, loss)
        loss.total.backward()
        torch.nn.utils.clip_grad_norm_(self.model.parameters(), self.cfg.grad_clip)
        self.optimizer.step()
        self.step += 1
        return loss

    def _dump_nan(self, indices, loss):
        ids = [self.graphs[i].graph_id for i in indices]
        info = {"epoch": self.epoch + 1, "step": self.step, "batch_ids": ids,
                "losses": {k: float(v) for k, v in loss.as_floats().items()}}
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            (self.out_dir / "nan_dump.json").write_text(json.dumps(info, indent=2) + "\n")
        raise FloatingPointError(f"non-finite loss at step {self.step}; batch ids {ids}")

    # -- epochs -----------------------------------------------------------
    def epoch_batches(self, epoch: int) -> list:
        order = np.random.default_rng([self.cfg.seed, epoch]).permutation(self.train_idx)
        bs = self.cfg.batch_size
        return [order[i:i + bs].tolist() for i in range(0, len(order), bs)]

    def train_epoch(self) -> EpochResult:
        epoch = self.epoch + 1
        totals = []
        for indices in self.epoch_batches(epoch):
            loss = self.train_step(indices)
            rec = {"epoch": epoch, "step": self.step, **loss.as_floats()}
            totals.append(rec["total"])
            self.history.append(rec)
            self._log(rec)
        self.epoch = epoch
        return EpochResult(epoch, float(np.mean(totals)), len(totals))

    def fit(self, epochs: Optional[int] = None, evaluate: bool = True) -> list:
        target = self.cfg.epochs if epochs is None else epochs
        results = []
        while self.epoch < target:
            res = self.train_epoch()
            results.append(res)
            log.info("epoch %d mean loss %.4f", res.epoch, res.mean_loss)
            if self.out_dir is not None:
                self.save_checkpoint(self.out_dir / f"ckpt_epoch{res.epoch:03d}.pt")
                if evaluate:
                    self.evaluate_epoch(res.epoch)
        return results

    def _log(self, rec: dict) -> None:
        if self.out_dir is None:
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        with open(self.out_dir / "log.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec) + "\n")

    def evaluate_epoch(self, epoch: int):
        """Compare prior samples with the held-out graphs; skipped when too few are held out."""
        from .evalsuite import evaluate_graphs

        held = [self.graphs[i] for i in self.held_idx]
        if len(held) < MIN_EVAL_GRAPHS:
            return None
        # separate seed stream: evaluation must not disturb the training generator
        samples, _ = sample(self.model, len(held), seed=self.cfg.seed * 1000 + epoch)
        report = evaluate_graphs(held, samples, self.cfg.schema,
                                 config_fingerprint=config_fingerprint(self.cfg)).to_dict()
        report["epoch"] = epoch
        report["toggles"] = self.cfg.toggles()
        path = self.out_dir / f"eval_epoch{epoch:03d}.json"
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        return report

    # -- checkpoints ------------------------------------------------------
    def state(self) -> dict:
        return {
            "format_version": CHECKPOINT_FORMAT,
            "config": self.cfg.to_dict(),
            "model": self.model.state_dict(),
            "optimizer": self.optimizer.state_dict(),
            "epoch": self.epoch,
            "step": self.step,
            "rng": {"generator": self.generator.get_state(), "torch": torch.get_rng_state()},
            "history": list(self.history),
        }

    def save_checkpoint(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        buf = io.BytesIO()
        torch.save(_canonical(self.state()), buf)
        path.write_bytes(buf.getvalue())

    def load_state(self, ckpt: dict) -> None:
        self.model.load_state_dict(ckpt["model"])
        self.optimizer.load_state_dict(ckpt["optimizer"])
        self.epoch = int(ckpt["epoch"])
        self.step = int(ckpt["step"])
        self.generator.set_state(ckpt["rng"]["generator"])
        torch.set_rng_state(ckpt["rng"]["torch"])
        self.history = list(ckpt.get("history", []))

    @classmethod
    def resume(cls, path, graphs, out_dir=None) -> "Trainer":
        ckpt = read_checkpoint(path)
        trainer = cls(ModelConfig.from_dict(ckpt["config"]), graphs, out_dir)
        trainer.load_state(ckpt)
        if trainer.out_dir is not None:
            _truncate_log(trainer.out_dir / "log.jsonl", trainer.epoch)
        return trainer


def _canonical(obj):
    """Rebuild containers with interned strings.

    Pickle memoizes by object identity, so a string loaded from an earlier
    checkpoint and an equal literal would serialize differently; interning
    makes the bytes depend on values only.
    """
    if isinstance(obj, str):
        return sys.intern(obj)
    if isinstance(obj, dict):
        return {_canonical(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_canonical(v) for v in obj]
    if isinstance(obj, tuple):
        return tuple(_canonical(v) for v in obj)
    return obj


def _truncate_log(path: Path, epoch: int) -> None:
    """Keep only log records up to ``epoch`` so a resumed run appends cleanly."""
    if not path.exists():
        return
    keep = [line for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip() and json.loads(line)["epoch"] <= epoch]
    path.write_text("".join(line + "\n" for line in keep), encoding="utf-8")


def read_checkpoint(path) -> dict:
    ckpt = torch.load(path, map_location="cpu", weights_only=False)
    if not isinstance(ckpt, dict) or ckpt.get("format_version") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: unsupported checkpoint format")
    return ckpt


def load_model(path) -> LayoutVGAE:
    """Rebuild the model stored in a checkpoint, in eval mode."""
    ckpt = read_checkpoint(path)
    cfg = ModelConfig.from_dict(ckpt["config"])
    model = LayoutVGAE(cfg)
    dtype = next(iter(ckpt["model"].values())).dtype
    model.to(dtype).load_state_dict(ckpt["model"])
    model.eval()
    return model


# -- generation -----------------------------------------------------------
@torch.no_grad()
def sample(model: LayoutVGAE, count: int, seed: int = 0, chunk: int = 64):
    """Draw prior codes, decode and discretize; returns ``(graphs, (X, A_e))``.

    Codes come from a generator seeded with ``seed`` only, so equal seeds
    give equal samples. Every graph keeps at least one node.
    """
    if count <= 0:
        return [], None
    model.eval()
    gen = torch.Generator().manual_seed(seed)
    dtype = model_dtype(model)
    graphs, xs, es = [], [], []
    for start in range(0, count, chunk):
        k = min(chunk, count - start)
        z_node, z_edge = model.draw_prior(k, gen)
        dec = model.decode(z_node.to(dtype), z_edge.to(dtype), gen)
        ids = [f"sample-{seed}-{start + i:06d}" for i in range(k)]
        graphs += model.to_graphs(dec, ids, min_nodes=1)
        xs.append(dec.X.numpy())
        es.append(dec.A_e.numpy())
    for g in graphs:
        res = validate(g, model.cfg.schema, model.cfg.n_max)
        if not res.ok:
            raise AssertionError(f"sampler produced an invalid graph {g.graph_id}: {res.violations}")
    return graphs, (np.concatenate(xs), np.concatenate(es))


def _as_pair(z):
    if isinstance(z, (tuple, list)):
        return torch.as_tensor(z[0]), torch.as_tensor(z[1])
    z = torch.as_tensor(z)
    return z, z


@torch.no_grad()
def interpolate(model: LayoutVGAE, z_a, z_b, steps: int, id_prefix: str = "interp") -> list:
    """Decode ``(1 - t) z_a + t z_b`` at ``steps`` evenly spaced ``t`` from 0 to 1.

    ``z_a``/``z_b`` are decoder inputs: a vector, or a ``(node, edge)`` pair.
    Decoding skips style noise so each point depends on its code alone.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    model.eval()
    dtype = model_dtype(model)
    (na, ea), (nb, eb) = _as_pair(z_a), _as_pair(z_b)
    t = torch.linspace(0.0, 1.0, steps, dtype=torch.float64)[:, None]
    z_node = ((1 - t) * na.double() + t * nb.double()).to(dtype)
    z_edge = ((1 - t) * ea.double() + t * eb.double()).to(dtype)
    # one code per decode: batched kernels may round differently with batch size
    graphs = []
    for i in range(steps):
        dec = model.decode(z_node[i:i + 1], z_edge[i:i + 1], noise=False)
        graphs += model.to_graphs(dec, [f"{id_prefix}-{i:03d}"], min_nodes=1)
    return graphs


@torch.no_grad()
def prior_codes(model: LayoutVGAE, count: int, seed: int):
    gen = torch.Generator().manual_seed(seed)
    z_node, z_edge = model.draw_prior(count, gen)
    dtype = model_dtype(model)
    return z_node.to(dtype), z_edge.to(dtype)


@torch.no_grad()
def encode_means(model: LayoutVGAE, graphs: Sequence[AAMG], chunk: int = 64) -> np.ndarray:
    """Posterior mean of the graph-level code for each graph, ``(N, z_dim)``."""
    from .features import assemble_batch

    model.eval()
    dtype = model_dtype(model)
    graphs = check_graphs(list(graphs), model.cfg.schema, model.cfg.n_max)
    out = []
    for start in range(0, len(graphs), chunk):
        dense = assemble_batch(graphs[start:start + chunk], model.features)
        lat = model.encode(TensorBatch.from_dense(dense, dtype), sample=False)
        out.append(lat.codes[0].z_mu.double().numpy())
    return np.concatenate(out) if out else np.zeros((0, model.cfg.z_dim))
