"""Reconstruction, KL and vector-quantization losses and their per-mode combination."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch

BCE_CLAMP = 1e-7


def _bce(pred, target):
    p = pred.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP)
    return -(target * torch.log(p) + (1.0 - target) * torch.log1p(-p))


def recon_node_loss(pred, target, node_mask=None):
    """Binary cross-entropy summed over masked rows and channels, per graph.

    ``pred``/``target`` are ``(B, n, d)``; returns a ``(B,)`` tensor.
    """
    terms = _bce(pred, target)
    if node_mask is not None:
        terms = terms * node_mask[..., None].to(terms.dtype)
    return terms.sum(dim=(1, 2))


def recon_edge_loss(pred, target, node_mask=None):
    """As :func:`recon_node_loss` over ``(B, n, n, c)`` entries whose both endpoints are masked in."""
    terms = _bce(pred, target)
    if node_mask is not None:
        pm = (node_mask[:, :, None] & node_mask[:, None, :]).to(terms.dtype)
        terms = terms * pm[..., None]
    return terms.sum(dim=(1, 2, 3))


def kl_term(mu, logvar):
    """Per-row KL to the standard normal with log-variance parameters, averaged over dims."""
    M = mu.shape[-1]
    return -(1.0 + logvar - mu.pow(2) - logvar.exp()).sum(-1) / (2 * M)


def kl_loss(codes) -> torch.Tensor:
    """Sum of :func:`kl_term` over the given latent codes; ``(B,)``."""
    return sum(kl_term(c.z_mu, c.z_logvar) for c in codes)


def vq_loss(pairs, weight: float = 1.0):
    """Dictionary plus commitment terms for ``(z, prototype)`` pairs; ``(B,)``.

    ``weight`` scales the commitment term only.
    """
    total = 0.0
    for z, k in pairs:
        dictionary = (z.detach() - k).pow(2).sum(-1)
        commitment = (z - k.detach()).pow(2).sum(-1)
        total = total + dictionary + weight * commitment
    return total


def ordering_elbo(losses, hard_min: bool = False, mean: bool = False):
    """Combine per-ordering reconstruction losses (last axis) into one value.

    The default is ``-logsumexp(-losses)``, the negative log of the summed
    likelihood over the ordering family; it never exceeds the smallest input.
    ``mean=True`` adds ``ln K`` (log-mean-exp instead of log-sum-exp) and
    ``hard_min=True`` takes the minimum. All three share gradients up to the
    min's subgradient, since ``ln K`` is a constant.
    """
    losses = torch.as_tensor(losses)
    if hard_min:
        return losses.min(dim=-1).values
    out = -torch.logsumexp(-losses, dim=-1)
    if mean:
        out = out + math.log(losses.shape[-1])
    return out


@dataclass
class LossBreakdown:
    l_node: torch.Tensor
    l_edge: torch.Tensor
    l_rec: torch.Tensor
    l_kl: torch.Tensor
    l_vq: torch.Tensor
    total: torch.Tensor
    per_ordering: list = field(default_factory=list)

    def as_floats(self) -> dict:
        return {k: float(getattr(self, k).detach()) for k in ("l_node", "l_edge", "l_rec", "l_kl", "l_vq", "total")}


REQUIRED_PARTS = {
    "vae": ("l_rec", "l_kl"),
    "vq": ("l_rec", "l_kl", "l_vq"),
    "ned": ("l_rec", "l_kl"),
    "ned_vq": ("l_rec", "l_kl", "l_vq"),
}


def total_loss(mode: str, parts: dict, beta: float = 1.0, vq_weight: float = 1.0) -> LossBreakdown:
    """Apply the loss combination for ``mode``: reconstruction + KL (+ VQ when quantizing)."""
    if mode not in REQUIRED_PARTS:
        raise ValueError(f"unknown mode {mode!r}")
    missing = [p for p in REQUIRED_PARTS[mode] if parts.get(p) is None]
    if missing:
        raise ValueError(f"mode {mode!r} requires loss parts {missing}")
    zero = torch.zeros(())
    l_rec = torch.as_tensor(parts["l_rec"])
    l_kl = torch.as_tensor(parts["l_kl"])
    l_vq = torch.as_tensor(parts["l_vq"]) if "l_vq" in REQUIRED_PARTS[mode] else zero
    total = l_rec + beta * l_kl + vq_weight * l_vq
    return LossBreakdown(
        l_node=torch.as_tensor(parts.get("l_node", zero)),
        l_edge=torch.as_tensor(parts.get("l_edge", zero)),
        l_rec=l_rec, l_kl=l_kl, l_vq=l_vq, total=total,
        per_ordering=list(parts.get("per_ordering", [])),
    )
