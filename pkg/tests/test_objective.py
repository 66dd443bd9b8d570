import math

import numpy as np
import pytest
import torch
from hypothesis import given, strategies as st

from layoutvgae.latent import LatentCode
from layoutvgae.objective import (kl_loss, kl_term, ordering_elbo, recon_edge_loss, recon_node_loss,
                                  total_loss, vq_loss)


def code(mu, lv):
    return LatentCode(z=mu, z_mu=torch.as_tensor(mu, dtype=torch.float64),
                      z_logvar=torch.as_tensor(lv, dtype=torch.float64), role="graph")


def test_kl_examples():
    assert float(kl_loss([code([[0.0] * 4], [[0.0] * 4])])) == 0.0
    assert float(kl_loss([code([[1.0]], [[0.0]])])) == pytest.approx(0.5)
    three = [code([[0.0, 0.0]], [[0.0, 0.0]]) for _ in range(3)]
    assert float(kl_loss(three)) == 0.0


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8), st.lists(st.floats(-5, 5), min_size=1, max_size=8))
def test_kl_nonnegative(mu, lv):
    k = min(len(mu), len(lv))
    assert float(kl_term(torch.tensor([mu[:k]]), torch.tensor([lv[:k]]))) >= -1e-12


def test_bce_closed_forms():
    target = torch.randint(0, 2, (2, 5, 3)).double()
    half = torch.full_like(target, 0.5)
    assert recon_node_loss(half, target).tolist() == pytest.approx([15 * math.log(2)] * 2, abs=1e-9)
    assert float(recon_node_loss(target, target).max()) < 1e-4
    mask = torch.tensor([[True] * 5, [True, True, False, False, False]])
    assert float(recon_node_loss(half, target, mask)[1]) == pytest.approx(6 * math.log(2), abs=1e-9)
    t_edge = torch.randint(0, 2, (1, 4, 4, 2)).double()
    assert float(recon_edge_loss(torch.full_like(t_edge, .5), t_edge)) == pytest.approx(32 * math.log(2), abs=1e-9)
    pm = torch.tensor([[True, True, False, False]])
    assert float(recon_edge_loss(torch.full_like(t_edge, .5), t_edge, pm)) == pytest.approx(8 * math.log(2), abs=1e-9)


def test_losses_permutation_invariant():
    pred, target = torch.rand(1, 6, 4), torch.randint(0, 2, (1, 6, 4)).float()
    p = torch.randperm(6)
    assert torch.allclose(recon_node_loss(pred, target), recon_node_loss(pred[:, p], target[:, p]))
    ep, et = torch.rand(1, 6, 6, 3), torch.randint(0, 2, (1, 6, 6, 3)).float()
    assert torch.allclose(recon_edge_loss(ep, et), recon_edge_loss(ep[:, p][:, :, p], et[:, p][:, :, p]))


def test_vq_examples_and_routing():
    z = torch.tensor([[1.0, 0.0]], requires_grad=True)
    k = torch.tensor([[0.0, 0.0]], requires_grad=True)
    assert float(vq_loss([(z, k)]).detach()) == 2.0
    assert float(vq_loss([(k.detach().clone(), k)]).detach()) == 0.0
    vq_loss([(z, k)], weight=0.0).sum().backward()      # dictionary term only
    assert z.grad is None or torch.all(z.grad == 0)
    assert torch.any(k.grad != 0)
    z.grad, k.grad = None, None
    (vq_loss([(z, k)], weight=1.0) - vq_loss([(z, k)], weight=0.0)).sum().backward()  # commitment only
    assert torch.all(k.grad == 0) and torch.any(z.grad != 0)


def test_ordering_elbo_examples():
    assert float(ordering_elbo(torch.tensor([3.0] * 4))) == pytest.approx(3.0 - math.log(4))
    assert float(ordering_elbo(torch.tensor([3.0] * 4), mean=True)) == pytest.approx(3.0)
    big = torch.tensor([0.0, 1e6, 1e6, 1e6], dtype=torch.float64)
    assert float(ordering_elbo(big)) == pytest.approx(0.0, abs=1e-12)
    assert float(ordering_elbo(big, mean=True)) == pytest.approx(math.log(4))
    assert float(ordering_elbo(torch.tensor([4.0, 1.0, 2.0, 3.0]), hard_min=True)) == 1.0


@given(st.lists(st.floats(0, 1e4), min_size=4, max_size=4))
def test_ordering_elbo_bound_and_symmetry(vals):
    x = torch.tensor(vals, dtype=torch.float64)
    out = float(ordering_elbo(x))
    assert out <= min(vals)
    assert out == pytest.approx(float(ordering_elbo(x.flip(0))), abs=1e-9)


def test_total_loss_combinations():
    parts = {"l_rec": torch.tensor(2.0), "l_kl": torch.tensor(3.0), "l_vq": torch.tensor(5.0)}
    assert float(total_loss("vae", parts).total) == 5.0
    assert float(total_loss("ned", parts).total) == 5.0
    assert float(total_loss("vq", parts).total) == 10.0
    assert float(total_loss("ned_vq", parts, beta=0.0).total) == 7.0
    with pytest.raises(ValueError, match="requires loss parts"):
        total_loss("vq", {"l_rec": 1.0, "l_kl": 1.0})
    with pytest.raises(ValueError):
        total_loss("bogus", parts)
