import numpy as np
import pytest
import torch

from layoutvgae.latent import (Codebook, DisentanglementModule, GINPool, LatentConfig, nearest_prototype,
                               quantize, reparameterize)


def module(mode, n_max=8, dim=6, edge=4, M=5):
    torch.manual_seed(0)
    return DisentanglementModule(LatentConfig(dim, edge, n_max, M, mode, codebook_size=7)).eval()


def inputs(B=2, n=6, dim=6, edge=4, seed=0):
    g = torch.Generator().manual_seed(seed)
    x = torch.randn(B, n, dim, generator=g)
    e = torch.randn(B, n, n, edge, generator=g)
    e = 0.5 * (e + e.transpose(1, 2))
    mask = torch.ones(B, n, dtype=torch.bool)
    mask[1, 4:] = False
    return x, e, mask


def test_config_validation():
    with pytest.raises(ValueError):
        LatentConfig(4, 4, 8, mode="bogus")
    with pytest.raises(ValueError):
        LatentConfig(4, 4, 8, latent_dim=0)
    with pytest.raises(ValueError):
        LatentConfig(4, 4, 8, mode="vq", codebook_size=1)


@pytest.mark.parametrize("mode", ["vae", "vq", "ned", "ned_vq"])
def test_output_structure(mode):
    m = module(mode)
    out = m(*inputs(), sample=True)
    assert out.z_node.shape == out.z_edge.shape == (2, 5)
    assert len(out.codes) == (3 if mode.startswith("ned") else 1)
    assert len(out.vq_pairs) == {"vae": 0, "vq": 1, "ned": 0, "ned_vq": 2}[mode]
    if mode == "vq":
        assert torch.equal(out.z_node, m.codebook.weight[out.indices[0]])


def test_reparameterize():
    mu, lv = torch.zeros(3, 4), torch.zeros(3, 4)
    z, r = reparameterize(mu, lv, torch.Generator().manual_seed(0))
    assert torch.equal(z, r)
    z, r = reparameterize(mu + 1, lv, sample=False)
    assert torch.equal(z, mu + 1) and torch.equal(r, torch.zeros(3, 4))


def test_reparameterization_gradient():
    mu = torch.randn(2, 3, dtype=torch.float64, requires_grad=True)
    lv = torch.randn(2, 3, dtype=torch.float64, requires_grad=True)

    def f(mu, lv):
        return reparameterize(mu, lv, torch.Generator().manual_seed(5))[0]

    assert torch.autograd.gradcheck(f, (mu, lv), eps=1e-6, atol=1e-8, rtol=1e-3)


def _permute(x, e, mask, perm):
    return x[:, perm], e[:, perm][:, :, perm], mask[:, perm]


@pytest.mark.parametrize("mode", ["vae", "ned"])
def test_graph_and_node_codes_invariant(mode):
    m = module(mode)
    x, e, mask = inputs()
    mask[:] = True
    perm = torch.randperm(6)
    a = m(x, e, mask, sample=False)
    b = m(*_permute(x, e, mask, perm), sample=False)
    for ca, cb in zip(a.codes, b.codes):
        if ca.role in ("graph", "node"):
            assert torch.allclose(ca.z_mu, cb.z_mu, atol=1e-5)
            assert torch.allclose(ca.z_logvar, cb.z_logvar, atol=1e-5)


def test_gin_pool_ignores_padding():
    gin = GINPool(6, 4)
    x, e, mask = inputs()
    pooled = gin(x, e, mask)
    x2 = x.clone()
    x2[1, 4:] = 99.0
    assert torch.allclose(gin(x2, e, mask)[1], pooled[1])


def test_quantize_matches_bruteforce_and_ties():
    book = torch.tensor([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 2.0]], dtype=torch.float64)
    z = torch.tensor([[0.9, 0.1], [0.5, 0.0], [0.0, 1.0]], dtype=torch.float64)
    _, idx = quantize(z, book)
    # (0.5, 0) is equidistant from rows 0, 1 and 2; (0, 1) from rows 0 and 3 -> lowest index wins
    assert idx.tolist() == [1, 0, 0]


def test_straight_through_gradient_is_identity():
    cb = Codebook(5, 3)
    z = torch.randn(4, 3, requires_grad=True)
    z_q, k, _ = cb(z)
    w = torch.randn(4, 3)
    (z_q * w).sum().backward()
    assert torch.equal(z.grad, w)
    assert cb.weight.grad is None


def test_codebook_init_range():
    cb = Codebook(64, 8)
    assert cb.weight.abs().max() <= 1 / 64


@pytest.mark.parametrize("mode", ["vq", "ned_vq", "ned", "vae"])
def test_prior_quantization(mode):
    m = module(mode)
    zn, ze = torch.randn(3, 5), torch.randn(3, 5)
    qn, qe = m.quantize_prior(zn, ze)
    if mode == "vq":
        assert torch.equal(qn, qe)
        assert torch.equal(qn, m.codebook.weight[nearest_prototype(zn, m.codebook.weight)])
    elif mode == "ned_vq":
        assert torch.equal(qe, m.codebook_edge.weight[nearest_prototype(ze, m.codebook_edge.weight)])
    else:
        assert qn is zn and qe is ze
