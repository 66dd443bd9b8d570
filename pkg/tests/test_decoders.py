import numpy as np
import pytest
import torch

from layoutvgae.decoders import (GraphDecoder, MLPEdgeDecoder, MLPNodeDecoder, StyleDecoderConfig,
                                 StyleEdgeDecoder, StyleNodeDecoder, SynthesisStage, discretize)
from layoutvgae.features import FeatureConfig
from layoutvgae.graph import LabelSchema, validate

SIX = LabelSchema.get("six")


def test_style_config_stages():
    cfg = StyleDecoderConfig(16, 4, n_max=128, start_resolution=8, width=128, min_width=16)
    assert cfg.resolutions == [8, 16, 32, 64, 128]
    assert cfg.channels == [128, 64, 32, 16, 16]
    with pytest.raises(ValueError):
        StyleDecoderConfig(16, 4, n_max=96)
    with pytest.raises(ValueError):
        StyleDecoderConfig(16, 4, mapping_depth=4)


@pytest.mark.parametrize("style", [True, False])
def test_decoder_shapes_and_ranges(style):
    dec = GraphDecoder(12, 16, 7, 4, style=style, node_width=16, edge_width=8)
    out = dec(torch.randn(3, 12), torch.randn(3, 12), torch.Generator().manual_seed(0))
    assert out.X.shape == (3, 16, 7) and out.A_e.shape == (3, 16, 16, 4)
    assert torch.all((out.X > 0) & (out.X < 1))
    assert torch.allclose(out.A_e, out.A_e.transpose(1, 2))


def test_mapping_network_depth():
    dec = StyleNodeDecoder(StyleDecoderConfig(8, 3, n_max=16))
    assert sum(isinstance(m, torch.nn.Linear) for m in dec.mapping.net) == 8


def test_noise_switch_and_seeded_noise():
    torch.manual_seed(0)
    dec = StyleEdgeDecoder(StyleDecoderConfig(8, 3, n_max=16, width=8, min_width=4))
    for st in dec.stages:
        torch.nn.init.constant_(st.noise_strength, 0.5)
    z = torch.randn(2, 8)
    a = dec(z, torch.Generator().manual_seed(1))
    b = dec(z, torch.Generator().manual_seed(1))
    c = dec(z, torch.Generator().manual_seed(2))
    assert torch.equal(a, b) and not torch.equal(a, c)
    assert torch.equal(dec(z, noise=False), dec(z, torch.Generator().manual_seed(9), noise=False))


def test_noise_strength_starts_at_zero():
    dec = StyleNodeDecoder(StyleDecoderConfig(8, 3, n_max=16))
    z = torch.randn(2, 8)
    assert torch.equal(dec(z, torch.Generator().manual_seed(1)), dec(z, noise=False))


def test_synthesis_stage_gradient():
    torch.manual_seed(0)
    stage = SynthesisStage(6, 4, 3, spatial_dims=2, upsample=True).double()
    with torch.no_grad():
        stage.noise_strength.fill_(0.3)
    x = torch.randn(2, 4, 4, 4, dtype=torch.float64, requires_grad=True)
    w = torch.randn(2, 6, dtype=torch.float64, requires_grad=True)
    noise = torch.randn(2, 1, 8, 8, dtype=torch.float64)
    assert torch.autograd.gradcheck(lambda a, b: stage(a, b, noise), (x, w), eps=1e-6, atol=1e-6, rtol=1e-3)


def test_mlp_decoders():
    n = MLPNodeDecoder(5, 4, 3)
    e = MLPEdgeDecoder(5, 4, 2)
    z = torch.randn(2, 5)
    assert n(z).shape == (2, 4, 3)
    out = e(z)
    assert out.shape == (2, 4, 4, 2) and torch.allclose(out, out.transpose(1, 2))


def _dense(cfg, rows, edges):
    X = np.zeros((len(rows), cfg.recon_node_dim))
    for i, (cls, area, cx, cy) in enumerate(rows):
        X[i, cls] = 0.9
        X[i, cfg.area_channel] = area
        X[i, cfg.center_slice] = (cx, cy)
    A = np.zeros((len(rows), len(rows), cfg.edge_dim))
    A[..., cfg.no_edge_channel] = 0.9
    for u, v, t in edges:
        A[u, v, t] = A[v, u, t] = 0.8
        A[u, v, cfg.no_edge_channel] = A[v, u, cfg.no_edge_channel] = 0.1
    return X, A


def test_discretize_rules():
    cfg = FeatureConfig(SIX, n_max=4)
    X, A = _dense(cfg, [(0, 0.0, .5, .5), (1, .7, .2, .2), (3, 0, 0, 0), (1, .6, .8, .8)],
                  [(0, 1, 0), (1, 3, 1), (1, 2, 0)])
    g = discretize(X, A, cfg)
    assert g.n == 3 and g.node_class == (0, 1, 1)
    # pair (1, 2) referenced a null row and is dropped
    assert g.edges == ((0, 1, 0), (1, 2, 1))
    # interior areas 0.7 + 0.6 exceed 1 and are renormalized
    assert sum(g.node_area[1:]) == pytest.approx(1.0)
    assert validate(g, SIX).ok


def test_discretize_min_nodes():
    cfg = FeatureConfig(SIX, n_max=3)
    X, A = _dense(cfg, [(3, 0, 0, 0)] * 3, [])
    X[1, 1] = 0.5
    assert discretize(X, A, cfg).n == 0
    g = discretize(X, A, cfg, min_nodes=1)
    assert g.n == 1 and g.node_class == (1,)


def test_discretize_polygon_period():
    cfg = FeatureConfig(SIX, use_poly=True, n_max=1)
    X = np.zeros((1, cfg.recon_node_dim))
    X[0, 1] = 1
    tri = [(0.1, 0.1), (0.9, 0.1), (0.5, 0.8)]
    X[0, cfg.poly_slice] = np.array([tri[i % 3] for i in range(8)]).reshape(-1)
    A = np.ones((1, 1, cfg.edge_dim))
    g = discretize(X, A, cfg)
    assert g.node_poly[0] == tuple(tri)
    ring = [(0.1 * i, 0.05 * i) for i in range(8)]
    X[0, cfg.poly_slice] = np.array(ring).reshape(-1)
    assert len(discretize(X, A, cfg).node_poly[0]) == 8
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    X[0, cfg.poly_slice] = np.array(sq * 2, float).reshape(-1)
    assert discretize(X, A, cfg).node_poly[0] == tuple((float(a), float(b)) for a, b in sq)
