import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from layoutvgae.evalsuite import (EmbeddingConfig, EvalReport, RandomGIN, build_tables, compare_embeddings,
                                  density_coverage, embed_set, evaluate_graphs, f1, frechet_distance, mmd,
                                  one_way_anova, precision_recall, two_group_ttest)
from layoutvgae.graph import LabelSchema, apply_permutation
from layoutvgae.synthetic import GeneratorConfig, generate_corpus

from conftest import bf_prdc, random_graph

SIX = LabelSchema.get("six")


# -- embedding ----------------------------------------------------------------
def test_embedding_dim_and_determinism(rng):
    graphs = [random_graph(rng, 7) for _ in range(4)]
    a = embed_set(graphs, SIX)
    assert a.shape == (4, 64)
    assert np.array_equal(a, embed_set(graphs, SIX))
    assert not np.allclose(a, embed_set(graphs, SIX, EmbeddingConfig(seed=7)))


@given(st.integers(0, 10_000))
def test_embedding_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, int(rng.integers(1, 12)))
    gin = RandomGIN(SIX)
    h = apply_permutation(g, rng.permutation(g.n))
    assert np.allclose(gin.embed(g), gin.embed(h), rtol=1e-10, atol=1e-9)


def test_embedding_ignores_polygons(rng):
    g = random_graph(rng, 5, with_poly=True)
    bare = g.__class__.build(g.node_class, g.node_area, g.node_center, g.edges)
    gin = RandomGIN(SIX)
    assert np.array_equal(gin.embed(bare), gin.embed(g))


# -- Frechet distance -----------------------------------------------------------
def test_fd_planted_gaussians():
    rng = np.random.default_rng(0)
    mu = np.full(8, 0.5)
    a = rng.normal(size=(10_000, 8))
    b = rng.normal(size=(10_000, 8)) + mu
    assert frechet_distance(a, b) == pytest.approx(float(mu @ mu), rel=0.05)


def test_fd_identity_and_symmetry(rng):
    a = rng.normal(size=(50, 6)) * 3
    b = rng.normal(size=(40, 6))
    assert abs(frechet_distance(a, a)) <= 1e-6
    assert frechet_distance(a, b) == pytest.approx(frechet_distance(b, a), rel=1e-7)
    assert frechet_distance(a, b) >= 0


def test_fd_errors():
    with pytest.raises(ValueError):
        frechet_distance(np.zeros((1, 3)), np.zeros((4, 3)))
    bad = np.ones((4, 3))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        frechet_distance(bad, np.ones((4, 3)))


# -- P/R/D/C ----------------------------------------------------------------------
@given(st.integers(0, 10_000), st.integers(6, 32), st.integers(6, 32), st.integers(1, 5))
def test_prdc_match_bruteforce(seed, m, n, k):
    rng = np.random.default_rng(seed)
    real = rng.normal(size=(m, 3))
    gen = rng.normal(size=(n, 3)) + rng.normal() * 0.5
    p, r = precision_recall(real, gen, k)
    d, c = density_coverage(real, gen, k)
    assert (p, r, d, c) == bf_prdc(real, gen, k)


def test_prdc_planted_grid():
    # integer coordinates make every distance exact, including boundary ties
    real = np.array([[i, j] for i in range(4) for j in range(3)], dtype=float)
    gen = np.array([[0, 0], [3, 2], [1.5, 1], [10, 10], [0, 5], [2, 2], [3, 0], [6, 0], [1, 1], [2, -2]], float)
    assert precision_recall(real, gen, 2) + density_coverage(real, gen, 2) == bf_prdc(real, gen, 2)


def test_prdc_identical_and_separated(rng):
    a = rng.normal(size=(20, 4))
    assert precision_recall(a, a, 5) == (1.0, 1.0)
    assert density_coverage(a, a, 5)[1] == 1.0
    far = a + 1e6
    assert precision_recall(a, far, 5) == (0.0, 0.0)
    assert density_coverage(a, far, 5) == (0.0, 0.0)
    with pytest.raises(ValueError):
        precision_recall(a[:5], a, 5)


# -- MMD ---------------------------------------------------------------------------
def test_mmd_identity(rng):
    a = rng.normal(size=(30, 5)) * 10
    scale = float(np.abs(a).max() ** 2)
    assert abs(mmd(a, a, "linear")) <= 1e-6 * scale
    assert abs(mmd(a, a, "rbf")) <= 1e-6


def test_linear_mmd_closed_form(rng):
    x = rng.normal(size=(40, 4))
    y = rng.normal(size=(40, 4)) + 1.0
    diff = x.mean(0) - y.mean(0)
    d = x - y
    bias = np.trace(np.cov(d, rowvar=False)) / len(x)
    assert mmd(x, y, "linear") == pytest.approx(diff @ diff - bias, rel=1e-10)
    y2 = y[:25]
    diff2 = x.mean(0) - y2.mean(0)
    bias2 = np.trace(np.cov(x, rowvar=False)) / 40 + np.trace(np.cov(y2, rowvar=False)) / 25
    assert mmd(x, y2, "linear") == pytest.approx(diff2 @ diff2 - bias2, rel=1e-10)


def test_rbf_two_point_clusters():
    x = np.zeros((10, 3))
    y = np.zeros((10, 3))
    y[:, 0] = 4.0
    # median pooled distance is the cluster gap, so the cross kernel is exp(-1/2)
    assert mmd(x, y, "rbf") == pytest.approx(2 * (1 - math.exp(-0.5)), rel=1e-12)


@given(st.integers(0, 10_000))
def test_mmd_symmetric(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(12, 3)), rng.normal(size=(9, 3))
    for kern in ("linear", "rbf"):
        assert mmd(x, y, kern) == pytest.approx(mmd(y, x, kern), rel=1e-9, abs=1e-12)
    with pytest.raises(ValueError):
        mmd(x, y, "poly")


def test_f1():
    assert f1(1, 1) == 1 and f1(1, 0) == 0 and f1(0, 0) == 0
    assert f1(0.5, 0.25) == pytest.approx(1 / 3)


def test_report_fields_and_ranges():
    real = generate_corpus(GeneratorConfig(seed=1, count=20))
    gen = generate_corpus(GeneratorConfig(seed=2, count=20))
    rep = evaluate_graphs(real, gen, SIX, config_fingerprint="abc")
    d = rep.to_dict()
    assert set(EvalReport.METRICS) <= set(d)
    assert d["n_real"] == d["n_gen"] == 20 and d["embedding_seed"] == 42 and d["config_fingerprint"] == "abc"
    for key in ("precision", "recall", "coverage"):
        assert 0 <= d[key] <= 1
    assert d["density"] >= 0
    same = compare_embeddings(embed_set(real, SIX), embed_set(real, SIX))
    assert same.precision == same.recall == same.coverage == 1.0
    assert abs(same.mmd_linear) <= 1e-6 * float(np.abs(embed_set(real, SIX)).max() ** 2)


# -- statistics -------------------------------------------------------------------
def test_welch_textbook():
    t, p = two_group_ttest([1, 2, 3], [4, 5, 6])
    # means 2 and 5, unit variances, n = 3: t = -3 / sqrt(2/3), Welch df = 4
    assert t == pytest.approx(-3 / math.sqrt(2 / 3), abs=1e-9)
    x = 4 / (4 + t * t)
    # two-sided p = I_x(2, 1/2) = 1 - 1.5 sqrt(1-x) + 0.5 (1-x)^1.5
    p_hand = 1 - 1.5 * math.sqrt(1 - x) + 0.5 * (1 - x) ** 1.5
    assert p == pytest.approx(p_hand, abs=1e-9)
    t2, p2 = two_group_ttest([4, 5, 6], [1, 2, 3])
    assert t2 == -t and p2 == pytest.approx(p)


def test_welch_unequal_groups():
    a, b = [2.0, 4.0, 9.0, 1.0], [3.0, 3.5]
    ma, mb = sum(a) / 4, sum(b) / 2
    va = sum((v - ma) ** 2 for v in a) / 3
    vb = sum((v - mb) ** 2 for v in b) / 1
    t_hand = (ma - mb) / math.sqrt(va / 4 + vb / 2)
    assert two_group_ttest(a, b)[0] == pytest.approx(t_hand, abs=1e-12)


def test_welch_edge_cases():
    t, p = two_group_ttest([1, 2, 3], [1, 2, 3])
    assert t == 0 and p == 1
    with pytest.raises(ValueError, match="zero variance"):
        two_group_ttest([2, 2], [3, 3])
    with pytest.raises(ValueError):
        two_group_ttest([1], [1, 2])


def test_anova_textbook():
    F, p = one_way_anova([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    # SSB = 54 on 2 df, SSW = 6 on 6 df; F(2, 6) upper tail is (1 + 2F/6)^-3
    assert F == pytest.approx(27.0, abs=1e-9)
    assert p == pytest.approx((1 + 2 * 27 / 6) ** -3, abs=1e-9)
    F2, _ = one_way_anova([[7, 8, 9], [1, 2, 3], [4, 5, 6]])
    assert F2 == pytest.approx(F, abs=1e-12)
    with pytest.raises(ValueError, match="F undefined"):
        one_way_anova([[1, 1], [1, 1], [1, 1]])
    with pytest.raises(ValueError):
        one_way_anova([[1, 2]])


def test_build_tables_shape():
    rng = np.random.default_rng(0)
    reports = []
    for style in (True, False):
        for vq in (True, False):
            for rep in range(3):
                r = {m: float(rng.random()) for m in EvalReport.METRICS}
                r["toggles"] = {"style": style, "vq": vq}
                reports.append(r)
    tables = build_tables(reports, ["style", "vq"])
    style = tables["toggles"]["style"]
    assert set(style["groups"]) == {"True", "False"} and style["groups"]["True"]["n"] == 6
    assert set(style["tests"]) == set(EvalReport.METRICS)
    assert all(v["t"] is not None and 0 <= v["p"] <= 1 for v in style["tests"].values())
    assert len(tables["anova"]["groups"]) == 4 and tables["anova"]["tests"]["fd"]["F"] is not None
    with pytest.raises(ValueError):
        build_tables(reports, ["ned"])


def test_fd_identity_on_graph_embeddings():
    E = embed_set(generate_corpus(GeneratorConfig(seed=1, count=60)), SIX)
    assert abs(frechet_distance(E, E)) <= 1e-6


def test_fd_agrees_with_matrix_sqrt():
    from scipy import linalg

    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(300, 4)), rng.normal(size=(200, 4)) * 2 + 1
    sa, sb = np.cov(a, rowvar=False) + 1e-6 * np.eye(4), np.cov(b, rowvar=False) + 1e-6 * np.eye(4)
    ref = ((a.mean(0) - b.mean(0)) ** 2).sum() + np.trace(sa + sb - 2 * np.real(linalg.sqrtm(sa @ sb)))
    assert frechet_distance(a, b) == pytest.approx(ref, rel=1e-9)
