import math

import numpy as np
import pytest
import torch
from hypothesis import HealthCheck, settings

from layoutvgae.graph import AAMG, LabelSchema

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_graph(rng: np.random.Generator, n: int, schema: str = "six", p: float = 0.3,
                 with_poly: bool = False) -> AAMG:
    """Random valid graph: outdoor node 0, random interior classes and typed edges."""
    S = LabelSchema.get(schema)
    classes = [S.outdoor_index] + [int(c) for c in rng.integers(1, S.n_node_classes, size=n - 1)]
    raw = rng.random(n)
    raw[0] = 0.0
    area = raw / max(raw.sum(), 1.0)
    center = rng.random((n, 2))
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            for t in range(S.n_edge_classes):
                if rng.random() < p / S.n_edge_classes:
                    edges.append((u, v, t))
    poly = None
    if with_poly:
        poly = []
        for _ in range(n):
            x0, y0 = rng.random(2) * 0.5
            poly.append([(x0, y0), (x0 + 0.25, y0), (x0 + 0.25, y0 + 0.5), (x0, y0 + 0.5)])
    return AAMG.build(classes, area.tolist(), center.tolist(), edges, poly, graph_id="r", schema=schema)


# -- brute-force oracles ----------------------------------------------------
def _dist(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def _radius(points, i, k):
    return sorted(_dist(points[i], q) for q in points)[k]


def bf_prdc(real, gen, k):
    real, gen = [list(map(float, r)) for r in real], [list(map(float, g)) for g in gen]
    rr = [_radius(real, i, k) for i in range(len(real))]
    rg = [_radius(gen, j, k) for j in range(len(gen))]
    p = sum(any(_dist(g, r) <= rr[i] for i, r in enumerate(real)) for g in gen) / len(gen)
    r = sum(any(_dist(x, g) <= rg[j] for j, g in enumerate(gen)) for x in real) / len(real)
    d = sum(sum(_dist(g, x) <= rr[i] for i, x in enumerate(real)) for g in gen) / (k * len(gen))
    c = sum(any(_dist(g, x) <= rr[i] for g in gen) for i, x in enumerate(real)) / len(real)
    return p, r, d, c


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _torch_seed():
    torch.manual_seed(0)
    yield
