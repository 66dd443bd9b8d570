"""Attributed adjacency multi-graphs: data model, validation, orderings, hop distances."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import networkx as nx
import numpy as np

N_MAX = 128
DEFAULT_HOP_CLIP = 8
AREA_EPS = 1e-6

ORDERING_KINDS = ("degree_desc", "avg_neighbor_degree", "closeness", "betweenness")

_SIX_NODES = ("outdoor", "room", "stair")
_SIX_EDGES = ("wall", "door", "window")
_TWENTYFIVE_NODES = (
    "outdoor", "room", "stair", "corridor", "elevator", "escalator", "facilities",
    "furniture", "greenery", "ladder", "lavatory", "parking", "pillar", "pool",
    "terrace", "skylight", "slope", "steps", "void",
)
_TWENTYFIVE_EDGES = ("wall", "door", "window", "cased opening", "fence", "movable partition")


@dataclass(frozen=True)
class LabelSchema:
    """Node and edge vocabularies for one of the two label sets."""

    variant: str
    node_classes: tuple
    edge_classes: tuple

    def __post_init__(self):
        if len(set(self.node_classes)) != len(self.node_classes):
            raise ValueError("duplicate node class names")
        if len(set(self.edge_classes)) != len(self.edge_classes):
            raise ValueError("duplicate edge class names")

    @classmethod
    def get(cls, variant: str) -> "LabelSchema":
        if variant == "six":
            return cls("six", _SIX_NODES, _SIX_EDGES)
        if variant == "twentyfive":
            return cls("twentyfive", _TWENTYFIVE_NODES, _TWENTYFIVE_EDGES)
        raise ValueError(f"unknown schema variant {variant!r}")

    @property
    def n_node_classes(self) -> int:
        return len(self.node_classes)

    @property
    def n_edge_classes(self) -> int:
        return len(self.edge_classes)

    @property
    def outdoor_index(self) -> int:
        return self.node_classes.index("outdoor")

    def node_index(self, name: str) -> int:
        return self.node_classes.index(name)

    def edge_index(self, name: str) -> int:
        return self.edge_classes.index(name)


@dataclass(frozen=True)
class AAMG:
    """Undirected attributed multi-graph with typed edges.

    ``edges`` holds ``(u, v, type)`` triples with ``u < v``, sorted. Several
    triples may share a node pair as long as their types differ.
    """

    n: int
    node_class: tuple
    node_area: tuple
    node_center: tuple
    edges: tuple = ()
    node_poly: Optional[tuple] = None
    graph_id: str = ""
    schema: str = "six"

    @classmethod
    def build(cls, node_class, node_area, node_center, edges=(), node_poly=None,
              graph_id="", schema="six") -> "AAMG":
        """Normalise plain lists into the immutable representation."""
        norm_edges = []
        for u, v, t in edges:
            u, v, t = int(u), int(v), int(t)
            if u > v:
                u, v = v, u
            norm_edges.append((u, v, t))
        poly = None
        if node_poly is not None:
            poly = tuple(tuple((float(x), float(y)) for x, y in p) for p in node_poly)
        return cls(
            n=len(node_class),
            node_class=tuple(int(c) for c in node_class),
            node_area=tuple(float(a) for a in node_area),
            node_center=tuple((float(x), float(y)) for x, y in node_center),
            edges=tuple(sorted(norm_edges)),
            node_poly=poly,
            graph_id=str(graph_id),
            schema=schema,
        )

    def with_id(self, graph_id: str) -> "AAMG":
        return replace(self, graph_id=graph_id)

    def multiplicity_matrix(self) -> np.ndarray:
        """``A[u, v]`` = number of typed edges between ``u`` and ``v``."""
        a = np.zeros((self.n, self.n), dtype=np.float64)
        for u, v, _ in self.edges:
            a[u, v] += 1
            a[v, u] += 1
        return a

    def simple_graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from((u, v) for u, v, _ in self.edges)
        return g

    def neighbors(self) -> list:
        adj = [set() for _ in range(self.n)]
        for u, v, _ in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return [sorted(s) for s in adj]


@dataclass
class ValidationResult:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate(graph: AAMG, schema: LabelSchema, n_max: int = N_MAX) -> ValidationResult:
    """Collect schema and structural violations; never raises."""
    out = []
    if graph.n < 1:
        out.append("empty graph")
    if graph.n > n_max:
        out.append(f"node count {graph.n} exceeds n_max {n_max}")
    if graph.schema != schema.variant:
        out.append(f"schema tag {graph.schema!r} does not match {schema.variant!r}")
    for name, seq in (("node_class", graph.node_class), ("node_area", graph.node_area),
                      ("node_center", graph.node_center)):
        if len(seq) != graph.n:
            out.append(f"{name} has length {len(seq)}, expected {graph.n}")
    for i, c in enumerate(graph.node_class):
        if not 0 <= c < schema.n_node_classes:
            out.append(f"node {i}: class index out of range ({c})")
    for i, a in enumerate(graph.node_area):
        if not (np.isfinite(a) and 0.0 <= a <= 1.0):
            out.append(f"node {i}: area out of range ({a})")
    for i, xy in enumerate(graph.node_center):
        if not all(np.isfinite(c) and 0.0 <= c <= 1.0 for c in xy):
            out.append(f"node {i}: center out of range ({xy})")
    if graph.node_poly is not None:
        if len(graph.node_poly) != graph.n:
            out.append("node_poly length mismatch")
        for i, poly in enumerate(graph.node_poly):
            if any(not (0.0 <= c <= 1.0) for xy in poly for c in xy):
                out.append(f"node {i}: polygon vertex out of range")
    seen = set()
    for u, v, t in graph.edges:
        if u == v:
            out.append(f"self-loop at node {u}")
        if not (0 <= u < graph.n and 0 <= v < graph.n):
            out.append(f"edge ({u}, {v}) references a missing node")
        if u > v:
            out.append(f"edge ({u}, {v}) not stored with u < v")
        if not 0 <= t < schema.n_edge_classes:
            out.append(f"edge ({u}, {v}): type index out of range ({t})")
        key = (min(u, v), max(u, v), t)
        if key in seen:
            out.append(f"duplicate typed edge {key}")
        seen.add(key)
    if len(graph.node_class) == graph.n:
        outdoor = schema.outdoor_index
        interior = sum(a for a, c in zip(graph.node_area, graph.node_class) if c != outdoor)
        if interior > 1.0 + AREA_EPS:
            out.append(f"interior area sum {interior} exceeds 1")
    return ValidationResult(out)


def _statistic(graph: AAMG, kind: str) -> np.ndarray:
    g = graph.simple_graph()
    if kind == "degree_desc":
        stat = dict(g.degree())
    elif kind == "avg_neighbor_degree":
        stat = nx.average_neighbor_degree(g)
    elif kind == "closeness":
        stat = nx.closeness_centrality(g)
    elif kind == "betweenness":
        stat = nx.betweenness_centrality(g)
    else:
        raise ValueError(f"unknown ordering kind {kind!r}")
    return np.array([stat[i] for i in range(graph.n)], dtype=np.float64)


@dataclass(frozen=True)
class CanonicalOrdering:
    """``permutation[i]`` is the original index of the node placed at position ``i``."""

    kind: str
    permutation: tuple

    @classmethod
    def identity(cls, n: int, kind: str = "identity") -> "CanonicalOrdering":
        return cls(kind, tuple(range(n)))


def canonical_order(graph: AAMG, kind: str) -> CanonicalOrdering:
    """Sort nodes by a structural statistic, descending, ties by original index."""
    stat = _statistic(graph, kind)
    # rounding absorbs ulp-level noise so symmetric nodes tie
    key = np.round(stat, 10)
    perm = sorted(range(graph.n), key=lambda i: (-key[i], i))
    return CanonicalOrdering(kind, tuple(perm))


def ordering_family(graph: AAMG) -> list:
    return [canonical_order(graph, kind) for kind in ORDERING_KINDS]


def hop_distances(graph: AAMG, m: int = DEFAULT_HOP_CLIP) -> np.ndarray:
    """BFS hop counts on the collapsed simple graph, clipped to ``m``."""
    if m < 1:
        raise ValueError("hop clip must be >= 1")
    n = graph.n
    dist = np.full((n, n), m, dtype=np.int64)
    nbrs = graph.neighbors()
    for s in range(n):
        dist[s, s] = 0
        seen = {s: 0}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            d = seen[u]
            if d >= m:
                continue
            for w in nbrs[u]:
                if w not in seen:
                    seen[w] = d + 1
                    dist[s, w] = d + 1
                    queue.append(w)
    return dist


def apply_permutation(graph: AAMG, ordering) -> AAMG:
    """Relabel nodes so that new node ``i`` is old node ``perm[i]``."""
    perm = ordering.permutation if isinstance(ordering, CanonicalOrdering) else tuple(ordering)
    if sorted(perm) != list(range(graph.n)):
        raise ValueError("permutation is not a bijection on the node set")
    inv = [0] * graph.n
    for new, old in enumerate(perm):
        inv[old] = new
    edges = [(inv[u], inv[v], t) for u, v, t in graph.edges]
    poly = None if graph.node_poly is None else [graph.node_poly[i] for i in perm]
    return AAMG.build(
        node_class=[graph.node_class[i] for i in perm],
        node_area=[graph.node_area[i] for i in perm],
        node_center=[graph.node_center[i] for i in perm],
        edges=edges,
        node_poly=poly,
        graph_id=graph.graph_id,
        schema=graph.schema,
    )


def degree_fingerprint(graph: AAMG) -> tuple:
    """Label-free summary of the adjacency: degree sequence and degree-pair edge multiset."""
    deg = [len(nb) for nb in graph.neighbors()]
    pairs = sorted((min(deg[u], deg[v]), max(deg[u], deg[v]), t) for u, v, t in graph.edges)
    return tuple(sorted(deg)), tuple(pairs), tuple(sorted(graph.node_class))


def check_graphs(graphs: Sequence[AAMG], schema: LabelSchema, n_max: int = N_MAX) -> list:
    """Raise ``ValueError`` on the first invalid graph; return the graphs as a list."""
    graphs = list(graphs)
    for i, g in enumerate(graphs):
        if not isinstance(g, AAMG):
            raise TypeError(f"item {i} is {type(g).__name__}, expected AAMG")
        res = validate(g, schema, n_max)
        if not res.ok:
            raise ValueError(f"graph {i} ({g.graph_id!r}) invalid: {res.violations[0]}")
    return graphs
