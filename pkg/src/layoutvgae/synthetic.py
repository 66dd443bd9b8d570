"""Procedural layout graphs and the JSON-Lines corpus format."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import AAMG, N_MAX, LabelSchema

FORMAT_HEADER = {"format": "aamg-jsonl", "version": 1}

# split coordinates live on this grid so every area is an exact binary fraction
GRID = 256
MIN_THICKNESS = 0.05

STANDARD_AREA_CLASSES = ("elevator", "stair", "lavatory")


class CorpusFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    count: int = 100
    rooms_min: int = 3
    rooms_max: int = 30
    schema: str = "six"
    door_prob: float = 0.6
    window_prob: float = 0.3
    min_shared_wall: float = 0.05

    def __post_init__(self):
        if not 1 <= self.rooms_min <= self.rooms_max:
            raise ValueError("need 1 <= rooms_min <= rooms_max")
        if self.rooms_max + 1 > N_MAX:
            raise ValueError("rooms_max + 1 must not exceed n_max")
        for p in (self.door_prob, self.window_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        LabelSchema.get(self.schema)


def split_unit_square(n_rooms: int, rng: np.random.Generator) -> list:
    """Recursive binary split of the unit square into at most ``n_rooms`` rectangles.

    Rectangles are ``(x0, y0, x1, y1)`` on a 1/GRID lattice. Splitting stops
    early when no rectangle can be cut without producing a piece thinner
    than MIN_THICKNESS.
    """
    min_cells = int(np.ceil(MIN_THICKNESS * GRID))
    rects = [(0, 0, GRID, GRID)]
    while len(rects) < n_rooms:
        candidates = []
        for i, (x0, y0, x1, y1) in enumerate(rects):
            if x1 - x0 >= 2 * min_cells or y1 - y0 >= 2 * min_cells:
                candidates.append(i)
        if not candidates:
            break
        areas = np.array([(rects[i][2] - rects[i][0]) * (rects[i][3] - rects[i][1])
                          for i in candidates], dtype=np.float64)
        i = candidates[int(rng.choice(len(candidates), p=areas / areas.sum()))]
        x0, y0, x1, y1 = rects.pop(i)
        w, h = x1 - x0, y1 - y0
        vertical = w >= h if (w >= 2 * min_cells and h >= 2 * min_cells) else w >= 2 * min_cells
        lo, hi = (x0, x1) if vertical else (y0, y1)
        a = max(lo + min_cells, lo + int(round(0.3 * (hi - lo))))
        b = min(hi - min_cells, lo + int(round(0.7 * (hi - lo))))
        if b < a:
            a, b = lo + min_cells, hi - min_cells
        cut = int(rng.integers(a, b + 1))
        if vertical:
            rects[i:i] = [(x0, y0, cut, y1), (cut, y0, x1, y1)]
        else:
            rects[i:i] = [(x0, y0, x1, cut), (x0, cut, x1, y1)]
    rects.sort(key=lambda r: (r[1], r[0]))
    return [tuple(c / GRID for c in r) for r in rects]


def shared_boundary(a, b) -> float:
    """Length of the common boundary of two interior-disjoint axis-aligned rectangles."""
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    if ax1 == bx0 or bx1 == ax0:
        return max(0.0, min(ay1, by1) - max(ay0, by0))
    if ay1 == by0 or by1 == ay0:
        return max(0.0, min(ax1, bx1) - max(ax0, bx0))
    return 0.0


def perimeter_exposure(r) -> float:
    x0, y0, x1, y1 = r
    total = 0.0
    if x0 == 0.0:
        total += y1 - y0
    if x1 == 1.0:
        total += y1 - y0
    if y0 == 0.0:
        total += x1 - x0
    if y1 == 1.0:
        total += x1 - x0
    return total


def rect_polygon(r) -> list:
    x0, y0, x1, y1 = r
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def _assign_classes(rects, schema: LabelSchema, rng) -> list:
    room = schema.node_index("room")
    if schema.variant == "six":
        stair = schema.node_index("stair")
        return [stair if rng.random() < 0.1 else room for _ in rects]
    areas = np.array([(r[2] - r[0]) * (r[3] - r[1]) for r in rects])
    n_rare = int(rng.binomial(len(rects), 0.15))
    rare = [schema.node_index(name) for name in STANDARD_AREA_CLASSES]
    common = [i for i, name in enumerate(schema.node_classes)
              if name not in STANDARD_AREA_CLASSES and name not in ("outdoor", "room")]
    classes = [room if rng.random() < 0.6 else int(rng.choice(common)) for _ in rects]
    for idx in np.argsort(areas, kind="stable")[:n_rare]:
        classes[int(idx)] = int(rng.choice(rare))
    return classes


def generate_graph(cfg: GeneratorConfig, index: int) -> AAMG:
    """One layout graph; depends only on ``(cfg.seed, index)``."""
    rng = np.random.default_rng([cfg.seed, index])
    schema = LabelSchema.get(cfg.schema)
    n_rooms = int(rng.integers(cfg.rooms_min, cfg.rooms_max + 1))
    rects = split_unit_square(n_rooms, rng)
    classes = _assign_classes(rects, schema, rng)

    wall, door, window = (schema.edge_index(k) for k in ("wall", "door", "window"))
    connectors = [door]
    connector_p = [1.0]
    if schema.variant == "twentyfive":
        connectors = [door, schema.edge_index("cased opening"), schema.edge_index("movable partition")]
        connector_p = [0.7, 0.2, 0.1]

    edges = []
    for i, r in enumerate(rects):
        if perimeter_exposure(r) >= cfg.min_shared_wall:
            edges.append((0, i + 1, wall))
            if rng.random() < cfg.window_prob:
                edges.append((0, i + 1, window))
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            if shared_boundary(rects[i], rects[j]) >= cfg.min_shared_wall:
                edges.append((i + 1, j + 1, wall))
                if rng.random() < cfg.door_prob:
                    edges.append((i + 1, j + 1, int(rng.choice(connectors, p=connector_p))))

    return AAMG.build(
        node_class=[schema.outdoor_index] + classes,
        node_area=[0.0] + [(r[2] - r[0]) * (r[3] - r[1]) for r in rects],
        node_center=[(0.5, 0.5)] + [((r[0] + r[2]) / 2, (r[1] + r[3]) / 2) for r in rects],
        edges=edges,
        node_poly=[rect_polygon((0.0, 0.0, 1.0, 1.0))] + [rect_polygon(r) for r in rects],
        graph_id=f"s{cfg.seed}-{index:06d}",
        schema=cfg.schema,
    )


def generate_corpus(cfg: GeneratorConfig) -> list:
    return [generate_graph(cfg, i) for i in range(cfg.count)]


def graph_to_record(g: AAMG) -> dict:
    rec = {
        "id": g.graph_id,
        "schema": g.schema,
        "n": g.n,
        "node_class": list(g.node_class),
        "node_area": list(g.node_area),
        "node_center": [list(c) for c in g.node_center],
    }
    if g.node_poly is not None:
        rec["node_poly"] = [[list(p) for p in poly] for poly in g.node_poly]
    rec["edges"] = [list(e) for e in g.edges]
    return rec


def record_to_graph(rec: dict) -> AAMG:
    schema = rec["schema"]
    if schema not in ("six", "twentyfive"):
        raise CorpusFormatError(f"unknown schema variant {schema!r}")
    g = AAMG.build(
        node_class=rec["node_class"],
        node_area=rec["node_area"],
        node_center=rec["node_center"],
        edges=rec.get("edges", []),
        node_poly=rec.get("node_poly"),
        graph_id=rec["id"],
        schema=schema,
    )
    if g.n != rec["n"] or len(g.node_area) != g.n or len(g.node_center) != g.n:
        raise CorpusFormatError("node count does not match per-node arrays")
    return g


def write_corpus(graphs, path) -> None:
    lines = [json.dumps(FORMAT_HEADER)]
    lines += [json.dumps(graph_to_record(g)) for g in graphs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_corpus(path) -> list:
    graphs = []
    seen_header = False
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: malformed JSON ({exc.msg})") from None
            if lineno == 1:
                if rec != FORMAT_HEADER:
                    raise CorpusFormatError(f"line 1: expected header {FORMAT_HEADER}")
                seen_header = True
                continue
            try:
                graphs.append(record_to_graph(rec))
            except CorpusFormatError as exc:
                raise CorpusFormatError(f"line {lineno}: {exc}") from None
            except (KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(f"line {lineno}: bad record ({exc!r})") from None
    if not seen_header:
        raise CorpusFormatError("line 1: missing format header")
    return graphs
