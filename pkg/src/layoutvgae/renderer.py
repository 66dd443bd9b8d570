"""Graph-to-floor-plan conversion, SVG output and 2-D latent projections.

Plans use normalized coordinates in the unit square. Each real node becomes
an axis-aligned rectangle; rectangles are made interior-disjoint, connected
but separated pairs are pulled together where possible, and shared sides are
cut into tagged boundary segments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .graph import AAMG, LabelSchema

MAX_DISPLACEMENT = 0.2
WALL_WIDTH = 0.01
STANDARD_SIZE = 0.03
MIN_AREA = 1e-4
VIRTUAL_OUTDOOR = -1

DEFAULT_STANDARD_CLASSES = ("stair", "elevator", "lavatory")

PALETTE = (
    "#ffffff", "#f4d6a0", "#9ecae1", "#c7e9c0", "#fdd0a2", "#dadaeb", "#fcbba1", "#d9d9d9",
    "#a1d99b", "#bcbddc", "#fee391", "#c6dbef", "#fdae6b", "#e5f5e0", "#f2f0f7", "#fff7bc",
    "#d4b9da", "#ccebc5", "#e7e1ef",
)
SEGMENT_STYLE = {
    "wall": ("#222222", ""),
    "door": ("#d62728", ""),
    "window": ("#1f77b4", ""),
    "cased opening": ("#2ca02c", "2 2"),
    "fence": ("#8c564b", "1 2"),
    "movable partition": ("#9467bd", "4 2"),
}

Rect = tuple  # (x0, y0, x1, y1)


@dataclass
class Segment:
    start: tuple
    end: tuple
    tag: str

    @property
    def length(self) -> float:
        return math.dist(self.start, self.end)


@dataclass
class Adjacency:
    u: int
    v: int                      # VIRTUAL_OUTDOOR or the outdoor node index for perimeter sides
    kinds: tuple                # non-wall edge type names, sorted
    segments: list = field(default_factory=list)
    dashed: bool = False        # no shared side could be found


@dataclass
class FloorPlanLayout:
    graph_id: str
    schema: LabelSchema
    rects: dict                 # real node index -> (x0, y0, x1, y1)
    node_class: dict
    standard: frozenset         # nodes drawn as fixed-size rectangles
    adjacencies: list
    outdoor: int                # outdoor node index, or VIRTUAL_OUTDOOR
    wall_width: float = WALL_WIDTH

    @property
    def real_nodes(self) -> list:
        return sorted(self.rects)

    def polygon(self, i: int) -> list:
        x0, y0, x1, y1 = self.rects[i]
        return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]

    @property
    def segments(self) -> list:
        return [s for a in self.adjacencies for s in a.segments]


# -- geometry ---------------------------------------------------------------
def interiors_overlap(a: Rect, b: Rect) -> bool:
    return min(a[2], b[2]) > max(a[0], b[0]) and min(a[3], b[3]) > max(a[1], b[1])


def shared_side(a: Rect, b: Rect) -> Optional[tuple]:
    """The common boundary segment of two touching rectangles, if it has positive length."""
    for ax, bx in ((a[2], b[0]), (a[0], b[2])):
        if ax == bx:
            lo, hi = max(a[1], b[1]), min(a[3], b[3])
            if hi > lo:
                return (ax, lo), (ax, hi)
    for ay, by in ((a[3], b[1]), (a[1], b[3])):
        if ay == by:
            lo, hi = max(a[0], b[0]), min(a[2], b[2])
            if hi > lo:
                return (lo, ay), (hi, ay)
    return None


def split_segment(start, end, tags: Sequence[str]) -> list:
    """Cut ``start -> end`` into ``len(tags)`` equal pieces."""
    n = len(tags)
    pts = [(start[0] + (end[0] - start[0]) * i / n, start[1] + (end[1] - start[1]) * i / n)
           for i in range(n)] + [end]
    return [Segment(pts[i], pts[i + 1], tags[i]) for i in range(n)]


def _rect_from_node(g: AAMG, i: int) -> Rect:
    """Rectangle of the node's area centred on its center, shaped like its polygon's bounding box."""
    cx, cy = g.node_center[i]
    area = max(float(g.node_area[i]), MIN_AREA)
    aspect = 1.0
    if g.node_poly is not None and g.node_poly[i]:
        pts = np.asarray(g.node_poly[i], dtype=np.float64)
        x0, y0 = pts.min(0)
        x1, y1 = pts.max(0)
        w, h = x1 - x0, y1 - y0
        if w > 0 and h > 0:
            if w * h == area and (x0 + x1) / 2 == cx and (y0 + y1) / 2 == cy:
                return (float(x0), float(y0), float(x1), float(y1))
            aspect = w / h
    w = math.sqrt(area * aspect)
    h = area / w
    return (cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)


def _split_overlap(a: Rect, b: Rect, a_first: bool) -> tuple:
    """Cut two overlapping rectangles at the midpoint of their overlap.

    The cut runs across the axis with the smaller overlap extent, which
    removes the least area. Both new boundaries take the same float value, so
    the results touch but never overlap.
    """
    ox = min(a[2], b[2]) - max(a[0], b[0])
    oy = min(a[3], b[3]) - max(a[1], b[1])
    axis = 0 if ox <= oy else 1
    lo, hi = max(a[axis], b[axis]), min(a[axis + 2], b[axis + 2])
    mid = (lo + hi) / 2
    ca, cb = (a[axis] + a[axis + 2]) / 2, (b[axis] + b[axis + 2]) / 2
    a_low = ca < cb or (ca == cb and a_first)
    a, b = list(a), list(b)
    if a_low:
        a[axis + 2], b[axis] = mid, mid
    else:
        a[axis], b[axis + 2] = mid, mid
    return tuple(a), tuple(b)


def _gap_moves(a: Rect, b: Rect) -> list:
    """Candidate single-side moves that make ``a`` and ``b`` touch, as (which, side, value, gap)."""
    moves = []
    if min(a[3], b[3]) > max(a[1], b[1]):            # y-projections overlap: horizontal gap
        if a[2] < b[0]:
            moves += [("a", 2, b[0], b[0] - a[2]), ("b", 0, a[2], b[0] - a[2])]
        elif b[2] < a[0]:
            moves += [("a", 0, b[2], a[0] - b[2]), ("b", 2, a[0], a[0] - b[2])]
    if min(a[2], b[2]) > max(a[0], b[0]):            # x-projections overlap: vertical gap
        if a[3] < b[1]:
            moves += [("a", 3, b[1], b[1] - a[3]), ("b", 1, a[3], b[1] - a[3])]
        elif b[3] < a[1]:
            moves += [("a", 1, b[3], a[1] - b[3]), ("b", 3, a[1], a[1] - b[3])]
    return moves


def _free_intervals(i: int, rects: dict) -> list:
    """Boundary pieces of rectangle ``i`` not shared with any other rectangle, longest first."""
    x0, y0, x1, y1 = rects[i]
    sides = [((x0, y0), (x1, y0)), ((x1, y0), (x1, y1)), ((x0, y1), (x1, y1)), ((x0, y0), (x0, y1))]
    out = []
    for order, (s, e) in enumerate(sides):
        axis = 0 if s[1] == e[1] else 1
        lo, hi = s[axis], e[axis]
        covered = []
        for j, r in rects.items():
            if j == i:
                continue
            seg = shared_side(rects[i], r)
            if seg is None:
                continue
            (p, q) = seg
            on_side = (p[1 - axis] == s[1 - axis] and q[1 - axis] == s[1 - axis])
            if on_side:
                covered.append((p[axis], q[axis]))
        cursor = lo
        for c0, c1 in sorted(covered):
            if c0 > cursor:
                out.append((cursor, c0, axis, s[1 - axis], order))
            cursor = max(cursor, c1)
        if hi > cursor:
            out.append((cursor, hi, axis, s[1 - axis], order))
    out.sort(key=lambda t: (-(t[1] - t[0]), t[4], t[0]))
    return out


# -- conversion -------------------------------------------------------------
def graph_to_plan(graph: AAMG, schema: LabelSchema,
                  standard_classes: Sequence[str] = DEFAULT_STANDARD_CLASSES,
                  max_displacement: float = MAX_DISPLACEMENT) -> FloorPlanLayout:
    """Lay out a graph as rectangles with tagged boundary segments."""
    outdoor_nodes = [i for i in range(graph.n) if graph.node_class[i] == schema.outdoor_index]
    outdoor = outdoor_nodes[0] if len(outdoor_nodes) == 1 else VIRTUAL_OUTDOOR
    real = [i for i in range(graph.n) if i != outdoor]
    if not real:
        raise ValueError("graph has no real (non-outdoor) nodes to lay out")
    std_idx = {schema.node_index(c) for c in standard_classes if c in schema.node_classes}
    standard = frozenset(i for i in real if graph.node_class[i] in std_idx)

    # (1)-(2) points become rectangles; standard classes get the fixed square
    rects = {}
    for i in real:
        if i in standard:
            cx, cy = graph.node_center[i]
            h = STANDARD_SIZE / 2
            rects[i] = (cx - h, cy - h, cx + h, cy + h)
        else:
            rects[i] = _rect_from_node(graph, i)

    # (3) pairwise overlap splitting; shrinking never creates new overlaps
    for a_pos, i in enumerate(real):
        for j in real[a_pos + 1:]:
            if interiors_overlap(rects[i], rects[j]):
                rects[i], rects[j] = _split_overlap(rects[i], rects[j], True)

    # (4) close small gaps between connected pairs without introducing overlap
    types = {}
    for u, v, t in graph.edges:
        types.setdefault((u, v), set()).add(t)
    for (u, v) in sorted(types):
        if u == outdoor or v == outdoor or shared_side(rects[u], rects[v]) is not None:
            continue
        for which, side, value, gap in sorted(_gap_moves(rects[u], rects[v]), key=lambda m: m[3]):
            if gap > max_displacement:
                continue
            node = u if which == "a" else v
            cand = list(rects[node])
            cand[side] = value
            cand = tuple(cand)
            if cand[2] <= cand[0] or cand[3] <= cand[1]:
                continue
            if all(not interiors_overlap(cand, rects[k]) for k in real if k != node):
                rects[node] = cand
                break

    # (5) walls are the buffered outlines, drawn at render time
    # (6)-(7) segment shared sides and outdoor-facing sides
    wall = schema.edge_classes[0]
    adjacencies = []
    for (u, v) in sorted(types):
        kinds = tuple(sorted(schema.edge_classes[t] for t in types[(u, v)] if schema.edge_classes[t] != wall))
        tags = (wall,) + kinds
        if outdoor in (u, v):
            inner = v if u == outdoor else u
            free = _free_intervals(inner, rects)
            adj = Adjacency(inner, outdoor, kinds)
            if free:
                lo, hi, axis, fixed, _ = free[0]
                start = (lo, fixed) if axis == 0 else (fixed, lo)
                end = (hi, fixed) if axis == 0 else (fixed, hi)
                adj.segments = split_segment(start, end, tags)
            else:
                adj.dashed = True
            adjacencies.append(adj)
            continue
        adj = Adjacency(u, v, kinds)
        side = shared_side(rects[u], rects[v])
        if side is None:
            adj.dashed = True
        else:
            adj.segments = split_segment(side[0], side[1], tags)
        adjacencies.append(adj)

    # (8) standard-area rooms are already fixed-size squares
    return FloorPlanLayout(graph.graph_id, schema, rects,
                           {i: graph.node_class[i] for i in real}, standard, adjacencies, outdoor)


def check_disjoint(layout: FloorPlanLayout) -> list:
    """Pairs of real nodes whose rectangles' interiors intersect (empty when the layout is valid)."""
    nodes = layout.real_nodes
    return [(i, j) for a, i in enumerate(nodes) for j in nodes[a + 1:]
            if interiors_overlap(layout.rects[i], layout.rects[j])]


# -- SVG --------------------------------------------------------------------
PANEL = 320
MARGIN = 16
LEGEND_ROW = 16


def _f(v: float) -> str:
    return f"{v:.3f}"


def _xy(p, ox=0.0) -> tuple:
    return ox + MARGIN + p[0] * PANEL, MARGIN + (1.0 - p[1]) * PANEL


def _panel_elements(layout: FloorPlanLayout, ox: float) -> list:
    wall_px = layout.wall_width * PANEL
    schema = layout.schema
    out = [f'<g class="plan" data-graph-id="{escape(layout.graph_id)}">']
    for i in layout.real_nodes:
        cls = schema.node_classes[layout.node_class[i]]
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in (_xy(p, ox) for p in layout.polygon(i)))
        kind = "space standard" if i in layout.standard else "space"
        out.append(f'<polygon class="{kind}" data-node="{i}" data-class="{escape(cls)}" points="{pts}" '
                   f'fill="{PALETTE[layout.node_class[i] % len(PALETTE)]}" stroke="#222222" '
                   f'stroke-width="{_f(wall_px)}"/>')
    for adj in layout.adjacencies:
        for seg in adj.segments:
            color, dash = SEGMENT_STYLE.get(seg.tag, ("#ff7f0e", ""))
            (x1, y1), (x2, y2) = _xy(seg.start, ox), _xy(seg.end, ox)
            dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
            out.append(f'<line class="segment" data-tag="{escape(seg.tag)}" data-u="{adj.u}" data-v="{adj.v}" '
                       f'x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="{color}" '
                       f'stroke-width="{_f(wall_px * 1.5)}"{dash_attr}/>')
        if adj.dashed and adj.v in layout.rects:
            ru, rv = layout.rects[adj.u], layout.rects[adj.v]
            (x1, y1) = _xy(((ru[0] + ru[2]) / 2, (ru[1] + ru[3]) / 2), ox)
            (x2, y2) = _xy(((rv[0] + rv[2]) / 2, (rv[1] + rv[3]) / 2), ox)
            out.append(f'<line class="connector" data-u="{adj.u}" data-v="{adj.v}" x1="{_f(x1)}" '
                       f'y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="#555555" stroke-dasharray="4 3"/>')
    out.append("</g>")
    return out


def _legend(schema: LabelSchema, y0: float) -> list:
    out = ['<g class="legend">']
    y = y0
    for c, name in enumerate(schema.node_classes):
        out.append(f'<rect x="{MARGIN}" y="{_f(y)}" width="10" height="10" fill="{PALETTE[c % len(PALETTE)]}" '
                   f'stroke="#222222"/><text x="{MARGIN + 14}" y="{_f(y + 9)}" font-size="10">{escape(name)}</text>')
        y += LEGEND_ROW
    for name in schema.edge_classes:
        color, dash = SEGMENT_STYLE.get(name, ("#ff7f0e", ""))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{MARGIN}" y1="{_f(y + 5)}" x2="{MARGIN + 10}" y2="{_f(y + 5)}" stroke="{color}" '
                   f'stroke-width="3"{dash_attr}/><text x="{MARGIN + 14}" y="{_f(y + 9)}" font-size="10">'
                   f'{escape(name)}</text>')
        y += LEGEND_ROW
    out.append("</g>")
    return out


def _document(body: list, width: float, height: float) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
            f'viewBox="0 0 {_f(width)} {_f(height)}">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def plan_svg(layout: FloorPlanLayout) -> str:
    schema = layout.schema
    legend_h = LEGEND_ROW * (schema.n_node_classes + schema.n_edge_classes)
    top = PANEL + 2 * MARGIN
    body = _panel_elements(layout, 0.0) + _legend(schema, top)
    return _document(body, PANEL + 2 * MARGIN, top + legend_h + MARGIN)


def emit_plan_svg(layout: FloorPlanLayout, path) -> Path:
    path = Path(path)
    path.write_text(plan_svg(layout), encoding="utf-8")
    return path


def strip_svg(layouts: Sequence[FloorPlanLayout]) -> str:
    if len(layouts) < 2:
        raise ValueError("an interpolation strip needs at least 2 graphs")
    schema = layouts[0].schema
    step = PANEL + 2 * MARGIN
    body = []
    for k, layout in enumerate(layouts):
        body.append(f'<g class="panel" data-index="{k}">')
        body += _panel_elements(layout, k * step)
        body.append("</g>")
    legend_h = LEGEND_ROW * (schema.n_node_classes + schema.n_edge_classes)
    body += _legend(schema, step)
    return _document(body, step * len(layouts), step + legend_h + MARGIN)


def emit_interpolation_strip(graphs: Sequence[AAMG], path, schema: LabelSchema, **kwargs) -> Path:
    """Plans of ``graphs`` side by side, left to right in input order."""
    layouts = [graph_to_plan(g, schema, **kwargs) for g in graphs]
    path = Path(path)
    path.write_text(strip_svg(layouts), encoding="utf-8")
    return path


# -- latent projection ------------------------------------------------------
def project_points(codes, method: str = "pca", seed: int = 0) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.float64)
    if codes.ndim != 2 or len(codes) < 3:
        raise ValueError("need at least 3 codes to project")
    if codes.shape[1] < 2:
        codes = np.hstack([codes, np.zeros((len(codes), 2 - codes.shape[1]))])
    if method == "pca":
        from sklearn.decomposition import PCA

        return PCA(n_components=2, svd_solver="full").fit_transform(codes)
    if method == "tsne":
        from sklearn.manifold import TSNE

        perplexity = min(30.0, max(1.0, (len(codes) - 1) / 3))
        return TSNE(n_components=2, perplexity=perplexity, random_state=seed,
                    init="pca").fit_transform(codes)
    raise ValueError(f"unknown projection method {method!r}")


def project_latents(codes, path=None, method: str = "pca", labels=None, seed: int = 0) -> np.ndarray:
    """2-D coordinates of ``codes``; also writes a scatter plot when ``path`` is given."""
    pts = project_points(codes, method, seed)
    if path is not None:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        path = Path(path)
        with plt.rc_context({"svg.hashsalt": "layoutvgae", "svg.fonttype": "none"}):
            fig, ax = plt.subplots(figsize=(5, 5))
            ax.scatter(pts[:, 0], pts[:, 1], s=12, c=labels if labels is not None else "#1f77b4")
            ax.set_xlabel(f"{method} 1")
            ax.set_ylabel(f"{method} 2")
            meta = {"Date": None} if path.suffix == ".svg" else {"Software": None}
            fig.savefig(path, metadata=meta)
            plt.close(fig)
    return pts
