"""Finite-radius boundary samples: Gromov products, a visual metric and clusters.

Products are kept exactly as ``d(e,x) + d(e,y) - d(x,y)`` in the doubled
scale, which is four times the product in unscaled units.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.cluster.hierarchy import dendrogram, leaves_list, linkage
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import squareform

from .analysis import space_graph
from .cayley import Ball
from .coning import ConedGraph
from .cusping import CuspedGraph
from .errors import InputError
from .graphcore import INF, SCALE, MetricGraph

PRODUCT_UNIT = 2 * SCALE  # x2 products per unscaled unit
DEFAULT_EPSILON = math.log(2)


def gromov_product_x2(D: np.ndarray, base: int, x: int, y: int) -> int:
    return int(D[base, x]) + int(D[base, y]) - int(D[x, y])


def gromov_product(g: MetricGraph, base: int, x: int, y: int) -> float:
    """(x|y)_base in unscaled units (exact: always a multiple of 1/4)."""
    for v in (base, x, y):
        g.check(v)
    dx = g.distances_from(x)
    db = g.distances_from(base)
    return (int(db[x]) + int(db[y]) - int(dx[y])) / PRODUCT_UNIT


def _lcp(a, b) -> int:
    n = 0
    for p, q in zip(a, b):
        if p != q:
            break
        n += 1
    return n


@dataclass(frozen=True, eq=False)
class BoundarySample:
    base: int
    radius: int
    vertices: tuple  # graph vertex ids on the sphere
    labels: tuple
    products: np.ndarray = field(repr=False)  # x2 scaled Gromov products
    epsilon: float = DEFAULT_EPSILON
    closures: tuple = ()  # ((sample indices, sample indices), ...) flanking basepoint cusps

    @property
    def size(self) -> int:
        return len(self.vertices)

    @property
    def rho(self) -> np.ndarray:
        r = np.exp(-self.epsilon * self.products / PRODUCT_UNIT)
        np.fill_diagonal(r, 0.0)
        return r

    @property
    def linkage(self) -> np.ndarray:
        if self.size < 2:
            return np.zeros((0, 4))
        return linkage(squareform(self.rho, checks=False), method="single")

    def leaf_order(self) -> list:
        if self.size < 2:
            return list(range(self.size))
        return [int(i) for i in leaves_list(self.linkage)]

    def __eq__(self, other):
        return (isinstance(other, BoundarySample)
                and (self.base, self.radius, self.vertices, self.labels, self.epsilon, self.closures)
                == (other.base, other.radius, other.vertices, other.labels, other.epsilon, other.closures)
                and np.array_equal(self.products, other.products))

    def to_dict(self) -> dict:
        return {"base": self.base, "radius": self.radius, "epsilon": self.epsilon,
                "vertices": list(self.vertices), "labels": list(self.labels),
                "products_x2": self.products.tolist(),
                "closures": [[list(a), list(b)] for a, b in self.closures]}

    @classmethod
    def from_dict(cls, doc) -> "BoundarySample":
        return cls(doc["base"], doc["radius"], tuple(doc["vertices"]), tuple(doc["labels"]),
                   np.array(doc["products_x2"], dtype=np.int64).reshape(len(doc["vertices"]), -1),
                   float(doc["epsilon"]), tuple((tuple(a), tuple(b)) for a, b in doc["closures"]))


def _ball_of(space):
    if isinstance(space, Ball):
        return space
    if isinstance(space, (ConedGraph, CuspedGraph)):
        return space.ball
    return None


def _cusp_closures(space: CuspedGraph, base_word, words) -> tuple:
    """For each cyclic peripheral, the sample points heading toward w^+inf and w^-inf.

    Both directions converge to the parabolic point of the coset through the
    basepoint, which the basepoint cannot see; their flanking points are
    returned so cluster adjacency can be closed across it.
    """
    ball = space.ball
    o = ball.oracle
    inv = o.invert(base_word)
    rel = [o.multiply(inv, w) for w in words]
    out = []
    for p in space.family:
        if p.kind != "cyclic" or not p.generators[0]:
            continue
        ends = []
        for gen in (p.generators[0], o.invert(p.generators[0])):
            far, k = None, 1
            while True:
                cand = o.normalize(gen * k)
                if o.multiply(base_word, cand) not in ball.index:
                    break
                far, k = cand, k + 1
            if far is None:
                break
            score = [_lcp(r, far) for r in rel]
            top = max(score)
            if top == 0:
                break
            ends.append(tuple(i for i, s in enumerate(score) if s == top))
        if len(ends) == 2:
            out.append((ends[0], ends[1]))
    return tuple(out)


def sample_boundary(space, radius: int | None = None, epsilon: float = DEFAULT_EPSILON,
                    base: int | None = None, sphere: str = "metric") -> BoundarySample:
    """Group vertices on the sphere of ``radius`` (unscaled units) about ``base``.

    ``sphere='metric'`` measures the radius in the space itself; ``'word'``
    uses word length in the underlying ball.
    """
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    g = space_graph(space)
    ball = _ball_of(space)
    if base is None:
        base = ball.index.vertex(()) if ball is not None else 0
    base = g.check(base)
    if radius is None:
        if ball is None:
            raise InputError("radius is required for a bare graph")
        radius = ball.radius
    D = g.all_pairs().astype(np.int64)
    group = range(ball.graph.n) if ball is not None else range(g.n)
    if sphere == "metric":
        pts = [v for v in group if D[base, v] == SCALE * radius]
    elif sphere == "word":
        if ball is None:
            raise InputError("word spheres need a group space")
        pts = [v for v in group if len(ball.index.words[v]) == radius]
    else:
        raise InputError(f"unknown sphere kind {sphere!r}")
    if not pts:
        raise InputError(f"the sphere of radius {radius} is empty")
    sub = D[np.ix_(pts, pts)]
    if np.any(sub >= INF):
        raise InputError("sphere points are not mutually connected")
    d0 = D[base, pts]
    prod = d0[:, None] + d0[None, :] - sub
    closures = ()
    if isinstance(space, CuspedGraph):
        words = [ball.index.words[v] for v in pts]
        closures = _cusp_closures(space, ball.index.words[base], words)
    return BoundarySample(base, radius, tuple(int(v) for v in pts), tuple(g.label(v) for v in pts),
                          prod.astype(np.int64), float(epsilon), closures)


# -- clusters -------------------------------------------------------------


def clusters_at(sample: BoundarySample, threshold_x2: int):
    """Components of the relation (x|y) >= threshold (x2 scaled units)."""
    if sample.size == 1:
        return 1, np.zeros(1, dtype=np.int32)
    adj = (sample.products >= threshold_x2).astype(np.int8)
    return connected_components(adj, directed=False)


def cluster_count(sample: BoundarySample, k: float) -> int:
    """Clusters at visual threshold exp(-eps * k), i.e. product >= k unscaled units."""
    return clusters_at(sample, math.ceil(k * PRODUCT_UNIT))[0]


@dataclass(frozen=True)
class CircleSignal:
    threshold_x2: int | None
    clusters: int
    labels: tuple
    edges: tuple  # cluster adjacency, closure edges included
    closure_edges: tuple
    is_cycle: bool

    def to_dict(self) -> dict:
        return {"threshold_x2": self.threshold_x2, "clusters": self.clusters,
                "edges": [list(e) for e in self.edges],
                "closure_edges": [list(e) for e in self.closure_edges], "is_cycle": self.is_cycle}


def circle_signal(sample: BoundarySample, min_clusters: int = 3) -> CircleSignal:
    """Cluster adjacency at the calibrated threshold.

    The threshold is the smallest product value splitting the sphere into at
    least ``min_clusters`` clusters.  Two clusters are adjacent when some cross
    pair already links them one product level lower, or when they flank the
    parabolic point of a peripheral coset through the basepoint.
    """
    n = sample.size
    P = sample.products
    values = sorted(set(P[np.triu_indices(n, 1)].tolist())) if n > 1 else []
    for i in range(1, len(values)):
        k, lab = clusters_at(sample, values[i])
        if k >= min_clusters:
            t, below = values[i], values[i - 1]
            break
    else:
        return CircleSignal(None, 1, tuple([0] * n), (), (), False)
    H = nx.Graph()
    H.add_nodes_from(range(k))
    xs, ys = np.nonzero(P >= below)
    for x, y in zip(xs, ys):
        if lab[x] != lab[y]:
            H.add_edge(int(min(lab[x], lab[y])), int(max(lab[x], lab[y])))
    closure = set()
    for plus, minus in sample.closures:
        for a in {int(lab[i]) for i in plus}:
            for b in {int(lab[i]) for i in minus}:
                if a != b:
                    closure.add((min(a, b), max(a, b)))
    H.add_edges_from(closure)
    cycle = k >= 3 and nx.is_connected(H) and all(d == 2 for _, d in H.degree())
    return CircleSignal(int(t), k, tuple(int(x) for x in lab), tuple(sorted(H.edges())),
                        tuple(sorted(closure)), bool(cycle))


# -- export -----------------------------------------------------------------


def _heatmap_svg(sample: BoundarySample, cell: int = 4) -> bytes:
    order = sample.leaf_order()
    rho = sample.rho
    n = len(order)
    size = max(n * cell, 1)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" shape-rendering="crispEdges">']
    for i, a in enumerate(order):
        for j, b in enumerate(order):
            shade = int(round(255 * rho[a, b]))
            out.append(f'<rect x="{j * cell}" y="{i * cell}" width="{cell}" height="{cell}" '
                       f'fill="rgb({shade},{shade},{shade})"/>')
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode()


def _dendrogram_svg(sample: BoundarySample, width: int = 640, height: int = 320) -> bytes:
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    if sample.size >= 2:
        dg = dendrogram(sample.linkage, no_plot=True)
        xmax = 10.0 * sample.size
        ymax = max(max(d) for d in dg["dcoord"]) or 1.0
        pad = 10
        for xs, ys in zip(dg["icoord"], dg["dcoord"]):
            pts = " ".join(f"{pad + x / xmax * (width - 2 * pad):.2f},"
                           f"{height - pad - y / ymax * (height - 2 * pad):.2f}" for x, y in zip(xs, ys))
            out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="0.6"/>')
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode()


def export_boundary(sample: BoundarySample, fmt: str) -> bytes:
    if fmt == "csv":
        rows = [",".join(repr(float(x)) for x in row) for row in sample.rho]
        return ("\n".join(rows) + "\n").encode()
    if fmt == "json":
        return (json.dumps(sample.to_dict(), indent=1) + "\n").encode()
    if fmt == "svg-heatmap":
        return _heatmap_svg(sample)
    if fmt == "svg-dendrogram":
        return _dendrogram_svg(sample)
    raise InputError(f"unknown boundary export format {fmt!r}")


def import_boundary(data: bytes | str) -> BoundarySample:
    return BoundarySample.from_dict(json.loads(data))
