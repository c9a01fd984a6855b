"""Combinatorial horoballs and cusped Cayley graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .cayley import Ball
from .errors import InputError
from .graphcore import INF, SCALE, GraphBuilder, HoroVertex, MetricGraph
from .words import PeripheralFamily, formal_inverse


def default_depth(radius: int) -> int:
    """ceil(log2 R) + 1: beyond this, new levels only add vertical rays."""
    return math.ceil(math.log2(radius)) + 1 if radius >= 1 else 1


def _attach(builder: GraphBuilder, level0, dist, depth: int, make_tag, level0_edges=True):
    """Stack levels 1..depth over ``level0`` (existing builder vertices).

    ``dist`` holds base distances in unscaled units (INF where disconnected).
    Returns the vertex ids level by level.
    """
    levels = [list(level0)]
    for k in range(1, depth + 1):
        ids = [builder.add_vertex(make_tag(i, k)) for i in range(len(level0))]
        for below, here in zip(levels[-1], ids):
            builder.add_edge(below, here, SCALE)
        levels.append(ids)
    m = len(level0)
    if m > 1:
        iu, ju = np.triu_indices(m, k=1)
        d = dist[iu, ju]
        for k in range(0 if level0_edges else 1, depth + 1):
            reach = 1 << k
            sel = (d >= 1) & (d <= reach)
            row = levels[k]
            for i, j in zip(iu[sel], ju[sel]):
                builder.add_edge(row[i], row[j], SCALE)
    return levels


@dataclass(frozen=True)
class HoroballGraph:
    base_size: int
    depth: int
    graph: MetricGraph

    def vertex(self, v: int, k: int) -> int:
        return k * self.base_size + v


def build_horoball(gamma: MetricGraph, depth: int) -> HoroballGraph:
    """H(gamma) truncated at ``depth``; gamma must have unit (weight-2) edges."""
    if depth < 0:
        raise InputError("depth must be >= 0")
    if any(w != SCALE for _, _, w in gamma.edges()):
        raise InputError("horoball base must have unit-length edges")
    if not gamma.is_connected():
        raise InputError("horoball base graph is disconnected")
    dist = gamma.all_pairs().astype(np.int64) // SCALE
    b = GraphBuilder()
    base_ids = [b.add_vertex(HoroVertex(_base_of(gamma, v), 0)) for v in range(gamma.n)]
    _attach(b, base_ids, dist, depth, lambda i, k: HoroVertex(_base_of(gamma, i), k))
    return HoroballGraph(gamma.n, depth, b.finalize(gamma.fmt))


def _base_of(gamma: MetricGraph, v: int):
    tag = gamma.tags[v]
    return getattr(tag, "word", v)


@dataclass(frozen=True)
class Horoball:
    peripheral: str
    key: tuple
    members: tuple  # ball vertices forming level 0
    levels: tuple  # levels[k] = vertex ids at depth k
    degenerate: bool  # no horizontal edge at any level: a bundle of vertical rays


@dataclass(frozen=True)
class CuspedGraph:
    ball: Ball
    family: PeripheralFamily
    depth: int
    graph: MetricGraph
    horoballs: tuple = field(repr=False)
    coset_metric: str = "peripheral"

    @property
    def degenerate_cosets(self):
        return [(h.peripheral, h.key) for h in self.horoballs if h.degenerate and len(h.members) > 1]

    def base_vertex(self, v: int) -> int:
        """Ball vertex underneath ``v`` (``v`` itself for group vertices)."""
        tag = self.graph.tags[v]
        if isinstance(tag, HoroVertex):
            return self.ball.index.vertex(tag.base)
        return v


def _coset_distances(ball: Ball, members, p, metric: str) -> np.ndarray:
    """Distances (unscaled units) inside the truncated coset graph."""
    m = len(members)
    local = {v: i for i, v in enumerate(members)}
    rows, cols = [], []
    if metric == "induced":
        for i, v in enumerate(members):
            for x, _ in ball.graph.neighbors(v):
                j = local.get(x)
                if j is not None:
                    rows.append(i)
                    cols.append(j)
    elif metric == "peripheral":
        norm = ball.oracle.normalizer
        words = ball.index.words
        steps = [g for g in p.generators if g] + [formal_inverse(g) for g in p.generators if g]
        for i, v in enumerate(members):
            for s in steps:
                x = ball.index.index.get(norm(words[v] + s))
                j = local.get(x) if x is not None else None
                if j is not None and j != i:
                    rows.append(i)
                    cols.append(j)
    else:
        raise InputError(f"unknown coset metric {metric!r}")
    if not rows:
        d = np.full((m, m), INF, dtype=np.int64)
        np.fill_diagonal(d, 0)
        return d
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))
    d = shortest_path(adj, method="D", directed=False, unweighted=True)
    d[np.isinf(d)] = INF
    return d.astype(np.int64)


def build_cusped(ball: Ball, family: PeripheralFamily, depth: int | None = None,
                 coset_metric: str = "peripheral") -> CuspedGraph:
    """Glue a truncated horoball onto every peripheral coset meeting the ball.

    Level 0 of each horoball is the coset's own vertices.  Horizontal reach is
    measured with ``coset_metric``: ``peripheral`` uses the peripheral's own
    generators (the coset's Cayley graph, truncated to the ball), ``induced``
    uses only ball edges between coset members.
    """
    if depth is None:
        depth = default_depth(ball.radius)
    if depth < 0:
        raise InputError("depth must be >= 0")
    for p in family:
        if p.oracle != ball.oracle:
            raise InputError(f"peripheral {p.label} is defined over a different group")
    base = ball.graph
    b = GraphBuilder()
    for tag in base.tags:
        b.add_vertex(tag)
    for u, v, w in base.edges():
        b.add_edge(u, v, w)
    horoballs = []
    for p in family:
        cosets: dict = {}
        for i, word in enumerate(ball.index.words):
            cosets.setdefault(p.coset_key(word), []).append(i)
        for key, members in cosets.items():
            dist = _coset_distances(ball, members, p, coset_metric)

            def make_tag(i, k, members=members, key=key, label=p.label):
                return HoroVertex(ball.index.words[members[i]], k, label, key)

            levels = _attach(b, members, dist, depth, make_tag)
            degenerate = not np.any((dist >= 1) & (dist < INF))
            horoballs.append(Horoball(p.label, key, tuple(members),
                                      tuple(tuple(l) for l in levels), degenerate))
    return CuspedGraph(ball, family, depth, b.finalize(ball.oracle.format), tuple(horoballs),
                       coset_metric)
