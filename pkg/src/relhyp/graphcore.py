"""Finite weighted graphs with exact integer shortest paths.

All lengths are stored doubled: an ordinary edge of length 1 has weight 2 and
a cone edge of length 1/2 has weight 1.  Divide by 2 for the geometric value.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import InputError, ResourceError

SCALE = 2
DEFAULT_VERTEX_CAP = 20_000
INF = np.iinfo(np.int32).max


@dataclass(frozen=True)
class GroupVertex:
    word: tuple

    def label(self, fmt) -> str:
        return fmt(self.word)


@dataclass(frozen=True)
class ConeVertex:
    peripheral: str
    key: tuple

    def label(self, fmt) -> str:
        return f"CONE:{self.peripheral}:{fmt(self.key)}"


@dataclass(frozen=True)
class HoroVertex:
    base: object  # word of the base vertex, or a plain index
    depth: int
    peripheral: str = ""
    key: tuple = ()

    def label(self, fmt) -> str:
        base = fmt(self.base) if isinstance(self.base, tuple) else str(self.base)
        if not self.peripheral:
            return f"HORO:{base}:{self.depth}"
        return f"HORO:{self.peripheral}:{fmt(self.key)}:{base}:{self.depth}"


@dataclass(frozen=True)
class PlainVertex:
    index: int

    def label(self, fmt) -> str:
        return str(self.index)


def _plain_fmt(w) -> str:
    return ".".join(map(str, w)) if w else "1"


class GraphBuilder:
    def __init__(self):
        self.tags: list = []
        self.adj: list[dict[int, int]] = []

    def add_vertex(self, tag) -> int:
        self.tags.append(tag)
        self.adj.append({})
        return len(self.tags) - 1

    def add_edge(self, u: int, v: int, weight: int) -> bool:
        """Add ``{u, v}``; returns False if the edge is already present."""
        if u == v:
            raise InputError("self-loops are not allowed")
        if weight not in (1, 2):
            raise InputError(f"edge weight must be 1 or 2, got {weight}")
        if v in self.adj[u]:
            if self.adj[u][v] != weight:
                raise InputError(f"conflicting weights on edge {u}-{v}")
            return False
        self.adj[u][v] = weight
        self.adj[v][u] = weight
        return True

    def finalize(self, fmt=None) -> "MetricGraph":
        adj = tuple(tuple(sorted(nb.items())) for nb in self.adj)
        return MetricGraph(tuple(self.tags), adj, fmt)


class MetricGraph:
    """Immutable undirected graph, weights in {1, 2}, vertex tags in insertion order."""

    def __init__(self, tags, adj, fmt=None):
        self.tags = tuple(tags)
        self.adj = tuple(adj)
        self.fmt = fmt or _plain_fmt
        self._csr = None

    def __len__(self):
        return len(self.tags)

    @property
    def n(self) -> int:
        return len(self.tags)

    def neighbors(self, u: int):
        return self.adj[u]

    def weight(self, u: int, v: int) -> int | None:
        for x, w in self.adj[u]:
            if x == v:
                return w
        return None

    def edges(self):
        for u, nb in enumerate(self.adj):
            for v, w in nb:
                if u < v:
                    yield u, v, w

    @property
    def edge_count(self) -> int:
        return sum(len(nb) for nb in self.adj) // 2

    def label(self, u: int) -> str:
        return self.tags[u].label(self.fmt)

    def check(self, u: int) -> int:
        if not isinstance(u, (int, np.integer)) or not 0 <= u < self.n:
            raise InputError(f"unknown vertex {u!r}")
        return int(u)

    def csr(self) -> csr_matrix:
        if self._csr is None:
            rows, cols, data = [], [], []
            for u, nb in enumerate(self.adj):
                for v, w in nb:
                    rows.append(u)
                    cols.append(v)
                    data.append(w)
            self._csr = csr_matrix((data, (rows, cols)), shape=(self.n, self.n), dtype=np.int64)
        return self._csr

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        k, _ = connected_components(self.csr(), directed=False)
        return k == 1

    def validate(self):
        for u, nb in enumerate(self.adj):
            for v, w in nb:
                if v == u:
                    raise InputError(f"self-loop at {u}")
                if w == 1 and not (
                    isinstance(self.tags[u], ConeVertex) or isinstance(self.tags[v], ConeVertex)
                ):
                    raise InputError(f"weight-1 edge {u}-{v} not incident to a cone vertex")
                if self.weight(v, u) != w:
                    raise InputError(f"asymmetric edge {u}-{v}")
        if not self.is_connected():
            raise InputError("graph is not connected")

    # -- metric ---------------------------------------------------------

    def distances_from(self, source: int) -> np.ndarray:
        """Dial's bucket BFS for {1, 2} weights; unreachable vertices get INF."""
        source = self.check(source)
        dist = np.full(self.n, INF, dtype=np.int64)
        dist[source] = 0
        buckets: list[list[int]] = [[source]]
        d = 0
        while d < len(buckets):
            for u in buckets[d]:
                if dist[u] != d:
                    continue
                for v, w in self.adj[u]:
                    nd = d + w
                    if nd < dist[v]:
                        dist[v] = nd
                        while len(buckets) <= nd:
                            buckets.append([])
                        buckets[nd].append(v)
            d += 1
        return dist

    def all_pairs(self, cap: int = DEFAULT_VERTEX_CAP) -> np.ndarray:
        if self.n > cap:
            raise ResourceError(f"all-pairs distances refused: {self.n} vertices exceed cap {cap}", cap=cap)
        if self.n == 0:
            return np.zeros((0, 0), dtype=np.int32)
        d = shortest_path(self.csr(), method="D", directed=False)
        d[np.isinf(d)] = INF
        return d.astype(np.int32)

    def extract_geodesic(self, u: int, v: int, dist_to_v=None) -> "GeodesicPath":
        """Shortest path from u to v; each step goes to the smallest-index
        neighbour that stays on some shortest path."""
        u, v = self.check(u), self.check(v)
        if dist_to_v is None:
            dist_to_v = self.distances_from(v)
        if dist_to_v[u] >= INF:
            raise InputError(f"no path between {u} and {v}")
        path = [u]
        cur = u
        while cur != v:
            for x, w in self.adj[cur]:
                if dist_to_v[x] + w == dist_to_v[cur]:
                    cur = x
                    break
            path.append(cur)
        return GeodesicPath(tuple(path), int(dist_to_v[u]))

    def path_weight(self, path) -> int:
        total = 0
        for a, b in zip(path, path[1:]):
            w = self.weight(a, b)
            if w is None:
                raise InputError(f"vertices {a} and {b} are not adjacent")
            total += w
        return total

    def induced(self, keep) -> "MetricGraph":
        """Subgraph on ``keep`` (indices renumbered in increasing order)."""
        keep = sorted(set(int(k) for k in keep))
        new = {old: i for i, old in enumerate(keep)}
        b = GraphBuilder()
        for old in keep:
            b.add_vertex(self.tags[old])
        for old in keep:
            for v, w in self.adj[old]:
                if v in new and old < v:
                    b.add_edge(new[old], new[v], w)
        return b.finalize(self.fmt)

    # -- export ---------------------------------------------------------

    def export(self, fmt: str) -> bytes:
        if fmt == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            for u, v, w in self.edges():
                writer.writerow([u, v, w])
            return buf.getvalue().encode()
        if fmt == "json":
            doc = {
                "scale": SCALE,
                "vertices": [self.label(i) for i in range(self.n)],
                "adjacency": [[[v, w] for v, w in nb] for nb in self.adj],
            }
            return (json.dumps(doc, indent=1) + "\n").encode()
        if fmt == "dot":
            lines = ["graph G {"]
            for i in range(self.n):
                lines.append(f'  {i} [label="{self.label(i)}"];')
            for u, v, w in self.edges():
                lines.append(f'  {u} -- {v} [weight={w}, len={w / SCALE:g}];')
            lines.append("}")
            return ("\n".join(lines) + "\n").encode()
        raise InputError(f"unknown graph export format {fmt!r}")


def path_graph(n: int) -> MetricGraph:
    """n vertices, n - 1 unit edges."""
    b = GraphBuilder()
    for i in range(n):
        b.add_vertex(PlainVertex(i))
    for i in range(n - 1):
        b.add_edge(i, i + 1, 2)
    return b.finalize()


def cycle_graph(n: int) -> MetricGraph:
    b = GraphBuilder()
    for i in range(n):
        b.add_vertex(PlainVertex(i))
    for i in range(n):
        b.add_edge(i, (i + 1) % n, 2)
    return b.finalize()


def export_graph(g: MetricGraph, fmt: str) -> bytes:
    return g.export(fmt)


@dataclass(frozen=True)
class LabelVertex:
    """Tag restored from an export, where only the label survives."""

    text: str

    def label(self, fmt) -> str:
        return self.text


def import_json(data: bytes | str) -> MetricGraph:
    doc = json.loads(data)
    b = GraphBuilder()
    for text in doc["vertices"]:
        b.add_vertex(LabelVertex(text))
    for u, nb in enumerate(doc["adjacency"]):
        for v, w in nb:
            if u < v:
                b.add_edge(u, v, w)
    return b.finalize()


def canonical_edge_set(g: MetricGraph) -> set:
    """Edges keyed by endpoint labels, independent of vertex numbering."""
    out = set()
    for u, v, w in g.edges():
        a, b = sorted((g.label(u), g.label(v)))
        out.add((a, b, w))
    return out


@dataclass(frozen=True)
class GeodesicPath:
    vertices: tuple
    weight: int


def distances_from(g: MetricGraph, source: int) -> np.ndarray:
    return g.distances_from(source)


def all_pairs(g: MetricGraph, cap: int = DEFAULT_VERTEX_CAP) -> np.ndarray:
    return g.all_pairs(cap)


def extract_geodesic(g: MetricGraph, u: int, v: int) -> GeodesicPath:
    return g.extract_geodesic(u, v)
