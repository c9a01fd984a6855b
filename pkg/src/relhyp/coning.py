"""Coned-off Cayley graphs, hat-paths and coset penetration."""

from __future__ import annotations

from dataclasses import dataclass

from .cayley import Ball
from .errors import InputError, MalformedPathError
from .graphcore import ConeVertex, GraphBuilder, MetricGraph
from .words import PeripheralFamily


@dataclass(frozen=True)
class ConedGraph:
    ball: Ball
    family: PeripheralFamily
    coned: MetricGraph
    cone_index: dict  # (peripheral label, coset key) -> cone vertex
    cone_of: tuple  # cone_of[p][ball vertex] -> cone vertex of its p-coset

    @property
    def base(self) -> MetricGraph:
        return self.ball.graph

    @property
    def n_base(self) -> int:
        return self.ball.graph.n

    def is_cone(self, v: int) -> bool:
        return v >= self.n_base

    def cone_tag(self, v: int) -> ConeVertex:
        return self.coned.tags[v]

    def cone_members(self, v: int):
        return [x for x, _ in self.coned.neighbors(v)]


def cone_off(ball: Ball, family: PeripheralFamily) -> ConedGraph:
    """One cone vertex per (peripheral, coset) meeting the ball, singletons included."""
    for p in family:
        if p.oracle != ball.oracle:
            raise InputError(f"peripheral {p.label} is defined over a different group")
    base = ball.graph
    b = GraphBuilder()
    for tag in base.tags:
        b.add_vertex(tag)
    for u, v, w in base.edges():
        b.add_edge(u, v, w)
    cone_index = {}
    cone_of = []
    for p in family:
        owner = []
        for i, word in enumerate(ball.index.words):
            key = p.coset_key(word)
            c = cone_index.get((p.label, key))
            if c is None:
                c = b.add_vertex(ConeVertex(p.label, key))
                cone_index[(p.label, key)] = c
            b.add_edge(i, c, 1)
            owner.append(c)
        cone_of.append(tuple(owner))
    return ConedGraph(ball, family, b.finalize(ball.oracle.format), cone_index, tuple(cone_of))


def _check_base_path(coned: ConedGraph, path) -> list:
    path = [int(x) for x in path]
    if not path:
        raise InputError("empty path")
    for v in path:
        if not 0 <= v < coned.n_base:
            raise InputError(f"vertex {v} is not a ball vertex (paths with cone vertices are rejected)")
    for a, b in zip(path, path[1:]):
        if coned.base.weight(a, b) is None:
            raise InputError(f"path steps between non-adjacent vertices {a} and {b}")
    return path


def hat_path(coned: ConedGraph, path) -> list:
    """Replace each maximal (>= 2 vertex) run inside one coset by enter -> cone -> exit.

    Runs are found greedily left to right; when two peripherals both start a
    run at the same vertex, the one listed first wins.
    """
    path = _check_base_path(coned, path)
    out = [path[0]]
    i = 0
    n = len(path)
    while i < n - 1:
        for owner in coned.cone_of:
            c = owner[path[i]]
            j = i
            while j + 1 < n and owner[path[j + 1]] == c:
                j += 1
            if j > i:
                out += [c, path[j]]
                i = j
                break
        else:
            out.append(path[i + 1])
            i += 1
    return out


@dataclass(frozen=True)
class PenetrationRecord:
    peripheral: str
    key: tuple
    cone: int
    enter: int
    exit: int


def penetrations(coned: ConedGraph, hp) -> list:
    hp = [int(x) for x in hp]
    for a, b in zip(hp, hp[1:]):
        if coned.coned.weight(a, b) is None:
            raise InputError(f"hat-path steps between non-adjacent vertices {a} and {b}")
    records = []
    for i, v in enumerate(hp):
        if not coned.is_cone(v):
            continue
        if i == 0 or i == len(hp) - 1:
            raise MalformedPathError("hat-path starts or ends at a cone vertex")
        tag = coned.cone_tag(v)
        records.append(PenetrationRecord(tag.peripheral, tag.key, v, hp[i - 1], hp[i + 1]))
    return records


def is_without_backtracking(coned: ConedGraph, hp) -> bool:
    cones = [r.cone for r in penetrations(coned, hp)]
    return len(cones) == len(set(cones))
