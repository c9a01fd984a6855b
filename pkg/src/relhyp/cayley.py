"""Balls in Cayley graphs, enumerated breadth-first in shortlex order."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InputError, ResourceError
from .graphcore import DEFAULT_VERTEX_CAP, GraphBuilder, GroupVertex, MetricGraph
from .words import GroupOracle, Word


@dataclass(frozen=True)
class BallIndex:
    oracle: GroupOracle
    radius: int
    index: dict  # normal form -> vertex index
    spheres: tuple  # spheres[k] = tuple of words at distance k
    words: tuple  # vertex index -> word

    def __contains__(self, w) -> bool:
        return w in self.index

    def vertex(self, w) -> int:
        try:
            return self.index[w]
        except KeyError:
            raise InputError(f"{self.oracle.format(w)} is not in the radius-{self.radius} ball") from None

    def word(self, i: int) -> Word:
        return self.words[i]

    def word_length(self, i: int) -> int:
        return len(self.words[i])

    def sphere(self, k: int):
        if not 0 <= k <= self.radius:
            raise InputError(f"sphere {k} outside 0..{self.radius}")
        return list(self.spheres[k])


@dataclass(frozen=True)
class Ball:
    graph: MetricGraph
    index: BallIndex

    @property
    def oracle(self) -> GroupOracle:
        return self.index.oracle

    @property
    def radius(self) -> int:
        return self.index.radius


def build_ball(oracle: GroupOracle, radius: int, cap: int = DEFAULT_VERTEX_CAP) -> Ball:
    if radius < 0:
        raise InputError("radius must be >= 0")
    spheres = [((),)]
    index = {(): 0}
    norm = oracle.normalizer
    letters = oracle.letters
    for k in range(radius):
        nxt = []
        for u in spheres[k]:
            for x in letters:
                w = norm(u + (x,))
                if len(w) == k + 1 and w not in index:
                    index[w] = len(index)
                    nxt.append(w)
                    if len(index) > cap:
                        raise ResourceError(
                            f"ball of radius {radius} in {oracle.describe()} exceeds vertex cap {cap}",
                            cap=cap,
                        )
        spheres.append(tuple(nxt))
    b = GraphBuilder()
    words = [w for s in spheres for w in s]
    for w in words:
        b.add_vertex(GroupVertex(w))
    for i, u in enumerate(words):
        for x in letters:
            j = index.get(norm(u + (x,)))
            if j is not None and j != i:
                b.add_edge(i, j, 2)
    graph = b.finalize(oracle.format)
    return Ball(graph, BallIndex(oracle, radius, index, tuple(spheres), tuple(words)))


def sphere(index: BallIndex, k: int):
    return index.sphere(k)
