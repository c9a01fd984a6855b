"""Bounded coset penetration: quasigeodesic enumeration and separation statistics.

Quasigeodesics live in the Cayley ball; their hat-paths live in the coned-off
graph.  All separations are base Cayley distances in the doubled scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cayley import Ball, build_ball
from .coning import ConedGraph, cone_off, hat_path, is_without_backtracking, penetrations
from .errors import ConfigError, InputError, ResourceError
from .graphcore import INF, SCALE
from .words import GroupOracle, PeripheralFamily

DEFAULT_BUDGET = 1_000_000
DEFAULT_LAMBDAS = (1, 2)
LAMBDA_GATE = 2  # larger lambda needs allow_large=True


@dataclass(frozen=True)
class QuasiParams:
    lam: Fraction
    max_len: int  # unscaled units

    def __init__(self, lam, max_len: int, allow_large: bool = False):
        lam = Fraction(lam)
        if lam < 1:
            raise InputError(f"lambda must be >= 1, got {lam}")
        if lam > LAMBDA_GATE and not allow_large:
            raise InputError(f"lambda {lam} > {LAMBDA_GATE} needs an explicit opt-in")
        if max_len < 1:
            raise InputError("max path length must be >= 1")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "max_len", int(max_len))

    def ok(self, length: int, dist: int) -> bool:
        """length <= lam * dist, exactly."""
        return length * self.lam.denominator <= self.lam.numerator * dist


def _ball_graph(space):
    if isinstance(space, ConedGraph):
        return space.base
    if isinstance(space, Ball):
        return space.graph
    return space


def enumerate_quasigeodesics(space, u: int, v: int, qp: QuasiParams, budget: int = DEFAULT_BUDGET,
                             dist=None) -> list:
    """All u->v paths of length <= L whose every subpath q has |q| <= lam * d(ends of q).

    Depth-first; a branch is cut once length + d(x, v) exceeds lam * d(u, v) or L.
    """
    g = _ball_graph(space)
    u, v = g.check(u), g.check(v)
    if dist is None:
        dist = g.all_pairs().astype(np.int64)
    duv = int(dist[u, v])
    if duv >= INF:
        raise InputError(f"no path from {u} to {v}")
    limit = SCALE * qp.max_len
    if qp.lam.numerator * duv > qp.lam.denominator * limit:
        raise InputError(f"d(u, v) = {duv / SCALE:g} exceeds L / lambda")
    cap = min(limit, (qp.lam.numerator * duv) // qp.lam.denominator)
    out = []
    path = [u]
    prefix = [0]  # prefix[i] = length of path[:i+1]
    on = {u}
    expansions = 0

    def extend():
        nonlocal expansions
        cur = path[-1]
        if cur == v:
            out.append(tuple(path))
            return
        for x, w in g.neighbors(cur):
            if x in on:
                continue
            nl = prefix[-1] + w
            if nl + dist[x, v] > cap:
                continue
            if not all(qp.ok(nl - prefix[i], int(dist[path[i], x])) for i in range(len(path))):
                continue
            expansions += 1
            if expansions > budget:
                raise ResourceError(f"quasigeodesic enumeration exceeded budget {budget}",
                                    cap=budget, partial=list(out))
            path.append(x)
            prefix.append(nl)
            on.add(x)
            extend()
            on.discard(x)
            prefix.pop()
            path.pop()

    extend()
    return out


def is_quasigeodesic(g, path, qp: QuasiParams, dist) -> bool:
    """Post-hoc check of the subpath inequality over all O(L^2) subpaths."""
    lengths = [0]
    for a, b in zip(path, path[1:]):
        w = g.weight(a, b)
        if w is None:
            return False
        lengths.append(lengths[-1] + w)
    if lengths[-1] > SCALE * qp.max_len:
        return False
    for i in range(len(path)):
        for j in range(i + 1, len(path)):
            if not qp.ok(lengths[j] - lengths[i], int(dist[path[i], path[j]])):
                return False
    return True


@dataclass
class Separation:
    value: int = 0  # scaled units
    witness: tuple | None = None  # (gamma, gamma', cone label)

    def offer(self, value: int, witness):
        if value > self.value or (self.witness is None and value == self.value):
            self.value = value
            self.witness = witness


@dataclass
class BcpReport:
    lam: Fraction
    radius: int | None
    pairs: int = 0
    case1: Separation = field(default_factory=Separation)
    entering: Separation = field(default_factory=Separation)
    exiting: Separation = field(default_factory=Separation)
    words: tuple = field(default=(), repr=False)  # ball words, for annotating witnesses

    @property
    def max_separation(self) -> int:
        return max(self.case1.value, self.entering.value, self.exiting.value)

    def to_dict(self, fmt=None) -> dict:
        words = self.words if fmt is not None and self.words else None

        def path_doc(p):
            doc = {"vertices": list(p)}
            if words is not None:
                doc["words"] = [fmt(words[x]) for x in p]
            return doc

        def sep_doc(s: Separation):
            d = {"value": s.value, "unscaled": s.value / SCALE, "witness": None}
            if s.witness is not None and s.value > 0:
                a, b, label = s.witness
                d["witness"] = {"gamma": path_doc(a), "gamma_prime": path_doc(b), "coset": label}
            return d

        return {"lambda": str(self.lam), "radius": self.radius, "pairs": self.pairs,
                "case1": sep_doc(self.case1), "entering": sep_doc(self.entering),
                "exiting": sep_doc(self.exiting)}


def check_family(family: PeripheralFamily):
    """Reject families whose distinct peripherals have commuting generators.

    Cosets of such subgroups meet along whole lines of the hat-path, so the
    run decomposition depends on an arbitrary priority.
    """
    reps = list(family)
    for i, p in enumerate(reps):
        for q in reps[i + 1:]:
            o = p.oracle
            for g in p.generators:
                for h in q.generators:
                    if o.multiply(g, h) == o.multiply(h, g) and o.normalize(g) and o.normalize(h):
                        raise ConfigError(
                            f"peripherals {p.label} and {q.label} commute; coset penetration "
                            "is ambiguous for such families", key="peripherals")


def _records(coned: ConedGraph, path):
    hp = hat_path(coned, path)
    if not is_without_backtracking(coned, hp):
        raise InputError(f"hat-path of {list(path)} backtracks")
    return {r.cone: r for r in penetrations(coned, hp)}


def bcp_check(coned: ConedGraph, pairs, lam=1, dist=None, report: BcpReport | None = None) -> BcpReport:
    """Accumulate case-1 and case-2 separations over path pairs."""
    base = coned.base
    if dist is None:
        dist = base.all_pairs().astype(np.int64)
    if report is None:
        report = BcpReport(Fraction(lam), coned.ball.radius)
    cache: dict = {}
    for a, b in pairs:
        a, b = tuple(a), tuple(b)
        for end in (a[0], a[-1], b[-1]):
            if not 0 <= end < coned.n_base:
                raise InputError(f"endpoint {end} is not a group vertex")
        if a[0] != b[0]:
            raise InputError("paired paths must share their initial vertex")
        if dist[a[-1], b[-1]] > SCALE:
            raise InputError("terminal vertices are more than 1 apart")
        ra = cache[a] if a in cache else cache.setdefault(a, _records(coned, a))
        rb = cache[b] if b in cache else cache.setdefault(b, _records(coned, b))
        report.pairs += 1
        for cone in sorted(set(ra) | set(rb)):
            label = coned.coned.label(cone)
            x, y = ra.get(cone), rb.get(cone)
            if x is not None and y is not None:
                report.entering.offer(int(dist[x.enter, y.enter]), (a, b, label))
                report.exiting.offer(int(dist[x.exit, y.exit]), (a, b, label))
            else:
                r, pa, pb = (x, a, b) if x is not None else (y, b, a)
                report.case1.offer(int(dist[r.enter, r.exit]), (pa, pb, label))
    return report


def scan_pairs(coned: ConedGraph, qp: QuasiParams, dist, budget: int = DEFAULT_BUDGET):
    """Quasigeodesic pairs from the identity to t and t', t on the outer sphere,
    t' equal or adjacent to t.  Paths whose hat-path backtracks are skipped."""
    ball = coned.ball
    e = ball.index.vertex(())
    g = ball.graph
    memo: dict = {}

    def paths(t):
        if t not in memo:
            found = enumerate_quasigeodesics(ball, e, t, qp, budget, dist)
            memo[t] = [p for p in found if is_without_backtracking(coned, hat_path(coned, p))]
        return memo[t]

    for w in ball.index.sphere(ball.radius):
        t = ball.index.vertex(w)
        ends = [t] + [x for x, _ in g.neighbors(t)]
        for t2 in ends:
            for a in paths(t):
                for b in paths(t2):
                    yield a, b


@dataclass(frozen=True)
class BcpScan:
    lam: Fraction
    reports: tuple
    verdict: str  # boundedness-consistent | violation-witnessed

    def to_dict(self, fmt=None) -> dict:
        return {"lambda": str(self.lam), "verdict": self.verdict,
                "reports": [r.to_dict(fmt) for r in self.reports]}


def scan_verdict(maxima: Sequence[int]) -> str:
    if len(maxima) >= 2 and all(b >= a + SCALE for a, b in zip(maxima, maxima[1:])):
        return "violation-witnessed"
    return "boundedness-consistent"


def bcp_scan(oracle: GroupOracle, family: PeripheralFamily, lam, radii: Sequence[int],
             budget: int = DEFAULT_BUDGET, allow_large: bool = False, cap: int | None = None) -> BcpScan:
    radii = list(radii)
    if any(a >= b for a, b in zip(radii, radii[1:])):
        raise InputError(f"radii must be strictly increasing: {radii}")
    check_family(family)
    reports = []
    for R in radii:
        ball = build_ball(oracle, R) if cap is None else build_ball(oracle, R, cap)
        coned = cone_off(ball, family)
        dist = ball.graph.all_pairs().astype(np.int64)
        qp = QuasiParams(lam, int(np.ceil(Fraction(lam) * R)), allow_large)
        rep = BcpReport(qp.lam, R, words=ball.index.words)
        bcp_check(coned, scan_pairs(coned, qp, dist, budget), lam, dist, rep)
        reports.append(rep)
    maxima = [r.max_separation for r in reports]
    return BcpScan(Fraction(lam), tuple(reports), scan_verdict(maxima))


def scan_json(scan: BcpScan, oracle: GroupOracle) -> bytes:
    """Witness paths carry word annotations; vertex indices refer to each radius's ball."""
    return (json.dumps(scan.to_dict(oracle.format), indent=1, sort_keys=True) + "\n").encode()
