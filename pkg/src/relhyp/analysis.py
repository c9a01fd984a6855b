"""Hyperbolicity measurements (four-point and slim-triangle delta) and fineness profiles.

Distances are in the doubled integer scale of :mod:`relhyp.graphcore`.  The
four-point value is kept as ``S1 - S2`` (largest minus second largest pair
sum), which is twice the scaled delta and always an integer.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from .cayley import Ball
from .coning import ConedGraph
from .cusping import CuspedGraph
from .errors import InputError, ResourceError
from .graphcore import INF, SCALE, MetricGraph

# older system TBB builds: numba falls back to another threading layer, which is fine
warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)

EXHAUSTIVE_CAP = 120
DEFAULT_SAMPLES = 100_000
DEFAULT_SLIM_SAMPLES = 20_000
FINENESS_MAX_LEN = 12
FINENESS_BUDGET = 1_000_000
INF_I64 = np.int64(INF)


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator: draws depend only on (seed, stream)."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), int(stream)]))


@dataclass(frozen=True)
class DeltaPolicy:
    mode: str = "auto"  # auto | exhaustive | sampled
    samples: int = DEFAULT_SAMPLES
    slim_samples: int = DEFAULT_SLIM_SAMPLES
    seed: int = 0
    cap: int = EXHAUSTIVE_CAP

    def __post_init__(self):
        if self.mode not in ("auto", "exhaustive", "sampled"):
            raise InputError(f"unknown delta policy {self.mode!r}")
        if self.samples < 1 or self.slim_samples < 1 or self.cap < 4:
            raise InputError("policy sample counts must be positive and cap >= 4")

    def exhaustive_for(self, npoints: int) -> bool:
        if self.mode == "exhaustive":
            if npoints > self.cap:
                raise ResourceError(
                    f"exhaustive scan refused: {npoints} points exceed cap {self.cap}", cap=self.cap)
            return True
        if self.mode == "sampled":
            return False
        return npoints <= self.cap


@dataclass(frozen=True)
class DeltaReport:
    radius: int | None
    vertex_count: int
    point_count: int
    four_point_x2: int | None  # S1 - S2 in scaled units
    slim: int | None  # scaled units
    method: str  # "exhaustive" or "sampled(n, seed)"
    slim_method: str | None = None
    inner_margin: int = 0

    @property
    def four_point(self) -> float | None:
        """Four-point delta in unscaled units."""
        return None if self.four_point_x2 is None else self.four_point_x2 / (2 * SCALE)

    @property
    def slim_unscaled(self) -> float | None:
        return None if self.slim is None else self.slim / SCALE

    def to_dict(self) -> dict:
        d = asdict(self)
        d["four_point"] = self.four_point
        d["slim_unscaled"] = self.slim_unscaled
        return d


# -- kernels ------------------------------------------------------------


@numba.njit(cache=True)
def _quad_gap(dwx, dyz, dwy, dxz, dwz, dxy):
    a = dwx + dyz
    b = dwy + dxz
    c = dwz + dxy
    if a >= b:
        if b >= c:
            return a - b
        if a >= c:
            return a - c
        return c - a
    if a >= c:
        return b - a
    if b >= c:
        return b - c
    return c - b


@numba.njit(cache=True, parallel=True)
def _four_point_all(D):
    n = D.shape[0]
    per = np.zeros(n, dtype=np.int64)
    for w in numba.prange(n):
        best = 0
        for x in range(w + 1, n):
            dwx = D[w, x]
            for y in range(x + 1, n):
                dwy = D[w, y]
                dxy = D[x, y]
                for z in range(y + 1, n):
                    v = _quad_gap(dwx, D[y, z], dwy, D[x, z], D[w, z], dxy)
                    if v > best:
                        best = v
        per[w] = best
    return per.max() if n > 0 else 0


@numba.njit(cache=True)
def _four_point_sampled(D, quads):
    best = 0
    for t in range(quads.shape[0]):
        w, x, y, z = quads[t, 0], quads[t, 1], quads[t, 2], quads[t, 3]
        v = _quad_gap(D[w, x], D[y, z], D[w, y], D[x, z], D[w, z], D[x, y])
        if v > best:
            best = v
    return best


@numba.njit(cache=True)
def _side_gap(D, paths, lens, s, o1, o2):
    # max over vertices of side s of the distance to sides o1 and o2
    worst = 0
    for i in range(lens[s]):
        v = paths[s, i]
        near = INF_I64
        for j in range(lens[o1]):
            d = D[v, paths[o1, j]]
            if d < near:
                near = d
        for j in range(lens[o2]):
            d = D[v, paths[o2, j]]
            if d < near:
                near = d
        if near > worst:
            worst = near
    return worst



@numba.njit(cache=True)
def _slim_triples(D, paths, lens, pair, triples):
    best = 0
    for t in range(triples.shape[0]):
        i, j, k = triples[t, 0], triples[t, 1], triples[t, 2]
        a = pair[i, j]
        b = pair[j, k]
        c = pair[i, k]
        for s, o1, o2 in ((a, b, c), (b, a, c), (c, a, b)):
            v = _side_gap(D, paths, lens, s, o1, o2)
            if v > best:
                best = v
    return best


# -- point sets -----------------------------------------------------------


def space_graph(space) -> MetricGraph:
    if isinstance(space, MetricGraph):
        return space
    if isinstance(space, Ball):
        return space.graph
    if isinstance(space, ConedGraph):
        return space.coned
    if isinstance(space, CuspedGraph):
        return space.graph
    raise InputError(f"not a space: {type(space).__name__}")


def space_radius(space) -> int | None:
    if isinstance(space, Ball):
        return space.radius
    if isinstance(space, (ConedGraph, CuspedGraph)):
        return space.ball.radius
    return None


def default_margin(space) -> int:
    return 1 if isinstance(space, (ConedGraph, CuspedGraph)) else 0


def sample_points(space, margin: int | None = None) -> list:
    """Group vertices within word length R - margin; every vertex for a bare graph."""
    g = space_graph(space)
    if isinstance(space, MetricGraph):
        return list(range(g.n))
    if margin is None:
        margin = default_margin(space)
    ball = space if isinstance(space, Ball) else space.ball
    limit = ball.radius - margin
    if limit < 0:
        raise InputError(f"inner margin {margin} exceeds radius {ball.radius}")
    return [i for i, w in enumerate(ball.index.words) if len(w) <= limit]


def _submatrix(g: MetricGraph, points) -> np.ndarray:
    D = g.all_pairs().astype(np.int64)
    sub = D[np.ix_(points, points)]
    if np.any(sub >= INF):
        raise InputError("sample points are not mutually connected")
    return D, sub


# -- delta ----------------------------------------------------------------


def four_point_value(D: np.ndarray, policy: DeltaPolicy = DeltaPolicy()) -> tuple[int, str]:
    """``(S1 - S2, method)`` on a square distance matrix."""
    D = np.ascontiguousarray(D, dtype=np.int64)
    n = D.shape[0]
    if n < 4:
        return 0, "exhaustive"
    if policy.exhaustive_for(n):
        return int(_four_point_all(D)), "exhaustive"
    quads = rng_for(policy.seed, 1).integers(0, n, size=(policy.samples, 4))
    return int(_four_point_sampled(D, quads)), f"sampled({policy.samples}, {policy.seed})"


def four_point_delta(space, policy: DeltaPolicy = DeltaPolicy(), margin: int | None = None) -> DeltaReport:
    g = space_graph(space)
    pts = sample_points(space, margin)
    _, sub = _submatrix(g, pts)
    val, method = four_point_value(sub, policy)
    m = 0 if isinstance(space, MetricGraph) else (default_margin(space) if margin is None else margin)
    return DeltaReport(space_radius(space), g.n, len(pts), val, None, method, None, m)


def _geodesic_table(g: MetricGraph, D: np.ndarray, points):
    n = len(points)
    pair = np.zeros((n, n), dtype=np.int64)
    paths = []
    for i in range(n):
        for j in range(i + 1, n):
            p = g.extract_geodesic(points[i], points[j], D[:, points[j]]).vertices
            pair[i, j] = pair[j, i] = len(paths)
            paths.append(p)
    width = max((len(p) for p in paths), default=1)
    arr = np.zeros((max(len(paths), 1), width), dtype=np.int64)
    lens = np.zeros(max(len(paths), 1), dtype=np.int64)
    for k, p in enumerate(paths):
        arr[k, : len(p)] = p
        lens[k] = len(p)
    return arr, lens, pair


def slim_value(g: MetricGraph, D: np.ndarray, points, policy: DeltaPolicy = DeltaPolicy()) -> tuple[int, str]:
    n = len(points)
    if n < 3:
        return 0, "exhaustive"
    if policy.exhaustive_for(n):
        triples = np.array([(i, j, k) for i in range(n) for j in range(i + 1, n) for k in range(j + 1, n)],
                           dtype=np.int64)
        method = "exhaustive"
    else:
        raw = rng_for(policy.seed, 2).integers(0, n, size=(policy.slim_samples, 3))
        raw.sort(axis=1)
        keep = (raw[:, 0] < raw[:, 1]) & (raw[:, 1] < raw[:, 2])
        triples = np.ascontiguousarray(raw[keep])
        method = f"sampled({policy.slim_samples}, {policy.seed})"
    paths, lens, pair = _geodesic_table(g, D, points)
    if len(triples) == 0:
        return 0, method
    return int(_slim_triples(np.ascontiguousarray(D, dtype=np.int64), paths, lens, pair, triples)), method


def slim_delta(space, policy: DeltaPolicy = DeltaPolicy(), margin: int | None = None) -> DeltaReport:
    g = space_graph(space)
    pts = sample_points(space, margin)
    D, _ = _submatrix(g, pts)
    val, method = slim_value(g, D, pts, policy)
    m = 0 if isinstance(space, MetricGraph) else (default_margin(space) if margin is None else margin)
    return DeltaReport(space_radius(space), g.n, len(pts), None, val, method, method, m)


def measure_delta(space, policy: DeltaPolicy = DeltaPolicy(), margin: int | None = None,
                  slim: bool = True) -> DeltaReport:
    """Both constants from one distance matrix."""
    g = space_graph(space)
    pts = sample_points(space, margin)
    D, sub = _submatrix(g, pts)
    fp, method = four_point_value(sub, policy)
    sv, smethod = slim_value(g, D, pts, policy) if slim else (None, None)
    m = 0 if isinstance(space, MetricGraph) else (default_margin(space) if margin is None else margin)
    return DeltaReport(space_radius(space), g.n, len(pts), fp, sv, method, smethod, m)


def verdict(values: Sequence[int]) -> str:
    """bounded: last three equal; growing: strictly increasing; else inconclusive."""
    values = list(values)
    if len(values) < 3:
        raise InputError("a verdict needs at least three values")
    if values[-1] == values[-2] == values[-3]:
        return "bounded"
    if all(a < b for a, b in zip(values, values[1:])):
        return "growing"
    return "inconclusive"


@dataclass(frozen=True)
class DeltaScan:
    label: str
    reports: tuple
    verdict: str  # from the four-point series
    slim_verdict: str | None = None

    def series(self) -> list:
        return [r.four_point_x2 for r in self.reports]

    def to_dict(self) -> dict:
        return {"label": self.label, "verdict": self.verdict, "slim_verdict": self.slim_verdict,
                "reports": [r.to_dict() for r in self.reports]}


def delta_growth_scan(build: Callable[[int], object], radii: Sequence[int],
                      policy: DeltaPolicy = DeltaPolicy(), margin: int | None = None,
                      slim: bool = False, label: str = "") -> DeltaScan:
    radii = list(radii)
    if len(radii) < 3:
        raise InputError("a growth scan needs at least three radii")
    if any(a >= b for a, b in zip(radii, radii[1:])):
        raise InputError(f"radii must be strictly increasing: {radii}")
    reports = tuple(measure_delta(build(r), policy, margin, slim) for r in radii)
    sv = verdict([r.slim for r in reports]) if slim else None
    return DeltaScan(label, reports, verdict([r.four_point_x2 for r in reports]), sv)


# -- fineness ---------------------------------------------------------------


@dataclass(frozen=True)
class FinenessProfile:
    max_len: int  # unscaled units
    lengths: tuple  # unscaled lengths 3..max_len
    counts: dict = field(default_factory=dict)  # (u, v) -> cumulative counts per length
    labels: dict = field(default_factory=dict)  # (u, v) -> (label u, label v)

    def to_dict(self) -> dict:
        return {"max_len": self.max_len, "lengths": list(self.lengths),
                "edges": [{"edge": [int(u), int(v)], "labels": list(self.labels[(u, v)]),
                           "counts": list(c)} for (u, v), c in sorted(self.counts.items())]}


def circuits_through(g: MetricGraph, u: int, v: int, limit: int, budget: int = FINENESS_BUDGET) -> list:
    """Scaled lengths of all vertex-simple cycles through edge {u, v} of scaled length <= limit."""
    w0 = g.weight(u, v)
    if w0 is None:
        raise InputError(f"{u}-{v} is not an edge")
    to_u = g.distances_from(u)
    found = []
    on_path = np.zeros(g.n, dtype=bool)
    on_path[v] = True
    expansions = 0
    # walk v -> ... -> u without the edge itself
    stack = [(v, w0, iter(g.neighbors(v)))]
    while stack:
        cur, length, it = stack[-1]
        step = next(it, None)
        if step is None:
            on_path[cur] = False
            stack.pop()
            continue
        x, w = step
        nl = length + w
        if x == u:
            if cur != v and nl <= limit:
                found.append(nl)
            continue
        if on_path[x] or nl + to_u[x] > limit:
            continue
        expansions += 1
        if expansions > budget:
            raise ResourceError(f"circuit enumeration exceeded budget {budget}", cap=budget,
                                partial=sorted(found))
        on_path[x] = True
        stack.append((x, nl, iter(g.neighbors(x))))
    return sorted(found)


def identity_cone_edges(coned: ConedGraph) -> list:
    """Edges joining the identity to the cone vertex of each of its cosets."""
    e = coned.ball.index.vertex(())
    return [(e, owner[e]) for owner in coned.cone_of]


def fineness_profile(space, max_len: int, edges=None, budget: int = FINENESS_BUDGET) -> FinenessProfile:
    """Cumulative circuit counts through each selected edge, for lengths 3..max_len."""
    g = space_graph(space)
    if not 3 <= max_len <= FINENESS_MAX_LEN:
        raise InputError(f"max_len must be in 3..{FINENESS_MAX_LEN}")
    if edges is None:
        edges = identity_cone_edges(space) if isinstance(space, ConedGraph) else [(u, v) for u, v, _ in g.edges()]
    lengths = tuple(range(3, max_len + 1))
    counts, labels = {}, {}
    for u, v in edges:
        u, v = g.check(u), g.check(v)
        found = np.array(circuits_through(g, u, v, SCALE * max_len, budget), dtype=np.int64)
        counts[(u, v)] = tuple(int(np.sum(found <= SCALE * n)) for n in lengths)
        labels[(u, v)] = (g.label(u), g.label(v))
    return FinenessProfile(max_len, lengths, counts, labels)


# -- export -----------------------------------------------------------------

_CSV_FIELDS = ["radius", "vertex_count", "point_count", "four_point_x2", "four_point", "slim",
               "slim_unscaled", "method", "slim_method", "inner_margin"]


def reports_csv(reports) -> bytes:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=_CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow({k: r.to_dict()[k] for k in _CSV_FIELDS})
    return buf.getvalue().encode()


def reports_json(obj) -> bytes:
    doc = obj.to_dict() if hasattr(obj, "to_dict") else [r.to_dict() for r in obj]
    return (json.dumps(doc, indent=1, sort_keys=True) + "\n").encode()


def scan_svg(scan: DeltaScan, width: int = 360, height: int = 240) -> bytes:
    """Line chart of radius against four-point delta (unscaled units)."""
    pts = [(r.radius, r.four_point) for r in scan.reports]
    pad = 40
    xs = [p[0] for p in pts]
    ymax = max([p[1] for p in pts] + [1.0])
    x0, x1 = min(xs), max(xs)

    def sx(x):
        return pad + (x - x0) / max(x1 - x0, 1) * (width - 2 * pad)

    def sy(y):
        return height - pad - y / ymax * (height - 2 * pad)

    line = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<text x="{pad}" y="20" font-size="12">{scan.label} ({scan.verdict})</text>',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
           f'<polyline points="{line}" fill="none" stroke="steelblue" stroke-width="2"/>']
    for x, y in pts:
        out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3"/>')
        out.append(f'<text x="{sx(x):.1f}" y="{height - pad + 15}" font-size="10">{x}</text>')
    out.append(f'<text x="5" y="{pad}" font-size="10">{ymax:g}</text>')
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode()
