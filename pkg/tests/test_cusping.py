import networkx as nx
import numpy as np
import pytest

from relhyp.cayley import build_ball
from relhyp.cusping import build_cusped, build_horoball, default_depth
from relhyp.errors import InputError
from relhyp.graphcore import GraphBuilder, PlainVertex, canonical_edge_set, cycle_graph, path_graph
from relhyp.words import PeripheralFamily, cyclic_peripheral, free_abelian, free_group

from oracles import horoball_closed_form, horoball_nx, nx_distances, to_nx

Z2 = free_abelian(2)
F2 = free_group(2)


def level_edges(hb, k):
    lo, hi = k * hb.base_size, (k + 1) * hb.base_size
    return [(u, v) for u, v, _ in hb.graph.edges() if lo <= u < hi and lo <= v < hi]


def test_single_edge_horoball():
    hb = build_horoball(path_graph(2), 1)
    assert hb.graph.n == 4 and hb.graph.edge_count == 4
    assert len(level_edges(hb, 0)) == 1 and len(level_edges(hb, 1)) == 1


def test_path_horoball_distance():
    hb = build_horoball(path_graph(9), 3)
    d = hb.graph.distances_from(hb.vertex(0, 0))[hb.vertex(8, 0)]
    assert d == 12 == 2 * horoball_closed_form(8, 3)


def test_cycle_level_three_is_complete():
    hb = build_horoball(cycle_graph(8), 3)
    assert len(level_edges(hb, 3)) == 28


@pytest.mark.parametrize("d", [2, 4, 8, 16])
def test_closed_form_on_paths(d):
    depth = d.bit_length()
    hb = build_horoball(path_graph(d + 1), depth)
    D = nx_distances(hb.graph)
    assert D[hb.vertex(0, 0), hb.vertex(d, 0)] == 2 * horoball_closed_form(d, depth)


@pytest.mark.parametrize("base,depth", [(path_graph(6), 3), (cycle_graph(7), 2), (cycle_graph(10), 4)])
def test_horoball_matches_definition(base, depth):
    hb = build_horoball(base, depth)
    ref = horoball_nx(to_nx(base), depth)
    ours = nx.Graph()
    for u, v, w in hb.graph.edges():
        assert w == 2
        ours.add_edge(divmod(u, hb.base_size)[::-1], divmod(v, hb.base_size)[::-1])
    assert set(map(frozenset, ours.edges())) == set(map(frozenset, ref.edges()))


def test_horizontal_monotone():
    hb = build_horoball(cycle_graph(12), 3)
    for k in range(3):
        below = {frozenset((u % 12, v % 12)) for u, v in level_edges(hb, k)}
        above = {frozenset((u % 12, v % 12)) for u, v in level_edges(hb, k + 1)}
        assert below <= above


def test_horoball_errors():
    b = GraphBuilder()
    b.add_vertex(PlainVertex(0))
    b.add_vertex(PlainVertex(1))
    with pytest.raises(InputError):
        build_horoball(b.finalize(), 1)
    with pytest.raises(InputError):
        build_horoball(path_graph(3), -1)


def test_default_depth():
    assert [default_depth(r) for r in (1, 2, 3, 4, 5, 8, 9)] == [1, 2, 3, 3, 4, 4, 5]


def test_empty_family_is_ball():
    ball = build_ball(F2, 2)
    cusped = build_cusped(ball, PeripheralFamily(()), depth=2)
    assert canonical_edge_set(cusped.graph) == canonical_edge_set(ball.graph)


def test_z2_cusped_counts():
    ball = build_ball(Z2, 2)
    cusped = build_cusped(ball, PeripheralFamily((cyclic_peripheral(Z2, Z2.parse("a"), "A"),)), depth=2)
    assert len(cusped.horoballs) == 5
    sizes = sorted(len(h.members) for h in cusped.horoballs)
    assert sizes == [1, 1, 3, 3, 5]
    (axis,) = [h for h in cusped.horoballs if h.key == ()]
    added = sum(len(l) for l in axis.levels[1:])
    assert added == 10
    assert cusped.graph.n == 13 + 2 * sum(sizes)


def test_f2_commutator_vertical_rays_in_induced_mode():
    ball = build_ball(F2, 4)
    fam = PeripheralFamily((cyclic_peripheral(F2, F2.parse("[a,b]"), "c"),))
    cusped = build_cusped(ball, fam, depth=2, coset_metric="induced")
    (h,) = [h for h in cusped.horoballs if h.key == ()]
    assert len(h.members) == 3 and h.degenerate
    assert ("c", ()) in cusped.degenerate_cosets
    # in the peripheral metric the same coset is a path e - [a,b] and e - [a,b]^-1
    cusped = build_cusped(ball, fam, depth=2)
    (h,) = [h for h in cusped.horoballs if h.key == ()]
    assert not h.degenerate


def test_no_cone_vertices_and_base_recovery():
    ball = build_ball(Z2, 3)
    fam = PeripheralFamily((cyclic_peripheral(Z2, Z2.parse("a"), "A"),))
    cusped = build_cusped(ball, fam)
    assert not any(cusped.graph.label(v).startswith("CONE") for v in range(cusped.graph.n))
    assert all(cusped.graph.label(v).startswith("HORO") for v in range(ball.graph.n, cusped.graph.n))
    # level-0 edges of <a> coincide with ball edges, so deletion recovers the ball
    back = cusped.graph.induced(range(ball.graph.n))
    assert canonical_edge_set(back) == canonical_edge_set(ball.graph)
    for v in range(cusped.graph.n):
        assert 0 <= cusped.base_vertex(v) < ball.graph.n


def test_cusped_distances_match_networkx():
    ball = build_ball(F2, 3)
    fam = PeripheralFamily((cyclic_peripheral(F2, F2.parse("a"), "A"),))
    g = build_cusped(ball, fam).graph
    assert np.array_equal(g.all_pairs().astype(np.int64), nx_distances(g))
