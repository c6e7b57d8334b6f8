from __future__ import annotations

import itertools

import pytest
from hypothesis import given, strategies as st

from oracles import two_vertex_connected
from sybileq.errors import DuplicateId, InvalidWiring, NoLayout, PreconditionError, SizeTooSmall
from sybileq.topology import (
    ID_SPACE,
    Direction,
    DuplicationScheme,
    Topology,
    apply_duplication,
    build_ring,
    check_two_vertex_connected,
    fresh_ids,
    from_edges,
    h_construction,
    owners_map,
    ring_distance,
)


def test_triangle_ring_keeps_layout():
    t = build_ring(3, [7, 2, 9])
    assert t.layout == (7, 2, 9)
    assert t.edges == {(2, 7), (2, 9), (7, 9)}


def test_four_ring_edges():
    assert build_ring(4, [1, 2, 3, 4]).edges == {(1, 2), (2, 3), (3, 4), (1, 4)}


def test_ten_ring_with_random_ids():
    ids = fresh_ids((), 10, seed=3)
    t = build_ring(10, ids)
    assert t.n == 10 and len(t.edges) == 10
    assert all(t.degree(v) == 2 for v in t.nodes)
    assert all(0 < v <= ID_SPACE for v in ids)


def test_ring_rejects_small_and_duplicate():
    with pytest.raises(SizeTooSmall):
        build_ring(2, [1, 2])
    with pytest.raises(DuplicateId):
        build_ring(3, [1, 1, 2])


def test_topology_rejects_self_loops():
    with pytest.raises(Exception):
        from_edges([1, 2], [(1, 1)])


def test_two_connectivity_examples():
    assert check_two_vertex_connected(build_ring(5, [1, 2, 3, 4, 5]))
    assert not check_two_vertex_connected(from_edges([1, 2, 3], [(1, 2), (2, 3)]))
    bowtie = from_edges([1, 2, 3, 4, 5], [(1, 2), (2, 3), (3, 1), (3, 4), (4, 5), (5, 3)])
    assert not check_two_vertex_connected(bowtie)


def test_duplication_splices_ring():
    t = build_ring(3, [1, 2, 3])
    g = apply_duplication(t, DuplicationScheme(2, (21, 22)))
    assert g.layout == (1, 21, 22, 3)
    assert g.is_ring


def test_duplication_d1_is_renaming():
    t = build_ring(4, [1, 2, 3, 4])
    g = apply_duplication(t, DuplicationScheme(2, (20,)))
    assert g.layout == (1, 20, 3, 4)
    assert g.n == t.n


def test_h_construction_size():
    g, s = h_construction([11, 12, 13], 99, [21, 22, 23], (31, 32))
    executed = apply_duplication(g, s)
    assert executed.n == 3 + 3 + 2
    assert executed.is_ring
    assert owners_map(g, s)[31] == 99


def test_duplication_wiring_errors():
    g = from_edges([1, 2, 3, 4], [(1, 2), (2, 3), (3, 4), (4, 1), (1, 3)])
    with pytest.raises(InvalidWiring):
        apply_duplication(g, DuplicationScheme(1, (10, 11), {2: 10, 4: 11}))
    wired = apply_duplication(g, DuplicationScheme(1, (10, 11), {2: 10, 4: 11, 3: 10}))
    assert wired.n == 5 and wired.has_edge(10, 11) and wired.has_edge(3, 10)
    with pytest.raises(DuplicateId):
        apply_duplication(g, DuplicationScheme(1, (2, 11), {2: 2, 4: 11, 3: 2}))
    with pytest.raises(PreconditionError):
        DuplicationScheme(1, ())


def test_ring_distance_examples():
    t = build_ring(4, [1, 2, 3, 4])
    assert ring_distance(t, 1, 2, Direction.CW) == 1
    assert ring_distance(t, 1, 2, "ccw") == 3
    assert ring_distance(t, 1, 1, "cw") == 0
    with pytest.raises(NoLayout):
        ring_distance(from_edges([1, 2, 3], [(1, 2), (2, 3), (3, 1)]), 1, 2, "cw")


def test_text_round_trip():
    t = build_ring(5, [5, 3, 9, 1, 7])
    assert Topology.from_text(t.to_text()) == t


@given(st.integers(3, 12), st.integers(0, 11), st.integers(1, 6), st.integers(0, 1000))
def test_duplication_size_and_ringness(n, pos, d, seed):
    ids = fresh_ids((), n, seed=seed)
    t = build_ring(n, ids)
    cheater = ids[pos % n]
    s = DuplicationScheme(cheater, tuple(fresh_ids(ids, d, seed=seed + 1)))
    g = apply_duplication(t, s)
    assert g.n == n + d - 1
    assert g.layout is not None and g.is_ring


@given(st.integers(3, 12), st.data())
def test_ring_distances_sum_to_n(n, data):
    ids = list(range(1, n + 1))
    t = build_ring(n, data.draw(st.permutations(ids)))
    a, b = data.draw(st.sampled_from(ids)), data.draw(st.sampled_from(ids))
    cw, ccw = ring_distance(t, a, b, "cw"), ring_distance(t, a, b, "ccw")
    assert 0 <= cw < n and 0 <= ccw < n
    if a != b:
        assert cw + ccw == n


@st.composite
def small_graphs(draw):
    n = draw(st.integers(1, 8))
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return list(range(1, n + 1)), edges


@given(small_graphs())
def test_two_connectivity_matches_node_removal_oracle(g):
    nodes, edges = g
    t = from_edges(nodes, edges)
    assert check_two_vertex_connected(t) == two_vertex_connected(set(nodes), edges)
