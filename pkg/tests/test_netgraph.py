import numpy as np
import pytest

from portflow.errors import (
    DisconnectedError,
    DuplicateEdgeError,
    GraphError,
    SelfLoopError,
    UnknownVertexError,
)
from portflow.netgraph import build_graph

from conftest import random_graph


def test_single_edge():
    g = build_graph([(0, 1)])
    assert g.n == 2 and g.m == 1
    inc = g.incidence(0)
    assert inc.edges == (0,) and inc.endpoint == (0,) and inc.nu == (-1,)
    inc1 = g.incidence(1)
    assert inc1.endpoint == (1,) and inc1.nu == (1,)


def test_star_orientation():
    # hub at vertex 1: one incoming edge, the rest leaving
    n_leaves = 5
    edges = [(0, 1)] + [(1, i + 2) for i in range(n_leaves)]
    g = build_graph(edges)
    hub = g.incidence(1)
    assert hub.degree == n_leaves + 1
    assert hub.head_side == (0,)
    assert hub.tail_side == tuple(range(1, n_leaves + 1))


def test_duplicate_edge_rejected():
    with pytest.raises(DuplicateEdgeError):
        build_graph([(0, 1), (0, 1)])
    with pytest.raises(DuplicateEdgeError):
        build_graph([(0, 1), (1, 0)])


def test_self_loop_rejected():
    with pytest.raises(SelfLoopError):
        build_graph([(0, 0)])


def test_disconnected_rejected():
    with pytest.raises(DisconnectedError):
        build_graph([(0, 1), (2, 3)])


def test_empty_rejected():
    with pytest.raises(GraphError):
        build_graph([])


def test_unknown_vertex():
    g = build_graph([(0, 1)])
    with pytest.raises(UnknownVertexError):
        g.incidence(5)


def test_labels_normalized_in_input_order():
    g = build_graph([("a", "b"), ("b", "c")])
    assert g.vertex_labels == ("a", "b", "c")
    assert g.edges == ((0, 1), (1, 2))


def test_handshake_and_edge_coverage_on_random_graphs():
    rng = np.random.default_rng(3)
    for _ in range(50):
        g = random_graph(rng)
        total = sum(g.incidence(v).degree for v in range(g.n))
        assert total == 2 * g.m
        seen = {}
        for v in range(g.n):
            inc = g.incidence(v)
            assert list(inc.edges) == sorted(inc.edges)
            for e, l in zip(inc.edges, inc.endpoint):
                seen.setdefault(e, []).append(l)
        for e in range(g.m):
            assert sorted(seen[e]) == [0, 1]
