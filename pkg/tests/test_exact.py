import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bxmech.core import LengthFunction, TradingCycle
from bxmech.cyclegraph import build_graph
from bxmech.exact import (
    ExactSearchCapExceeded,
    max_weight_independent_set,
    naive_max_weight_independent_set,
)
from bxmech.instances import gen_random


def shifted_copy(graph, offset):
    """Same conflict structure with every agent id raised by ``offset``."""
    nodes = [TradingCycle(tuple(a + offset for a in v.agents)) for v in graph.nodes]
    lam = graph.lam
    return build_graph(nodes, graph.n + offset, lam, node_order=nodes)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(min_value=0, max_value=10_000),
    st.sampled_from([0.3, 0.5, 0.8]),
    st.sampled_from(["1", "9/10", "1/2"]),
)
def test_solver_agrees_with_naive_scan(seed, p, tail):
    lam = LengthFunction.of(3, "1", tail)
    graph = gen_random(6, 3, p, seed, lam=lam).graph()
    if graph.num_nodes > 16:
        return
    assert max_weight_independent_set(graph) == naive_max_weight_independent_set(graph)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_subset_dp_route_matches_suffix_route(seed):
    # shifting agent ids past the DP threshold flips the bound strategy but
    # must not change which set (up to relabeling) is returned
    lam = LengthFunction.of(3, "1", "9/10")
    graph = gen_random(6, 3, 0.5, seed, lam=lam).graph()
    if graph.num_nodes > 18:
        return
    shifted = shifted_copy(graph, 20)
    assert shifted.n > 16
    direct = max_weight_independent_set(graph)
    relabeled = max_weight_independent_set(shifted)
    expect = {
        TradingCycle(tuple(a + 20 for a in v.agents)) for v in direct
    }
    assert relabeled == frozenset(expect)


def test_restriction_to_node_subset():
    lam = LengthFunction.uniform(3)
    graph = gen_random(6, 3, 0.6, 5, lam=lam).graph()
    short = [v for v in graph.nodes if v.length == 2]
    best = max_weight_independent_set(graph, within=short)
    assert best <= frozenset(short)
    assert best == naive_max_weight_independent_set(graph, within=short)


def test_cap_refuses_oversized_suffix_search():
    lam = LengthFunction.uniform(3)
    graph = gen_random(18, 3, 0.6, 1, lam=lam).graph()
    assert graph.n > 16
    with pytest.raises(ExactSearchCapExceeded):
        max_weight_independent_set(graph, node_cap=15)
    with pytest.raises(ExactSearchCapExceeded):
        naive_max_weight_independent_set(graph, hard_cap=15)


def test_lexicographic_tie_break_is_first_by_rank():
    # two disjoint optima: {a, d} and {b, c} with equal weight; the solver
    # must return the one whose sorted rank tuple comes first
    a, b = TradingCycle((1, 2)), TradingCycle((1, 3))
    c, d = TradingCycle((2, 3)), TradingCycle((4, 5))
    graph = build_graph([a, b, c, d], 5, LengthFunction.uniform(3))
    best = max_weight_independent_set(graph)
    assert best == frozenset({a, d})
    assert naive_max_weight_independent_set(graph) == best
