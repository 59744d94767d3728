import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bxmech.core import LengthFunction, TradingCycle
from bxmech.cyclegraph import build_from_wishes, build_graph
from bxmech.instances import gbad_blue_set, gen_gbad, gen_random
from bxmech.localsearch import (
    Algorithm,
    ImprovementRule,
    RuleContractError,
    all_for_q_rule,
    check_precedes,
    concatenate,
    expansion_rule,
    length_above,
    length_equals,
    restrict_rule,
    run_local_search,
)
from bxmech.mechanisms import greedy_algorithm, greedy_chain, greedy_phase, ls_algorithm, ls_above_algorithm

UNIFORM3 = LengthFunction.uniform(3)


def graph_of(cycles, n, lam=UNIFORM3, order=None):
    return build_graph([TradingCycle(c) for c in cycles], n, lam, node_order=[TradingCycle(c) for c in order] if order else None)


class TestExpansion:
    def test_adds_single_node(self):
        g = graph_of([(1, 2)], 2)
        rule = expansion_rule()
        assert rule.apply(g, frozenset()) == frozenset({TradingCycle((1, 2))})

    def test_maximal_returns_none(self):
        g = graph_of([(1, 2), (2, 3)], 3)
        rule = expansion_rule()
        current = frozenset({TradingCycle((1, 2))})
        assert rule.apply(g, current) is None

    def test_picks_first_in_node_order(self):
        g = graph_of([(1, 2), (3, 4), (5, 6)], 6)
        rule = expansion_rule()
        out = rule.apply(g, frozenset())
        assert out == frozenset({TradingCycle((1, 2))})


class TestAllForQ:
    def test_empty_set_has_no_candidates(self):
        g = graph_of([(1, 2)], 2)
        assert all_for_q_rule(1).apply(g, frozenset()) is None

    def test_one_for_two_swap(self):
        # one 3-cycle blocks two 2-cycles that together cover more agents
        v = TradingCycle((1, 2, 3))
        a, b, c = TradingCycle((1, 4)), TradingCycle((2, 5)), TradingCycle((3, 6))
        g = build_graph([v, a, b, c], 6, UNIFORM3)
        out = all_for_q_rule(1).apply(g, frozenset({v}))
        assert out == frozenset({a, b, c})

    def test_loyalty_blocks_agent_dropping_swap(self):
        # two 2-cycles outweigh the 3-cycle but strand agent 3
        v = TradingCycle((1, 2, 3))
        a, b = TradingCycle((1, 4)), TradingCycle((2, 5))
        g = build_graph([v, a, b], 5, UNIFORM3)
        assert all_for_q_rule(1).apply(g, frozenset({v})) is None
        broken = all_for_q_rule(1, require_loyalty=False)
        assert broken.apply(g, frozenset({v})) == frozenset({a, b})

    def test_weight_must_strictly_increase(self):
        v = TradingCycle((1, 2))
        u = TradingCycle((2, 3))
        g = build_graph([v, u], 3, UNIFORM3)
        # swapping one 2-cycle for the other gains nothing
        assert all_for_q_rule(2).apply(g, frozenset({v})) is None

    def test_gbad_stalls_both_rules(self):
        for q in (1, 2, 3):
            g = gen_gbad(q).graph()
            blue = gbad_blue_set(q)
            assert expansion_rule().apply(g, blue) is None
            assert all_for_q_rule(q).apply(g, blue) is None

    def test_rejects_bad_q(self):
        with pytest.raises(ValueError):
            all_for_q_rule(0)


class TestRestriction:
    def test_length_filter_blocks_everything(self):
        g = graph_of([(1, 2, 3)], 3)
        r2 = restrict_rule(expansion_rule(), length_equals(2), "len=2")
        assert r2.apply(g, frozenset()) is None

    def test_above_filter_skips_short_nodes(self):
        g = graph_of([(1, 2), (3, 4, 5)], 5)
        r = restrict_rule(expansion_rule(), length_above(2), ">2")
        assert r.apply(g, frozenset()) == frozenset({TradingCycle((3, 4, 5))})

    def test_flags_inherited_and_stack(self):
        base = all_for_q_rule(2)
        r = restrict_rule(base, length_above(2), ">2")
        assert r.loyal and r.inpa
        rr = restrict_rule(r, length_equals(3), "=3")
        g = graph_of([(1, 2), (1, 3, 4), (1, 2, 3, 4)], 4, LengthFunction.uniform(4))
        out = rr.apply(g, frozenset({TradingCycle((1, 2))}))
        # only the 3-cycle passes both filters, and it drops agent 2: no candidate
        assert out is None


def reference_all_for_q(graph, current, q, require_loyalty=True):
    """Brute-force mirror of the all-for-q rule: scan every neighbor subset
    and pick the canonical-first valid candidate."""
    if not current:
        return None
    pool = graph.sorted_nodes(graph.neighborhood(current) - current)
    cur_agents = graph.agents_of(current)
    cur_weight = graph.weight(current)
    best_key, best = None, None
    for size in range(1, min(len(pool), q * graph.k) + 1):
        for combo in itertools.combinations(pool, size):
            if not graph.is_independent(combo):
                continue
            evicted = frozenset(graph.neighborhood(combo) & current)
            if len(evicted) > q:
                continue
            candidate = (current - evicted) | frozenset(combo)
            if not graph.is_independent(candidate):
                continue
            if graph.weight(candidate) <= cur_weight:
                continue
            if require_loyalty:
                cand_agents = graph.agents_of(candidate)
                if not (cur_agents < cand_agents):
                    continue
            key = (
                tuple(graph.rank(v) for v in graph.sorted_nodes(combo)),
                tuple(graph.rank(v) for v in graph.sorted_nodes(evicted)),
            )
            if best_key is None or key < best_key:
                best_key, best = key, candidate
    return best


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=0, max_value=10_000),
    st.integers(min_value=1, max_value=2),
    st.booleans(),
    st.sampled_from(["1", "9/10", "1/2"]),
)
def test_all_for_q_matches_brute_force_reference(seed, q, loyal, tail):
    lam = LengthFunction.of(3, "1", tail)
    g = gen_random(6, 3, 0.5, seed, lam=lam).graph()
    if g.num_nodes == 0:
        return
    # exercise the rule from a mid-search state, not just the greedy basin
    start = run_local_search(g, [expansion_rule()]).final
    rule = all_for_q_rule(q, require_loyalty=loyal)
    assert rule.apply(g, start) == reference_all_for_q(g, start, q, loyal)


class TestDriver:
    def test_empty_graph(self):
        g = graph_of([], 2)
        trace = run_local_search(g, [expansion_rule()])
        assert trace.final == frozenset()
        assert trace.iterations == 0

    def test_single_node_single_iteration(self):
        g = graph_of([(1, 2)], 2)
        trace = run_local_search(g, [expansion_rule()])
        assert trace.iterations == 1
        assert trace.final == frozenset({TradingCycle((1, 2))})

    def test_rules_fire_in_priority_order(self):
        v = TradingCycle((1, 2, 3))
        a, b, c = TradingCycle((1, 4)), TradingCycle((2, 5)), TradingCycle((3, 6))
        g = build_graph([v, a, b, c], 6, UNIFORM3, node_order=[v, a, b, c])
        trace = run_local_search(g, [expansion_rule(), all_for_q_rule(1)])
        names = [s.rule_name for s in trace.steps]
        assert names[0] == "expand"  # grabs v first under the injected order
        assert "all-for-1" in names
        assert trace.final == frozenset({a, b, c})

    def test_requires_rules(self):
        with pytest.raises(ValueError):
            run_local_search(graph_of([], 2), [])

    def test_contract_violations_abort(self):
        g = graph_of([(1, 2), (2, 3)], 3)
        dependent = ImprovementRule(
            name="bad-dependent",
            loyal=False,
            inpa=False,
            _apply_fn=lambda graph, cur, pred: frozenset(graph.nodes),
        )
        with pytest.raises(RuleContractError):
            run_local_search(g, [dependent])
        lighter = ImprovementRule(
            name="bad-lighter",
            loyal=False,
            inpa=False,
            _apply_fn=lambda graph, cur, pred: frozenset({graph.nodes[0]}),
        )
        trace_rule_fires_then_stalls = ImprovementRule(
            name="stall",
            loyal=False,
            inpa=False,
            _apply_fn=lambda graph, cur, pred: None,
        )
        with pytest.raises(RuleContractError):
            # second application returns the same single node: not heavier
            run_local_search(g, [lighter, trace_rule_fires_then_stalls])


def test_step_change_probe():
    # expansion-only traces move one node per step; a swap moves several
    g = gen_gbad(1).graph()
    expansion_only = run_local_search(g, [expansion_rule()])
    assert expansion_only.max_step_change() == 1
    v = TradingCycle((1, 2, 3))
    a, b, c = TradingCycle((1, 4)), TradingCycle((2, 5)), TradingCycle((3, 6))
    g2 = build_graph([v, a, b, c], 6, UNIFORM3, node_order=[v, a, b, c])
    swapped = run_local_search(g2, [expansion_rule(), all_for_q_rule(1)])
    assert swapped.max_step_change() == 4  # drop the 3-cycle, gain three 2-cycles


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=1, max_value=2))
def test_trace_weights_strictly_increase_and_rules_stay_loyal(seed, q):
    g = gen_random(7, 3, 0.45, seed).graph()
    trace = run_local_search(g, [expansion_rule(), all_for_q_rule(q)])
    last = Fraction(0)
    served = frozenset()
    for step in trace.steps:
        w = g.weight(step.result)
        assert w > last
        last = w
        now = g.agents_of(step.result)
        assert served <= now
        served = now


class TestConcatenate:
    def test_empty_remainder_keeps_first_output(self):
        g = graph_of([(1, 2), (2, 3)], 3)
        first = greedy_phase(2)
        second = greedy_phase(2)
        out = concatenate(first, second).run(g)
        assert out == first.run(g)

    def test_union_semantics(self):
        g = graph_of([(1, 2), (3, 4, 5)], 5)
        combined = concatenate(greedy_phase(2), greedy_phase(3))
        assert combined.run(g) == frozenset(g.nodes)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=4, max_value=9))
    def test_greedy_sweep_equals_phase_concatenation(self, seed, n):
        g = gen_random(n, 4, 0.5, seed, lam=LengthFunction.uniform(4)).graph()
        assert greedy_algorithm().run(g) == greedy_chain(2, 4).run(g)


class TestPrecedence:
    def test_greedy_phases_certify_statically(self):
        assert check_precedes(greedy_phase(2), greedy_phase(3), samples=[])
        assert check_precedes(greedy_phase(3), greedy_phase(4), samples=[])

    def test_greedy_head_precedes_tail_search(self):
        head = greedy_algorithm(max_len=2)
        tail = ls_above_algorithm(1, 2)
        assert check_precedes(head, tail, samples=[])

    def test_ls_does_not_precede_short_greedy(self):
        long_only = graph_of([(1, 2, 3)], 3)
        short_only = graph_of([(1, 2)], 2)
        assert not check_precedes(
            ls_algorithm(1), greedy_phase(2), samples=[long_only, short_only]
        )
