"""Exact maximum-weight independent-set solvers for cycle graphs.

The workhorse is a branch-and-bound that scans nodes in node order and
branches include-first, so the first optimum it completes is the
lexicographically first one (compare independent sets by their sorted rank
tuples).  Equal-weight bounds therefore prune safely: anything found later
ties at best and loses the tie-break.

The bound is exact where it is cheap to be: when the agent count is small a
full DP over agent subsets is computed first (independent sets of a cycle
graph are exactly agent-disjoint node packings), and the DP value on the
yet-uncovered agents bounds every completion.  Graphs with many agents but
few nodes fall back to suffix weight sums.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .core import TradingCycle
from .cyclegraph import CycleGraph, IndependentSet

DP_AGENT_CAP = 16


class ExactSearchCapExceeded(RuntimeError):
    """The instance is too large for exhaustive search under the given caps."""


def _agent_bit(agent: int) -> int:
    return 1 << (agent - 1)


def _agent_masks(graph: CycleGraph, allowed: Sequence[int]) -> dict[int, int]:
    out: dict[int, int] = {}
    for idx in allowed:
        mask = 0
        for a in graph.nodes[idx].agents:
            mask |= _agent_bit(a)
        out[idx] = mask
    return out


def _packing_dp(
    graph: CycleGraph, allowed: Sequence[int], node_agents: dict[int, int]
) -> list[Fraction]:
    """f[S] = best packing weight using allowed nodes whose agents lie in S."""
    by_agent: dict[int, list[int]] = {}
    for idx in allowed:
        for a in graph.nodes[idx].agents:
            by_agent.setdefault(a, []).append(idx)
    zero = Fraction(0)
    table = [zero] * (1 << graph.n)
    for subset in range(1, 1 << graph.n):
        low_bit = subset & -subset
        agent = low_bit.bit_length()
        best = table[subset ^ low_bit]
        for idx in by_agent.get(agent, ()):
            am = node_agents[idx]
            if am & subset == am:
                cand = graph._weights[idx] + table[subset ^ am]
                if cand > best:
                    best = cand
        table[subset] = best
    return table


def max_weight_independent_set(
    graph: CycleGraph,
    within: Iterable[TradingCycle] | None = None,
    node_cap: int | None = None,
) -> IndependentSet:
    """Lexicographically first maximum-weight independent set.

    ``within`` restricts the search to a node subset.  ``node_cap`` (if set)
    rejects instances whose agent count rules out the subset DP and whose
    node count exceeds the cap, instead of attempting a hopeless search.
    """
    if within is None:
        allowed = list(range(graph.num_nodes))
    else:
        allowed = sorted(graph.rank(v) for v in set(within))
    if not allowed:
        return frozenset()

    use_dp = graph.n <= DP_AGENT_CAP
    if not use_dp and node_cap is not None and len(allowed) > node_cap:
        raise ExactSearchCapExceeded(
            f"{len(allowed)} nodes over {graph.n} agents exceeds the "
            f"exhaustive-search cap of {node_cap} nodes"
        )

    node_agents = _agent_masks(graph, allowed)
    dp_table = _packing_dp(graph, allowed, node_agents) if use_dp else None

    # suffix[i] = total weight of allowed nodes at or after position i
    suffix: list[Fraction] = [Fraction(0)] * (len(allowed) + 1)
    for pos in range(len(allowed) - 1, -1, -1):
        suffix[pos] = suffix[pos + 1] + graph._weights[allowed[pos]]

    all_agents = 0
    for idx in allowed:
        all_agents |= node_agents[idx]

    best_weight: Fraction | None = None
    best_mask = 0
    zero = Fraction(0)

    def search(pos: int, chosen: int, blocked: int, cur: Fraction, uncovered: int) -> None:
        nonlocal best_weight, best_mask
        while pos < len(allowed) and (1 << allowed[pos]) & blocked:
            pos += 1
        if pos == len(allowed):
            if best_weight is None or cur > best_weight:
                best_weight = cur
                best_mask = chosen
            return
        if best_weight is not None:
            bound = dp_table[uncovered] if dp_table is not None else suffix[pos]
            if cur + bound <= best_weight:
                return
        idx = allowed[pos]
        bit = 1 << idx
        search(
            pos + 1,
            chosen | bit,
            blocked | graph._adj[idx] | bit,
            cur + graph._weights[idx],
            uncovered & ~node_agents[idx],
        )
        search(pos + 1, chosen, blocked | bit, cur, uncovered)

    search(0, 0, 0, zero, all_agents)
    return graph.set_of(best_mask)


def naive_max_weight_independent_set(
    graph: CycleGraph,
    within: Iterable[TradingCycle] | None = None,
    hard_cap: int = 20,
) -> IndependentSet:
    """Cross-validator: scan all 2^|V| node subsets.

    Same tie-break as the branch-and-bound (first optimum by sorted rank
    tuples), so the two solvers must agree exactly.
    """
    if within is None:
        allowed = list(range(graph.num_nodes))
    else:
        allowed = sorted(graph.rank(v) for v in set(within))
    m = len(allowed)
    if m > hard_cap:
        raise ExactSearchCapExceeded(f"{m} nodes exceeds the naive cap {hard_cap}")
    adj = [graph._adj[idx] for idx in allowed]
    best_weight = Fraction(0)
    best_key: tuple[int, ...] = ()
    best: IndependentSet = frozenset()
    independent = [True] * (1 << m)
    for mask in range(1, 1 << m):
        low = mask & -mask
        rest = mask ^ low
        pos = low.bit_length() - 1
        local_adj = adj[pos]
        rest_global = 0
        ok = independent[rest]
        if ok:
            r = rest
            while r:
                lb = r & -r
                rest_global |= 1 << allowed[lb.bit_length() - 1]
                r ^= lb
            ok = not (local_adj & rest_global)
        independent[mask] = ok
        if not ok:
            continue
        members = [allowed[i] for i in range(m) if mask & (1 << i)]
        weight = sum((graph._weights[i] for i in members), start=Fraction(0))
        key = tuple(members)
        if weight > best_weight or (weight == best_weight and key < best_key):
            best_weight = weight
            best_key = key
            best = frozenset(graph.nodes[i] for i in members)
    return best
