"""Ground-truth oracle and adversarial testers.

Everything here distrusts the mechanisms: the oracle recomputes optima
exactly, the fuzzers search both strategy spaces an agent has (hiding node
subsets of the conflict graph, or under-reporting her wish list), and the
stability check verifies that non-served agents cannot move the output at
all.  Findings are strict utility improvements only.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .core import (
    LengthFunction,
    TradingCycle,
    Utility,
    WishListVector,
    rational_str,
)
from .cyclegraph import CycleGraph, IndependentSet, build_from_wishes
from .exact import (
    ExactSearchCapExceeded,
    max_weight_independent_set,
    naive_max_weight_independent_set,
)

Solver = Callable[[CycleGraph], IndependentSet]

EXHAUSTIVE_NODE_LIMIT = 12  # per-agent strategy spaces up to 2**12 are enumerated


class OracleCapExceeded(RuntimeError):
    pass


def oracle_max_weight_is(graph: CycleGraph, node_cap: int = 40) -> IndependentSet:
    """A maximum-weight independent set, found by exhaustive search.

    Instances with few agents are solved through the agent-subset route no
    matter how many nodes they have; otherwise the node count must stay
    under ``node_cap``.
    """
    try:
        return max_weight_independent_set(graph, node_cap=node_cap)
    except ExactSearchCapExceeded as exc:
        raise OracleCapExceeded(str(exc)) from exc


def naive_oracle(graph: CycleGraph, hard_cap: int = 20) -> IndependentSet:
    """Independent 2^|V| cross-check of the oracle, for small graphs."""
    try:
        return naive_max_weight_independent_set(graph, hard_cap=hard_cap)
    except ExactSearchCapExceeded as exc:
        raise OracleCapExceeded(str(exc)) from exc


def graph_utility(graph: CycleGraph, chosen: IndependentSet, agent: int) -> Fraction:
    """Utility of an agent from an independent set: the length value of the
    unique chosen node she partakes in, else 0."""
    for v in chosen:
        if agent in v.agent_set:
            return graph.lam(v.length)
    return Fraction(0)


@dataclass(frozen=True)
class ManipulationFinding:
    agent: int
    kind: str  # "hide-nodes" | "wishlist-subset"
    strategy: tuple
    honest_utility: Utility
    manipulated_utility: Utility

    def __post_init__(self) -> None:
        if not self.manipulated_utility > self.honest_utility:
            raise ValueError("findings must be strict improvements")

    def to_json_dict(self) -> dict:
        if self.kind == "hide-nodes":
            strategy = [list(v.agents) for v in self.strategy]
        else:
            strategy = sorted(self.strategy)
        return {
            "agent": self.agent,
            "kind": self.kind,
            "strategy": strategy,
            "honest": rational_str(self.honest_utility),
            "manipulated": rational_str(self.manipulated_utility),
        }


@dataclass(frozen=True)
class RatioReport:
    instance: str
    mechanism: str
    mechanism_weight: Fraction
    oracle_weight: Fraction
    ratio: Fraction | None  # None encodes an infinite ratio
    bound: Fraction | None
    within_bound: bool

    def ratio_str(self) -> str:
        return "inf" if self.ratio is None else rational_str(self.ratio)


def measure_ratio(
    solver: Solver,
    graph: CycleGraph,
    bound: Fraction | None,
    instance: str = "",
    mechanism: str = "",
    node_cap: int = 40,
) -> RatioReport:
    chosen = solver(graph)
    mech_weight = graph.weight(chosen)
    oracle_weight = graph.weight(oracle_max_weight_is(graph, node_cap=node_cap))
    if oracle_weight < mech_weight:
        raise RuntimeError("oracle lost to a mechanism; oracle bug")
    if mech_weight > 0:
        ratio: Fraction | None = oracle_weight / mech_weight
    elif oracle_weight == 0:
        ratio = Fraction(1)
    else:
        ratio = None
    if bound is None:
        within = True
    else:
        within = ratio is not None and ratio <= bound
    return RatioReport(
        instance=instance,
        mechanism=mechanism,
        mechanism_weight=mech_weight,
        oracle_weight=oracle_weight,
        ratio=ratio,
        bound=bound,
        within_bound=within,
    )


# ---------------------------------------------------------------------------
# strategy enumeration helpers


def _derive_seed(seed: int, agent: int, salt: int) -> int:
    return (seed * 1_000_003 + agent * 10_007 + salt) & 0x7FFFFFFF


def _node_subsets(
    nodes: Sequence[TradingCycle],
    budget: int,
    rng: random.Random,
    exhaustive_limit: int = EXHAUSTIVE_NODE_LIMIT,
) -> Iterable[tuple[TradingCycle, ...]]:
    """Non-empty subsets of an agent's nodes: all of them when the strategy
    space is small, otherwise a seeded sample of ``budget`` subsets."""
    m = len(nodes)
    if m == 0:
        return
    if m <= exhaustive_limit:
        for mask in range(1, 1 << m):
            yield tuple(nodes[i] for i in range(m) if mask & (1 << i))
        return
    seen: set[int] = set()
    attempts = 0
    while len(seen) < budget and attempts < budget * 4:
        attempts += 1
        mask = rng.randrange(1, 1 << m)
        if mask in seen:
            continue
        seen.add(mask)
        yield tuple(nodes[i] for i in range(m) if mask & (1 << i))


def fuzz_truthfulness_nodes(
    solver: Solver,
    graph: CycleGraph,
    budget: int = 64,
    seed: int = 0,
    exhaustive_limit: int = EXHAUSTIVE_NODE_LIMIT,
) -> list[ManipulationFinding]:
    """Search for an agent who profits from hiding some of her nodes.

    All findings are reported, not just the first.  Agents already at their
    best possible utility (the value of their shortest node) are skipped:
    hiding nodes can only yield nodes they already partake in.
    """
    base = solver(graph)
    findings: list[ManipulationFinding] = []
    for agent in range(1, graph.n + 1):
        own = graph.sorted_nodes(graph.agent_nodes(agent))
        if not own:
            continue
        honest = graph_utility(graph, base, agent)
        best_possible = max(graph.lam(v.length) for v in own)
        if honest >= best_possible:
            continue
        rng = random.Random(_derive_seed(seed, agent, 1))
        for subset in _node_subsets(own, budget, rng, exhaustive_limit):
            reduced = graph.remove_nodes(subset)
            manipulated = graph_utility(reduced, solver(reduced), agent)
            if manipulated > honest:
                findings.append(
                    ManipulationFinding(
                        agent=agent,
                        kind="hide-nodes",
                        strategy=subset,
                        honest_utility=honest,
                        manipulated_utility=manipulated,
                    )
                )
    return findings


def _concealed_nodes(
    graph: CycleGraph, agent: int, reported: frozenset[int]
) -> frozenset[TradingCycle]:
    """Nodes killed by reporting ``reported`` instead of the full wish list:
    exactly those cycles whose outgoing arc of the agent is concealed."""
    return frozenset(
        v for v in graph.agent_nodes(agent) if v.successor(agent) not in reported
    )


def fuzz_truthfulness_wishlists(
    solver: Solver,
    true_wishes: WishListVector,
    lam: LengthFunction,
    budget: int = 64,
    seed: int = 0,
    exhaustive_limit: int = 12,
) -> list[ManipulationFinding]:
    """Search for an agent who profits from under-reporting her wish list.

    Reporting a subset of a wish list removes exactly the cycles whose
    outgoing arc is concealed, so each reported subset is realized as a node
    deletion on the truthful conflict graph; distinct subsets with the same
    surviving cycle set are deduplicated (arcs on no cycle cannot matter).
    """
    graph = build_from_wishes(true_wishes, lam)
    base = solver(graph)
    findings: list[ManipulationFinding] = []
    for agent in range(1, true_wishes.n + 1):
        full = sorted(true_wishes.of(agent))
        if not full:
            continue
        own = graph.agent_nodes(agent)
        honest = graph_utility(graph, base, agent)
        if own and honest >= max(graph.lam(v.length) for v in own):
            continue
        rng = random.Random(_derive_seed(seed, agent, 2))
        m = len(full)
        if m <= exhaustive_limit:
            masks: Iterable[int] = range((1 << m) - 1)  # proper subsets
        else:
            masks = sorted(
                {rng.randrange(0, (1 << m) - 1) for _ in range(budget)}
            )
        tried: dict[frozenset[TradingCycle], Utility] = {}
        for mask in masks:
            reported = frozenset(full[i] for i in range(m) if mask & (1 << i))
            removed = _concealed_nodes(graph, agent, reported)
            if removed in tried:
                manipulated = tried[removed]
            else:
                reduced = graph.remove_nodes(removed)
                manipulated = graph_utility(reduced, solver(reduced), agent)
                tried[removed] = manipulated
            if manipulated > honest:
                findings.append(
                    ManipulationFinding(
                        agent=agent,
                        kind="wishlist-subset",
                        strategy=tuple(sorted(reported)),
                        honest_utility=honest,
                        manipulated_utility=manipulated,
                    )
                )
    return findings


def test_inpa(
    solver: Solver,
    graph: CycleGraph,
    budget: int = 64,
    seed: int = 0,
    exhaustive_limit: int = EXHAUSTIVE_NODE_LIMIT,
) -> bool:
    """True iff hiding node subsets of non-served agents never changes the
    output set (node-for-node)."""
    base = solver(graph)
    served = graph.agents_of(base)
    for agent in range(1, graph.n + 1):
        if agent in served:
            continue
        own = graph.sorted_nodes(graph.agent_nodes(agent))
        if not own:
            continue
        rng = random.Random(_derive_seed(seed, agent, 3))
        for subset in _node_subsets(own, budget, rng, exhaustive_limit):
            if solver(graph.remove_nodes(subset)) != base:
                return False
    return True


# ---------------------------------------------------------------------------
# standalone combinatorial check on degree-capped bipartite graphs


@dataclass(frozen=True)
class CappedBipartite:
    """Connected bipartite graph with node weights in [2, k] where every
    left-side degree is capped by the node's weight."""

    k: int
    left_weights: tuple[int, ...]
    right_weights: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]  # (left index, right index)

    @property
    def left_total(self) -> int:
        return sum(self.left_weights)

    @property
    def right_total(self) -> int:
        return sum(self.right_weights)

    def left_degrees(self) -> list[int]:
        degs = [0] * len(self.left_weights)
        for a, _ in self.edges:
            degs[a] += 1
        return degs

    def has_slack(self) -> bool:
        return any(
            d < w for d, w in zip(self.left_degrees(), self.left_weights)
        )


def random_capped_bipartite(
    rng: random.Random, k: int, max_left: int = 5, max_right: int = 9
) -> CappedBipartite:
    """Generate a random connected instance; a spanning tree is grown under
    the degree caps, then extra edges are sprinkled where capacity remains."""
    while True:
        n_left = rng.randint(1, max_left)
        left_w = [rng.randint(2, k) for _ in range(n_left)]
        capacity = sum(left_w)
        n_right = rng.randint(1, min(max_right, capacity - n_left + 1))
        # grow a spanning tree, attaching each new node across the partition
        pending = [("L", a) for a in range(1, n_left)] + [
            ("R", b) for b in range(1, n_right)
        ]
        rng.shuffle(pending)
        order = [("R", 0)] + pending
        edges: set[tuple[int, int]] = set()
        degs = [0] * n_left
        in_left = {0}
        in_right: set[int] = set()
        ok = True
        for side, idx in order:
            if side == "R":
                options = sorted(a for a in in_left if degs[a] < left_w[a])
                if not options:
                    ok = False
                    break
                a = rng.choice(options)
                edges.add((a, idx))
                degs[a] += 1
                in_right.add(idx)
            else:
                if not in_right:
                    ok = False
                    break
                b = rng.choice(sorted(in_right))
                edges.add((idx, b))
                degs[idx] += 1
                in_left.add(idx)
        if not ok:
            continue
        for _ in range(rng.randint(0, 3)):
            a = rng.randrange(n_left)
            b = rng.randrange(n_right)
            if (a, b) not in edges and degs[a] < left_w[a]:
                edges.add((a, b))
                degs[a] += 1
        right_w = [rng.randint(2, k) for _ in range(n_right)]
        return CappedBipartite(
            k=k,
            left_weights=tuple(left_w),
            right_weights=tuple(right_w),
            edges=tuple(sorted(edges)),
        )


def check_bipartite_weight_bound(instance: CappedBipartite) -> bool:
    """The right side never outweighs the left by more than
    (k - 1 + 1/|A|), and by more than (k - 1) when some left degree has
    slack below its weight."""
    left = Fraction(instance.left_total)
    right = Fraction(instance.right_total)
    n_left = len(instance.left_weights)
    general = right <= left * (
        Fraction(instance.k - 1) + Fraction(1, n_left)
    )
    if not general:
        return False
    if instance.has_slack():
        return right <= left * (instance.k - 1)
    return True


def findings_to_json_lines(findings: Sequence[ManipulationFinding]) -> str:
    import json

    return "".join(
        json.dumps(f.to_json_dict(), sort_keys=True) + "\n" for f in findings
    )
