"""The mechanism catalog and the length-function profile quantities.

Mechanisms are algorithms on cycle graphs packaged with their claimed
approximation bound and the class of length functions they are truthful
for:

* ``greedy``: fill shortest cycles first (phase per length, each phase an
  expansion-only local search); claimed ratio k, truthful for every length
  function.
* ``ls:q``: local search with the expansion and all-for-q rules; claimed
  ratio k - 1 + 1/q, truthful under uniform length functions.
* ``nu:q``: greedy on lengths up to the threshold where the length function
  flattens to its tail value, then the q-swap search on the strictly longer
  remainder; truthful for non-uniform length functions, ratio
  max{k - 1 + 1/q, rho}.
* ``io``: per value-class exact solves, concatenated from short classes to
  long; truthful, exponential time, ratio rho for non-uniform functions.
* ``opt:l``: one exact solve restricted to the value class of a length.

``rho`` is the tight truthfulness threshold computed from the length
function; see :func:`lambda_profile`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .core import (
    Exchange,
    LengthFunction,
    TradingCycle,
    WishListVector,
    parse_rational,
)
from .cyclegraph import CycleGraph, IndependentSet, build_graph, enumerate_cycles
from .exact import max_weight_independent_set
from .localsearch import (
    Algorithm,
    SearchStats,
    all_for_q_rule,
    concatenate_all,
    expansion_rule,
    length_above,
    length_equals,
    local_search_algorithm,
    restrict_rule,
    run_local_search,
)


@dataclass(frozen=True)
class LambdaProfile:
    """Derived quantities of a length function.

    ``ell_star`` is the largest length in [2, k-1] whose value still exceeds
    the tail value at k (None when the function is constant).  ``tumbles``
    lists the lengths just before a strict drop, plus k itself; the equal
    value class of each tumble length collects the lengths sharing its
    value.  ``rho`` is the worst ratio over value-separated length pairs of
    the two adversarial welfare comparisons; it is always below k, and it
    exceeds k - 1 exactly when the tail is sufficiently flat:
    lam(k)/lam(ell_star) > (k-1)/k.
    """

    lam: LengthFunction
    ell_star: int | None
    tumbles: tuple[int, ...]
    equal_classes: Mapping[int, tuple[int, ...]]
    rho: Fraction | None
    rho_parts: tuple[Fraction, Fraction] | None
    flat_tail: bool | None


def lambda_profile(lam: LengthFunction) -> LambdaProfile:
    k = lam.k
    pairs = [
        (lo, hi)
        for lo in range(2, k)
        for hi in range(lo + 1, k + 1)
        if lam(lo) > lam(hi)
    ]
    tumbles = tuple(
        sorted({ell for ell in range(2, k) if lam(ell) > lam(ell + 1)} | {k})
    )
    classes = {
        ell: tuple(e for e in range(2, ell + 1) if lam(e) == lam(ell))
        for ell in tumbles
    }
    if not pairs:
        return LambdaProfile(
            lam=lam,
            ell_star=None,
            tumbles=tumbles,
            equal_classes=classes,
            rho=None,
            rho_parts=None,
            flat_tail=None,
        )
    ell_star = max(ell for ell in range(2, k) if lam(ell) > lam(k))
    rho_single = max(Fraction(hi) * lam(hi) / lam(lo) for lo, hi in pairs)
    rho_mixed = max(
        Fraction(lo - 1, lo) * Fraction(hi) * lam(hi) / lam(lo) + 1
        for lo, hi in pairs
    )
    rho = max(rho_single, rho_mixed)
    flat = lam(k) / lam(ell_star) > Fraction(k - 1, k)
    return LambdaProfile(
        lam=lam,
        ell_star=ell_star,
        tumbles=tumbles,
        equal_classes=classes,
        rho=rho,
        rho_parts=(rho_single, rho_mixed),
        flat_tail=flat,
    )


# ---------------------------------------------------------------------------
# algorithm building blocks


def greedy_phase(j: int) -> Algorithm:
    """Expansion-only search that may add nodes of length exactly j."""
    rule = restrict_rule(expansion_rule(), length_equals(j), f"len={j}")
    return local_search_algorithm(
        f"greedy^{j}", [rule], min_output_length=j, max_output_length=j
    )


def greedy_chain(lo: int, hi: int) -> Algorithm:
    """The concatenation of the greedy phases for lengths lo..hi."""
    return concatenate_all([greedy_phase(j) for j in range(lo, hi + 1)])


def _greedy_sweep(
    graph: CycleGraph, max_len: int, stats: SearchStats | None
) -> IndependentSet:
    # single-pass equivalent of the phase concatenation; each phase adds, in
    # node order, every length-j node still independent of the picks so far
    chosen_mask = 0
    blocked = 0
    picks: list[TradingCycle] = []
    for j in range(2, max_len + 1):
        for idx, node in enumerate(graph.nodes):
            if node.length != j:
                continue
            bit = 1 << idx
            if bit & blocked:
                continue
            chosen_mask |= bit
            blocked |= bit | graph.adjacency_mask(idx)
            picks.append(node)
            if stats is not None:
                stats.record(f"expand[len={j}]")
    return frozenset(picks)


def greedy_algorithm(max_len: int | None = None) -> Algorithm:
    label = "greedy" if max_len is None else f"greedy<={max_len}"

    def run(graph: CycleGraph, stats: SearchStats | None) -> IndependentSet:
        return _greedy_sweep(graph, max_len or graph.k, stats)

    return Algorithm(
        name=label, _run=run, min_output_length=2, max_output_length=max_len
    )


def ls_algorithm(q: int) -> Algorithm:
    rules = (expansion_rule(), all_for_q_rule(q))

    def run(graph: CycleGraph, stats: SearchStats | None) -> IndependentSet:
        return run_local_search(graph, rules, stats).final

    return Algorithm(name=f"ls[q={q}]", _run=run, min_output_length=2)


def ls_above_algorithm(q: int, threshold: int) -> Algorithm:
    pred = length_above(threshold)
    rules = (
        restrict_rule(expansion_rule(), pred, f">{threshold}"),
        restrict_rule(all_for_q_rule(q), pred, f">{threshold}"),
    )

    def run(graph: CycleGraph, stats: SearchStats | None) -> IndependentSet:
        return run_local_search(graph, rules, stats).final

    return Algorithm(
        name=f"ls[q={q}]>{threshold}", _run=run, min_output_length=threshold + 1
    )


def broken_swap_algorithm(q: int) -> Algorithm:
    """Local search whose swap rule may drop served agents.

    Known-bad specimen: the fuzz harness must be able to catch it cheating
    on the steering witness instances.
    """
    rules = (expansion_rule(), all_for_q_rule(q, require_loyalty=False))

    def run(graph: CycleGraph, stats: SearchStats | None) -> IndependentSet:
        return run_local_search(graph, rules, stats).final

    return Algorithm(name=f"broken-swap[q={q}]", _run=run)


EXACT_NODE_CAP = 40  # guard for the exhaustive per-class solves


def opt_class_algorithm(ell: int, node_cap: int | None = EXACT_NODE_CAP) -> Algorithm:
    def run(graph: CycleGraph, stats: SearchStats | None) -> IndependentSet:
        target = graph.lam(ell)
        members = [v for v in graph.nodes if graph.lam(v.length) == target]
        return max_weight_independent_set(graph, within=members, node_cap=node_cap)

    return Algorithm(name=f"opt[l={ell}]", _run=run, max_output_length=ell)


# ---------------------------------------------------------------------------
# the catalog


@dataclass(frozen=True)
class Mechanism:
    """A named solver plus its advertised guarantee."""

    name: str
    params: Mapping[str, object]
    truthful_for: str  # "any" | "uniform" | "non-uniform"
    _solver: Callable[[CycleGraph, SearchStats | None], IndependentSet]
    _bound: Callable[[LengthFunction], Fraction | None]

    def solve(
        self, graph: CycleGraph, stats: SearchStats | None = None
    ) -> IndependentSet:
        result = self._solver(graph, stats)
        if not graph.is_independent(result):
            raise RuntimeError(f"mechanism {self.name} produced a dependent set")
        return result

    def __call__(
        self, graph: CycleGraph, stats: SearchStats | None = None
    ) -> IndependentSet:
        return self.solve(graph, stats)

    def claimed_bound(self, lam: LengthFunction) -> Fraction | None:
        return self._bound(lam)


def greedy_mechanism() -> Mechanism:
    alg = greedy_algorithm()
    return Mechanism(
        name="greedy",
        params={},
        truthful_for="any",
        _solver=lambda graph, stats: alg.run(graph, stats),
        _bound=lambda lam: Fraction(lam.k),
    )


def ls_mechanism(q: int) -> Mechanism:
    alg = ls_algorithm(q)
    return Mechanism(
        name=f"ls:q={q}",
        params={"q": q},
        truthful_for="uniform",
        _solver=lambda graph, stats: alg.run(graph, stats),
        _bound=lambda lam: Fraction(lam.k - 1) + Fraction(1, q),
    )


def nu_mechanism(q: int) -> Mechanism:
    def solver(graph: CycleGraph, stats: SearchStats | None) -> IndependentSet:
        profile = lambda_profile(graph.lam)
        if profile.ell_star is None:
            raise ValueError(
                "nu is undefined for a constant length function; use ls instead"
            )
        head = greedy_algorithm(max_len=profile.ell_star)
        head_set = head.run(graph, stats)
        closed = head_set | graph.neighborhood(head_set)
        tail = ls_above_algorithm(q, profile.ell_star)
        tail_set = tail.run(graph.remove_nodes(closed), stats)
        return head_set | tail_set

    def bound(lam: LengthFunction) -> Fraction | None:
        profile = lambda_profile(lam)
        if profile.rho is None:
            return None
        return max(Fraction(lam.k - 1) + Fraction(1, q), profile.rho)

    return Mechanism(
        name=f"nu:q={q}",
        params={"q": q},
        truthful_for="non-uniform",
        _solver=solver,
        _bound=bound,
    )


def opt_mechanism(ell: int, node_cap: int | None = EXACT_NODE_CAP) -> Mechanism:
    alg = opt_class_algorithm(ell, node_cap)
    return Mechanism(
        name=f"opt:l={ell}",
        params={"l": ell},
        truthful_for="any",
        _solver=lambda graph, stats: alg.run(graph, stats),
        _bound=lambda lam: None,
    )


def io_mechanism(node_cap: int | None = EXACT_NODE_CAP) -> Mechanism:
    def solver(graph: CycleGraph, stats: SearchStats | None) -> IndependentSet:
        profile = lambda_profile(graph.lam)
        remaining = graph
        out: set[TradingCycle] = set()
        for ell in profile.tumbles:
            phase = opt_class_algorithm(ell, node_cap)
            picked = phase.run(remaining, stats)
            out |= picked
            closed = picked | remaining.neighborhood(picked)
            remaining = remaining.remove_nodes(closed)
        return frozenset(out)

    def bound(lam: LengthFunction) -> Fraction | None:
        profile = lambda_profile(lam)
        return profile.rho if profile.rho is not None else Fraction(1)

    return Mechanism(
        name="io",
        params={},
        truthful_for="any",
        _solver=solver,
        _bound=bound,
    )


# spec-level functional forms --------------------------------------------------


def greedy(graph: CycleGraph) -> IndependentSet:
    return greedy_mechanism().solve(graph)


def ls_q(graph: CycleGraph, q: int) -> IndependentSet:
    return ls_mechanism(q).solve(graph)


def nu_q(graph: CycleGraph, q: int) -> IndependentSet:
    return nu_mechanism(q).solve(graph)


def opt_ell(graph: CycleGraph, ell: int, node_cap: int | None = EXACT_NODE_CAP) -> IndependentSet:
    return opt_mechanism(ell, node_cap).solve(graph)


def io(graph: CycleGraph, node_cap: int | None = EXACT_NODE_CAP) -> IndependentSet:
    return io_mechanism(node_cap).solve(graph)


# ---------------------------------------------------------------------------
# randomized wrapper lifting the subset-reporting assumption


@dataclass(frozen=True)
class RandomizedMechanism:
    base: Mechanism
    zeta: Fraction

    @property
    def name(self) -> str:
        return f"rand:zeta={self.zeta.numerator}/{self.zeta.denominator}:base={self.base.name}"


def randomized_wrapper(
    base: Mechanism,
    zeta: Fraction,
    wishes: WishListVector,
    lam: LengthFunction,
    seed: int,
) -> Exchange:
    """With probability 1 - zeta run the base mechanism; otherwise draw a
    length uniformly from [2, k] and a single uniformly random cycle of that
    length (identity exchange when the class is empty).

    The draw is exact: a uniform integer below the denominator of zeta, so
    the branch probability is the stated rational, not a float
    approximation.  Deterministic for a fixed seed.
    """
    if not 0 < zeta < 1:
        raise ValueError(f"zeta must lie strictly between 0 and 1, got {zeta}")
    rng = random.Random(seed)
    cycles = enumerate_cycles(wishes, lam.k)
    if rng.randrange(zeta.denominator) < zeta.numerator:
        length = rng.randrange(2, lam.k + 1)
        pool = [c for c in cycles if c.length == length]
        if not pool:
            return Exchange.identity()
        return Exchange(cycles=frozenset({pool[rng.randrange(len(pool))]}))
    graph = build_graph(cycles, wishes.n, lam)
    return graph.exchange_from(base.solve(graph))


# ---------------------------------------------------------------------------
# mechanism spec grammar


def parse_mechanism(spec: str):
    """Parse a mechanism spec string.

    Grammar: ``greedy`` | ``ls:q=<int>`` | ``nu:q=<int>`` | ``io`` |
    ``opt:l=<int>`` | ``rand:zeta=<p>/<q>:base=<mech>``.
    """
    spec = spec.strip()
    if spec == "greedy":
        return greedy_mechanism()
    if spec == "io":
        return io_mechanism()
    if spec.startswith("ls:"):
        return ls_mechanism(_int_param(spec[3:], "q"))
    if spec.startswith("nu:"):
        return nu_mechanism(_int_param(spec[3:], "q"))
    if spec.startswith("opt:"):
        return opt_mechanism(_int_param(spec[4:], "l"))
    if spec.startswith("rand:"):
        rest = spec[5:]
        if not rest.startswith("zeta="):
            raise ValueError(f"bad randomized spec {spec!r}: expected zeta=")
        rest = rest[5:]
        zeta_text, sep, remainder = rest.partition(":")
        if not sep or not remainder.startswith("base="):
            raise ValueError(f"bad randomized spec {spec!r}: expected :base=")
        base = parse_mechanism(remainder[5:])
        if isinstance(base, RandomizedMechanism):
            raise ValueError("randomized wrapper cannot wrap itself")
        return RandomizedMechanism(base=base, zeta=parse_rational(zeta_text))
    raise ValueError(f"unknown mechanism spec {spec!r}")


def _int_param(text: str, key: str) -> int:
    prefix = f"{key}="
    if not text.startswith(prefix):
        raise ValueError(f"expected {prefix}<int>, got {text!r}")
    value = text[len(prefix):]
    if value == "*":
        raise ValueError(f"wildcard {key}=* is only meaningful inside sweep")
    return int(value)


def catalog(
    qs: Sequence[int] = (1, 2), include_io: bool = True
) -> list[Mechanism]:
    out: list[Mechanism] = [greedy_mechanism()]
    for q in qs:
        out.append(ls_mechanism(q))
        out.append(nu_mechanism(q))
    if include_io:
        out.append(io_mechanism())
    return out
