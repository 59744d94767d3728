"""Batch command-line front-end.

Commands: gen, solve, fuzz, sweep, profile-lambda.  Outputs are canonical
(sorted keys, rationals as "p/q" with a display-only decimal column), so a
repeated invocation with the same seed produces byte-identical files.

Exit codes: 0 success, 2 bound violation or manipulation found, 1 usage or
I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .core import (
    LengthFunction,
    cycle_sort_key,
    parse_rational,
    rational_str,
)
from .instances import (
    InstanceBundle,
    bundle_to_json_dict,
    gen_comb,
    gen_double_comb,
    gen_fan,
    gen_gbad,
    gen_ladder,
    gen_nonrealizable,
    gen_random,
    load_instance,
    save_instance,
)
from .localsearch import SearchStats
from .mechanisms import (
    RandomizedMechanism,
    lambda_profile,
    parse_mechanism,
    randomized_wrapper,
)
from .verification import (
    OracleCapExceeded,
    RatioReport,
    fuzz_truthfulness_nodes,
    fuzz_truthfulness_wishlists,
    graph_utility,
    measure_ratio,
)


class UsageError(ValueError):
    pass


def _parse_keyvals(text: str) -> dict[str, list[str]]:
    """Parse "h=2,v=3,lambda=1,9/10": bare tokens extend the previous key."""
    out: dict[str, list[str]] = {}
    current: str | None = None
    if not text:
        return out
    for token in text.split(","):
        if "=" in token:
            key, value = token.split("=", 1)
            out[key] = [value]
            current = key
        elif current is not None:
            out[current].append(token)
        else:
            raise UsageError(f"stray parameter {token!r}")
    return out


def _lam_from_params(params: dict[str, list[str]], k: int) -> LengthFunction:
    if "lambda" not in params:
        return LengthFunction.uniform(k)
    values = tuple(parse_rational(v) for v in params["lambda"])
    return LengthFunction(k=k, values=values)


def _single_int(params: dict[str, list[str]], key: str) -> int:
    if key not in params:
        raise UsageError(f"missing parameter {key}")
    (value,) = params[key]
    return int(value)


def build_generator_spec(spec: str) -> InstanceBundle:
    family, _, rest = spec.partition(":")
    params = _parse_keyvals(rest)
    if family == "comb" or family == "dcomb":
        h = _single_int(params, "h")
        v = _single_int(params, "v")
        k = int(params["k"][0]) if "k" in params else v
        if "lambda" not in params:
            raise UsageError(f"{family} requires an explicit lambda")
        lam = _lam_from_params(params, k)
        maker = gen_comb if family == "comb" else gen_double_comb
        return maker(h, v, k, lam)
    if family == "gbad":
        return gen_gbad(_single_int(params, "q"))
    if family == "fan":
        k = _single_int(params, "k")
        return gen_fan(k, _lam_from_params(params, k))
    if family == "ladder":
        k = _single_int(params, "k")
        return gen_ladder(k, _single_int(params, "N"), _lam_from_params(params, k))
    if family == "nonrealizable":
        return gen_nonrealizable()
    if family == "rand":
        n = _single_int(params, "n")
        k = int(params["k"][0]) if "k" in params else 3
        (p_text,) = params.get("p", ["0.5"])
        seed = _single_int(params, "seed") if "seed" in params else 0
        return gen_random(n, k, float(p_text), seed, _lam_from_params(params, k))
    raise UsageError(f"unknown generator family {family!r}")


def expand_generator_family(spec: str) -> list[str]:
    """Expand range parameters like q=1..4 into concrete generator specs."""
    family, sep, rest = spec.partition(":")
    if not sep:
        return [spec]
    params = _parse_keyvals(rest)
    expansions: list[dict[str, list[str]]] = [{}]
    for key, values in params.items():
        if len(values) == 1 and ".." in values[0]:
            lo_text, hi_text = values[0].split("..", 1)
            choices = [[str(x)] for x in range(int(lo_text), int(hi_text) + 1)]
        else:
            choices = [values]
        expansions = [
            {**base, key: choice} for base in expansions for choice in choices
        ]
    out = []
    for combo in expansions:
        parts = []
        for key, values in combo.items():
            parts.append(f"{key}={values[0]}")
            parts.extend(values[1:])
        out.append(f"{family}:{','.join(parts)}")
    return out


def _resolve_mechanism(spec: str, bundle: InstanceBundle):
    if "=*" in spec:
        params = bundle.params or {}
        if "q" not in params:
            raise UsageError(
                f"mechanism {spec!r} uses q=* but instance {bundle.name} has no q"
            )
        spec = spec.replace("=*", f"={params['q']}")
    return parse_mechanism(spec)


def _utilities_rows(graph, chosen) -> list[list[object]]:
    return [
        [agent, rational_str(graph_utility(graph, chosen, agent))]
        for agent in range(1, graph.n + 1)
    ]


def _ratio_json(report: RatioReport) -> dict:
    return {
        "instance": report.instance,
        "mechanism": report.mechanism,
        "weight": rational_str(report.mechanism_weight),
        "oracle": rational_str(report.oracle_weight),
        "ratio": report.ratio_str(),
        "ratio_decimal": None if report.ratio is None else float(report.ratio),
        "bound": None if report.bound is None else rational_str(report.bound),
        "within_bound": report.within_bound,
    }


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_gen(args: argparse.Namespace) -> int:
    bundle = build_generator_spec(args.spec)
    graph = bundle.graph()
    if args.out:
        save_instance(bundle, args.out)
        target = args.out
    else:
        sys.stdout.write(
            json.dumps(bundle_to_json_dict(bundle), sort_keys=True, indent=2) + "\n"
        )
        target = "<stdout>"
    sys.stderr.write(
        f"{bundle.name}: n={bundle.n} agents, {graph.num_nodes} cycles -> {target}\n"
    )
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    bundle = load_instance(args.instance)
    graph = bundle.graph()
    mech = _resolve_mechanism(args.mechanism, bundle)
    warnings: list[str] = []
    stats = SearchStats()
    if isinstance(mech, RandomizedMechanism):
        if bundle.wishes is None:
            raise UsageError("randomized wrapper needs a wish-list instance")
        exchange = randomized_wrapper(
            mech.base, mech.zeta, bundle.wishes, bundle.lam, args.seed
        )
        chosen = graph.independent_from(exchange)
        mech_name = mech.name
        bound = None
    else:
        chosen = mech.solve(graph, stats)
        exchange = graph.exchange_from(chosen)
        mech_name = mech.name
        bound = mech.claimed_bound(bundle.lam)
    welfare = graph.weight(chosen)
    try:
        ratio = measure_ratio(
            lambda g: chosen,
            graph,
            bound,
            instance=bundle.name,
            mechanism=mech_name,
            node_cap=args.oracle_cap,
        )
        ratio_doc: dict | None = _ratio_json(ratio)
    except OracleCapExceeded as exc:
        warnings.append(f"oracle skipped: {exc}")
        ratio_doc = None
    report = {
        "instance": bundle.name,
        "mechanism": mech_name,
        "exchange": [list(c.agents) for c in sorted(chosen, key=cycle_sort_key)],
        "welfare": rational_str(welfare),
        "welfare_decimal": float(welfare),
        "utilities": _utilities_rows(graph, chosen),
        "trace": {
            "iterations": stats.iterations,
            "firings": dict(sorted(stats.firings.items())),
        },
        "ratio_report": ratio_doc,
        "warnings": warnings,
    }
    _emit(json.dumps(report, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def cmd_fuzz(args: argparse.Namespace) -> int:
    bundle = load_instance(args.instance)
    graph = bundle.graph()
    mech = _resolve_mechanism(args.mechanism, bundle)
    if isinstance(mech, RandomizedMechanism):
        raise UsageError("fuzzing targets deterministic mechanisms")
    solver = lambda g: mech.solve(g)  # noqa: E731
    findings = fuzz_truthfulness_nodes(
        solver, graph, budget=args.budget, seed=args.seed
    )
    if bundle.wishes is not None:
        findings += fuzz_truthfulness_wishlists(
            solver, bundle.wishes, bundle.lam, budget=args.budget, seed=args.seed
        )
    lines = []
    for f in findings:
        doc = f.to_json_dict()
        doc["instance"] = bundle.name
        doc["mechanism"] = mech.name
        lines.append(json.dumps(doc, sort_keys=True))
    _emit("".join(line + "\n" for line in lines), args.out)
    return 2 if findings else 0


def cmd_sweep(args: argparse.Namespace) -> int:
    override_bound = parse_fraction_or_none(args.bound)
    rows: list[dict] = []
    violation = False
    for gen_spec in expand_generator_family(args.family):
        bundle = build_generator_spec(gen_spec)
        graph = bundle.graph()
        for mech_spec in args.mechanisms.split("+"):
            mech = _resolve_mechanism(mech_spec.strip(), bundle)
            if isinstance(mech, RandomizedMechanism):
                raise UsageError("sweep targets deterministic mechanisms")
            bound = (
                override_bound
                if override_bound is not None
                else mech.claimed_bound(bundle.lam)
            )
            report = measure_ratio(
                lambda g: mech.solve(g),
                graph,
                bound,
                instance=bundle.name,
                mechanism=mech.name,
                node_cap=args.oracle_cap,
            )
            if not report.within_bound:
                violation = True
            rows.append(_ratio_json(report))
    rows.sort(key=lambda r: (r["instance"], r["mechanism"]))
    if args.format == "json":
        text = json.dumps(rows, sort_keys=True, indent=2) + "\n"
    else:
        header = "instance,mechanism,weight,oracle,ratio,bound,within_bound,ratio_decimal"
        lines = [header]
        for r in rows:
            lines.append(
                ",".join(
                    [
                        r["instance"],
                        r["mechanism"],
                        r["weight"],
                        r["oracle"],
                        r["ratio"],
                        "none" if r["bound"] is None else r["bound"],
                        "true" if r["within_bound"] else "false",
                        "" if r["ratio_decimal"] is None else repr(r["ratio_decimal"]),
                    ]
                )
            )
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 2 if violation else 0


def parse_fraction_or_none(text: str | None) -> Fraction | None:
    if text is None:
        return None
    return Fraction(text)


def cmd_profile_lambda(args: argparse.Namespace) -> int:
    params = _parse_keyvals(args.spec)
    k = _single_int(params, "k")
    lam = _lam_from_params(params, k)
    profile = lambda_profile(lam)
    doc = {
        "k": k,
        "lambda": [rational_str(v) for v in lam.values],
        "uniform": lam.is_uniform,
        "ell_star": profile.ell_star,
        "tumbles": list(profile.tumbles),
        "equal_classes": {
            str(ell): list(cls) for ell, cls in sorted(profile.equal_classes.items())
        },
        "rho": None if profile.rho is None else rational_str(profile.rho),
        "rho_decimal": None if profile.rho is None else float(profile.rho),
        "rho_parts": None
        if profile.rho_parts is None
        else [rational_str(x) for x in profile.rho_parts],
        "exceeds_k_minus_1": profile.flat_tail,
    }
    _emit(json.dumps(doc, sort_keys=True, indent=2) + "\n", args.out)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _add_global_flags(parser: argparse.ArgumentParser, top_level: bool) -> None:
    # accepted both before and after the subcommand; the later mention wins
    suppress = argparse.SUPPRESS
    parser.add_argument("--seed", type=int, default=0 if top_level else suppress)
    parser.add_argument(
        "--oracle-cap", type=int, default=40 if top_level else suppress
    )
    parser.add_argument("--out", type=str, default=None if top_level else suppress)
    parser.add_argument(
        "--format",
        choices=["json", "csv"],
        default="csv" if top_level else suppress,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bxmech", description=__doc__)
    _add_global_flags(parser, top_level=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate an instance file")
    p_gen.add_argument("spec")

    p_solve = sub.add_parser("solve", help="run a mechanism on an instance")
    p_solve.add_argument("instance")
    p_solve.add_argument("mechanism")

    p_fuzz = sub.add_parser("fuzz", help="hunt for profitable manipulations")
    p_fuzz.add_argument("instance")
    p_fuzz.add_argument("mechanism")
    p_fuzz.add_argument("--budget", type=int, default=64)

    p_sweep = sub.add_parser("sweep", help="ratio sweep over a generator family")
    p_sweep.add_argument("family")
    p_sweep.add_argument("mechanisms", help="mechanism specs joined with '+'")
    p_sweep.add_argument("--bound", type=str, default=None)

    p_prof = sub.add_parser("profile-lambda", help="length-function quantities")
    p_prof.add_argument("spec", help="k=<int>,lambda=<r>,<r>,...")

    for p in (p_gen, p_solve, p_fuzz, p_sweep, p_prof):
        _add_global_flags(p, top_level=False)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "fuzz":
            return cmd_fuzz(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "profile-lambda":
            return cmd_profile_lambda(args)
        raise UsageError(f"unknown command {args.command!r}")
    except (UsageError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
