#!/usr/bin/env python3
"""Sweep approximation ratios of the whole catalog over random instances.

Writes a CSV (stdout by default) with one row per (instance, mechanism):
observed ratio against the exact oracle, the claimed bound, and whether the
bound held.  Every ratio is exact rational arithmetic; the decimal column is
display only.

Usage: python scripts/ratio_sweep.py [--n 8] [--count 50] [--k 3]
                                     [--tail uniform|flat|steep] [--out f.csv]
"""

import argparse
import sys
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from bxmech.core import LengthFunction, rational_str
from bxmech.instances import gen_random
from bxmech.mechanisms import greedy_mechanism, io_mechanism, ls_mechanism, nu_mechanism
from bxmech.verification import measure_ratio


def tail_function(tail: str, k: int) -> LengthFunction:
    if tail == "uniform":
        return LengthFunction.uniform(k)
    if tail == "flat":
        return LengthFunction.of(k, *(["1"] + ["9/10"] * (k - 2)))
    return LengthFunction.of(k, *(["1"] + [f"1/{2 ** i}" for i in range(1, k - 1)]))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--p", type=float, default=0.45)
    ap.add_argument("--tail", choices=["uniform", "flat", "steep"], default="flat")
    ap.add_argument("--out", type=str, default=None)
    args = ap.parse_args()

    lam = tail_function(args.tail, args.k)
    mechanisms = [greedy_mechanism(), ls_mechanism(1), ls_mechanism(2)]
    if not lam.is_uniform:
        mechanisms += [nu_mechanism(1), nu_mechanism(2)]
    if args.n <= 9:
        mechanisms.append(io_mechanism())

    rows = ["instance,mechanism,weight,oracle,ratio,bound,within_bound,ratio_decimal"]
    worst: dict[str, Fraction] = {}
    for seed in range(args.count):
        bundle = gen_random(args.n, args.k, args.p, seed, lam=lam)
        graph = bundle.graph()
        for mech in mechanisms:
            report = measure_ratio(
                lambda g, _m=mech: _m.solve(g),
                graph,
                bound=mech.claimed_bound(lam),
                instance=bundle.name,
                mechanism=mech.name,
            )
            ratio = report.ratio if report.ratio is not None else Fraction(0)
            worst[mech.name] = max(worst.get(mech.name, Fraction(0)), ratio)
            rows.append(
                ",".join(
                    [
                        report.instance,
                        report.mechanism,
                        rational_str(report.mechanism_weight),
                        rational_str(report.oracle_weight),
                        report.ratio_str(),
                        "none" if report.bound is None else rational_str(report.bound),
                        "true" if report.within_bound else "false",
                        "" if report.ratio is None else repr(float(report.ratio)),
                    ]
                )
            )
    text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for name, ratio in sorted(worst.items()):
        sys.stderr.write(f"worst ratio {name}: {rational_str(ratio)} = {float(ratio):.4f}\n")


if __name__ == "__main__":
    main()
