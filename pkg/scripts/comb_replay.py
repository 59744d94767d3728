#!/usr/bin/env python3
"""Replay the comb deviation script and watch the forced output.

On a comb instance every truthful constant-ratio mechanism must output the
horizontal cycle: walking the script W^h, ..., W^0 (black agents reveal
their vertical cycles one at a time) shows why, step by step.  The script
run also prints each deviator's utility, which never improves.

Usage: python scripts/comb_replay.py [h] [v]
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from bxmech.core import LengthFunction, rational_str
from bxmech.cyclegraph import build_from_wishes
from bxmech.instances import comb_horizontal_cycle, comb_script
from bxmech.mechanisms import greedy_mechanism, io_mechanism, nu_mechanism
from bxmech.verification import graph_utility


def main() -> None:
    h = int(sys.argv[1]) if len(sys.argv) > 1 else 2
    v = int(sys.argv[2]) if len(sys.argv) > 2 else 3
    k = v
    lam = LengthFunction.of(k, *(["1"] * (v - 2) + [f"{v - 1}/{v}"]))
    print(f"comb h={h} v={v}, lambda({h})={rational_str(lam(h))}, "
          f"lambda({v})={rational_str(lam(v))}")
    horizontal = comb_horizontal_cycle(h)
    script = comb_script(h, v)
    for mech in (greedy_mechanism(), nu_mechanism(1), io_mechanism()):
        print(f"\n== {mech.name}")
        for i, wishes in enumerate(script):
            graph = build_from_wishes(wishes, lam)
            out = mech.solve(graph)
            tag = "pi_H" if out == frozenset({horizontal}) else sorted(
                c.agents for c in out
            )
            utilities = " ".join(
                f"u({a})={rational_str(graph_utility(graph, out, a))}"
                for a in range(1, h + 1)
            )
            print(f"  W^{i}: output={tag}  {utilities}")


if __name__ == "__main__":
    main()
