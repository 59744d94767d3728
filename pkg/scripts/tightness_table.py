#!/usr/bin/env python3
"""Print the tightness table for the q-swap local search on the gbad chain.

For each q the search stalls on the blue triangles at weight 3(q+1) while
the red triangles carry 3(2q+3), so the ratio is exactly 2 + 1/(q+1) and
creeps down towards k - 1 = 2 as q grows.

Usage: python scripts/tightness_table.py [max_q]
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from bxmech.core import rational_str
from bxmech.instances import gen_gbad
from bxmech.localsearch import SearchStats
from bxmech.mechanisms import ls_mechanism
from bxmech.verification import oracle_max_weight_is


def main() -> None:
    max_q = int(sys.argv[1]) if len(sys.argv) > 1 else 6
    print(f"{'q':>3} {'agents':>7} {'nodes':>6} {'search':>8} {'optimum':>8} "
          f"{'ratio':>8} {'iters':>6}")
    for q in range(1, max_q + 1):
        bundle = gen_gbad(q)
        graph = bundle.graph()
        stats = SearchStats()
        mine = graph.weight(ls_mechanism(q).solve(graph, stats))
        best = graph.weight(oracle_max_weight_is(graph))
        print(
            f"{q:>3} {bundle.n:>7} {graph.num_nodes:>6} "
            f"{rational_str(mine):>8} {rational_str(best):>8} "
            f"{rational_str(best / mine):>8} {stats.iterations:>6}"
        )


if __name__ == "__main__":
    main()
