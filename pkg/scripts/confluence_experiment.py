#!/usr/bin/env python3
"""Larger-scale confluence experiment.

Runs the diamond and commutation suites over a bigger generated corpus than
the default CLI settings and prints a small table, e.g.

    python3 scripts/confluence_experiment.py --count 5000 --max-size 14
"""

import argparse
import sys

from qlam.confluence import GenConfig, run_suite


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=5000)
    parser.add_argument("--max-size", type=int, default=14)
    parser.add_argument("--max-width", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    config = GenConfig(max_size=args.max_size, max_width=args.max_width,
                       seed=args.seed, count=args.count)
    print(f"corpus: {config.count} terms, size <= {config.max_size}, "
          f"width <= {config.max_width}, seed {config.seed}\n")
    summary = run_suite(config)
    print(f"{'pair':>6} {'terms':>7} {'move pairs':>11} {'skipped':>8} "
          f"{'failures':>9} {'elapsed':>9}")
    for r in summary.results:
        print(f"{r.rules_a + ':' + r.rules_b:>6} {r.terms_checked:>7} "
              f"{r.pairs_checked:>11} {r.skipped:>8} {len(r.failures):>9} "
              f"{r.elapsed:>8.1f}s")
    for r in summary.results:
        for index, text, left, right in r.failures:
            print(f"\nFAILURE in {r.rules_a}:{r.rules_b} at term #{index}")
            print(f"  {text}")
            print(f"  no one-step join for {left} vs {right}")
    return 0 if summary.ok else 1


if __name__ == "__main__":
    sys.exit(main())
