#!/usr/bin/env python3
"""Distance between full and reduced model at t = 10 against the small parameter.

Prints one table per limit (integrated and closed-form distances) and the
log-log slope over the smallest half of the sweep.

    python scripts/convergence_study.py --workers 4
    python scripts/convergence_study.py --limit LiquidChartist --values 0.1 0.01 0.001
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

from bgmarket.builtin import get_builtin
from bgmarket.experiments import run_convergence_sweep

SCENARIOS = {"LiquidMarket": "fig11_sweep_epsilon", "LiquidChartist": "fig13_sweep_gamma"}


def study(limit: str, values=None, workers: int = 1) -> None:
    sc = get_builtin(SCENARIOS[limit])
    if values:
        sc = dataclasses.replace(sc, values=tuple(values))
    res = run_convergence_sweep(sc, workers=workers)
    s = res.series["sweep"]
    small = next(iter(s))
    print(f"# {limit}: a={sc.params.a} b={sc.params.b} eps={sc.params.epsilon} gamma={sc.params.gamma}")
    print(f"{small:>10}  {'l2 integrated':>14}  {'l2 exact':>14}")
    for v, d, e in zip(s[small], s["l2_at_10"], s["l2_at_10_exact"]):
        print(f"{v:10.4g}  {d:14.6e}  {e:14.6e}")
    print(f"strictly decreasing: {res.metrics['strictly_decreasing']}")
    print(f"fitted order: {res.metrics['fitted_order']}  (exact: {res.metrics['fitted_order_exact']})\n")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--limit", choices=sorted(SCENARIOS), action="append")
    ap.add_argument("--values", type=float, nargs="+")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    for limit in args.limit or list(SCENARIOS):
        study(limit, args.values, args.workers)
    return 0


if __name__ == "__main__":
    sys.exit(main())
