#!/usr/bin/env python3
"""Run every shipped figure scenario and write CSV/SVG/summary outputs.

    python scripts/reproduce_figures.py --out runs/figures
    python scripts/reproduce_figures.py --only fig09 fig11
"""
from __future__ import annotations

import argparse
import sys
import time

from bgmarket.builtin import builtin_scenarios
from bgmarket.config_io import emit_result, run_directory
from bgmarket.experiments import run_scenario

HEADLINE = (
    "abs_P_minus_Pinf_final",
    "l2_at_t",
    "fitted_order",
    "off_departs_faster",
    "reduction_constructible",
    "count.III",
)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="runs/figures")
    ap.add_argument("--only", nargs="*", default=None, help="name prefixes to run")
    ap.add_argument("--formats", default="csv,svg,summary")
    args = ap.parse_args(argv)

    formats = tuple(args.formats.split(","))
    todo = builtin_scenarios()
    if args.only:
        todo = {k: v for k, v in todo.items() if any(k.startswith(p) for p in args.only)}
    for name, sc in todo.items():
        t0 = time.perf_counter()
        res = run_scenario(sc)
        target = run_directory(args.out, sc)
        emit_result(res, target, formats, sc)
        head = {k: res.metrics[k] for k in HEADLINE if k in res.metrics}
        print(f"{name:<34} {time.perf_counter() - t0:6.2f}s  {head}")
        for w in res.warnings:
            print(f"    warning: {w}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
