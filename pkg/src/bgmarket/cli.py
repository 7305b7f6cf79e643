"""Command line entry point.

    bgmarket run <scenario-file> [--out DIR] [--formats csv,svg,summary] [--permissive]
    bgmarket regions [--epsilon E] [--grid N] [--out DIR]
    bgmarket list-builtin [--export DIR]

Exit codes: 0 success, 1 validation error, 2 runtime or I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .builtin import builtin_scenarios, get_builtin
from .config_io import ScenarioParseError, emit_result, load_scenario, run_directory, serialize_scenario, summary_dict
from .experiments import ConfigError, GridSpec, ScenarioConfig, ScenarioKind, check_scenario, run_scenario
from .model import InvalidParameterError, ModelParams

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
FORMATS = ("csv", "svg", "summary")


class _Usage(Exception):
    pass


def _formats(text: str) -> tuple[str, ...]:
    out = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in out if f not in FORMATS]
    if bad:
        raise _Usage(f"unknown format(s) {', '.join(bad)}; choose from {', '.join(FORMATS)}")
    return out


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _resolve(arg: str, permissive: bool) -> ScenarioConfig:
    path = Path(arg)
    if path.exists():
        return load_scenario(path, permissive)
    try:
        sc = get_builtin(arg)
    except KeyError:
        raise FileNotFoundError(f"no such scenario file or builtin: {arg}") from None
    return dataclasses.replace(sc, permissive=True) if permissive else sc


def _execute(sc: ScenarioConfig, out: str, formats) -> int:
    check_scenario(sc)
    res = run_scenario(sc)
    target = run_directory(out, sc)
    manifest = emit_result(res, target, formats, sc)
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if "summary" in formats:
        print(json.dumps(summary_dict(res, sc)["metrics"], indent=2))
    print(f"wrote {len(manifest.files)} files to {target}")
    return EXIT_OK


def cmd_run(args) -> int:
    sc = _resolve(args.scenario, args.permissive)
    return _execute(sc, args.out, _formats(args.formats))


def cmd_regions(args) -> int:
    if args.grid < 2:
        raise ConfigError("grid: need at least 2 points per axis")
    try:
        params = ModelParams(a=1.0, b=1.0, r=0.1, F=3.0, epsilon=args.epsilon, gamma=1.0)
    except InvalidParameterError as exc:
        raise ConfigError(f"epsilon: {exc}") from exc
    sc = ScenarioConfig(
        name=f"regions_eps{args.epsilon:g}",
        kind=ScenarioKind.REGION_GRID,
        params=params,
        grid=GridSpec(resolution=(args.grid, args.grid)),
        description="stability regions over (gamma a, b)",
    )
    return _execute(sc, args.out, _formats(args.formats))


def cmd_list(args) -> int:
    scenarios = builtin_scenarios()
    width = max(map(len, scenarios))
    for name, sc in scenarios.items():
        print(f"{name:<{width}}  {sc.kind.value:<18}  {sc.description}")
    if args.export:
        out = Path(args.export)
        out.mkdir(parents=True, exist_ok=True)
        for name, sc in scenarios.items():
            (out / f"{name}.yaml").write_text(serialize_scenario(sc), encoding="utf-8")
        print(f"exported {len(scenarios)} scenarios to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bgmarket", description="disequilibrium market model experiments")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file (or builtin name)")
    run.add_argument("scenario")
    run.add_argument("--out", default="runs")
    run.add_argument("--formats", default="csv,svg,summary")
    run.add_argument("--permissive", action="store_true", help="allow non-physical parameters with a warning")
    run.set_defaults(func=cmd_run)

    reg = sub.add_parser("regions", help="classify a (gamma a, b) grid")
    reg.add_argument("--epsilon", type=float, default=1.0)
    reg.add_argument("--grid", type=int, default=81)
    reg.add_argument("--out", default="runs")
    reg.add_argument("--formats", default="csv,svg,summary")
    reg.set_defaults(func=cmd_regions)

    ls = sub.add_parser("list-builtin", help="list the shipped figure scenarios")
    ls.add_argument("--export", metavar="DIR", help="also write each scenario as YAML into DIR")
    ls.set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are validation errors here
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except _Usage as exc:
        _err(str(exc))
        return EXIT_INVALID
    except ConfigError as exc:
        for e in exc.errors:
            _err(e)
        return EXIT_INVALID
    except ScenarioParseError as exc:
        _err(str(exc))
        return EXIT_INVALID
    except OSError as exc:
        _err(str(exc))
        return EXIT_RUNTIME
    except Exception as exc:  # solver failures and anything unexpected
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
