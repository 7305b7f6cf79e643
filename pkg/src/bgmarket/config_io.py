"""Scenario files, result files and the run manifest.

Scenario grammar (YAML mapping; unknown keys are rejected)::

    name: fig09_liquid_market          # required, string
    kind: ReducedComparison            # FullTrajectory | ReducedComparison |
                                       # DegenerateSweep | ConvergenceSweep |
                                       # RegionGrid | RepellingDemo
    params: {a: 2, b: 1, r: 0.1, F: 3, epsilon: 0.1, gamma: 1}   # all six required
    x0: {P: 3.0, Psi: 0.1}             # optional, default (F, r)
    t_span: [0, 10]
    limit: LiquidMarket                # LiquidMarket | LiquidChartist
    values: [1.0, 0.1, 0.01]           # sweeps only, strictly sorted
    eval_time: 10                      # optional, default t_span end
    n_grid: 1001
    full_solver: integrate             # integrate | exact
    permissive: false
    integrator: {rel_tol: 1.0e-8, abs_tol: 1.0e-10, max_step: .inf,
                 initial_step: null, method: AdaptiveImplicit,
                 blowup_threshold: 1.0e+12}
    repelling: {x0_on: {P: 3, Psi: 0.1}, reduced_t_end: 3}
    grid: {gamma_a_range: [0, 4], b_range: [0, 4], resolution: [81, 81]}
    caption_region: I                  # optional figure-caption label
    description: free text
    outputs: [csv, summary, svg]

Numbers written as ``1e-3`` (no decimal point) are read as YAML strings;
they are accepted and converted.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .experiments import ConfigError, ExperimentResult, GridSpec, ScenarioConfig, ScenarioKind, validate_scenario
from .integrator import IntegratorConfig, Method
from .model import ModelParams, State
from .reduction import LimitKind

PARAM_KEYS = ("a", "b", "r", "F", "epsilon", "gamma")
TOP_KEYS = {
    "name", "kind", "params", "x0", "t_span", "limit", "values", "eval_time", "n_grid",
    "full_solver", "permissive", "integrator", "repelling", "grid", "caption_region",
    "description", "outputs",
}
INTEGRATOR_KEYS = {"rel_tol", "abs_tol", "max_step", "initial_step", "method", "blowup_threshold", "max_steps"}


class ScenarioParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def num(self, value, path, integer=False, allow_none=False):
        if value is None and allow_none:
            return None
        if isinstance(value, bool):
            self.errors.append(f"{path}: expected a number, got a boolean")
            return None
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                self.errors.append(f"{path}: expected a number, got {value!r}")
                return None
        if not isinstance(value, (int, float)):
            self.errors.append(f"{path}: expected a number, got {type(value).__name__}")
            return None
        if integer:
            if float(value) != int(value):
                self.errors.append(f"{path}: expected an integer")
                return None
            return int(value)
        value = float(value)
        if math.isnan(value):
            self.errors.append(f"{path}: NaN is not allowed")
            return None
        return value

    def pair(self, value, path, integer=False):
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            self.errors.append(f"{path}: expected a two-element list")
            return None
        a, b = self.num(value[0], f"{path}[0]", integer), self.num(value[1], f"{path}[1]", integer)
        return None if a is None or b is None else (a, b)

    def enum(self, cls, value, path):
        try:
            return cls(value)
        except ValueError:
            allowed = ", ".join(m.value for m in cls)
            self.errors.append(f"{path}: {value!r} is not one of {allowed}")
            return None

    def mapping(self, value, path, allowed=None):
        if not isinstance(value, dict):
            self.errors.append(f"{path}: expected a mapping")
            return {}
        if allowed is not None:
            for k in value:
                if k not in allowed:
                    self.errors.append(f"{path}.{k}: unknown key")
        return value

    def state(self, value, path):
        m = self.mapping(value, path, {"P", "Psi"})
        P, Psi = self.num(m.get("P"), f"{path}.P"), self.num(m.get("Psi"), f"{path}.Psi")
        return None if P is None or Psi is None else State(P, Psi)


def scenario_from_dict(data) -> ScenarioConfig:
    """Build and validate a config, collecting every error before raising."""
    c = _Collector()
    top = c.mapping(data, "<root>", TOP_KEYS)
    if c.errors and not top:
        raise ConfigError(c.errors)

    name = top.get("name")
    if not isinstance(name, str) or not name:
        c.errors.append("name: required non-empty string")
    kind = c.enum(ScenarioKind, top.get("kind"), "kind") if "kind" in top else None
    if "kind" not in top:
        c.errors.append("kind: required")

    pm = c.mapping(top.get("params", None), "params", set(PARAM_KEYS)) if "params" in top else {}
    if "params" not in top:
        c.errors.append("params: required")
    pvals = {}
    for k in PARAM_KEYS:
        if k not in pm and "params" in top:
            c.errors.append(f"params.{k}: required")
            continue
        if k in pm:
            v = c.num(pm[k], f"params.{k}")
            if v is not None and not math.isfinite(v):
                c.errors.append(f"params.{k}: must be finite")
                v = None
            pvals[k] = v

    kw = {}
    if "x0" in top and top["x0"] is not None:
        kw["x0"] = c.state(top["x0"], "x0")
    if "t_span" in top:
        kw["t_span"] = c.pair(top["t_span"], "t_span")
    if top.get("limit") is not None:
        kw["limit"] = c.enum(LimitKind, top["limit"], "limit")
    if "values" in top:
        vals = top["values"]
        if not isinstance(vals, (list, tuple)):
            c.errors.append("values: expected a list")
        else:
            kw["values"] = tuple(c.num(v, f"values[{i}]") for i, v in enumerate(vals))
    if top.get("eval_time") is not None:
        kw["eval_time"] = c.num(top["eval_time"], "eval_time")
    if "n_grid" in top:
        kw["n_grid"] = c.num(top["n_grid"], "n_grid", integer=True)
    if "full_solver" in top:
        kw["full_solver"] = top["full_solver"]
    if "permissive" in top:
        if not isinstance(top["permissive"], bool):
            c.errors.append("permissive: expected true or false")
        else:
            kw["permissive"] = top["permissive"]
    for key in ("caption_region", "description"):
        if top.get(key) is not None:
            kw[key] = str(top[key])
    if "outputs" in top:
        outs = top["outputs"]
        if not isinstance(outs, (list, tuple)):
            c.errors.append("outputs: expected a list")
        else:
            kw["outputs"] = tuple(str(o) for o in outs)

    integ = {}
    if "integrator" in top:
        im = c.mapping(top["integrator"], "integrator", INTEGRATOR_KEYS)
        for k in ("rel_tol", "abs_tol", "max_step", "blowup_threshold"):
            if k in im:
                integ[k] = c.num(im[k], f"integrator.{k}")
        if "initial_step" in im:
            integ["initial_step"] = c.num(im["initial_step"], "integrator.initial_step", allow_none=True)
        if "max_steps" in im:
            integ["max_steps"] = c.num(im["max_steps"], "integrator.max_steps", integer=True)
        if "method" in im:
            integ["method"] = c.enum(Method, im["method"], "integrator.method")

    if "repelling" in top and top["repelling"] is not None:
        rm = c.mapping(top["repelling"], "repelling", {"x0_on", "reduced_t_end"})
        if rm.get("x0_on") is not None:
            kw["x0_on"] = c.state(rm["x0_on"], "repelling.x0_on")
        if rm.get("reduced_t_end") is not None:
            kw["reduced_t_end"] = c.num(rm["reduced_t_end"], "repelling.reduced_t_end")

    if "grid" in top and top["grid"] is not None:
        gm = c.mapping(top["grid"], "grid", {"gamma_a_range", "b_range", "resolution"})
        gkw = {}
        if "gamma_a_range" in gm:
            gkw["gamma_a_range"] = c.pair(gm["gamma_a_range"], "grid.gamma_a_range")
        if "b_range" in gm:
            gkw["b_range"] = c.pair(gm["b_range"], "grid.b_range")
        if "resolution" in gm:
            res = gm["resolution"]
            if isinstance(res, (int, float, str)) and not isinstance(res, bool):
                n = c.num(res, "grid.resolution", integer=True)
                gkw["resolution"] = None if n is None else (n, n)
            else:
                gkw["resolution"] = c.pair(res, "grid.resolution", integer=True)
        if all(v is not None for v in gkw.values()):
            kw["grid"] = GridSpec(**gkw)

    if c.errors:
        raise ConfigError(c.errors)

    t0 = kw.get("t_span", (0.0, 10.0))[0]
    try:
        # span is replaced by the scenario's own; a dummy keeps bad spans reportable
        icfg = IntegratorConfig(t_span=(t0, t0 + 1.0), **integ)
    except ValueError as exc:
        raise ConfigError([f"integrator.{e}" for e in str(exc).split("; ")]) from exc
    sc = ScenarioConfig(name=name, kind=kind, params=ModelParams(**pvals), integrator=icfg, **kw)
    errs = validate_scenario(sc)
    if errs:
        raise ConfigError(errs)
    return sc


def parse_scenario(text: str, permissive: bool = False) -> ScenarioConfig:
    """Parse and validate; ``permissive=True`` overrides the file's flag before validation."""
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise ScenarioParseError(f"malformed scenario: {exc.problem or exc}", line, col) from exc
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"malformed scenario: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioParseError("scenario must be a mapping at the top level", 1, 1)
    if permissive:
        data["permissive"] = True
    return scenario_from_dict(data)


def load_scenario(path, permissive: bool = False) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text(encoding="utf-8"), permissive)


def _state_dict(s: State | None):
    return None if s is None else {"P": float(s.P), "Psi": float(s.Psi)}


def scenario_to_dict(sc: ScenarioConfig) -> dict:
    ic = sc.integrator
    d = {
        "name": sc.name,
        "kind": sc.kind.value,
        "description": sc.description,
        "params": {k: float(getattr(sc.params, k)) for k in PARAM_KEYS},
        "x0": _state_dict(sc.x0),
        "t_span": [float(sc.t_span[0]), float(sc.t_span[1])],
        "limit": None if sc.limit is None else sc.limit.value,
        "values": [float(v) for v in sc.values],
        "eval_time": sc.eval_time,
        "n_grid": sc.n_grid,
        "full_solver": sc.full_solver,
        "permissive": sc.permissive,
        "integrator": {
            "rel_tol": ic.rel_tol,
            "abs_tol": ic.abs_tol,
            "max_step": ic.max_step,
            "initial_step": ic.initial_step,
            "method": ic.method.value,
            "blowup_threshold": ic.blowup_threshold,
            "max_steps": ic.max_steps,
        },
        "repelling": {"x0_on": _state_dict(sc.x0_on), "reduced_t_end": sc.reduced_t_end},
        "grid": None
        if sc.grid is None
        else {
            "gamma_a_range": [float(v) for v in sc.grid.gamma_a_range],
            "b_range": [float(v) for v in sc.grid.b_range],
            "resolution": [int(v) for v in sc.grid.resolution],
        },
        "caption_region": sc.caption_region,
        "outputs": list(sc.outputs),
    }
    return d


def serialize_scenario(sc: ScenarioConfig) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=None)


def config_hash(sc: ScenarioConfig) -> str:
    """SHA-256 over canonical JSON (sorted keys, shortest round-trip floats)."""
    canon = json.dumps(scenario_to_dict(sc), sort_keys=True, separators=(",", ":"), allow_nan=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "value"):
        return v.value
    return v


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def series_to_csv(columns: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    names = list(columns)
    w.writerow(names)
    n = len(next(iter(columns.values()))) if columns else 0
    cols = [columns[k] for k in names]
    for i in range(n):
        w.writerow([_fmt(c[i]) for c in cols])
    return buf.getvalue()


def read_csv(path) -> dict:
    """Read a series CSV back; numeric columns become float arrays."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    names, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(names):
        col = [r[j] for r in body]
        try:
            out[name] = np.array([float(x) for x in col])
        except ValueError:
            out[name] = np.array(col, dtype=object)
    return out


def summary_dict(res: ExperimentResult, sc: ScenarioConfig | None = None) -> dict:
    return {
        "artifact_version": __version__,
        "scenario": res.scenario,
        "kind": res.kind.value,
        "config_hash": config_hash(sc) if sc is not None else None,
        "metrics": _jsonable(res.metrics),
        "classification": None if res.classification is None else res.classification.to_dict(),
        "warnings": list(res.warnings),
        "notes": list(res.notes),
        "series": {k: list(v) for k, v in res.series.items()},
    }


@dataclass
class RunManifest:
    artifact_version: str
    scenario: str
    config_hash: str
    warnings: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "artifact_version": self.artifact_version,
            "scenario": self.scenario,
            "config_hash": self.config_hash,
            "warnings": self.warnings,
            "files": self.files,
        }


def run_directory(base, sc: ScenarioConfig) -> Path:
    return Path(base) / f"{sc.name}-{config_hash(sc)}"


def emit_result(
    res: ExperimentResult,
    out_dir,
    formats=("csv", "summary", "svg"),
    sc: ScenarioConfig | None = None,
) -> RunManifest:
    """Write series CSVs, ``summary.json``, optional SVG plots and ``manifest.json``.

    I/O failures are raised as :class:`OSError` naming the offending path.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    chash = config_hash(sc) if sc is not None else "unhashed"
    files: list[str] = []

    def write(name: str, text: str):
        path = out / name
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
        files.append(name)

    if sc is not None:
        write("scenario.yaml", serialize_scenario(sc))
    if "csv" in formats:
        for name, cols in res.series.items():
            write(f"{name}.csv", series_to_csv(cols))
    if "summary" in formats:
        write("summary.json", json.dumps(summary_dict(res, sc), indent=2) + "\n")
    if "svg" in formats:
        from .plotting import plot_result

        for name in plot_result(res, out, chash):
            files.append(name)
    manifest = RunManifest(__version__, res.scenario, chash, list(res.warnings), list(files))
    write("manifest.json", json.dumps(manifest.to_dict(), indent=2) + "\n")
    manifest.files.append("manifest.json")
    return manifest
