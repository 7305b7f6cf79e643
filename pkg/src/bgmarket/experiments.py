"""Declarative scenarios and the runners that turn them into results."""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .integrator import IntegratorConfig, Trajectory, integrate_full, integrate_reduced
from .model import ModelParams, State, equilibrium
from .reduction import (
    DegenerateManifoldError,
    LimitKind,
    ManifoldKind,
    ReducedModel,
    build_reduction,
    manifold_residual,
    nearest_point_on_manifold,
    project_to_manifold,
    projector,
    reduce,
)
from .spectral import DomainError, StabilityReport, classify, eigen, exact_deviation, stability_region_grid, stability_test


class ConfigError(ValueError):
    """Scenario configuration is invalid; ``errors`` lists every problem found."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ScenarioKind(str, enum.Enum):
    FULL_TRAJECTORY = "FullTrajectory"
    REDUCED_COMPARISON = "ReducedComparison"
    DEGENERATE_SWEEP = "DegenerateSweep"
    CONVERGENCE_SWEEP = "ConvergenceSweep"
    REGION_GRID = "RegionGrid"
    REPELLING_DEMO = "RepellingDemo"


NEEDS_LIMIT = {
    ScenarioKind.REDUCED_COMPARISON,
    ScenarioKind.DEGENERATE_SWEEP,
    ScenarioKind.CONVERGENCE_SWEEP,
    ScenarioKind.REPELLING_DEMO,
}
NEEDS_VALUES = {ScenarioKind.DEGENERATE_SWEEP, ScenarioKind.CONVERGENCE_SWEEP}
SMALL_PARAM = {LimitKind.LIQUID_MARKET: "epsilon", LimitKind.LIQUID_CHARTIST: "gamma"}
NON_PHYSICAL_WARNING = "non-physical parameters (permissive mode): {}"


@dataclass(frozen=True)
class GridSpec:
    gamma_a_range: tuple[float, float] = (0.0, 4.0)
    b_range: tuple[float, float] = (0.0, 4.0)
    resolution: tuple[int, int] = (81, 81)


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment.

    ``x0`` defaults to ``(F, r)``, which lies on the liquid-market manifold.
    ``values`` holds the small-parameter values of a sweep. For repelling
    demos ``x0`` is the off-manifold start and ``x0_on`` the on-manifold one
    (the point of the manifold nearest to ``x0`` when omitted);
    ``reduced_t_end`` caps the horizon of the formal reduced solution, which
    grows exponentially.
    """

    name: str
    kind: ScenarioKind
    params: ModelParams
    x0: State | None = None
    t_span: tuple[float, float] = (0.0, 10.0)
    limit: LimitKind | None = None
    values: tuple[float, ...] = ()
    integrator: IntegratorConfig = IntegratorConfig()
    permissive: bool = False
    eval_time: float | None = None
    n_grid: int = 1001
    full_solver: str = "integrate"
    x0_on: State | None = None
    reduced_t_end: float | None = None
    grid: GridSpec | None = None
    caption_region: str | None = None
    description: str = ""
    outputs: tuple[str, ...] = ("csv", "summary", "svg")

    def __post_init__(self):
        object.__setattr__(self, "kind", ScenarioKind(self.kind))
        if self.limit is not None:
            object.__setattr__(self, "limit", LimitKind(self.limit))
        object.__setattr__(self, "t_span", (float(self.t_span[0]), float(self.t_span[1])))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if self.t_span[1] > self.t_span[0]:
            object.__setattr__(self, "integrator", self.integrator.with_span(*self.t_span))

    @property
    def start(self) -> State:
        return self.x0 if self.x0 is not None else State(self.params.F, self.params.r)

    @property
    def t_star(self) -> float:
        return self.eval_time if self.eval_time is not None else self.t_span[1]

    def integrator_config(self, t_span=None) -> IntegratorConfig:
        return self.integrator.with_span(*(t_span or self.t_span))


def validate_scenario(sc: ScenarioConfig) -> list[str]:
    """Every problem with ``sc``, as ``field.path: message`` strings."""
    errs: list[str] = []
    p = sc.params
    if p.epsilon == 0:
        errs.append("params.epsilon: must be nonzero")
    if p.gamma == 0:
        errs.append("params.gamma: must be nonzero")
    if sc.kind is not ScenarioKind.REGION_GRID and p.a == 0:
        errs.append("params.a: must be nonzero (equilibrium undefined)")
    if not sc.permissive and sc.kind is not ScenarioKind.DEGENERATE_SWEEP:
        for name in ("a", "b", "r", "F", "epsilon", "gamma"):
            v = getattr(p, name)
            if v <= 0 and not (name in ("epsilon", "gamma") and v == 0):
                errs.append(f"params.{name}: must be > 0 outside permissive mode")
    t0, t1 = sc.t_span
    if not t1 > t0:
        errs.append("t_span: end must exceed start")
    errs.extend(f"integrator.{e}" for e in sc.integrator.validation_errors() if not e.startswith("t_span"))
    if sc.kind in NEEDS_LIMIT and sc.limit is None:
        errs.append(f"limit: required for {sc.kind.value}")
    if sc.kind in NEEDS_VALUES:
        vals = list(sc.values)
        if not vals:
            errs.append("values: must be nonempty")
        else:
            inc = all(x < y for x, y in zip(vals, vals[1:]))
            dec = all(x > y for x, y in zip(vals, vals[1:]))
            if not (inc or dec):
                errs.append("values: must be strictly sorted")
            if any(v == 0 for v in vals):
                errs.append("values: zero is not an admissible small parameter")
    if sc.eval_time is not None and not (t0 <= sc.eval_time <= t1):
        errs.append("eval_time: must lie inside t_span")
    if sc.n_grid < 2:
        errs.append("n_grid: must be at least 2")
    if sc.full_solver not in ("integrate", "exact"):
        errs.append("full_solver: must be 'integrate' or 'exact'")
    if sc.reduced_t_end is not None and not (t0 < sc.reduced_t_end <= t1):
        errs.append("reduced_t_end: must lie in (t0, t1]")
    if sc.kind is ScenarioKind.REGION_GRID:
        g = sc.grid or GridSpec()
        if min(g.resolution) < 2:
            errs.append("grid.resolution: at least 2 per axis")
        if g.gamma_a_range[0] < 0 or g.b_range[0] < 0:
            errs.append("grid: ranges must be non-negative")
        if not (g.gamma_a_range[1] > g.gamma_a_range[0] and g.b_range[1] > g.b_range[0]):
            errs.append("grid: ranges must be increasing")
        if p.epsilon < 0:
            errs.append("params.epsilon: region grid needs epsilon > 0")
    if sc.kind is ScenarioKind.REDUCED_COMPARISON and sc.limit is not None and not errs:
        if build_reduction(p, sc.limit).is_degenerate:
            errs.append("limit: reduction is degenerate for these parameters")
    bad = [o for o in sc.outputs if o not in ("csv", "summary", "svg")]
    if bad:
        errs.append(f"outputs: unknown formats {bad}")
    return errs


def check_scenario(sc: ScenarioConfig) -> None:
    errs = validate_scenario(sc)
    if errs:
        raise ConfigError(errs)


@dataclass
class ExperimentResult:
    scenario: str
    kind: ScenarioKind
    series: dict = field(default_factory=dict)  # name -> {column: array}
    metrics: dict = field(default_factory=dict)
    classification: StabilityReport | None = None
    warnings: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def _classification(p: ModelParams, warnings: list) -> StabilityReport | None:
    try:
        return classify(p)
    except DomainError as exc:
        warnings.append(f"oscillation criterion undefined: {exc}")
        return None


def _param_warnings(p: ModelParams) -> list[str]:
    if p.standard_regime:
        return []
    bad = [f"{k}={v!r}" for k, v in p.to_dict().items() if v <= 0]
    return [NON_PHYSICAL_WARNING.format(", ".join(bad))]


def _grid(sc: ScenarioConfig, t_end: float | None = None) -> np.ndarray:
    t0, t1 = sc.t_span
    ts = np.linspace(t0, t1, sc.n_grid)
    if t_end is not None:
        ts = ts[ts <= t_end]
    return ts


def _caption_check(sc: ScenarioConfig, report: StabilityReport | None, res: ExperimentResult) -> None:
    if sc.caption_region is None or report is None:
        return
    caption = sc.caption_region
    merged = "I_II" if caption in ("I", "II", "I_II") else caption
    res.metrics["caption_region"] = caption
    if merged != report.region.value:
        res.warnings.append(
            f"figure caption labels region {caption} but the stability criteria give {report.region.value}"
        )


def run_trajectory(sc: ScenarioConfig) -> ExperimentResult:
    check_scenario(sc)
    p = sc.params
    res = ExperimentResult(sc.name, sc.kind, warnings=_param_warnings(p))
    report = _classification(p, res.warnings)
    res.classification = report
    _caption_check(sc, report, res)

    traj = integrate_full(p, sc.start, sc.integrator_config())
    ts = _grid(sc, traj.times[-1])
    xs = traj.sample(ts)
    res.series["trajectory"] = {"t": ts, "P": xs[:, 0], "Psi": xs[:, 1]}

    eq = equilibrium(p)
    dev0 = np.linalg.norm(np.asarray(sc.start) - eq.as_array())
    devs = np.linalg.norm(xs - eq.as_array(), axis=1)
    m = res.metrics
    m.update(_traj_meta(traj))
    m["P_inf"] = eq.P
    m["Psi_inf"] = eq.Psi
    m["P_final"] = float(traj.final[0])
    m["Psi_final"] = float(traj.final[1])
    m["abs_P_minus_Pinf_final"] = abs(float(traj.final[0]) - eq.P)
    m["abs_Psi_final"] = abs(float(traj.final[1]))
    m["deviation_initial"] = float(dev0)
    if dev0 > 0:
        m["deviation_ratio_min"] = float(devs.min() / dev0)
        m["deviation_ratio_max"] = float(devs.max() / dev0)
    sd = eigen(p)
    m["max_real_eigenvalue"] = sd.max_real
    if traj.truncated:
        res.warnings.append(f"blow-up: trajectory truncated at t={traj.times[-1]:.6g}")
    return res


def _traj_meta(traj: Trajectory, prefix: str = "") -> dict:
    md = traj.metadata
    return {
        f"{prefix}n_accepted": md["n_accepted"],
        f"{prefix}n_rejected": md["n_rejected"],
        f"{prefix}truncated": md["truncated"],
        f"{prefix}t_end": md["t_end"],
    }


def _tangent(rm: ReducedModel) -> np.ndarray:
    """Direction of the manifold with unit free component (manifold is affine)."""
    Dmu = rm.problem.Dmu
    i = rm.free_index
    d = np.zeros(2)
    d[i] = 1.0
    d[1 - i] = -Dmu[i] / Dmu[1 - i]
    return d


def _reduction(sc: ScenarioConfig, p: ModelParams | None = None) -> ReducedModel:
    p = p or sc.params
    try:
        return reduce(build_reduction(p, sc.limit))
    except DegenerateManifoldError as exc:
        raise ConfigError(f"limit: {exc}") from exc


def run_reduced_comparison(sc: ScenarioConfig) -> ExperimentResult:
    """Full model against the lifted reduced model on a shared uniform grid.

    Both models are solved relative to the common equilibrium, so the
    distance is formed from deviations and stays resolvable when it is many
    orders of magnitude below ``|P|``. The reduced model starts at the
    projection of ``x0`` along the fast direction.
    """
    check_scenario(sc)
    p = sc.params
    res = ExperimentResult(sc.name, sc.kind, warnings=_param_warnings(p))
    res.classification = _classification(p, res.warnings)
    rm = _reduction(sc)
    rp = rm.problem
    if not rm.valid:
        res.warnings.append(f"slow manifold is {rm.manifold.kind.value}: reduction is formal only")

    eq = equilibrium(p).as_array()
    x0 = np.asarray(sc.start, dtype=float)
    y0 = x0 - eq
    z0 = rm.free_of(project_to_manifold(rp, x0))
    w0 = z0 - rm.fixed_point
    d = _tangent(rm)
    cfg = sc.integrator_config()
    ts = _grid(sc)
    t_star = sc.t_star

    red = integrate_reduced(rm, z0, cfg, relative_to_equilibrium=True)
    w_int = red.sample(ts)[:, 0]
    if sc.full_solver == "exact":
        y_full = np.array([exact_deviation(p, y0, t) for t in ts])
        y_star = exact_deviation(p, y0, t_star)
        full_meta = {}
    else:
        full = integrate_full(p, sc.start, cfg, relative_to_equilibrium=True)
        y_full = full.sample(ts)
        y_star = full.sample([t_star])[0]
        full_meta = _traj_meta(full, "full_")
    y_red = np.outer(w_int, d)
    dist = np.linalg.norm(y_full - y_red, axis=1)

    w_star = red.sample([t_star])[0, 0]
    l2 = float(np.linalg.norm(y_star - w_star * d))
    # closed-form cross-check of both routes
    y_exact = exact_deviation(p, y0, t_star)
    w_exact = w0 * math.exp(rm.rate * t_star)
    l2_exact = float(np.linalg.norm(y_exact - w_exact * d))

    res.series["comparison"] = {
        "t": ts,
        "P_full": y_full[:, 0] + eq[0],
        "Psi_full": y_full[:, 1] + eq[1],
        "P_reduced": y_red[:, 0] + eq[0],
        "Psi_reduced": y_red[:, 1] + eq[1],
        "distance": dist,
    }
    small = SMALL_PARAM[sc.limit]
    sigma = rm.manifold.nonzero_eigenvalue
    t_layer = sc.t_span[0] + 5.0 * abs(getattr(p, small)) / abs(sigma)
    m = res.metrics
    m["t_star"] = t_star
    m["l2_at_t"] = l2
    m["l2_at_t_exact"] = l2_exact
    m["full_solver_error_at_t"] = float(np.linalg.norm(y_star - y_exact))
    m["reduced_solver_error_at_t"] = abs(w_star - w_exact)
    m["small_param"] = small
    m["small_param_value"] = getattr(p, small)
    m["manifold_kind"] = rm.manifold.kind.value
    m["fast_eigenvalue"] = sigma
    m["reduced_rate"] = rm.rate
    m["reduced_equilibrium_stable"] = rm.equilibrium_exponentially_stable
    m["x0_manifold_residual"] = manifold_residual(rp, x0)
    m["t_layer_end"] = t_layer
    if t_layer < sc.t_span[1]:
        d_layer = float(np.linalg.norm(
            (exact_deviation(p, y0, t_layer) - w0 * math.exp(rm.rate * t_layer) * d)
            if sc.full_solver == "exact"
            else (full.sample([t_layer])[0] - red.sample([t_layer])[0, 0] * d)
        ))
        m["distance_at_layer_end"] = d_layer
        m["monotone_after_layer"] = bool(dist[-1] <= 1.01 * d_layer)
    m.update(full_meta)
    m.update(_traj_meta(red, "reduced_"))
    return res


def _order_fit(values, errors) -> float | None:
    """Least-squares slope of log(error) against log(value) over the smallest half."""
    v = np.abs(np.asarray(values, dtype=float))
    e = np.asarray(errors, dtype=float)
    order = np.argsort(v)
    k = len(v) // 2
    if k < 2:
        k = len(v)
    if k < 2:
        return None
    idx = order[:k]
    if np.any(e[idx] <= 0):
        return None
    slope, _ = np.polyfit(np.log(v[idx]), np.log(e[idx]), 1)
    return float(slope)


def _sweep_point(sc: ScenarioConfig) -> ExperimentResult:
    return run_reduced_comparison(sc)


def run_convergence_sweep(sc: ScenarioConfig, workers: int = 1) -> ExperimentResult:
    check_scenario(sc)
    p = sc.params
    small = SMALL_PARAM[sc.limit]
    res = ExperimentResult(sc.name, sc.kind, warnings=_param_warnings(p))
    res.classification = _classification(p, res.warnings)

    points = []
    errs = []
    for i, v in enumerate(sc.values):
        pv = p.replace(**{small: v})
        rp = build_reduction(pv, sc.limit)
        if rp.is_degenerate:
            errs.append(f"values[{i}]: reduction degenerate at {small}={v!r}")
            continue
        sub = replace(
            sc,
            name=f"{sc.name}[{small}={v:g}]",
            kind=ScenarioKind.REDUCED_COMPARISON,
            params=pv,
            values=(),
        )
        points.append(sub)
    if errs:
        raise ConfigError(errs)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, points))
    else:
        results = [_sweep_point(s) for s in points]

    l2 = np.array([r.metrics["l2_at_t"] for r in results])
    l2_exact = np.array([r.metrics["l2_at_t_exact"] for r in results])
    vals = np.array(sc.values, dtype=float)
    t_star = sc.t_star
    col = f"l2_at_{t_star:g}"
    res.series["sweep"] = {small: vals, col: l2, f"{col}_exact": l2_exact}
    by_size = np.argsort(np.abs(vals))[::-1]
    ordered = l2[by_size]
    for r in results:
        if r.metrics.get("manifold_kind") != ManifoldKind.ATTRACTING.value:
            res.warnings.append(f"{r.scenario}: manifold not attracting")
    m = res.metrics
    m["t_star"] = t_star
    m["small_param"] = small
    m["n_values"] = len(vals)
    m["strictly_decreasing"] = bool(np.all(np.diff(ordered) < 0))
    order = _order_fit(vals, l2)
    m["fitted_order"] = order if order is not None else "not-available"
    order_exact = _order_fit(vals, l2_exact)
    m["fitted_order_exact"] = order_exact if order_exact is not None else "not-available"
    m["max_full_solver_error"] = max(r.metrics["full_solver_error_at_t"] for r in results) if sc.full_solver == "integrate" else 0.0
    m["monotone_after_layer_all"] = all(r.metrics.get("monotone_after_layer", True) for r in results)
    return res


def _degenerate(p: ModelParams, limit: LimitKind) -> bool:
    if limit is LimitKind.LIQUID_MARKET:
        lhs, rhs = p.a * p.gamma, p.b
    else:
        lhs, rhs = p.epsilon, p.b
    return abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1e-300)


def run_degenerate_sweep(sc: ScenarioConfig) -> ExperimentResult:
    """Full-model runs where no slow manifold exists (a gamma = b, resp. epsilon = b)."""
    check_scenario(sc)
    p = sc.params
    small = SMALL_PARAM[sc.limit]
    if not _degenerate(p, sc.limit):
        cond = "a*gamma = b" if sc.limit is LimitKind.LIQUID_MARKET else "epsilon = b"
        raise ConfigError(f"params: degenerate sweep requires {cond}")
    res = ExperimentResult(sc.name, sc.kind)
    res.notes.append("no slow manifold exists in the degenerate case; only the full model is integrated")
    m = res.metrics
    m["small_param"] = small
    reductions_failed = []
    for v in sc.values:
        pv = p.replace(**{small: v})
        tag = f"{small}={v:g}"
        for w in _param_warnings(pv):
            res.warnings.append(f"{tag}: {w}")
        try:
            projector(build_reduction(pv, sc.limit))
            reductions_failed.append(False)
        except DegenerateManifoldError:
            reductions_failed.append(True)
        traj = integrate_full(pv, sc.start, sc.integrator_config())
        ts = _grid(sc, traj.times[-1])
        xs = traj.sample(ts)
        res.series[f"trajectory_{tag}"] = {"t": ts, "P": xs[:, 0], "Psi": xs[:, 1]}
        eq = equilibrium(pv).as_array()
        m[f"{tag}.max_deviation"] = float(np.linalg.norm(xs - eq, axis=1).max())
        m[f"{tag}.truncated"] = traj.truncated
        m[f"{tag}.t_end"] = float(traj.times[-1])
        m[f"{tag}.stable"] = stability_test(pv).value
        if traj.truncated:
            res.warnings.append(f"{tag}: blow-up, trajectory truncated at t={traj.times[-1]:.6g}")
    m["reduction_constructible"] = not all(reductions_failed)
    return res


def run_repelling_demo(sc: ScenarioConfig) -> ExperimentResult:
    """Full model from on- and off-manifold starts next to the formal reduced solution."""
    check_scenario(sc)
    p = sc.params
    rm = _reduction(sc)
    rp = rm.problem
    if rm.manifold.kind is ManifoldKind.ATTRACTING:
        raise ConfigError("limit: slow manifold is attracting; repelling demo needs a repelling one")
    res = ExperimentResult(sc.name, sc.kind, warnings=_param_warnings(p))
    res.classification = _classification(p, res.warnings)
    res.notes.append("reduction is formal: the slow manifold is repelling")

    x_off = sc.start
    x_on = sc.x0_on if sc.x0_on is not None else nearest_point_on_manifold(rp, x_off)
    m = res.metrics
    for tag, x0 in (("on_manifold", x_on), ("off_manifold", x_off)):
        traj = integrate_full(p, x0, sc.integrator_config())
        ts = _grid(sc, traj.times[-1])
        xs = traj.sample(ts)
        resid = np.array([manifold_residual(rp, s) for s in xs])
        res.series[f"full_{tag}"] = {"t": ts, "P": xs[:, 0], "Psi": xs[:, 1], "residual": resid}
        m[f"{tag}.x0_residual"] = manifold_residual(rp, x0)
        m[f"{tag}.max_residual"] = float(resid.max())
        m[f"{tag}.final_residual"] = float(resid[-1])
        half = len(resid) // 2
        m[f"{tag}.residual_grows"] = bool(resid[half:].max() > resid[: half + 1].max())
        m[f"{tag}.truncated"] = traj.truncated

    t_red = sc.reduced_t_end if sc.reduced_t_end is not None else sc.t_span[1]
    z0 = rm.free_of(x_on)
    red = integrate_reduced(rm, z0, sc.integrator_config((sc.t_span[0], t_red)))
    ts = _grid(sc, red.times[-1])
    zs = red.sample(ts)[:, 0]
    lifted = rm.lift(zs)
    resid = np.array([manifold_residual(rp, s) for s in lifted])
    res.series["reduced"] = {"t": ts, rm.free_variable: zs, "P": lifted[:, 0], "Psi": lifted[:, 1], "residual": resid}
    m["manifold_kind"] = rm.manifold.kind.value
    m["reduced_rate"] = rm.rate
    m["reduced_max_residual"] = float(resid.max())
    m["reduced_t_end"] = float(red.times[-1])
    m["off_departs_faster"] = bool(m["off_manifold.max_residual"] > m["on_manifold.max_residual"])
    return res


def run_region_grid(sc: ScenarioConfig) -> ExperimentResult:
    check_scenario(sc)
    g = sc.grid or GridSpec()
    eps = sc.params.epsilon
    grid = stability_region_grid(g.gamma_a_range, g.b_range, g.resolution, epsilon=eps)
    res = ExperimentResult(sc.name, sc.kind)
    GA, BB = np.meshgrid(grid.gamma_a, grid.b)
    res.series["regions"] = {
        "gamma_a": GA.ravel(),
        "b": BB.ravel(),
        "region": np.array([lab.value for lab in grid.labels.ravel()], dtype=object),
    }
    res.series["boundaries"] = {"gamma_a": grid.gamma_a, **grid.boundaries}
    res.metrics["epsilon"] = eps
    for k, v in grid.counts().items():
        res.metrics[f"count.{k}"] = v
    return res


RUNNERS = {
    ScenarioKind.FULL_TRAJECTORY: run_trajectory,
    ScenarioKind.REDUCED_COMPARISON: run_reduced_comparison,
    ScenarioKind.CONVERGENCE_SWEEP: run_convergence_sweep,
    ScenarioKind.DEGENERATE_SWEEP: run_degenerate_sweep,
    ScenarioKind.REPELLING_DEMO: run_repelling_demo,
    ScenarioKind.REGION_GRID: run_region_grid,
}


def run_scenario(sc: ScenarioConfig) -> ExperimentResult:
    return RUNNERS[sc.kind](sc)
