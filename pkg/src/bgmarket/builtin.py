"""Shipped scenarios, one per figure (Figs. 1-13; Figs. 2 and 5 have two panels).

Initial data are not given for most figures; unless stated otherwise runs
start at ``(F, r)``, which lies on the liquid-market slow manifold. ``F = 3``
is used throughout, as in the reduction figures.
"""
from __future__ import annotations

from .experiments import GridSpec, ScenarioConfig, ScenarioKind
from .integrator import IntegratorConfig
from .model import ModelParams, State
from .reduction import LimitKind

SWEEP_VALUES = (1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001)
# comparisons resolve distances down to ~1e-12 in deviation coordinates
TIGHT = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-22)


def _p(a, b, eps, gam, r=0.1, F=3.0) -> ModelParams:
    return ModelParams(a=a, b=b, r=r, F=F, epsilon=eps, gamma=gam)


def _trajectory(name, a, b, caption, t1=50.0, **kw) -> ScenarioConfig:
    return ScenarioConfig(
        name=name,
        kind=ScenarioKind.FULL_TRAJECTORY,
        params=_p(a, b, 1.0, 1.0),
        t_span=(0.0, t1),
        caption_region=caption,
        description=f"full model, caption region {caption}",
        **kw,
    )


def builtin_scenarios() -> dict[str, ScenarioConfig]:
    sc = [
        ScenarioConfig(
            name="fig01_regions",
            kind=ScenarioKind.REGION_GRID,
            params=_p(1.0, 1.0, 1.0, 1.0),
            grid=GridSpec((0.0, 4.0), (0.0, 4.0), (81, 81)),
            description="stability regions over (gamma a, b) at epsilon = 1",
        ),
        _trajectory("fig02a_region_I", 0.1, 0.5, "I"),
        _trajectory("fig02b_region_II", 4.0, 0.9, "II"),
        _trajectory("fig03_region_III", 1.2, 2.0, "III"),
        _trajectory("fig04_region_IV", 1.0, 2.2, "IV"),
        _trajectory("fig05a_region_V", 0.01, 1.25, "V", t1=200.0),
        _trajectory("fig05b_border", 1.0, 2.0, "Border"),
        ScenarioConfig(
            name="fig06_degenerate_market",
            kind=ScenarioKind.DEGENERATE_SWEEP,
            params=_p(1.0, 1.0, 0.1, 1.0),
            limit=LimitKind.LIQUID_MARKET,
            values=(0.1, 0.01),
            t_span=(0.0, 20.0),
            description="a gamma = b: no slow manifold, positive epsilon",
        ),
        ScenarioConfig(
            name="fig07_degenerate_market_negative",
            kind=ScenarioKind.DEGENERATE_SWEEP,
            params=_p(1.0, 1.0, -0.1, 1.0),
            limit=LimitKind.LIQUID_MARKET,
            values=(-0.1, -0.01),
            t_span=(0.0, 20.0),
            permissive=True,
            description="a gamma = b with negative epsilon (non-physical)",
        ),
        ScenarioConfig(
            name="fig08_repelling_market",
            kind=ScenarioKind.REPELLING_DEMO,
            params=_p(1.0, 1.3, 0.1, 1.0),
            limit=LimitKind.LIQUID_MARKET,
            x0=State(3.0, 1.0),
            x0_on=State(3.0, 0.1),
            t_span=(0.0, 3.0),
            description="a gamma < b: repelling liquid-market manifold",
        ),
        ScenarioConfig(
            name="fig09_liquid_market",
            kind=ScenarioKind.REDUCED_COMPARISON,
            params=_p(2.0, 1.0, 0.1, 1.0),
            limit=LimitKind.LIQUID_MARKET,
            integrator=TIGHT,
            description="full vs reduced model, liquid market limit",
        ),
        ScenarioConfig(
            name="fig10_repelling_chartist",
            kind=ScenarioKind.REPELLING_DEMO,
            params=_p(1.0, 2.0, 1.8, 0.1),
            limit=LimitKind.LIQUID_CHARTIST,
            x0=State(1.0, 1.0),
            t_span=(0.0, 10.0),
            reduced_t_end=1.5,
            description="epsilon < b: repelling liquid-chartist manifold",
        ),
        ScenarioConfig(
            name="fig11_sweep_epsilon",
            kind=ScenarioKind.CONVERGENCE_SWEEP,
            params=_p(2.0, 1.0, 1.0, 1.0),
            limit=LimitKind.LIQUID_MARKET,
            values=SWEEP_VALUES,
            integrator=TIGHT,
            description="L2 distance at t = 10 against epsilon",
        ),
        ScenarioConfig(
            name="fig12_liquid_chartist",
            kind=ScenarioKind.REDUCED_COMPARISON,
            params=_p(2.0, 1.0, 2.0, 0.1),
            limit=LimitKind.LIQUID_CHARTIST,
            integrator=TIGHT,
            description="full vs reduced model, liquid chartist limit",
        ),
        ScenarioConfig(
            name="fig13_sweep_gamma",
            kind=ScenarioKind.CONVERGENCE_SWEEP,
            params=_p(2.0, 1.0, 3.0, 1.0),
            limit=LimitKind.LIQUID_CHARTIST,
            values=SWEEP_VALUES,
            integrator=TIGHT,
            description="L2 distance at t = 10 against gamma",
        ),
    ]
    return {s.name: s for s in sc}


def get_builtin(name: str) -> ScenarioConfig:
    scenarios = builtin_scenarios()
    if name in scenarios:
        return scenarios[name]
    matches = [k for k in scenarios if k.startswith(name)]
    if len(matches) == 1:
        return scenarios[matches[0]]
    raise KeyError(f"unknown builtin scenario {name!r}")
