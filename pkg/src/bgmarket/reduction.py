"""Rank-one slow-manifold reductions of the Beja-Goldman model.

The full system is written as ``x' = h0(x) / small + h1(x)`` with a fast
part that factors as ``h0 = K mu`` (``K`` a constant column, ``mu`` an
affine scalar). The reduced flow on ``{mu = 0}`` is ``x' = Q h1(x)`` with
the oblique projector ``Q = I - K (Dmu K)^-1 Dmu``. The reduced system is
integrated in the same time variable as the full model.

Two limits are supported:

* liquid market (``epsilon -> 0``): ``h0 = ED (1, 1/gamma)``,
  ``h1 = (0, -Psi/gamma)``, free variable ``Psi``;
* liquid chartist (``gamma -> 0``): ``h0 = (0, ED/epsilon - Psi)``,
  ``h1 = (ED/epsilon, 0)``, free variable ``P``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import InvalidParameterError, ModelParams, State, excess_demands

DEGENERACY_RTOL = 1e-14


class DegenerateManifoldError(ValueError):
    """``Dmu K`` vanishes: there is no slow manifold to reduce onto."""


class LimitKind(str, enum.Enum):
    LIQUID_MARKET = "LiquidMarket"
    LIQUID_CHARTIST = "LiquidChartist"


class ManifoldKind(str, enum.Enum):
    ATTRACTING = "Attracting"
    REPELLING = "Repelling"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class ReductionProblem:
    limit_kind: LimitKind
    params: ModelParams
    h0: Callable[[State], np.ndarray]
    h1: Callable[[State], np.ndarray]
    K: np.ndarray
    mu: Callable[[State], float]
    Dmu: np.ndarray
    small_param: str

    @property
    def DmuK(self) -> float:
        return float(self.Dmu @ self.K)

    @property
    def is_degenerate(self) -> bool:
        return abs(self.DmuK) <= DEGENERACY_RTOL * np.linalg.norm(self.Dmu) * np.linalg.norm(self.K)

    def fast_jacobian(self) -> np.ndarray:
        return np.outer(self.K, self.Dmu)


@dataclass(frozen=True)
class SlowManifold:
    description: str
    kind: ManifoldKind
    nonzero_eigenvalue: float


def build_reduction(p: ModelParams, kind: LimitKind | str, n_check: int = 20, seed: int = 0) -> ReductionProblem:
    kind = LimitKind(kind)
    a, b, r, F, eps, gam = p.a, p.b, p.r, p.F, p.epsilon, p.gamma

    def ed(s):
        return excess_demands(p, State(*s))[2]

    if kind is LimitKind.LIQUID_MARKET:
        if gam == 0:
            raise InvalidParameterError("liquid market reduction needs gamma != 0")
        K = np.array([1.0, 1.0 / gam])
        Dmu = np.array([-a, b])

        def mu(s):
            return ed(s)

        def h0(s):
            return ed(s) * np.array([1.0, 1.0 / gam])

        def h1(s):
            return np.array([0.0, -s[1] / gam])

        small = "epsilon"
    else:
        if eps == 0:
            raise InvalidParameterError("liquid chartist reduction needs epsilon != 0")
        K = np.array([0.0, 1.0])
        Dmu = np.array([-a / eps, b / eps - 1.0])

        def mu(s):
            return ed(s) / eps - s[1]

        def h0(s):
            return np.array([0.0, ed(s) / eps - s[1]])

        def h1(s):
            return np.array([ed(s) / eps, 0.0])

        small = "gamma"

    rp = ReductionProblem(kind, p, h0, h1, K, mu, Dmu, small)
    rng = np.random.default_rng(seed)
    for s in rng.uniform(-10.0, 10.0, size=(n_check, 2)):
        lhs = rp.h0(s)
        rhs = rp.K * rp.mu(s)
        scale = 1.0 + np.abs(lhs).max()
        if np.abs(lhs - rhs).max() > 1e-12 * scale:
            raise AssertionError(f"h0 != K mu at {s}")
    return rp


def slow_manifold(rp: ReductionProblem) -> SlowManifold:
    """Classify the zero set of ``mu`` by the nonzero eigenvalue ``Dmu K`` of ``Dh0``."""
    p = rp.params
    if rp.limit_kind is LimitKind.LIQUID_MARKET:
        desc = f"P = ({p.b}/{p.a}) (Psi - {p.r}) + {p.F}"
    else:
        desc = f"Psi = ({p.a} ({p.F} - P) - {p.r}*{p.b}) / ({p.epsilon} - {p.b})"
    sigma = rp.DmuK
    if rp.is_degenerate:
        kind = ManifoldKind.DEGENERATE
    elif sigma < 0:
        kind = ManifoldKind.ATTRACTING
    else:
        kind = ManifoldKind.REPELLING
    return SlowManifold(desc, kind, sigma)


def projector(rp: ReductionProblem) -> np.ndarray:
    if rp.is_degenerate:
        raise DegenerateManifoldError(
            f"{rp.limit_kind.value}: Dmu K = {rp.DmuK!r} vanishes, no slow manifold"
        )
    return np.eye(2) - np.outer(rp.K, rp.Dmu) / rp.DmuK


def manifold_residual(rp: ReductionProblem, s) -> float:
    """Normalized distance ``|mu(s)| / |Dmu|`` to the slow manifold."""
    return abs(rp.mu(np.asarray(s, dtype=float))) / float(np.linalg.norm(rp.Dmu))


def project_to_manifold(rp: ReductionProblem, s) -> State:
    """Move ``s`` along the fast direction ``K`` onto ``{mu = 0}``."""
    if rp.is_degenerate:
        raise DegenerateManifoldError("cannot project onto a degenerate manifold")
    s = np.asarray(s, dtype=float)
    return State.from_array(s - rp.mu(s) / rp.DmuK * rp.K)


def nearest_point_on_manifold(rp: ReductionProblem, s) -> State:
    """Orthogonal projection of ``s`` onto ``{mu = 0}``."""
    s = np.asarray(s, dtype=float)
    return State.from_array(s - rp.mu(s) / float(rp.Dmu @ rp.Dmu) * rp.Dmu)


@dataclass(frozen=True)
class ReducedModel:
    problem: ReductionProblem
    Q: np.ndarray
    manifold: SlowManifold
    free_variable: str
    rate: float
    fixed_point: float

    @property
    def valid(self) -> bool:
        return self.manifold.kind is ManifoldKind.ATTRACTING

    @property
    def free_index(self) -> int:
        return 1 if self.free_variable == "Psi" else 0

    def algebraic_map(self, z: float) -> State:
        p = self.problem.params
        if self.problem.limit_kind is LimitKind.LIQUID_MARKET:
            return State((p.b / p.a) * (z - p.r) + p.F, z)
        return State(z, (p.a * (p.F - z) - p.r * p.b) / (p.epsilon - p.b))

    def lift(self, z) -> np.ndarray:
        """Vectorized :meth:`algebraic_map`; returns an ``(n, 2)`` array."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        p = self.problem.params
        if self.problem.limit_kind is LimitKind.LIQUID_MARKET:
            return np.column_stack([(p.b / p.a) * (z - p.r) + p.F, z])
        return np.column_stack([z, (p.a * (p.F - z) - p.r * p.b) / (p.epsilon - p.b)])

    def free_of(self, s) -> float:
        return float(np.asarray(s, dtype=float)[self.free_index])

    def projected_field(self, s) -> np.ndarray:
        return self.Q @ self.problem.h1(np.asarray(s, dtype=float))

    def ode_rhs(self, z: float) -> float:
        """Free component of ``Q h1`` evaluated on the manifold."""
        return float(self.projected_field(self.algebraic_map(z))[self.free_index])

    def affine_coefficients(self) -> tuple[float, float]:
        """``(alpha, beta)`` with ``ode_rhs(z) = alpha z + beta``."""
        beta = self.ode_rhs(0.0)
        return self.ode_rhs(1.0) - beta, beta

    def formula_rhs(self, z: float) -> float:
        """Right-hand side of the reduced equation written out in the parameters."""
        p = self.problem.params
        if self.problem.limit_kind is LimitKind.LIQUID_MARKET:
            return -p.a / (p.a * p.gamma - p.b) * z
        return (p.a * (p.F - z) - p.r * p.b) / (p.epsilon - p.b)

    def closed_form(self, z0: float, t):
        return reduced_closed_form(self, z0, t)

    @property
    def equilibrium_exponentially_stable(self) -> bool:
        return self.rate < 0


def reduce(rp: ReductionProblem) -> ReducedModel:
    """Formal reduction; a repelling manifold still yields a model with ``valid`` false."""
    Q = projector(rp)
    man = slow_manifold(rp)
    p = rp.params
    if rp.limit_kind is LimitKind.LIQUID_MARKET:
        if p.a == 0:
            raise InvalidParameterError("liquid market manifold needs a != 0")
        rate = -p.a / (p.a * p.gamma - p.b)
        return ReducedModel(rp, Q, man, "Psi", rate, 0.0)
    rate = -p.a / (p.epsilon - p.b)
    fixed = p.F - p.r * p.b / p.a if p.a != 0 else math.nan
    return ReducedModel(rp, Q, man, "P", rate, fixed)


def reduced_closed_form(rm: ReducedModel, z0: float, t):
    """``z(t) = z* + (z0 - z*) exp(rate t)``."""
    t = np.asarray(t, dtype=float)
    out = rm.fixed_point + (z0 - rm.fixed_point) * np.exp(rm.rate * t)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class HilbertReport:
    limit_kind: LimitKind
    n_samples: int
    max_abs_deviation: float
    max_rel_deviation: float
    max_tangency_defect: float
    condition_number: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_deviation <= self.tol and self.max_tangency_defect <= self.tol


def hilbert_check(
    rp: ReductionProblem,
    p: ModelParams | None = None,
    n_samples: int = 100,
    seed: int = 0,
    spread: float = 5.0,
    tol: float = 1e-12,
) -> HilbertReport:
    """Compare the projector-route reduced field with the written-out reduced equation.

    Samples the free variable uniformly within ``spread`` of the reduced
    fixed point, lifts each sample onto the manifold and checks that the
    free component of ``Q h1`` equals :meth:`ReducedModel.formula_rhs`
    and that ``Dmu Q h1 = 0`` (the field is tangent to the manifold).
    Relative deviations are scaled by ``max(1, |formula_rhs|)``.
    """
    if p is not None and p != rp.params:
        rp = build_reduction(p, rp.limit_kind)
    rm = reduce(rp)
    rng = np.random.default_rng(seed)
    zs = rm.fixed_point + rng.uniform(-spread, spread, size=n_samples)
    max_abs = max_rel = max_tan = 0.0
    dmu_scale = float(np.linalg.norm(rp.Dmu))
    for z in zs:
        s = rm.algebraic_map(float(z))
        field = rm.projected_field(s)
        ref = rm.formula_rhs(float(z))
        dev = abs(field[rm.free_index] - ref)
        max_abs = max(max_abs, dev)
        max_rel = max(max_rel, dev / max(1.0, abs(ref)))
        tan = abs(rp.Dmu @ field) / (dmu_scale * max(1.0, np.abs(field).max()))
        max_tan = max(max_tan, tan)
    return HilbertReport(
        rp.limit_kind, n_samples, max_abs, max_rel, max_tan, 1.0 / abs(rp.DmuK), tol
    )
