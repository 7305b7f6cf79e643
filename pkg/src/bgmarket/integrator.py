"""Adaptive implicit integration of affine ODE systems ``y' = A y + B``.

The adaptive method is the five-stage, L-stable, stiffly accurate SDIRK
scheme of order 4 with an embedded order-3 solution (Hairer & Wanner,
Solving ODEs II, Table IV.6.5). Because the right-hand side is affine every
implicit stage is a single linear solve with ``I - h g A``. Dense output is
cubic Hermite interpolation between accepted steps.

``FixedStepReference`` is classical explicit RK4 with a constant step,
kept for contrast with the stiff solver.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import ModelParams, State, affine_form, equilibrium
from .spectral import eigen

# Butcher tableau (lower triangular, diagonal 1/4)
SDIRK_A = np.array(
    [
        [1 / 4, 0, 0, 0, 0],
        [1 / 2, 1 / 4, 0, 0, 0],
        [17 / 50, -1 / 25, 1 / 4, 0, 0],
        [371 / 1360, -137 / 2720, 15 / 544, 1 / 4, 0],
        [25 / 24, -49 / 48, 125 / 16, -85 / 12, 1 / 4],
    ]
)
SDIRK_B = SDIRK_A[-1].copy()
SDIRK_BHAT = np.array([59 / 48, -17 / 96, 225 / 32, -85 / 12, 0.0])
SDIRK_C = SDIRK_A.sum(axis=1)
SDIRK_GAMMA = 1 / 4
SDIRK_ORDER = 4
EMBEDDED_ORDER = 3

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
UNDERFLOW_RATIO = 1e-14


class IntegrationError(RuntimeError):
    pass


class StepSizeUnderflowError(IntegrationError):
    pass


class Method(str, enum.Enum):
    ADAPTIVE_IMPLICIT = "AdaptiveImplicit"
    FIXED_STEP_REFERENCE = "FixedStepReference"


@dataclass(frozen=True)
class IntegratorConfig:
    t_span: tuple[float, float] = (0.0, 10.0)
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    initial_step: float | None = None
    method: Method = Method.ADAPTIVE_IMPLICIT
    blowup_threshold: float = 1e12
    max_steps: int = 2_000_000

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "t_span", (float(self.t_span[0]), float(self.t_span[1])))
        errors = self.validation_errors()
        if errors:
            raise ValueError("; ".join(errors))

    def validation_errors(self) -> list[str]:
        errs = []
        t0, t1 = self.t_span
        if not t1 > t0:
            errs.append("t_span: t1 must exceed t0")
        if not self.rel_tol > 0:
            errs.append("rel_tol must be positive")
        if not self.abs_tol > 0:
            errs.append("abs_tol must be positive")
        if not self.max_step > 0:
            errs.append("max_step must be positive")
        if self.initial_step is not None and not self.initial_step > 0:
            errs.append("initial_step must be positive")
        if self.method is Method.FIXED_STEP_REFERENCE and not math.isfinite(self.max_step):
            errs.append("FixedStepReference needs a finite max_step (the step size)")
        return errs

    def with_span(self, t0: float, t1: float) -> "IntegratorConfig":
        return replace(self, t_span=(t0, t1))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def truncated(self) -> bool:
        return bool(self.metadata.get("truncated", False))

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def values(self) -> np.ndarray:
        """States with a trailing singleton axis removed (scalar models)."""
        return self.states[:, 0] if self.states.shape[1] == 1 else self.states

    def state(self, i: int) -> State:
        return State.from_array(self.states[i])

    def sample(self, ts) -> np.ndarray:
        """Cubic Hermite dense output at ``ts`` (within the integrated span)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        lo, hi = self.times[0], self.times[-1]
        tol = 1e-12 * max(1.0, abs(hi))
        if ts.size and (ts.min() < lo - tol or ts.max() > hi + tol):
            raise ValueError(f"sample times outside integrated span [{lo}, {hi}]")
        ts = np.clip(ts, lo, hi)
        idx = np.clip(np.searchsorted(self.times, ts, side="right") - 1, 0, len(self.times) - 2)
        t0 = self.times[idx]
        h = self.times[idx + 1] - t0
        th = ((ts - t0) / h)[:, None]
        y0, y1 = self.states[idx], self.states[idx + 1]
        f0, f1 = self.derivs[idx], self.derivs[idx + 1]
        hh = h[:, None]
        h00 = (1 + 2 * th) * (1 - th) ** 2
        h10 = th * (1 - th) ** 2
        h01 = th**2 * (3 - 2 * th)
        h11 = th**2 * (th - 1)
        return h00 * y0 + h10 * hh * f0 + h01 * y1 + h11 * hh * f1


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x)))


def _initial_step(A, B, y0, f0, t_range, rtol, atol, order) -> float:
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_range)
    y1 = y0 + h0 * f0
    d2 = _rms((A @ y1 + B - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1, t_range)


def _sdirk_step(A, B, y, h, solver):
    n = len(y)
    K = np.empty((5, n))
    for i in range(5):
        yi = y + h * (SDIRK_A[i, :i] @ K[:i]) if i else y
        K[i] = solver(A @ yi + B)
    y_new = y + h * (SDIRK_B @ K)
    err = h * ((SDIRK_B - SDIRK_BHAT) @ K)
    return y_new, err


def _adaptive(A, B, y0, cfg: IntegratorConfig) -> Trajectory:
    t0, t1 = cfg.t_span
    n = len(y0)
    eye = np.eye(n)
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    f0 = A @ y0 + B
    span = t1 - t0
    h = cfg.initial_step or _initial_step(A, B, y0, f0, span, rtol, atol, EMBEDDED_ORDER)
    h = min(h, cfg.max_step, span)
    h_min = UNDERFLOW_RATIO * span

    times, states, derivs = [t0], [y0.copy()], [f0]
    t, y = t0, y0.copy()
    n_acc = n_rej = n_solves = 0
    truncated = False
    cache_h, cache_inv = None, None
    rejected_last = False

    while t < t1:
        if n_acc + n_rej >= cfg.max_steps:
            raise IntegrationError(f"exceeded max_steps={cfg.max_steps}")
        last = t + h >= t1 - 1e-12 * abs(t1)
        if last:
            h = t1 - t
        if h < h_min and not last:
            raise StepSizeUnderflowError(f"step size {h:.3e} underflow at t={t:.6g}")
        if h != cache_h:
            M = eye - h * SDIRK_GAMMA * A
            cache_inv = np.linalg.inv(M)
            cache_h = h
        inv = cache_inv
        y_new, err = _sdirk_step(A, B, y, h, lambda v: inv @ v)
        # filtered estimate damps spurious stiff components of the raw difference
        err = inv @ err
        n_solves += 5
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = _rms(err / scale)
        if not np.all(np.isfinite(y_new)):
            err_norm = math.inf

        if err_norm <= 1.0:
            t = t1 if last else t + h
            y = y_new
            n_acc += 1
            times.append(t)
            states.append(y.copy())
            derivs.append(A @ y + B)
            if np.abs(y).max() > cfg.blowup_threshold:
                truncated = True
                break
            fac = MAX_FACTOR if err_norm == 0 else min(MAX_FACTOR, SAFETY * err_norm ** (-1.0 / (EMBEDDED_ORDER + 1)))
            if rejected_last:
                fac = min(fac, 1.0)
            rejected_last = False
            h = min(h * max(fac, MIN_FACTOR), cfg.max_step)
        else:
            n_rej += 1
            rejected_last = True
            fac = 0.1 if not math.isfinite(err_norm) else max(MIN_FACTOR, SAFETY * err_norm ** (-1.0 / (EMBEDDED_ORDER + 1)))
            h = h * fac
            if h < h_min:
                raise StepSizeUnderflowError(f"step size {h:.3e} underflow at t={t:.6g}")

    meta = {
        "method": Method.ADAPTIVE_IMPLICIT.value,
        "n_accepted": n_acc,
        "n_rejected": n_rej,
        "n_linear_solves": n_solves,
        "rel_tol": rtol,
        "abs_tol": atol,
        "truncated": truncated,
        "t_end": float(times[-1]),
    }
    return Trajectory(np.array(times), np.array(states), np.array(derivs), meta)


def _fixed_rk4(A, B, y0, cfg: IntegratorConfig) -> Trajectory:
    t0, t1 = cfg.t_span
    n_steps = max(1, math.ceil((t1 - t0) / cfg.max_step - 1e-12))
    h = (t1 - t0) / n_steps

    def f(v):
        return A @ v + B

    times, states, derivs = [t0], [y0.copy()], [f(y0)]
    y = y0.copy()
    truncated = False
    for k in range(1, n_steps + 1):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t1 if k == n_steps else t0 + k * h
        times.append(t)
        states.append(y.copy())
        derivs.append(f(y))
        if not np.all(np.isfinite(y)) or np.abs(y).max() > cfg.blowup_threshold:
            truncated = True
            break
    meta = {
        "method": Method.FIXED_STEP_REFERENCE.value,
        "n_accepted": len(times) - 1,
        "n_rejected": 0,
        "step": h,
        "truncated": truncated,
        "t_end": float(times[-1]),
    }
    return Trajectory(np.array(times), np.array(states), np.array(derivs), meta)


def integrate_affine(A, B, y0, cfg: IntegratorConfig) -> Trajectory:
    """Integrate ``y' = A y + B`` over ``cfg.t_span``.

    Blow-up (``max |y| > cfg.blowup_threshold``) truncates the trajectory and
    sets ``metadata['truncated']``; it is not raised.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_1d(np.asarray(B, dtype=float))
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if cfg.method is Method.FIXED_STEP_REFERENCE:
        return _fixed_rk4(A, B, y0, cfg)
    return _adaptive(A, B, y0, cfg)


def integrate_full(
    p: ModelParams, x0: State, cfg: IntegratorConfig, relative_to_equilibrium: bool = False
) -> Trajectory:
    """Integrate the full model.

    With ``relative_to_equilibrium`` the shifted system ``y' = A y`` is
    integrated and the returned states are ``X - X*``; this keeps small
    differences between nearby solutions from drowning in the rounding of
    ``P ~ F``.
    """
    p.check()
    sys_ = affine_form(p)
    x0 = np.asarray(x0, dtype=float)
    if relative_to_equilibrium:
        xs = equilibrium(p).as_array()
        traj = integrate_affine(sys_.A, np.zeros(2), x0 - xs, cfg)
        traj.metadata["coordinates"] = "deviation"
    else:
        traj = integrate_affine(sys_.A, sys_.B, x0, cfg)
        traj.metadata["coordinates"] = "absolute"
    return traj


def integrate_reduced(rm, z0: float, cfg: IntegratorConfig, relative_to_equilibrium: bool = False) -> Trajectory:
    """Integrate a 1-D reduced model; the right-hand side comes from ``Q h1``."""
    alpha, beta = rm.affine_coefficients()
    if relative_to_equilibrium:
        traj = integrate_affine([[alpha]], [0.0], [z0 - rm.fixed_point], cfg)
        traj.metadata["coordinates"] = "deviation"
    else:
        traj = integrate_affine([[alpha]], [beta], [z0], cfg)
        traj.metadata["coordinates"] = "absolute"
    return traj


def stiffness_probe(p: ModelParams, rtol: float = 1e-12) -> float:
    """Ratio ``max |Re lambda| / min |Re lambda|`` of the system matrix."""
    sd = eigen(p)
    re = sorted((abs(sd.lambda1.real), abs(sd.lambda2.real)))
    if re[0] <= rtol * re[1]:
        return math.inf
    return re[1] / re[0]
