"""Parameters, state and vector field of the Beja-Goldman market model.

The model couples a disequilibrium price equation to a chartist estimate::

    dP/dt   = (a (F - P) + b (Psi - r)) / eps
    dPsi/dt = (dP/dt - Psi) / gamma

``P`` is the logarithmic price and is never exponentiated. ``eps`` is the
inverse market depth (some texts call ``1/eps`` the market depth or the
speed of price adjustment; here ``eps`` is always the inverse depth) and
``gamma`` the inverse reaction speed of the chartists.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np


class InvalidParameterError(ValueError):
    """Raised when parameters make the model (or a requested quantity) undefined."""


@dataclass(frozen=True)
class ModelParams:
    a: float
    b: float
    r: float
    F: float
    epsilon: float
    gamma: float

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")

    @property
    def standard_regime(self) -> bool:
        """All six parameters strictly positive."""
        return all(v > 0 for v in (self.a, self.b, self.r, self.F, self.epsilon, self.gamma))

    @property
    def permissive(self) -> bool:
        """Only the divisions in the vector field are well defined."""
        return self.epsilon != 0 and self.gamma != 0

    def check(self, permissive: bool = True) -> None:
        """Raise :class:`InvalidParameterError` unless the parameters are usable.

        With ``permissive=False`` every parameter must be strictly positive.
        """
        if self.epsilon == 0:
            raise InvalidParameterError("epsilon must be nonzero")
        if self.gamma == 0:
            raise InvalidParameterError("gamma must be nonzero")
        if not permissive and not self.standard_regime:
            raise InvalidParameterError(
                "standard regime requires a, b, r, F, epsilon, gamma > 0"
            )

    def replace(self, **changes) -> "ModelParams":
        values = asdict(self)
        values.update(changes)
        return ModelParams(**values)

    def to_dict(self) -> dict:
        return asdict(self)


class State(NamedTuple):
    P: float
    Psi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.P, self.Psi], dtype=float)

    @classmethod
    def from_array(cls, x) -> "State":
        return cls(float(x[0]), float(x[1]))


@dataclass(frozen=True)
class AffineSystem:
    """``dX/dt = A X + B`` with ``X = (P, Psi)``."""

    A: np.ndarray
    B: np.ndarray

    def __call__(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float) + self.B


def excess_demands(p: ModelParams, s: State) -> tuple[float, float, float]:
    """Fundamentalist, chartist and aggregate excess demand at state ``s``."""
    ed_f = p.a * (p.F - s.P)
    ed_c = p.b * (s.Psi - p.r)
    return ed_f, ed_c, ed_f + ed_c


def vector_field(p: ModelParams, s: State) -> tuple[float, float]:
    p.check()
    ed = excess_demands(p, s)[2]
    dP = ed / p.epsilon
    dPsi = (dP - s.Psi) / p.gamma
    return dP, dPsi


def affine_form(p: ModelParams) -> AffineSystem:
    p.check()
    a, b, eps, gam = p.a, p.b, p.epsilon, p.gamma
    A = np.array(
        [
            [-a / eps, b / eps],
            [-a / (gam * eps), -(1.0 / gam) * (1.0 - b / eps)],
        ]
    )
    drive = a * p.F - b * p.r
    B = np.array([drive / eps, drive / (eps * gam)])
    return AffineSystem(A, B)


def equilibrium(p: ModelParams) -> State:
    """Fixed point ``(F - (b/a) r, 0)``."""
    if p.a == 0:
        raise InvalidParameterError("equilibrium price needs a != 0")
    return State(p.F - (p.b / p.a) * p.r, 0.0)
