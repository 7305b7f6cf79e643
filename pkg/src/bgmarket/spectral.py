"""Closed-form eigen-analysis, exact solution and stability classification."""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .model import InvalidParameterError, ModelParams, State, affine_form, equilibrium

BORDER_RTOL = 1e-12
DEGENERATE_RTOL = 1e-12


class DomainError(ValueError):
    """Raised when the oscillation criterion would take a square root of a negative number."""


class Tri(str, enum.Enum):
    YES = "yes"
    NO = "no"
    BORDER = "border"


class Region(str, enum.Enum):
    I_II = "I_II"
    III = "III"
    IV = "IV"
    V = "V"
    BORDER = "Border"


@dataclass(frozen=True)
class SpectralData:
    lambda1: complex
    lambda2: complex
    v1: np.ndarray
    v2: np.ndarray
    discriminant: float
    degenerate: bool

    @property
    def max_real(self) -> float:
        return max(self.lambda1.real, self.lambda2.real)


@dataclass(frozen=True)
class StabilityReport:
    stable: Tri
    oscillatory: Tri
    region: Region
    equilibrium: State | None = None

    def to_dict(self) -> dict:
        eq = None if self.equilibrium is None else list(self.equilibrium)
        return {
            "stable": self.stable.value,
            "oscillatory": self.oscillatory.value,
            "region": self.region.value,
            "equilibrium": eq,
        }


def discriminant(p: ModelParams) -> float:
    ag = p.a * p.gamma
    return (ag - p.b + p.epsilon) ** 2 - 4.0 * ag * p.epsilon


def _is_degenerate(p: ModelParams, disc: float) -> bool:
    scale = (abs(p.a * p.gamma) + abs(p.b) + abs(p.epsilon)) ** 2
    return abs(disc) <= DEGENERATE_RTOL * scale


def eigen(p: ModelParams) -> SpectralData:
    """Eigenvalues and eigenvectors of the system matrix in closed form.

    The root that suffers cancellation is recovered from the product of the
    roots (Vieta), and likewise for the eigenvector entries, so the slow
    eigenvalue stays accurate as epsilon or gamma tends to zero.
    """
    p.check()
    a, b, eps, gam = p.a, p.b, p.epsilon, p.gamma
    disc = discriminant(p)
    degenerate = _is_degenerate(p, disc)
    root = cmath.sqrt(disc) if disc < 0 else complex(math.sqrt(disc), 0.0)
    n = -a * gam + b - eps
    denom = 2.0 * gam * eps
    lam1 = (n - root) / denom
    lam2 = (n + root) / denom
    det = a / (gam * eps)
    if disc > 0 and not degenerate:
        # the root computed with a same-sign sum is accurate; derive the other
        if n >= 0:
            lam1 = complex(det / lam2.real) if lam2 != 0 else lam1
        else:
            lam2 = complex(det / lam1.real) if lam1 != 0 else lam2

    if a != 0:
        m = a * gam + b - eps
        x1 = (m + root) / (2.0 * a)
        x2 = (m - root) / (2.0 * a)
        if disc > 0 and not degenerate:
            prod = gam * b / a
            if m >= 0 and x1 != 0:
                x2 = complex(prod / x1.real)
            elif m < 0 and x2 != 0:
                x1 = complex(prod / x2.real)
        v1 = np.array([x1, 1.0], dtype=complex)
        v2 = np.array([x2, 1.0], dtype=complex)
    else:
        # closed form divides by a; fall back to a numerical eigenbasis
        A = affine_form(p).A
        w, V = np.linalg.eig(A.astype(complex))
        order = np.argsort([abs(w[0] - lam1), abs(w[1] - lam1)])
        V = V[:, order]
        v1, v2 = V[:, 0], V[:, 1]

    return SpectralData(
        lambda1=complex(lam1),
        lambda2=complex(lam2),
        v1=v1,
        v2=v2,
        discriminant=disc,
        degenerate=degenerate,
    )


def propagator(p: ModelParams, t: float) -> np.ndarray:
    """The matrix exponential ``exp(A t)`` of the homogeneous system.

    Written as ``c0 I + c1 (A - s I)`` with ``s`` half the trace; ``c0`` and
    ``c1`` are evaluated separately for real, complex and repeated
    eigenvalues so that no branch overflows or cancels.
    """
    A = affine_form(p).A
    sd = eigen(p)
    s = 0.5 * (A[0, 0] + A[1, 1])
    N = A - s * np.eye(2)
    if sd.degenerate:
        # Jordan block: exp(s t) (I + t N)
        c0 = math.exp(s * t)
        c1 = t * c0
    elif sd.discriminant < 0:
        w = abs(sd.lambda1.imag)
        es = math.exp(s * t)
        c0 = es * math.cos(w * t)
        c1 = es * math.sin(w * t) / w
    else:
        l_lo, l_hi = sorted((sd.lambda1.real, sd.lambda2.real))
        q = 0.5 * (l_hi - l_lo)
        if abs(q * t) < 1.0:
            es = math.exp(s * t)
            c0 = es * math.cosh(q * t)
            c1 = es * math.sinh(q * t) / q
        else:
            e_hi = math.exp(l_hi * t)
            e_lo = math.exp(l_lo * t)
            c0 = 0.5 * (e_hi + e_lo)
            c1 = (e_hi - e_lo) / (2.0 * q)
    return c0 * np.eye(2) + c1 * N


def exact_deviation(p: ModelParams, y0, t: float) -> np.ndarray:
    """Exact solution of the shifted system ``y' = A y`` with ``y = X - X*``."""
    return propagator(p, t) @ np.asarray(y0, dtype=float)


def exact_solution(p: ModelParams, x0: State, t: float) -> State:
    """``X(t) = exp(A t) (x0 - X*) + X*``."""
    if p.a == 0:
        raise InvalidParameterError("exact solution needs a != 0 (no unique equilibrium)")
    xs = equilibrium(p).as_array()
    x = exact_deviation(p, np.asarray(x0, dtype=float) - xs, t) + xs
    return State.from_array(x)


def fundamental_matrix(p: ModelParams, t: float) -> np.ndarray:
    """Real solution basis ``(Phi_1, Phi_2)`` built from the eigenpairs.

    Distinct real eigenvalues give ``exp(lambda_i t) v_i``; a complex pair
    gives the real part of the first and the imaginary part of the second
    complex solution. Not defined for repeated eigenvalues.
    """
    sd = eigen(p)
    if sd.degenerate:
        raise InvalidParameterError("no eigenvector basis for a repeated eigenvalue")
    phi1 = cmath.exp(sd.lambda1 * t) * sd.v1
    phi2 = cmath.exp(sd.lambda2 * t) * sd.v2
    if sd.discriminant < 0:
        return np.column_stack([phi1.real, phi2.imag])
    return np.column_stack([phi1.real, phi2.real])


def _sign_with_border(diff: float, scale: float, rtol: float) -> Tri:
    if abs(diff) <= rtol * scale:
        return Tri.BORDER
    return Tri.YES if diff > 0 else Tri.NO


def stability_test(p: ModelParams, rtol: float = BORDER_RTOL) -> Tri:
    """Stable iff ``a > (b - eps) / gamma``."""
    p.check()
    threshold = (p.b - p.epsilon) / p.gamma
    scale = max(abs(p.a), abs(threshold), abs(p.b / p.gamma), abs(p.epsilon / p.gamma))
    return _sign_with_border(p.a - threshold, scale, rtol)


def oscillation_test(p: ModelParams, rtol: float = BORDER_RTOL) -> Tri:
    """Oscillatory iff ``(sqrt(eps) - sqrt(a gamma))^2 < b < (sqrt(eps) + sqrt(a gamma))^2``."""
    p.check()
    ag = p.a * p.gamma
    if p.epsilon < 0 or ag < 0:
        raise DomainError("oscillation criterion needs epsilon >= 0 and a*gamma >= 0")
    se, sa = math.sqrt(p.epsilon), math.sqrt(ag)
    lo = (se - sa) ** 2
    hi = (se + sa) ** 2
    scale = max(abs(p.b), hi)
    if abs(p.b - lo) <= rtol * scale or abs(p.b - hi) <= rtol * scale:
        return Tri.BORDER
    return Tri.YES if lo < p.b < hi else Tri.NO


def region_of(stable: Tri, oscillatory: Tri) -> Region:
    if Tri.BORDER in (stable, oscillatory):
        return Region.BORDER
    if stable is Tri.YES:
        return Region.III if oscillatory is Tri.YES else Region.I_II
    return Region.IV if oscillatory is Tri.YES else Region.V


def classify(p: ModelParams, rtol: float = BORDER_RTOL) -> StabilityReport:
    stable = stability_test(p, rtol)
    osc = oscillation_test(p, rtol)
    eq = equilibrium(p) if p.a != 0 else None
    return StabilityReport(stable, osc, region_of(stable, osc), eq)


@dataclass
class RegionGrid:
    epsilon: float
    gamma_a: np.ndarray
    b: np.ndarray
    labels: np.ndarray  # object array of Region, indexed [i_b, j_gamma_a]
    boundaries: dict = field(default_factory=dict)

    def counts(self) -> dict:
        out = {r.value: 0 for r in Region}
        for lab in self.labels.ravel():
            out[lab.value] += 1
        return out


def boundary_curves(epsilon: float, gamma_a) -> dict:
    ga = np.asarray(gamma_a, dtype=float)
    se, sa = math.sqrt(epsilon), np.sqrt(np.clip(ga, 0.0, None))
    return {
        "stability": epsilon + ga,
        "oscillation_lower": (se - sa) ** 2,
        "oscillation_upper": (se + sa) ** 2,
    }


def stability_region_grid(
    gamma_a_range: tuple[float, float],
    b_range: tuple[float, float],
    resolution: int | tuple[int, int],
    epsilon: float = 1.0,
) -> RegionGrid:
    """Region label of every node of a uniform (gamma*a, b) grid.

    ``gamma`` is held at 1 so ``a`` equals the abscissa; the labels depend
    on ``a`` and ``gamma`` only through their product.
    """
    if isinstance(resolution, int):
        n_ga = n_b = resolution
    else:
        n_ga, n_b = resolution
    if n_ga < 2 or n_b < 2:
        raise ValueError("resolution must be at least 2 per axis")
    if gamma_a_range[0] < 0 or b_range[0] < 0:
        raise ValueError("ranges must be non-negative")
    ga = np.linspace(gamma_a_range[0], gamma_a_range[1], n_ga)
    bs = np.linspace(b_range[0], b_range[1], n_b)
    labels = np.empty((n_b, n_ga), dtype=object)
    for i, b in enumerate(bs):
        for j, g in enumerate(ga):
            p = ModelParams(a=float(g), b=float(b), r=0.0, F=0.0, epsilon=epsilon, gamma=1.0)
            labels[i, j] = classify(p).region
    return RegionGrid(epsilon, ga, bs, labels, boundary_curves(epsilon, ga))
