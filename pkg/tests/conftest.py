import math

import numpy as np
import pytest
from hypothesis import settings

from bgmarket.model import ModelParams

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")

_ACCEPTANCE: dict[int, str] = {}


def expm_taylor(M, t=1.0):
    """Matrix exponential by scaling and squaring a truncated Taylor series.

    Deliberately independent of the eigen decomposition used by the package.
    """
    M = np.asarray(M, dtype=float) * t
    norm = np.abs(M).sum(axis=1).max()
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0.5 else 0
    X = M / 2.0**s
    out = np.eye(len(M))
    term = np.eye(len(M))
    for k in range(1, 30):
        term = term @ X / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def affine_oracle(p: ModelParams, x0, t):
    """Solution of the full model from the raw vector field, via ``expm``."""
    a, b, eps, gam = p.a, p.b, p.epsilon, p.gamma
    A = np.array([[-a / eps, b / eps], [-a / (gam * eps), (b / eps - 1.0) / gam]])
    xs = np.array([p.F - b / a * p.r, 0.0])
    return xs + expm_taylor(A, t) @ (np.asarray(x0, dtype=float) - xs)


def prop2_pair(p: ModelParams):
    """(stable, oscillatory) straight from the two inequalities."""
    stable = p.a > (p.b - p.epsilon) / p.gamma
    lo = (math.sqrt(p.epsilon) - math.sqrt(p.a * p.gamma)) ** 2
    hi = (math.sqrt(p.epsilon) + math.sqrt(p.a * p.gamma)) ** 2
    return stable, lo < p.b < hi


def random_stable_params(rng, lo=0.1, hi=5.0):
    while True:
        a, b, eps, gam = np.exp(rng.uniform(math.log(lo), math.log(hi), 4))
        p = ModelParams(a=a, b=b, r=rng.uniform(0.0, 1.0), F=rng.uniform(1.0, 5.0), epsilon=eps, gamma=gam)
        if p.a * p.gamma > 1.01 * (p.b - p.epsilon):
            return p


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance(request):
    """``record(n, ok, detail)`` stores one PASS/FAIL line per criterion."""

    def record(n: int, ok: bool, detail: str) -> bool:
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[n])
