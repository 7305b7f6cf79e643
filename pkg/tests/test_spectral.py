import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from bgmarket.model import ModelParams, State, affine_form, equilibrium
from bgmarket.spectral import (
    DomainError,
    Region,
    Tri,
    boundary_curves,
    classify,
    discriminant,
    eigen,
    exact_solution,
    fundamental_matrix,
    oscillation_test,
    propagator,
    region_of,
    stability_region_grid,
    stability_test,
)

from conftest import affine_oracle, expm_taylor, prop2_pair

pos = st.floats(0.05, 8.0)


def _p(a=2.0, b=1.0, eps=1.0, gam=1.0, r=0.1, F=3.0):
    return ModelParams(a=a, b=b, r=r, F=F, epsilon=eps, gamma=gam)


@given(pos, pos, pos, pos)
def test_eigenvalues_match_numpy(a, b, eps, gam):
    p = _p(a, b, eps, gam)
    sd = eigen(p)
    want = np.sort_complex(np.linalg.eigvals(affine_form(p).A))
    got = np.sort_complex(np.array([sd.lambda1, sd.lambda2]))
    assert np.allclose(got, want, rtol=1e-7, atol=1e-9 * np.abs(want).max())


@given(pos, pos, pos, pos)
def test_eigenvectors(a, b, eps, gam):
    p = _p(a, b, eps, gam)
    sd = eigen(p)
    assume(not sd.degenerate)
    A = affine_form(p).A
    for lam, v in ((sd.lambda1, sd.v1), (sd.lambda2, sd.v2)):
        res = A @ v - lam * v
        assert np.abs(res).max() <= 1e-8 * np.abs(A).max() * np.abs(v).max()


def test_slow_eigenvalue_survives_small_epsilon():
    # product of roots is a/(gamma eps); the slow root tends to -a/(a gamma - b)
    p = _p(a=2.0, b=1.0, eps=1e-9, gam=1.0)
    sd = eigen(p)
    slow = max(sd.lambda1.real, sd.lambda2.real)
    assert slow == pytest.approx(-2.0, rel=1e-8)
    assert sd.lambda1 * sd.lambda2 == pytest.approx(2.0 / 1e-9, rel=1e-12)


@pytest.mark.parametrize(
    "a,b,eps,gam",
    [(2.0, 1.0, 0.1, 1.0), (0.1, 0.5, 1.0, 1.0), (1.0, 2.2, 1.0, 1.0), (2.0, 1.0, 2.0, 0.1), (1.0, 3.0, 1.0, 1.0)],
)
def test_propagator_matches_taylor_expm(a, b, eps, gam):
    p = _p(a, b, eps, gam)
    for t in (0.0, 0.3, 2.0, 7.5):
        want = expm_taylor(affine_form(p).A, t)
        assert np.allclose(propagator(p, t), want, rtol=1e-9, atol=1e-10 * np.abs(want).max())


def test_degenerate_spectrum_jordan_branch():
    # disc = 0 at b = (sqrt(eps) + sqrt(a gamma))^2 with a gamma = eps = 1 -> b = 4
    p = _p(a=1.0, b=4.0, eps=1.0, gam=1.0)
    assert discriminant(p) == 0.0
    assert eigen(p).degenerate
    for t in (0.5, 3.0):
        want = expm_taylor(affine_form(p).A, t)
        assert np.allclose(propagator(p, t), want, rtol=1e-9, atol=1e-9)


@given(pos, pos, pos, pos, st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_semigroup(a, b, eps, gam, s, t):
    p = _p(a, b, eps, gam)
    assume(eigen(p).max_real * (s + t) < 20)
    lhs = propagator(p, s + t)
    rhs = propagator(p, s) @ propagator(p, t)
    assert np.allclose(lhs, rhs, rtol=1e-7, atol=1e-9 * max(1.0, np.abs(lhs).max()))


def test_exact_solution_against_oracle(rng):
    for _ in range(50):
        a, b, eps, gam = np.exp(rng.uniform(-2, 1.5, 4))
        p = _p(a, b, eps, gam)
        assume_ok = eigen(p).max_real * 5 < 30
        if not assume_ok:
            continue
        x0 = State(*rng.uniform(-2, 5, 2))
        got = np.array(exact_solution(p, x0, 5.0))
        want = affine_oracle(p, x0, 5.0)
        assert np.allclose(got, want, rtol=1e-8, atol=1e-10 * np.abs(want).max())


@pytest.mark.parametrize("a,b", [(0.1, 0.5), (4.0, 0.9), (1.0, 2.2), (0.01, 1.25)])
def test_fundamental_matrix_columns_solve_the_homogeneous_system(a, b):
    p = _p(a, b)
    A = affine_form(p).A
    Phi0 = fundamental_matrix(p, 0.0)
    assert abs(np.linalg.det(Phi0)) > 1e-12
    for t in (0.7, 2.0):
        # Phi(t) = e^{At} Phi(0), and Phi' = A Phi
        assert np.allclose(fundamental_matrix(p, t), expm_taylor(A, t) @ Phi0, rtol=1e-8, atol=1e-10)
        h = 1e-5
        d = (fundamental_matrix(p, t + h) - fundamental_matrix(p, t - h)) / (2 * h)
        assert np.allclose(d, A @ fundamental_matrix(p, t), rtol=1e-5, atol=1e-7)


def test_fundamental_matrix_refuses_repeated_eigenvalue():
    with pytest.raises(ValueError, match="repeated"):
        fundamental_matrix(_p(a=1.0, b=4.0), 1.0)


@given(pos, pos, pos, pos)
def test_classification_agrees_with_inequalities_and_spectrum(a, b, eps, gam):
    p = _p(a, b, eps, gam)
    rep = classify(p)
    stable, osc = prop2_pair(p)
    if rep.stable is not Tri.BORDER:
        assert (rep.stable is Tri.YES) == stable
        assert (rep.stable is Tri.YES) == (eigen(p).max_real < 0)
    if rep.oscillatory is not Tri.BORDER:
        assert (rep.oscillatory is Tri.YES) == osc
        assert (rep.oscillatory is Tri.YES) == (discriminant(p) < 0)


def test_fig3_lhs_decay_rate_limits_convergence():
    # Re lambda = -0.1, so |P(50) - Pinf| is of order e^{-5} times the start offset
    p = _p(a=1.2, b=2.0)
    assert eigen(p).max_real == pytest.approx(-0.1)
    x50 = affine_oracle(p, State(p.F, p.r), 50.0)
    assert abs(x50[0] - equilibrium(p).P) > 1e-4


def test_border_and_regions():
    assert stability_test(_p(a=1.0, b=2.0)) is Tri.BORDER
    assert classify(_p(a=1.0, b=2.0)).region is Region.BORDER
    assert oscillation_test(_p(a=1.0, b=4.0)) is Tri.BORDER
    assert region_of(Tri.YES, Tri.NO) is Region.I_II
    assert region_of(Tri.YES, Tri.YES) is Region.III
    assert region_of(Tri.NO, Tri.YES) is Region.IV
    assert region_of(Tri.NO, Tri.NO) is Region.V
    assert classify(_p(a=0.1, b=0.5)).region is Region.III


def test_oscillation_domain_error():
    with pytest.raises(DomainError):
        oscillation_test(_p(eps=-0.1))
    with pytest.raises(DomainError):
        oscillation_test(_p(a=-1.0))


def test_region_grid_labels_and_boundaries():
    g = stability_region_grid((0.0, 4.0), (0.0, 4.0), 41)
    assert g.labels.shape == (41, 41)
    counts = g.counts()
    assert sum(counts.values()) == 41 * 41
    assert all(counts[r.value] > 0 for r in (Region.I_II, Region.III, Region.IV, Region.V))
    # at gamma_a = 2 the oscillation band is (3 - 2 sqrt 2, 3 + 2 sqrt 2)
    j = int(np.argmin(abs(g.gamma_a - 2.0)))
    for b, want in ((0.1, Region.I_II), (0.5, Region.III), (3.5, Region.IV), (0.0, Region.I_II)):
        i = int(np.argmin(abs(g.b - b)))
        assert g.labels[i, j] is want
    bc = boundary_curves(1.0, np.array([0.0, 1.0, 4.0]))
    assert np.allclose(bc["stability"], [1.0, 2.0, 5.0])
    assert np.allclose(bc["oscillation_upper"], [1.0, 4.0, 9.0])
    assert np.allclose(bc["oscillation_lower"], [1.0, 0.0, 1.0])


def test_exact_solution_rejects_zero_gamma():
    with pytest.raises(ValueError):
        exact_solution(_p(gam=0.0), State(1.0, 0.0), 1.0)
    assert math.isfinite(discriminant(_p()))
