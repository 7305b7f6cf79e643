import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from bgmarket.model import InvalidParameterError, ModelParams, State, affine_form
from bgmarket.reduction import (
    DegenerateManifoldError,
    LimitKind,
    ManifoldKind,
    build_reduction,
    hilbert_check,
    manifold_residual,
    nearest_point_on_manifold,
    project_to_manifold,
    projector,
    reduce,
    reduced_closed_form,
    slow_manifold,
)
from bgmarket.spectral import eigen

pos = st.floats(0.05, 10.0)


def _p(a=2.0, b=1.0, eps=0.1, gam=1.0, r=0.1, F=3.0):
    return ModelParams(a=a, b=b, r=r, F=F, epsilon=eps, gamma=gam)


@pytest.mark.parametrize("kind", list(LimitKind))
@given(pos, pos, pos, pos, st.floats(-5, 5), st.floats(-5, 5))
def test_splitting_recovers_full_field(kind, a, b, eps, gam, P, Psi):
    """h0 / small + h1 is the full vector field."""
    p = _p(a, b, eps, gam)
    rp = build_reduction(p, kind)
    s = np.array([P, Psi])
    small = eps if kind is LimitKind.LIQUID_MARKET else gam
    got = rp.h0(s) / small + rp.h1(s)
    want = affine_form(p)(s)
    assert np.allclose(got, want, rtol=1e-9, atol=1e-9 * (1 + np.abs(want).max()))


@pytest.mark.parametrize("kind", list(LimitKind))
@given(pos, pos, pos, pos)
def test_projector_properties(kind, a, b, eps, gam):
    rp = build_reduction(_p(a, b, eps, gam), kind)
    assume(abs(rp.DmuK) > 1e-3 * np.linalg.norm(rp.Dmu) * np.linalg.norm(rp.K))
    Q = projector(rp)
    scale = max(1.0, np.abs(Q).max()) ** 2
    assert np.abs(Q @ Q - Q).max() <= 1e-13 * scale
    assert np.abs(Q @ rp.K).max() <= 1e-13 * scale
    assert np.abs(rp.Dmu @ Q).max() <= 1e-13 * scale


def test_manifold_kinds():
    assert slow_manifold(build_reduction(_p(a=2, b=1), LimitKind.LIQUID_MARKET)).kind is ManifoldKind.ATTRACTING
    assert slow_manifold(build_reduction(_p(a=1, b=1.3), LimitKind.LIQUID_MARKET)).kind is ManifoldKind.REPELLING
    assert slow_manifold(build_reduction(_p(a=1, b=1), LimitKind.LIQUID_MARKET)).kind is ManifoldKind.DEGENERATE
    ch = build_reduction(_p(eps=2.0, gam=0.1), LimitKind.LIQUID_CHARTIST)
    assert slow_manifold(ch).kind is ManifoldKind.ATTRACTING
    assert slow_manifold(build_reduction(_p(eps=1.0, b=1.0), LimitKind.LIQUID_CHARTIST)).kind is ManifoldKind.DEGENERATE


@pytest.mark.parametrize(
    "p,kind",
    [(_p(a=1.0, b=1.0), LimitKind.LIQUID_MARKET), (_p(b=2.0, eps=2.0, gam=0.1), LimitKind.LIQUID_CHARTIST)],
)
def test_degenerate_raises(p, kind):
    rp = build_reduction(p, kind)
    assert rp.is_degenerate
    with pytest.raises(DegenerateManifoldError):
        projector(rp)
    with pytest.raises(DegenerateManifoldError):
        reduce(rp)
    with pytest.raises(DegenerateManifoldError):
        project_to_manifold(rp, [1.0, 1.0])


def test_slow_eigenvalue_tends_to_reduced_rate():
    # Tikhonov: the slow eigenvalue of the full model approaches the reduced rate
    for kind, field in ((LimitKind.LIQUID_MARKET, "epsilon"), (LimitKind.LIQUID_CHARTIST, "gamma")):
        base = _p(a=2.0, b=1.0, eps=3.0 if kind is LimitKind.LIQUID_CHARTIST else 1.0, gam=1.0)
        rate = reduce(build_reduction(base.replace(**{field: 1e-3}), kind)).rate
        gaps = []
        for v in (1e-2, 1e-3, 1e-4):
            sd = eigen(base.replace(**{field: v}))
            slow = max(sd.lambda1.real, sd.lambda2.real)
            gaps.append(abs(slow - rate))
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 1e-2


def test_algebraic_map_lies_on_manifold_and_lift_is_vectorized():
    for kind in LimitKind:
        p = _p(eps=2.0, gam=0.1) if kind is LimitKind.LIQUID_CHARTIST else _p()
        rp = build_reduction(p, kind)
        rm = reduce(rp)
        zs = np.linspace(-3, 3, 7)
        pts = rm.lift(zs)
        assert pts.shape == (7, 2)
        for z, row in zip(zs, pts):
            assert np.allclose(rm.algebraic_map(z), row)
            assert manifold_residual(rp, row) < 1e-14
            assert rm.free_of(row) == pytest.approx(z)


def test_projections_land_on_manifold():
    rp = build_reduction(_p(a=1.0, b=2.0, eps=1.8, gam=0.1), LimitKind.LIQUID_CHARTIST)
    x = np.array([1.0, 1.0])
    along_k = np.asarray(project_to_manifold(rp, x))
    nearest = np.asarray(nearest_point_on_manifold(rp, x))
    for s in (along_k, nearest):
        assert manifold_residual(rp, s) < 1e-13
    # along K the price is unchanged; the orthogonal foot is the closer point
    assert along_k[0] == x[0]
    assert np.linalg.norm(nearest - x) <= np.linalg.norm(along_k - x)
    assert np.dot(nearest - x, [1.0, rp.Dmu[0] / rp.Dmu[1] * -1]) == pytest.approx(0.0, abs=1e-12)


def test_reduced_closed_form_and_rates():
    rm = reduce(build_reduction(_p(eps=2.0, gam=0.1), LimitKind.LIQUID_CHARTIST))
    assert rm.rate == pytest.approx(-2.0)
    assert rm.fixed_point == pytest.approx(3.0 - 0.05)
    assert reduced_closed_form(rm, 1.0, 0.0) == 1.0
    ts = np.array([0.0, 1.0])
    out = rm.closed_form(1.0, ts)
    assert out.shape == (2,)
    assert out[1] == pytest.approx(2.95 - 1.95 * np.exp(-2.0))
    assert rm.valid and rm.equilibrium_exponentially_stable
    alpha, beta = rm.affine_coefficients()
    assert alpha == pytest.approx(-2.0) and beta == pytest.approx(2.0 * 2.95)


@pytest.mark.parametrize("kind", list(LimitKind))
@given(pos, pos, pos, pos)
def test_hilbert_check_passes_everywhere_off_degeneracy(kind, a, b, eps, gam):
    rp = build_reduction(_p(a, b, eps, gam), kind)
    assume(abs(rp.DmuK) > 1e-2 * np.linalg.norm(rp.Dmu) * np.linalg.norm(rp.K))
    rep = hilbert_check(rp, n_samples=20)
    assert rep.passed, rep


def test_hilbert_check_reparametrized():
    rp = build_reduction(_p(), LimitKind.LIQUID_MARKET)
    rep = hilbert_check(rp, p=_p(a=3.0))
    assert rep.passed
    assert rep.condition_number == pytest.approx(1.0 / abs(-3.0 + 1.0))


def test_limit_needs_nonzero_parameter():
    with pytest.raises(InvalidParameterError):
        build_reduction(_p(gam=0.0), LimitKind.LIQUID_MARKET)
    with pytest.raises(InvalidParameterError):
        build_reduction(_p(eps=0.0), LimitKind.LIQUID_CHARTIST)
    assert isinstance(project_to_manifold(build_reduction(_p(), "LiquidMarket"), [3.0, 1.0]), State)
