import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hscone.catalog import (
    CLIFFORD,
    CatalogError,
    HomogeneousTorusParams,
    homogeneous_torus,
    non_isotropic_sphere,
    planted_zero_fixture,
    twisted_clifford_fixture,
)
from hscone.geometry import J, induced_metric, inner
from hscone.immersions import PhaseTwistedImmersion, cosine_phase
from hscone.stationarity import (
    StationarityResidual,
    cone_divergence_direct,
    div_JH,
    div_Ju_identity,
    hs_cone_classify,
    hysteresis_flag,
    isotropy_deviation_f,
    isotropy_residual,
    legendrian_residual,
    stationarity_residual,
    stationarity_S1,
    stationarity_S2,
)
from symbolic import GENERIC_SURFACE, complex_step_gradient, evaluate, laplace_beltrami, symbolic_jet

from helpers import catalog_immersions, random_points

ULP_SLACK = 8 * np.finfo(float).eps


def twisted_sphere():
    """Non-isotropic and non-stationary: a phase twist of the complex-tangent sphere."""
    return PhaseTwistedImmersion(non_isotropic_sphere(), cosine_phase(0.4), name="twisted_sphere")


NON_STATIONARY = {
    "twisted_clifford": twisted_clifford_fixture,
    "twisted_sphere": twisted_sphere,
    "planted_zero": planted_zero_fixture,
}


@st.composite
def tori(draw):
    q = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3)))
    q = q / q.sum()
    q[-1] = 1.0 - q[:-1].sum()
    a = draw(st.lists(st.integers(-4, 4), min_size=3, max_size=3))
    b = draw(st.lists(st.integers(-4, 4), min_size=3, max_size=3))
    try:
        p = HomogeneousTorusParams(tuple(q), tuple(a), tuple(b))
    except CatalogError:
        assume(False)
    assume(np.linalg.cond(p.metric) < 1e4)
    return p


def test_S1_and_S2_match_symbolic_laplace_beltrami():
    pts = np.random.default_rng(3).uniform(-1, 1, (10, 2))
    jet = symbolic_jet(GENERIC_SURFACE, pts)
    lb = laplace_beltrami(GENERIC_SURFACE)
    H, dH = evaluate(lb, pts), complex_step_gradient(lb, pts)
    ginv = np.linalg.inv(np.einsum("nid,njd->nij", jet.first, jet.first))
    s1 = np.einsum("nij,njd,nid->n", ginv, J(dH), jet.first)
    np.testing.assert_allclose(stationarity_S2(jet), inner(J(H), jet.u), atol=1e-12)
    np.testing.assert_allclose(div_JH(jet), s1, atol=1e-11)


@pytest.mark.parametrize("name", sorted(NON_STATIONARY))
def test_exact_S1_agrees_with_finite_difference_route(name, rng):
    imm = NON_STATIONARY[name]()
    pts = random_points(imm, 100, rng)
    exact = stationarity_S1(imm, pts)
    fd = stationarity_S1(imm, pts, method="fd")
    assert np.max(np.abs(exact)) > 1e-3
    assert np.max(np.abs(exact - fd) / np.maximum(1.0, np.abs(exact))) < 1e-6


@pytest.mark.parametrize("name", sorted(NON_STATIONARY))
@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_cone_divergence_scales_as_inverse_square(name, r, rng):
    imm = NON_STATIONARY[name]()
    pts = random_points(imm, 60, rng)
    direct = cone_divergence_direct(imm, pts, r)
    s1, s2 = stationarity_S1(imm, pts), stationarity_S2(imm.jet(pts, 2))
    assembled = StationarityResidual(s1, s2).cone_residual(r)
    scale = max(1.0, float(np.max(np.abs(direct))))
    assert np.max(np.abs(direct - assembled)) < 1e-9 * scale


def test_inverse_cube_assembly_is_refuted_by_the_direct_cone(rng):
    imm = twisted_clifford_fixture()
    pts = random_points(imm, 60, rng)
    s1, s2 = stationarity_S1(imm, pts), stationarity_S2(imm.jet(pts, 2))
    r = 0.5
    direct = cone_divergence_direct(imm, pts, r)
    cube = -s2 / r**2 + s1 / r**3
    assert np.max(np.abs(direct - cube)) > 1.0


def test_catalog_cones_are_hamiltonian_stationary():
    for name, imm in catalog_immersions().items():
        summary = hs_cone_classify(imm, (32, 32))
        assert summary.hamiltonian_stationary_cone is True, name
        d = summary.as_dict()
        assert d["hamiltonian_stationary_cone"] is True and d["max_abs_S1"] < 1e-10


def test_twisted_torus_cone_is_not_stationary():
    summary = hs_cone_classify(twisted_clifford_fixture(), (32, 32))
    assert summary.hamiltonian_stationary_cone is False


def test_hysteresis_flag_bands():
    assert hysteresis_flag(0.5e-10, 1e-10) is True
    assert hysteresis_flag(5e-10, 1e-10) is None
    assert hysteresis_flag(1e-10, 1e-10) is None
    assert hysteresis_flag(1e-9, 1e-10) is None
    assert hysteresis_flag(1.1e-9, 1e-10) is False


@settings(max_examples=40, deadline=None)
@given(tori())
def test_homogeneous_tori_isotropic_with_stationary_cone(p):
    imm = homogeneous_torus(p)
    jet = imm.jet(imm.domain.grid((8, 8)).reshape(-1, 2), 3)
    scale = float(np.max(np.abs(p.weights))) ** 3
    assert np.max(isotropy_residual(jet)) < 1e-12 * scale
    assert np.max(np.abs(div_JH(jet))) < 1e-10 * scale
    assert np.max(np.abs(stationarity_S2(jet))) < 1e-10 * scale


@settings(max_examples=60, deadline=None)
@given(tori())
def test_deviation_f_bounds_and_projection_route(p):
    imm = homogeneous_torus(p)
    jet = imm.jet(imm.domain.grid((8, 8)).reshape(-1, 2), 1)
    f = isotropy_deviation_f(jet)
    assert np.all(f >= 0.0)
    assert np.all(f <= 1.0 + ULP_SLACK)
    # independent route: contraction with the inverse metric
    alpha = np.einsum("nd,nid->ni", J(jet.u), jet.first)
    ref = np.einsum("ni,nij,nj->n", alpha, induced_metric(jet).ginv, alpha)
    np.testing.assert_allclose(f, ref, atol=1e-15 * np.linalg.cond(p.metric) * 10)
    _, norm = legendrian_residual(jet)
    np.testing.assert_allclose(norm, np.sqrt(f))


def test_non_isotropic_sphere_residuals(rng):
    imm = non_isotropic_sphere()
    pts = random_points(imm, 200, rng)
    jet = imm.jet(pts, 1)
    assert np.max(isotropy_residual(jet)) > 0.4
    assert np.max(np.abs(div_Ju_identity(imm, pts))) < 1e-12


def test_div_Ju_identity_on_twisted_torus(rng):
    imm = twisted_clifford_fixture()
    assert np.max(np.abs(div_Ju_identity(imm, random_points(imm, 200, rng)))) < 1e-12


def test_single_point_residual():
    res = stationarity_residual(homogeneous_torus(CLIFFORD), np.array([0.3, 1.1]))
    assert isinstance(res.S1, float) and abs(res.S1) < 1e-12 and abs(res.S2) < 1e-12
    assert res.cone_residual(2.0) == pytest.approx((res.S1 - res.S2) / 4)


def test_unknown_S1_method():
    with pytest.raises(ValueError):
        stationarity_S1(homogeneous_torus(CLIFFORD), np.zeros(2), method="spectral")
