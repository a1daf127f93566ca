import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hscone.catalog import (
    CLIFFORD,
    homogeneous_torus,
    make_catalog_immersion,
    non_isotropic_sphere,
    planted_zero_fixture,
    twisted_clifford_fixture,
)
from hscone.hopf import (
    EVERYWHERE_LEGENDRIAN,
    LegendrianPoint,
    PreconditionError,
    WindingAmbiguityError,
    alpha_jacobian,
    cauchy_riemann_residual,
    find_legendrian_points,
    hopf_analysis,
    hopf_function,
    isothermal_check,
    newton_refine,
    point_index,
    poincare_hopf_audit,
    winding_number,
)
from hscone.stationarity import alpha_coefficients

from helpers import fd_derivative, random_points


def power_field(k, conjugate=False):
    def fld(pts):
        z = (pts[:, 0] + 1j * pts[:, 1]) ** k
        z = np.conj(z) if conjugate else z
        return np.stack([z.real, z.imag], axis=-1)
    return fld


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_winding_of_powers(k):
    assert winding_number(power_field(k), (0, 0), 0.5, samples=16 * k) == k
    assert winding_number(power_field(k, True), (0, 0), 0.5, samples=16 * k) == -k


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 2.0))
def test_winding_counts_only_enclosed_zeros(x, y, rho):
    """Brute-force oracle: the winding of z - c is 1 exactly when |c| < rho."""
    c = np.array([x, y])
    dist = np.hypot(x, y)
    if abs(dist - rho) < 0.05:
        return
    fld = lambda p: p - c
    assert winding_number(fld, (0, 0), rho, samples=256) == int(dist < rho)


def test_winding_detects_zero_on_circle():
    with pytest.raises(WindingAmbiguityError):
        winding_number(lambda p: p - np.array([1.0, 0.0]), (0, 0), 1.0, samples=4)


def test_s3_torus_hopf_function_is_constant(rng):
    imm = make_catalog_immersion("s3_torus")
    pts = random_points(imm, 500, rng)
    w = hopf_function(imm.jet(pts, 1))
    assert np.max(np.abs(w - (1 - 1j) / 4)) <= 1e-12
    assert np.max(cauchy_riemann_residual(imm, pts)) <= 1e-10
    summary = hopf_analysis(imm, (64, 64))
    assert summary.gated is None and summary.max_cr_residual <= 1e-10
    assert find_legendrian_points(imm, (64, 64)) == []


def test_alpha_jacobian_matches_finite_differences(rng):
    imm = twisted_clifford_fixture()
    pts = random_points(imm, 50, rng)
    fd = fd_derivative(lambda p: alpha_coefficients(imm.jet(p, 1)), pts, h=1e-5)
    np.testing.assert_allclose(alpha_jacobian(imm.jet(pts, 2)), np.swapaxes(fd, 1, 2), atol=1e-8)


def test_planted_zero_is_simple_with_negative_index():
    imm = planted_zero_fixture()
    pts = find_legendrian_points(imm, (64, 64))
    assert len(pts) == 1
    p = pts[0]
    assert p.multiplicity == 1 and p.index_prju == -1 and p.converged
    assert np.max(np.abs(p.t - np.array([0.1234, -0.0567]))) <= 1e-10


def test_planted_zero_hopf_function_is_linear(rng):
    imm = planted_zero_fixture(strength=0.5)
    pts = random_points(imm, 100, rng)
    z = (pts[:, 0] - 0.1234) + 1j * (pts[:, 1] + 0.0567)
    np.testing.assert_allclose(hopf_function(imm.jet(pts, 1)), 0.25 * z, atol=1e-13)
    assert np.max(cauchy_riemann_residual(imm, pts)) < 1e-12


def test_twisted_torus_points_satisfy_index_formula():
    imm = twisted_clifford_fixture()
    pts = find_legendrian_points(imm, (64, 64))
    assert len(pts) == 4
    assert sorted(p.multiplicity for p in pts) == [-1, -1, 1, 1]
    for p in pts:
        assert p.residual_at_zero < 1e-12
        # critical points of cos s + cos t sit at multiples of pi
        np.testing.assert_allclose(np.mod(p.t, np.pi), 0.0, atol=1e-10)
    audit = poincare_hopf_audit(pts, genus=1)
    assert audit.passed and audit.sum_index == 0 and audit.euler_characteristic == 0


def test_index_independent_of_winding_radius():
    imm = planted_zero_fixture()
    for rho in (0.3, 0.1, 1e-3):
        assert point_index(imm, np.array([0.1234, -0.0567]), rho) == 1


def test_newton_recovers_planted_zero_from_nearby_start():
    t, res, ok = newton_refine(planted_zero_fixture(), [0.2, 0.0])
    assert ok and res < 1e-12
    np.testing.assert_allclose(t, [0.1234, -0.0567], atol=1e-10)


def test_clifford_is_everywhere_legendrian():
    pts = find_legendrian_points(homogeneous_torus(CLIFFORD), (32, 32))
    assert pts is EVERYWHERE_LEGENDRIAN
    audit = poincare_hopf_audit(pts, genus=1)
    assert audit.passed and audit.everywhere_legendrian


def test_non_isotropic_link_is_rejected():
    with pytest.raises(PreconditionError):
        find_legendrian_points(non_isotropic_sphere(), (16, 16))


def test_surface_only_preconditions():
    from hscone.catalog import great_circle
    circle = great_circle()
    with pytest.raises(PreconditionError):
        hopf_function(circle.jet(np.zeros(1), 1))
    with pytest.raises(PreconditionError):
        isothermal_check(circle, (8,))


def test_isothermal_gating():
    lat = make_catalog_immersion("great_sphere")
    assert not isothermal_check(lat, (32, 16)).isothermal
    summary = hopf_analysis(lat, (32, 16))
    assert summary.gated == "gated: not isothermal"
    assert summary.as_dict()["cr_residual"] == "gated: not isothermal"
    merc = make_catalog_immersion("great_sphere", {"chart": "mercator"})
    chk = isothermal_check(merc, (32, 16))
    assert chk.isothermal and chk.phi2 is not None


def test_iriyeh_weights_give_an_isothermal_chart():
    iri = make_catalog_immersion("homogeneous_torus", {"preset": "iriyeh"})
    chk = isothermal_check(iri, (16, 16))
    assert chk.isothermal
    np.testing.assert_allclose(chk.phi2, 1.0, atol=1e-14)
    assert hopf_analysis(iri, (32, 32)).max_cr_residual < 1e-10


def test_clifford_native_chart_is_not_isothermal():
    assert not isothermal_check(homogeneous_torus(CLIFFORD), (16, 16)).isothermal
    iso = make_catalog_immersion("clifford_torus", {"isothermal": True})
    assert hopf_analysis(iso, (32, 32)).max_cr_residual < 1e-10


def point(mult):
    return LegendrianPoint(np.zeros(2), mult, 0.0)


@pytest.mark.parametrize("genus,mults,passed", [
    (1, [], True),
    (1, [1, -1], True),
    (1, [1], False),
    (2, [1, 1], True),
    (2, [1, 1, -1], False),
    (0, [-1, -1], False),
    (0, [], False),
])
def test_poincare_hopf_audit_cases(genus, mults, passed):
    audit = poincare_hopf_audit([point(m) for m in mults], genus)
    assert audit.passed is passed
    assert audit.euler_characteristic == 2 - 2 * genus
    assert audit.as_dict()["n_points"] == len(mults)


def test_everywhere_legendrian_sentinel():
    assert repr(EVERYWHERE_LEGENDRIAN) == "EVERYWHERE_LEGENDRIAN" and bool(EVERYWHERE_LEGENDRIAN)
    assert poincare_hopf_audit(EVERYWHERE_LEGENDRIAN, 0).passed
