import numpy as np
import pytest
import sympy as sp

from hscone.catalog import (
    CLIFFORD,
    IRIYEH,
    homogeneous_torus,
    make_catalog_immersion,
    planted_zero_fixture,
    twisted_clifford_fixture,
)
from hscone.immersions import (
    ConeImmersion,
    DomainError,
    FiniteDifferenceImmersion,
    JetOrderError,
    SphereChartImmersion,
    patch_domain,
    sphere_domain,
    torus_domain,
)
from hscone.geometry import induced_metric
from hscone.sampling import grid_map
from hscone.stationarity import stationarity_fields
from symbolic import SYMS, symbolic_jet

from helpers import catalog_immersions, jet_fd_error, random_points

s, t = SYMS


def torus_exprs(p, psi=0):
    r = [sp.sqrt(sp.nsimplify(q)) for q in p.q]
    ph = [sp.nsimplify(a) * s + sp.nsimplify(b) * t + psi for a, b in zip(p.a, p.b)]
    return [rk * sp.cos(f) for rk, f in zip(r, ph)] + [rk * sp.sin(f) for rk, f in zip(r, ph)]


def compare_jets(a, b, atol):
    for name in ("u", "first", "second", "third"):
        np.testing.assert_allclose(getattr(a, name), getattr(b, name), atol=atol, err_msg=name)


@pytest.mark.parametrize("params", [CLIFFORD, IRIYEH], ids=["clifford", "iriyeh"])
def test_torus_jets_match_sympy(params, rng):
    imm = homogeneous_torus(params)
    pts = random_points(imm, 15, rng)
    compare_jets(imm.jet(pts, 3), symbolic_jet(torus_exprs(params), pts), 1e-12)


def test_twisted_torus_jets_match_sympy(rng):
    imm = twisted_clifford_fixture(0.3)
    pts = random_points(imm, 15, rng)
    psi = sp.Rational(3, 10) * (sp.cos(s) + sp.cos(t))
    compare_jets(imm.jet(pts, 3), symbolic_jet(torus_exprs(CLIFFORD, psi), pts), 1e-12)


def test_sphere_charts_match_sympy(rng):
    lat = [sp.cos(s) * sp.cos(t), sp.cos(s) * sp.sin(t), sp.sin(s), 0, 0, 0]
    merc = [sp.sech(t) * sp.cos(s), sp.sech(t) * sp.sin(s), sp.tanh(t), 0, 0, 0]
    for chart, exprs in (("latlong", lat), ("mercator", merc)):
        imm = SphereChartImmersion(chart=chart)
        pts = random_points(imm, 15, rng)
        compare_jets(imm.jet(pts, 3), symbolic_jet([sp.sympify(e) for e in exprs], pts), 1e-12)


def fd_cases():
    cases = dict(catalog_immersions())
    cases.update({
        "clifford_isothermal": make_catalog_immersion("clifford_torus", {"isothermal": True}),
        "sphere_mercator": make_catalog_immersion("great_sphere", {"chart": "mercator"}),
        "sphere_rotated": make_catalog_immersion("great_sphere", {"rotated": True}),
        "twisted_clifford": twisted_clifford_fixture(),
        "planted_zero": planted_zero_fixture(),
    })
    return cases


@pytest.mark.parametrize("name", sorted(fd_cases()))
def test_jets_match_central_differences(name, rng):
    imm = fd_cases()[name]
    assert jet_fd_error(imm, random_points(imm, 200, rng)) < 1e-6


def test_cone_jets_match_central_differences(rng):
    link = homogeneous_torus(IRIYEH)
    cone = ConeImmersion(link, 0.5, 2.0)
    pts = random_points(cone, 100, rng)
    assert jet_fd_error(cone, pts) < 1e-6
    jet = cone.jet(pts, 1)
    np.testing.assert_allclose(jet.u, pts[:, :1] * link.jet(pts[:, 1:], 1).u)


def test_finite_difference_immersion_agrees_with_exact(rng):
    exact = homogeneous_torus(IRIYEH)
    fd = FiniteDifferenceImmersion(lambda p: exact.jet(p, 1).u, 3, 2, exact.domain, h=1e-3)
    pts = random_points(exact, 50, rng)
    a, b = exact.jet(pts, 3), fd.jet(pts, 3)
    np.testing.assert_allclose(b.first, a.first, atol=1e-5)
    np.testing.assert_allclose(b.second, a.second, atol=1e-4)
    np.testing.assert_allclose(b.third, a.third, atol=1e-2)


def test_isothermal_reparametrisation_gives_identity_metric(rng):
    for p in (CLIFFORD, IRIYEH):
        imm = homogeneous_torus(p, isothermal=True)
        g = induced_metric(imm.jet(random_points(imm, 20, rng), 1)).g
        np.testing.assert_allclose(g, np.broadcast_to(np.eye(2), g.shape), atol=1e-14)
        # same image: lattice points map to the base point
        for v in imm.domain.cycles:
            np.testing.assert_allclose(imm(v), imm(np.zeros(2)), atol=1e-12)


def test_rotated_chart_covers_the_poles():
    rot = SphereChartImmersion().rotated()
    north, south = np.eye(6)[2], -np.eye(6)[2]
    # equator points of the rotated chart, far from its own poles
    np.testing.assert_allclose(rot(np.array([0.0, np.pi / 2])), north, atol=1e-15)
    np.testing.assert_allclose(rot(np.array([0.0, 3 * np.pi / 2])), south, atol=1e-15)


def test_open_axes_avoid_the_poles():
    grid = sphere_domain().grid((16, 8))
    assert np.all(np.abs(grid[..., 0]) < np.pi / 2)
    with pytest.raises(DomainError):
        SphereChartImmersion().jet(np.array([np.pi / 2, 0.0]), 1)


def test_domain_and_order_guards():
    imm = planted_zero_fixture()
    with pytest.raises(DomainError):
        imm.jet(np.array([1.5, 0.0]), 1)
    with pytest.raises(DomainError):
        imm.jet(np.zeros(3), 1)
    with pytest.raises(JetOrderError):
        imm.jet(np.zeros(2), 4)
    fd = FiniteDifferenceImmersion(lambda p: p, 1, 2, patch_domain([0, 0], [1, 1]))
    fd.max_order = 2
    with pytest.raises(JetOrderError):
        fd.jet(np.array([0.5, 0.5]), 3)


def test_periodic_reduction_and_grid_delta():
    dom = torus_domain()
    t = np.array([7.0, -1.0])
    r = dom.reduce(t)
    assert np.all((r >= 0) & (r < 2 * np.pi))
    np.testing.assert_allclose(dom.grid_delta(t, r), 0.0, atol=1e-12)
    np.testing.assert_allclose(dom.grid_delta(np.zeros(2), np.array([0.1, 2 * np.pi - 0.1])),
                               [0.1 / (2 * np.pi), -0.1 / (2 * np.pi)], atol=1e-12)


def test_grid_map_independent_of_thread_count():
    imm = twisted_clifford_fixture()
    one = grid_map(imm, (24, 20), stationarity_fields, order=3, threads=1)
    four = grid_map(imm, (24, 20), stationarity_fields, order=3, threads=4)
    for k in one:
        assert one[k].shape[:2] == (24, 20)
        assert np.array_equal(one[k], four[k])
