import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toric_soliton import catalog
from toric_soliton.guillemin import DomainError, GuilleminPotential, ScanReport, sphere_directions
from toric_soliton.polytope import dual_polytope, parse_polytope, support_function


@pytest.fixture(scope="module")
def potentials():
    return {name: GuilleminPotential(dual_polytope(parse_polytope(doc))) for name, doc in catalog.CATALOG.items()}


def interior_points(p, count, seed=0, shrink=0.9):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(len(p.vertices)), size=count)
    return shrink * w @ p.vertex_array


@pytest.mark.parametrize("name", ["triangle_a1", "rectangle"])
def test_u0_derivatives_by_finite_differences(potentials, name):
    g = potentials[name]
    eps = 1e-6
    for y in interior_points(g.polytope, 10):
        _, grad, hess = g.u0_eval(y)
        for j in range(2):
            e = np.zeros(2)
            e[j] = eps
            fd = (g.u0_eval(y + e)[0] - g.u0_eval(y - e)[0]) / (2 * eps)
            assert fd == pytest.approx(grad[j], abs=1e-7)
            fdh = (g.u0_eval(y + e)[1] - g.u0_eval(y - e)[1]) / (2 * eps)
            np.testing.assert_allclose(fdh, hess[:, j], rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("name", ["triangle_a1", "rectangle", "cp2", "cross"])
def test_cauchy_binet_against_direct_determinant(potentials, name):
    g = potentials[name]
    ys = interior_points(g.polytope, 100, seed=1)
    direct = np.array([np.linalg.det(g.u0_eval(y)[2]) for y in ys])
    cb = np.array([g.det_hess_u0(y) for y in ys])
    assert np.max(np.abs(cb - direct) / direct) < 1e-12


def test_cauchy_binet_near_boundary(potentials):
    # with one slack ~1e-12 the direct determinant still agrees to rounding
    g = potentials["cp2"]
    y = np.array([-1 + 1e-12, 0.3])
    direct = np.linalg.det(g.u0_eval(y)[2])
    assert g.det_hess_u0(y) == pytest.approx(direct, rel=1e-8)


def test_domain_error(potentials):
    with pytest.raises(DomainError):
        potentials["cp2"].u0_eval([-1.0, 0.0])
    with pytest.raises(DomainError):
        potentials["cp2"].det_hess_u0([5.0, 5.0])


@pytest.mark.parametrize("name", ["triangle_a1", "rectangle", "cp2"])
def test_legendre_round_trip_and_identity(potentials, name):
    g = potentials[name]
    ys = interior_points(g.polytope, 200, seed=2, shrink=0.999)
    xs = np.array([g.u0_eval(y)[1] for y in ys])
    values, back, _ = g.legendre_batch(xs)
    assert np.abs(back - ys).max() < 1e-10
    u0 = np.array([g.u0_eval(y)[0] for y in ys])
    np.testing.assert_allclose(values + u0, np.sum(xs * ys, axis=1), atol=1e-10)


@pytest.mark.parametrize("name", ["triangle_a1", "rectangle"])
def test_det_product_is_one(potentials, name):
    # det D^2 phi0(x) det D^2 u0(y) = 1 with D^2 phi0 from differences of y(x)
    g = potentials[name]
    eps = 1e-5
    for x in [np.array([0.3, -0.7]), np.array([2.0, 1.0]), np.array([-1.5, 3.0])]:
        _, y = g.legendre_phi0(x)
        jac = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = eps
            jac[:, j] = (g.legendre_phi0(x + e)[1] - g.legendre_phi0(x - e)[1]) / (2 * eps)
        assert np.linalg.det(jac) * g.det_hess_u0(y) == pytest.approx(1.0, abs=1e-9)


def test_cp2_closed_form(potentials):
    g = potentials["cp2"]
    xs = np.array([[0.0, 0.0], [3.0, -2.0], [-30.0, 12.0], [-700.0, 1.0], [25.0, 25.0]])
    values, _, _ = g.legendre_batch(xs)
    x1, x2 = xs[:, 0], xs[:, 1]
    ref = 3 * np.logaddexp(0, np.logaddexp(x1, x2)) - x1 - x2 - math.log(27)
    np.testing.assert_allclose(values, ref, rtol=1e-13, atol=1e-12)


def test_rectangle_is_kahler_einstein_up_to_constant(potentials):
    # for the rectangle, log det D^2 phi0 + phi0 = -log 64 identically
    g = potentials["rectangle"]
    defect, _ = g.lemma_quantities(np.array([[0.1, 0.2], [5.0, -3.0], [-12.0, 20.0]]))
    np.testing.assert_allclose(defect, math.log(64), rtol=1e-11)


@pytest.mark.parametrize("name, expected", [("cp2", 13.5), ("rectangle", 64.0)])
def test_mass_closed_forms(potentials, name, expected):
    assert potentials[name].mass() == pytest.approx(expected, rel=1e-11)


def test_triangle_mass_by_x_space_quadrature(potentials):
    # independent route: trapezoid sum of e^{-phi0} over a large box in x
    g = potentials["triangle_a1"]
    axis = np.linspace(-40, 40, 801)
    xx = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    values, _, _ = g.legendre_batch(xx)
    w = np.full(801, axis[1] - axis[0])
    w[[0, -1]] /= 2
    trap = float(np.sum(np.outer(w, w).ravel() * np.exp(-values)))
    assert g.mass() == pytest.approx(trap, rel=1e-6)
    assert g.mass() == pytest.approx(18.80321909830082, rel=1e-11)


@given(st.tuples(st.floats(-30, 30), st.floats(-30, 30)), st.tuples(st.floats(-30, 30), st.floats(-30, 30)))
def test_gradient_map_monotone(a, b):
    g = GuilleminPotential(dual_polytope(parse_polytope(catalog.TRIANGLE_A1)))
    _, (ya, yb), slacks = g.legendre_batch(np.array([a, b]))
    assert np.dot(ya - yb, np.subtract(a, b)) >= -1e-9
    # far out some slacks are below the resolution of y itself, so check
    # the chart slacks rather than 1 + <y, n>
    assert np.all(slacks > 0)


def test_phi0_tracks_support_function(potentials):
    g = potentials["triangle_a1"]
    xs = 35 * sphere_directions(2, 32)
    values, _, _ = g.legendre_batch(xs)
    gap = values - support_function(g.polytope, xs)
    assert np.all(np.abs(gap) < 10)


def test_sphere_directions():
    d = sphere_directions(2, 16)
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)
    assert np.array_equal(d, sphere_directions(2, 16))
    d3 = sphere_directions(3, 50)
    np.testing.assert_allclose(np.linalg.norm(d3, axis=1), 1.0)
    assert abs(d3.mean(axis=0)).max() < 0.2


@pytest.mark.parametrize("name", ["triangle_a1", "rectangle"])
def test_lemma_scan_saturates(potentials, name):
    scan = potentials[name].lemma_scan([5, 10, 20, 40])
    change = scan.relative_change(20, 40)
    assert max(change) < 0.01
    assert scan.running_sup_logdet_defect == sorted(scan.running_sup_logdet_defect)
    assert all(np.isfinite(scan.sup_logdet_defect)) and all(np.isfinite(scan.sup_support_gap))


def test_scan_report_serialization(potentials):
    scan = potentials["rectangle"].lemma_scan([5, 10, 20, 40], samples=16)
    rows = scan.to_csv().strip().splitlines()
    assert rows[0] == "radius,sup_logdet_defect,sup_support_gap" and len(rows) == 5
    assert float(rows[2].split(",")[1]) == scan.sup_logdet_defect[1]
    assert min(scan.saturation_ratio()) >= 0.99
    assert isinstance(ScanReport(**{k: v for k, v in scan.to_dict().items() if k != "saturation_ratio"}), ScanReport)
    with pytest.raises(ValueError):
        potentials["rectangle"].lemma_scan([10, 5])


def test_three_dimensional_potential():
    g = GuilleminPotential(dual_polytope(parse_polytope({"dim": 3, "vertices": [[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, -1, -1]]})))
    x = np.array([0.5, -1.0, 2.0])
    value, y = g.legendre_phi0(x)
    np.testing.assert_allclose(g.u0_eval(y)[1], x, atol=1e-10)
    # CP^3: phi0 = 4 log(1 + sum e^{x_i}) - sum x_i - log 4^4
    ref = 4 * np.log1p(np.exp(x).sum()) - x.sum() - 4 * math.log(4)
    assert value == pytest.approx(ref, abs=1e-12)
