import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from extrobin import geometry as g
from extrobin.errors import ConvexityError, DomainError, GeometryError

ELLIPSE_2_1_PERIMETER = 9.6884482205476761984  # 8 E(3/4), 40 digits


# -- planar curves -----------------------------------------------------------


def test_circle_metrics():
    m = g.curve_metrics(g.circle(2.0))
    assert m.perimeter == pytest.approx(4 * math.pi, rel=1e-14)
    assert m.enclosed_area == pytest.approx(4 * math.pi, rel=1e-14)
    assert np.allclose(m.curvature_samples, 0.5, atol=1e-14)


def test_ellipse_perimeter_oracle():
    assert g.ellipse(2.0, 1.0).perimeter == pytest.approx(ELLIPSE_2_1_PERIMETER, rel=1e-12)
    assert g.ellipse(2.0, 1.0).area == pytest.approx(2 * math.pi, rel=1e-14)


def test_ellipse_curvature_closed_form():
    a, b = 2.0, 1.0
    c = g.ellipse(a, b)
    t = np.linspace(0, 2 * np.pi, 97)
    expected = a * b / (a ** 2 * np.sin(t) ** 2 + b ** 2 * np.cos(t) ** 2) ** 1.5
    assert np.allclose(c.curvature(t), expected, rtol=1e-13)


def test_star_perimeter_adaptive_oracle():
    c = g.star(1.0, 0.2, 5)
    # r(t) = 1 + 0.2 cos 5t, ds = sqrt(r^2 + r'^2) dt
    L, _ = integrate.quad(lambda t: math.hypot(1 + 0.2 * math.cos(5 * t), -math.sin(5 * t)), 0, 2 * math.pi,
                          epsabs=0, epsrel=1e-13, limit=200)
    assert c.perimeter == pytest.approx(L, rel=1e-12)


@pytest.mark.parametrize("curve", [g.circle(0.3), g.ellipse(3.0, 1.0), g.star(1.0, 0.3, 5), g.star(2.0, 0.02, 3),
                                   g.stadium(2.0, 0.5)], ids=lambda c: c.name)
def test_gauss_bonnet(curve):
    assert g.curve_metrics(curve).total_curvature == pytest.approx(2 * math.pi, abs=1e-8)


def test_clockwise_input_is_reversed():
    cw = g.Curve2D([0, 2.0], [0, 0], [0, 0], [0, -1.0])
    m = g.curve_metrics(cw)
    assert cw.area > 0 and m.min_curvature > 0


def test_nonconvex_star_has_negative_curvature():
    assert g.curve_metrics(g.star(1.0, 0.3, 5)).min_curvature < 0
    assert g.curve_metrics(g.star(1.0, 0.02, 5)).min_curvature > 0


def test_invalid_curves():
    with pytest.raises(GeometryError):
        g.Curve2D([0], [0, 1], [0], [0, 0, 1])          # figure eight
    with pytest.raises(GeometryError):
        g.Curve2D([1], [0], [0], [0])                   # a point
    with pytest.raises(DomainError):
        g.star(1.0, 1.2, 3)


def test_arclength_roundtrip():
    c = g.ellipse(2.0, 0.7)
    s = np.linspace(0, c.perimeter, 50, endpoint=False)
    theta = c.theta_at_arclength(s)
    assert np.allclose(c.arclength(theta), s, atol=1e-12)
    assert c.arclength(2 * np.pi) == pytest.approx(c.perimeter, rel=1e-13)


def test_transforms():
    c = g.ellipse(2.0, 1.0)
    assert c.scaled(3.0).perimeter == pytest.approx(3 * c.perimeter)
    assert c.translated(5.0, -1.0).perimeter == pytest.approx(c.perimeter)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.2, 5.0), b=st.floats(0.2, 5.0), s=st.floats(0.1, 10.0))
def test_scaling_invariants(a, b, s):
    c = g.ellipse(a, b)
    m1, m2 = g.curve_metrics(c), g.curve_metrics(c.scaled(s))
    assert m2.perimeter == pytest.approx(s * m1.perimeter, rel=1e-12)
    assert m2.max_curvature == pytest.approx(m1.max_curvature / s, rel=1e-9)
    assert m2.total_curvature == pytest.approx(2 * math.pi, abs=1e-8)


def test_multicurve():
    mc = g.MultiCurve2D([g.circle(0.5, (3.0 * i, 0.0)) for i in range(3)])
    assert len(mc) == 3
    assert g.multicurve_constraint(mc) == pytest.approx(math.pi, rel=1e-14)
    for comp in mc.components:
        assert g.curve_metrics(comp).total_curvature == pytest.approx(2 * math.pi, abs=1e-8)
    with pytest.raises(GeometryError):
        g.MultiCurve2D([g.circle(1.0), g.circle(1.0, (1.0, 0.0))])
    with pytest.raises(GeometryError):
        g.MultiCurve2D([g.circle(2.0), g.circle(0.5)])
    with pytest.raises(GeometryError):
        g.MultiCurve2D([])


# -- bodies of revolution ----------------------------------------------------


@pytest.mark.parametrize("d,R", [(3, 1.0), (3, 2.5), (4, 2.0), (5, 0.7)])
def test_sphere_report(d, R):
    rep = g.axisym_curvatures(g.sphere(R, d))
    sd = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    assert rep.area == pytest.approx(sd * R ** (d - 1), rel=1e-12)
    assert np.allclose(rep.kappa_profile, 1 / R, rtol=1e-12)
    assert np.allclose(rep.kappa_rot, 1 / R, rtol=1e-12)
    assert rep.M_total == pytest.approx(R ** -(d - 1), rel=1e-12)
    assert g.equivalent_ball_radius(rep) == pytest.approx(R, rel=1e-12)


def test_spheroid_curvature_closed_form():
    a, b = 1.5, 1.0
    body = g.spheroid(a, b)
    u = np.linspace(0.01, np.pi - 0.01, 41)
    v = np.sqrt(a ** 2 * np.sin(u) ** 2 + b ** 2 * np.cos(u) ** 2)
    kp, kr = body.principal_curvatures(u)
    assert np.allclose(kp, a * b / v ** 3, rtol=1e-12)
    assert np.allclose(kr, a / (b * v), rtol=1e-12)


def test_spheroid_curvature_finite_difference_weingarten():
    # differentiate the unit normal along the profile numerically
    body = g.spheroid(1.5, 1.0)
    u = np.linspace(0.2, np.pi - 0.2, 15)
    h = 1e-4

    def frame(uu):
        z, rho = body.profile(uu)
        z1, r1 = body.profile(uu, 1)
        v = np.hypot(z1, r1)
        # outward normal in the (z, rho) half-plane
        return np.stack([r1 / v, -z1 / v]), np.stack([z, rho]), v

    n_p, _, _ = frame(u + h)
    n_m, _, _ = frame(u - h)
    n0, x0, v = frame(u)
    dn = (n_p - n_m) / (2 * h)
    tangent = np.stack([body.profile(u, 1)[0], body.profile(u, 1)[1]]) / v
    k_prof_fd = np.sum(dn * tangent, axis=0) / v
    k_rot_fd = n0[1] / x0[1]
    kp, kr = body.principal_curvatures(u)
    assert np.allclose(k_prof_fd, kp, atol=1e-6)
    assert np.allclose(k_rot_fd, kr, atol=1e-6)


@pytest.mark.parametrize("body", [g.sphere(1.0), g.spheroid(2.0, 1.0), g.spheroid(0.5, 1.3),
                                  g.perturbed_sphere(1), g.perturbed_sphere(8, amplitude=0.1)],
                         ids=lambda b: b.name)
def test_gauss_kronecker_integral_d3(body):
    rep = g.axisym_curvatures(body)
    assert rep.integral(rep.Mj_samples[2]) == pytest.approx(4 * math.pi, abs=1e-8)


def test_steiner_polynomial_ball():
    P = g.steiner_polynomial(g.sphere(1.0))
    assert np.allclose(P.coeffs, (1.0, 2.0, 1.0), atol=1e-13)
    assert g.SteinerPolynomial.for_ball(4, 2.0).coeffs == pytest.approx((1.0, 1.5, 0.75, 0.125))
    assert P(2.0) == pytest.approx(9.0)


def test_steiner_polynomial_is_surface_average_of_product():
    body = g.spheroid(1.7, 1.0)
    rep = g.axisym_curvatures(body)
    P = g.steiner_polynomial(body, rep)
    for t in (0.3, 2.0):
        direct = rep.integral((1 + t * rep.kappa_profile) * (1 + t * rep.kappa_rot)) / rep.area
        assert P(t) == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize("body", [g.spheroid(1.5, 1.0), g.spheroid(0.6, 1.0), g.perturbed_sphere(5)],
                         ids=lambda b: b.name)
def test_inequalities_and_steiner_comparison(body):
    ineq = g.check_curvature_inequalities(body)
    assert ineq.min_margin >= -1e-10
    assert ineq.alexandrov_fenchel >= -1e-10
    t = np.linspace(1e-3, 100.0, 500)
    assert np.min(g.steiner_margin(body, t)) >= -1e-10


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), d=st.integers(3, 5))
def test_perturbed_family_inequalities(seed, d):
    body = g.perturbed_sphere(seed, amplitude=0.08, d=d)
    ineq = g.check_curvature_inequalities(body)
    assert ineq.min_margin >= -1e-10
    t = np.geomspace(1e-3, 100.0, 60)
    assert np.min(g.steiner_margin(body, t)) >= -1e-9


def test_jensen_margin_positive_for_spheroid():
    ineq = g.check_curvature_inequalities(g.spheroid(2.0, 1.0))
    assert ineq.jensen[1] > 1e-3
    assert ineq.maclaurin[1] == pytest.approx(0.0, abs=1e-14)


def test_body_errors():
    with pytest.raises(ConvexityError):
        g.AxisymBody(3, [0, 1], [0, 1, 0, 0.3])
    with pytest.raises(GeometryError):
        g.AxisymBody(3, [0, 1], [0, 1, 0, -1 / 3])
    with pytest.raises(DomainError):
        g.AxisymBody(2, [0, 1], [0, 1])


def test_dimension_change_and_scaling():
    body = g.spheroid(1.5, 1.0)
    rep4 = g.axisym_curvatures(body.with_dimension(4))
    assert rep4.d == 4 and rep4.Mj_samples.shape[0] == 4
    rep = g.axisym_curvatures(body)
    rep2 = g.axisym_curvatures(body.scaled(2.0))
    assert rep2.area == pytest.approx(4 * rep.area, rel=1e-12)
    assert rep2.M_total == pytest.approx(rep.M_total / 4, rel=1e-12)
