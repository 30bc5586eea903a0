import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extrobin import ball
from extrobin import effective1d as e1
from extrobin import geometry as g
from extrobin.errors import DomainError, InequalityViolation


def test_weight_from_multicurve():
    assert e1.weight_from_multicurve(g.MultiCurve2D([g.circle(1.0)])).coeffs == pytest.approx((2 * math.pi, 2 * math.pi))
    two = g.MultiCurve2D([g.circle(1.0), g.circle(1.0, (3.0, 0.0))])
    assert e1.weight_from_multicurve(two).coeffs == pytest.approx((4 * math.pi, 4 * math.pi))
    ell = g.ellipse(2.0, 1.0)
    assert e1.weight_from_multicurve(g.MultiCurve2D([ell])).w0 == pytest.approx(ell.perimeter)


def test_weight_from_steiner():
    w = e1.weight_from_steiner(g.steiner_polynomial(g.sphere(1.0)))
    assert w.coeffs == pytest.approx((1.0, 2.0, 1.0))
    w = e1.weight_from_steiner(g.steiner_polynomial(g.spheroid(1.4, 1.0)))
    assert w.w0 == 1.0 and all(c > 0 for c in w.coeffs)


def test_weight_validation():
    with pytest.raises(DomainError):
        e1.EffectiveWeight((0.0, 1.0))
    with pytest.raises(DomainError):
        e1.EffectiveWeight((1.0, -1.0))
    with pytest.raises(DomainError):
        e1.EffectiveWeight((1.0, -3.0, 1.0))      # roots at t > 0
    w = e1.EffectiveWeight((2.0, 1.0, 0.5))
    assert w.degree == 2 and w.log_slope == 0.5
    assert w.rescaled(2.0).coeffs == pytest.approx((2.0, 2.0, 2.0))
    assert w.normalized().w0 == 1.0


def test_config_validation():
    with pytest.raises(DomainError):
        e1.TruncationConfig(n=8)
    with pytest.raises(DomainError):
        e1.TruncationConfig(T=-1.0)
    with pytest.raises(DomainError):
        e1.TruncationConfig(grading=1.5)


def test_graded_mesh():
    m = e1.graded_mesh(10.0, 50, h0=0.01)
    assert m[0] == 0.0 and m[-1] == pytest.approx(10.0) and m.size == 51
    assert m[1] == pytest.approx(0.01, rel=1e-8)
    ratios = np.diff(m)[1:] / np.diff(m)[:-1]
    assert np.allclose(ratios, ratios[0]) and 1.0 < ratios[0] <= e1.MAX_GRADING
    assert np.allclose(e1.graded_mesh(1.0, 10), np.linspace(0, 1, 11))
    r = e1.refine(m)
    assert r.size == 101 and np.all(r[::2] == m)


def test_mass_matrix_integrates_weight_exactly():
    w = e1.EffectiveWeight((1.0, 2.0, 1.0))
    mesh = e1.graded_mesh(3.0, 20, h0=0.01)
    a_diag, a_off, b_diag, b_off = e1.assemble(w, -1.0, mesh)
    # u = 1 - t/T is in the trial space: compare its mass with closed form
    T = mesh[-1]
    u = 1.0 - mesh[:-1] / T
    mass = u @ e1._tri_matvec(b_diag, b_off, u)
    poly = np.polynomial.Polynomial(w.coeffs) * np.polynomial.Polynomial([1.0, -1.0 / T]) ** 2
    assert mass == pytest.approx(poly.integ()(T) - poly.integ()(0.0), rel=1e-13)
    # energy: int w / T^2 + alpha w0
    energy = u @ e1._tri_matvec(a_diag, a_off, u)
    wint = np.polynomial.Polynomial(w.coeffs).integ()
    assert energy == pytest.approx((wint(T) - wint(0.0)) / T ** 2 - 1.0, rel=1e-13)


CASES = [(2, 1.0, -1.0), (2, 1.0, -0.5), (2, 2.0, -3.0), (2, 1.0, -0.1), (3, 1.0, -2.0),
         (3, 1.0, -4.0), (3, 0.5, -10.0), (4, 1.0, -3.0), (4, 1.0, -8.0)]


@pytest.mark.parametrize("d,R,alpha", CASES)
def test_ball_weights_reproduce_ball(d, R, alpha):
    res = e1.min_rayleigh(e1.ball_weight(d, R), alpha)
    exact = ball.solve(d, R, alpha).lambda1
    assert res.converged and not res.truncation_warning
    assert res.eigenvalue == pytest.approx(exact, rel=1e-5)
    assert abs(res.eigenvalue - exact) <= 10 * res.residual + 1e-12
    assert res.upper_bound >= exact - 1e-12 * abs(exact)


def test_subcritical_gives_essential_bottom():
    res = e1.min_rayleigh(e1.ball_weight(3, 1.0), -0.5)
    assert res.essential_bottom and res.eigenvalue == 0.0 and res.converged
    res = e1.min_rayleigh(e1.ball_weight(3, 1.0), -1.0)
    assert res.eigenvalue == 0.0


def test_alpha_zero_nonnegative_and_decreasing_in_T():
    w = e1.ball_weight(2, 1.0)
    vals = [e1.min_rayleigh(w, 0.0, e1.TruncationConfig(T=T, auto_T=False, richardson=False)).upper_bound
            for T in (5.0, 20.0, 80.0)]
    assert all(v >= 0 for v in vals)
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert e1.min_rayleigh(w, 0.0).eigenvalue == 0.0


def test_nested_refinement_monotone():
    w = e1.ball_weight(2, 1.0)
    mesh = e1.graded_mesh(25.0, 40, h0=0.05)
    vals = []
    for _ in range(4):
        vals.append(e1._solve_on_mesh(w, -1.0, mesh)[0])
        mesh = e1.refine(mesh)
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] >= ball.solve(2, 1.0, -1.0).lambda1


def test_extending_T_monotone():
    w = e1.ball_weight(3, 1.0)
    base = e1.graded_mesh(2.0, 60, h0=0.01)
    vals = []
    for T in (2.0, 4.0, 8.0):
        extra = np.linspace(2.0, T, int(10 * (T - 2.0)) + 1)[1:]
        vals.append(e1._solve_on_mesh(w, -2.0, np.concatenate([base, extra]))[0])
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_monotone_in_alpha():
    w = e1.EffectiveWeight((1.0, 1.5, 0.4))
    vals = [e1.min_rayleigh(w, a).eigenvalue for a in (-4.0, -2.0, -1.0, -0.5)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@settings(max_examples=12, deadline=None)
@given(c1=st.floats(0.0, 3.0), c2=st.floats(0.0, 2.0), alpha=st.floats(-6.0, -0.5), sigma=st.floats(0.5, 2.0))
def test_homothety(c1, c2, alpha, sigma):
    w = e1.EffectiveWeight((1.0, c1, c2))
    base = e1.min_rayleigh(w, alpha)
    scaled = e1.min_rayleigh(w.rescaled(sigma), sigma * alpha)
    if base.essential_bottom:
        assert scaled.eigenvalue == pytest.approx(0.0, abs=1e-8)
    else:
        assert scaled.eigenvalue == pytest.approx(sigma ** 2 * base.eigenvalue, rel=1e-5)


def test_weight_comparison_on_steiner_pairs():
    # P_body <= P_ball with matched mean curvature average gives a lower value
    for body in (g.spheroid(1.5, 1.0), g.spheroid(0.7, 1.0), g.perturbed_sphere(2)):
        rep = g.axisym_curvatures(body)
        R = g.equivalent_ball_radius(rep)
        wb = e1.ball_weight(3, R)
        wo = e1.weight_from_steiner(g.steiner_polynomial(body, rep))
        t = np.linspace(0, 50, 200)
        assert np.all(wo(t) <= wb(t) + 1e-12)
        for a in (-2.0 / R, -4.0 / R):
            assert e1.min_rayleigh(wo, a).eigenvalue <= e1.min_rayleigh(wb, a).eigenvalue + 1e-6


def test_bound_thm1():
    one = g.MultiCurve2D([g.circle(1.0)])
    three = g.MultiCurve2D([g.circle(1.0, (3.0 * i, 0.0)) for i in range(3)])
    for a in (-0.5, -1.0, -3.0):
        assert e1.bound_thm1(one, a) == ball.solve(2, 1.0, a).lambda1
        assert e1.bound_thm1(three, a) == pytest.approx(e1.bound_thm1(one, a), rel=1e-13)
        # the reduced quotient for N copies is the single-disk quotient
        r3 = e1.min_rayleigh(e1.weight_from_multicurve(three), a)
        assert r3.eigenvalue == pytest.approx(ball.solve(2, 1.0, a).lambda1, rel=1e-5)
    ell = g.ellipse(2.0, 1.0)
    ell = ell.scaled(2 * math.pi / ell.perimeter)
    assert e1.bound_thm1(g.MultiCurve2D([ell]), -1.0) == pytest.approx(ball.solve(2, 1.0, -1.0).lambda1, rel=1e-12)
    with pytest.raises(DomainError):
        e1.bound_thm1(one, 0.0)


def test_bound_thm2():
    assert e1.bound_thm2(g.sphere(1.0), -2.0) == ball.solve(3, 1.0, -2.0).lambda1
    body = g.spheroid(1.5, 1.0)
    rep = g.axisym_curvatures(body)
    body = body.scaled(rep.M_total ** 0.5)
    chain = e1.theorem2_chain(body, -2.0)
    assert chain.M_total == pytest.approx(1.0, rel=1e-12)
    assert chain.steiner_value <= ball.solve(3, 1.0, -2.0).lambda1 + 1e-6
    assert e1.bound_thm2(body, -2.0) == pytest.approx(ball.solve(3, 1.0, -2.0).lambda1)
    # subcritical: both sides 0
    chain = e1.theorem2_chain(body, -0.5)
    assert chain.ball_value == 0.0 and chain.steiner_value <= 1e-12


def test_bound_thm2_detects_violation(monkeypatch):
    fake = e1.Theorem2Report(-2.0, 1.0, 1.0, -1.0, -0.5, None)
    monkeypatch.setattr(e1, "theorem2_chain", lambda body, alpha, cfg: fake)
    with pytest.raises(InequalityViolation):
        e1.bound_thm2(g.sphere(1.0), -2.0)


def test_positive_alpha_rejected():
    with pytest.raises(DomainError):
        e1.min_rayleigh(e1.ball_weight(2, 1.0), 0.5)
