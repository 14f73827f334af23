import math

import numpy as np
import pytest

from shadowtrace import circle_oracle as co
from shadowtrace import dynamics
from shadowtrace.dynamics import (IntegrationConfig, alpha, alpha_polar, integrate_ese, integrate_rse,
                                  integrate_se_direct, phi_lift, poincare_map, rse_rhs, se_rhs)
from shadowtrace.errors import NumericalError, ValidationError
from shadowtrace.geometry import make_ellipse, speed_and_angle

# Independent high-precision solutions (mpmath odefun, 30 digits), frozen.
ELLIPSE_B2_R13_TH05_AT_2PI = 3.7676086690327557328
FIGURE8_R07_TH1_AT_PI = 2.215421152025124783


def test_ellipse_against_frozen_solution(ellipse2):
    tr = integrate_rse(ellipse2, 1.3, 0.5)
    assert tr.theta[-1] == pytest.approx(ELLIPSE_B2_R13_TH05_AT_2PI, abs=1e-10)


def test_figure_eight_against_frozen_solution(figure_eight):
    tr = integrate_rse(figure_eight, 0.7, 1.0, (0.0, math.pi))
    assert tr.theta[-1] == pytest.approx(FIGURE8_R07_TH1_AT_PI, abs=1e-10)


def test_rk45_agrees_with_rk4(ellipse2):
    cfg = IntegrationConfig(method="rk45", abs_tol=1e-12, rel_tol=1e-12)
    tr = integrate_rse(ellipse2, 1.3, 0.5, cfg=cfg)
    assert tr.theta[-1] == pytest.approx(ELLIPSE_B2_R13_TH05_AT_2PI, abs=1e-8)
    assert tr.meta["method"] == "rk45"


def test_critical_circle_closed_form(circle):
    tr = integrate_rse(circle, 1.0, 0.4, (0.0, 6.0))
    assert np.max(np.abs(tr.theta - co.theta_oracle(1.0, 0.4, tr.t))) < 1e-10


def test_equilibrium_stays_put(circle):
    tp, tm = co.equilibria(0.8)
    for th in (tp, tm):
        tr = integrate_rse(circle, 0.8, th, (0.0, 4 * math.pi))
        assert np.max(np.abs(tr.theta - th - tr.t)) < 1e-9


def test_backward_and_forward_from_interior_start(circle):
    tr = integrate_rse(circle, 1.7, 0.2, (-3.0, 3.0), t_init=0.0)
    assert np.all(np.diff(tr.t) > 0)
    assert tr.theta_at(0.0) == pytest.approx(0.2, abs=1e-14)
    assert np.max(np.abs(tr.theta - co.theta_oracle(1.7, 0.2, tr.t))) < 1e-9


def test_empty_span_returns_initial_state(ellipse2):
    tr = integrate_rse(ellipse2, 1.0, 0.3, (0.0, 0.0))
    assert tr.t.tolist() == [0.0] and tr.theta.tolist() == [0.3]
    es = integrate_ese(ellipse2, 1.0, 0.3, (0.0, 0.0))
    assert np.allclose(es.positions[0], ellipse2.evaluate(0.0) + [math.cos(0.3), math.sin(0.3)])


def test_invalid_arguments(circle):
    with pytest.raises(ValidationError):
        integrate_rse(circle, 0.0, 0.0)
    with pytest.raises(ValidationError):
        integrate_rse(circle, 1.0, 0.0, (0.0, 1.0), t_init=2.0)
    with pytest.raises(ValidationError):
        integrate_rse(circle, 1.0, 0.0, (0.0, math.inf))
    with pytest.raises(ValidationError):
        IntegrationConfig(steps_per_period=10)
    with pytest.raises(ValidationError):
        IntegrationConfig(method="euler")
    with pytest.raises(ValidationError):
        integrate_se_direct(circle, circle.evaluate(0.0), (0.0, 1.0))


def test_poincare_map_is_vectorised_monotone_and_equivariant(ellipse2):
    th = np.linspace(-3, 3, 9)
    out = poincare_map(ellipse2, 1.3, th)
    assert np.all(np.diff(out) > 0)
    shifted = poincare_map(ellipse2, 1.3, th + 2 * math.pi)
    assert np.allclose(shifted, out + 2 * math.pi, atol=1e-11)
    assert out[3] == pytest.approx(float(poincare_map(ellipse2, 1.3, th[3])), abs=1e-14)


def test_time_shifted_curve_gives_shifted_solution(ellipse2):
    beta = 0.7
    shifted = ellipse2.time_shifted(beta)
    a = integrate_rse(ellipse2, 1.3, 0.5, (beta, beta + 2 * math.pi))
    b = integrate_rse(shifted, 1.3, 0.5, (0.0, 2 * math.pi))
    assert a.theta[-1] == pytest.approx(b.theta[-1], abs=1e-10)


def test_rhs_matches_se_field(convex_curve):
    t, th, R = 0.8, 2.1, 1.4
    r = convex_curve.evaluate(t) + R * np.array([math.cos(th), math.sin(th)])
    v = se_rhs(convex_curve, t, r)
    thdot = float(rse_rhs(convex_curve, R, t, th))
    assert np.allclose(v, convex_curve.derivative(t) + R * thdot * np.array([-math.sin(th), math.cos(th)]), atol=1e-13)


def test_alpha_forms_agree_and_sign(convex_curve):
    t = np.linspace(0, 6, 25)
    th = np.linspace(-3, 3, 25)
    assert np.allclose(alpha(convex_curve, 1.2, t, th), alpha_polar(convex_curve, 1.2, t, th), atol=1e-13)
    # shadower directly ahead of the escaper: the escaper moves away from it
    _, psi = speed_and_angle(convex_curve, np.array([0.5]))
    assert float(alpha(convex_curve, 1.0, 0.5, psi[0])) < 0


def test_phi_satisfies_its_ode(ellipse2):
    tr = integrate_rse(ellipse2, 1.3, 0.5, (0.0, 2 * math.pi))
    phi = phi_lift(ellipse2, tr)
    B, psi = speed_and_angle(ellipse2, tr.t)
    dpsi = np.gradient(psi, tr.t)
    dphi = np.gradient(phi, tr.t)
    resid = dphi - (-(B / 1.3) * np.cos(phi) - dpsi)
    assert np.max(np.abs(resid[2:-2])) < 1e-5
    with pytest.raises(ValidationError):
        phi_lift(make_ellipse(3.0), tr)


def test_three_formulations_agree(ellipse2):
    span = (0.0, 2 * math.pi)
    rse = integrate_rse(ellipse2, 0.9, 1.1, span)
    ese = integrate_ese(ellipse2, 0.9, 1.1, span)
    se = integrate_se_direct(ellipse2, rse.positions[0], span)
    assert np.max(np.abs(rse.positions - ese.positions)) < 1e-9
    assert np.max(np.abs(rse.positions - se.positions)) < 1e-9
    assert np.max(np.abs(ese.first_integral())) < 1e-10
    assert se.distance_error() < 1e-9


def test_ese_survives_long_spans(circle):
    es = integrate_ese(circle, 0.8, 0.3, (0.0, 60 * math.pi))
    assert np.all(np.isfinite(es.positions))
    assert np.max(np.abs(es.positions - co.sc_position(0.8, 0.3, es.t))) < 1e-8


def test_trajectory_rows(circle):
    tr = integrate_rse(circle, 1.0, 0.0, (0.0, 1.0), IntegrationConfig(steps_per_period=64))
    rows = list(tr.rows())
    assert len(rows) == tr.t.size and len(rows[0]) == 5


def test_flipped_field_breaks_distance_invariance(circle, monkeypatch):
    """A corrupted SE field must be caught by the invariance check."""
    from numba import njit

    from shadowtrace import validation
    original = dynamics.SE_FIELD

    @njit(cache=False)
    def flipped(px, py, dpx, dpy, ux, uy):
        vx, vy = original(px, py, dpx, dpy, ux, uy)
        return -vx, -vy

    monkeypatch.setattr(dynamics, "SE_FIELD", flipped)
    check = validation.check_distance_invariance(IntegrationConfig(steps_per_period=256),
                                                 np.random.default_rng(1), k=3, periods=2)
    assert not check.passed
    if check.value is None:
        assert "NumericalError" in check.detail["error"]
