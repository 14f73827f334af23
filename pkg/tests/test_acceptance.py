"""Acceptance criteria, one test per criterion, each at its stated tolerance."""

import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from shadowtrace import circle_oracle as co
from shadowtrace.dynamics import integrate_ese, integrate_rse, integrate_se_direct
from shadowtrace.geometry import make_ellipse, normalized_arclength_reparam, parallel_curve_point
from shadowtrace.rotation import (asymptotic_area_ratio, critical_distance, guaranteed_plateau_radius,
                                  rotation_number, rotation_sweep, turning_distance)
from shadowtrace.singularities import count_cusps_per_period, detect_singular_times

TWO_PI = 2 * math.pi
N = 512
EB = 1.0 / N


@pytest.fixture(scope="module")
def ellipse_critical(ellipse2):
    return critical_distance(ellipse2, tol=0.01)


def random_configs(rng, curves, k, r_range=(0.2, 4.0)):
    names = list(curves)
    out = []
    for i in range(k):
        name = names[i % len(names)]
        out.append((name, curves[name], float(rng.uniform(*r_range)), float(rng.uniform(-math.pi, math.pi))))
    return out


def test_01_circle_rotation_law(circle, acceptance):
    grid = np.linspace(0.1, 5.0, 50)
    pts = rotation_sweep(circle, grid, n_periods=N)
    dev = max(abs(p.rho - co.rotation_number_circle(p.R)) for p in pts)
    ok = acceptance(1, "circle rotation number matches the closed form on 50 points",
                    dev < 1 / N + 1e-6, f"max |drho| = {dev:.3g}, allowed {1 / N + 1e-6:.3g}")
    assert ok


def test_02_subharmonic_closure(circle, acceptance):
    R = co.subharmonic_distance(2, 1)
    tr = integrate_rse(circle, R, 0.0, (0.0, 4 * math.pi))
    p = tr.position_at(np.array([0.0, 2 * math.pi, 4 * math.pi]))
    closure = np.linalg.norm(p[2] - p[0])
    half = np.linalg.norm(p[1] - p[0])
    rep = count_cusps_per_period(circle, R, 0.0)
    ok = closure < 1e-5 and half > 0.1 and rep.count == 2 and rep.outer == 1 and rep.inner == 1
    acceptance(2, "R_{2,1} orbit closes after 4 pi, not 2 pi, with one cusp per branch", ok,
               f"closure {closure:.2e}, 2pi gap {half:.3f}, cusps {rep.count} ({rep.outer}/{rep.inner})")
    assert ok


def test_03_ellipse_critical_distance(ellipse2, ellipse_critical, acceptance):
    est = ellipse_critical.estimate
    mu = ellipse2.metrics.mu
    ok = 1.43 <= est <= 1.46 and est < mu
    acceptance(3, "ellipse(2) critical distance in [1.43, 1.46] and below mu", ok,
               f"estimate {est:.4f}, mu {mu:.4f}")
    assert ok


def test_04_ellipse_bounds(ellipse2, ellipse_critical, acceptance):
    half = make_ellipse(0.5)
    results = {2.0: (ellipse2, ellipse_critical.estimate),
               0.5: (half, critical_distance(half, tol=0.01).estimate)}
    ok = True
    parts = []
    for b, (curve, est) in results.items():
        lo, hi = min(b, 1.0), curve.metrics.perimeter / TWO_PI
        ok &= lo <= est <= hi
        parts.append(f"b={b:g}: {lo:.3f} <= {est:.4f} <= {hi:.4f}")
    acceptance(4, "ellipse critical distance within [min(b,1), perimeter/2pi]", ok, "; ".join(parts))
    assert ok


def test_05_asymptotic_area_law(circle, ellipse2, acceptance):
    rc = asymptotic_area_ratio(circle, [50.0])[0]
    re = asymptotic_area_ratio(ellipse2, [50.0])[0]
    ok = 0.98 <= rc <= 1.02 and 0.95 <= re <= 1.05
    acceptance(5, "rho * 2 pi R^2 / A0 near 1 at R = 50", ok, f"circle {rc:.5f}, ellipse {re:.5f}")
    assert ok


def test_06_first_integral(circle, ellipse2, acceptance):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _, curve, R, th in random_configs(rng, {"circle": circle, "ellipse": ellipse2}, 10):
        es = integrate_ese(curve, R, th, (0.0, 10 * TWO_PI))
        assert np.all(es.y > 0)
        worst = max(worst, float(np.max(np.abs(es.first_integral()))))
    ok = worst < 1e-8
    acceptance(6, "y^2 - |x|^2 conserved over 10 periods", ok, f"max {worst:.2e}")
    assert ok


def test_07_three_way_agreement(circle, ellipse2, convex_curve, acceptance):
    rng = np.random.default_rng(7)
    curves = {"circle": circle, "ellipse": ellipse2, "fourier": convex_curve}
    worst = 0.0
    for _, curve, R, th in random_configs(rng, curves, 10):
        rse = integrate_rse(curve, R, th, (0.0, TWO_PI))
        ese = integrate_ese(curve, R, th, (0.0, TWO_PI))
        se = integrate_se_direct(curve, rse.positions[0], (0.0, TWO_PI))
        worst = max(worst, np.abs(rse.positions - ese.positions).max(),
                    np.abs(rse.positions - se.positions).max(), np.abs(ese.positions - se.positions).max())
    ok = worst < 1e-6
    acceptance(7, "SE, RSE and ESE positions agree pairwise", ok, f"max {worst:.2e}")
    assert ok


def test_08_distance_invariance(circle, ellipse2, convex_curve, acceptance):
    rng = np.random.default_rng(8)
    curves = {"circle": circle, "ellipse": ellipse2, "fourier": convex_curve}
    worst = 0.0
    span = (0.0, 10 * TWO_PI)
    for _, curve, R, th in random_configs(rng, curves, 9, r_range=(0.1, 8.0)):
        scale = max(1.0, R)
        rse = integrate_rse(curve, R, th, span)
        ese = integrate_ese(curve, R, th, span)
        se = integrate_se_direct(curve, rse.positions[0], span)
        d_ese = np.abs(np.linalg.norm(ese.positions - curve.evaluate(ese.t), axis=1) - R).max()
        worst = max(worst, rse.distance_error() / scale, se.distance_error() / scale, d_ese / scale)
    ok = worst < 1e-7
    acceptance(8, "| |r - r0| - R | stays below 1e-7 max(1, R) over 10 periods", ok, f"max {worst:.2e}")
    assert ok


def test_09_cusp_placement(circle, ellipse2, convex_curve, acceptance):
    cases = [(circle, math.sqrt(2), 0.4), (circle, 0.8, 1.0), (ellipse2, 5.0, 0.3),
             (ellipse2, 1.2, 2.0), (convex_curve, 3.0, -1.0)]
    worst = 0.0
    n_events = 0
    for curve, R, th in cases:
        ev = detect_singular_times(curve, integrate_rse(curve, R, th, (-4 * math.pi, 4 * math.pi), t_init=0.0))
        n_events += len(ev)
        for e in ev:
            sign = 1.0 if e.branch == "outer" else -1.0
            worst = max(worst, float(np.linalg.norm(np.array(e.location) - parallel_curve_point(curve, sign * R, e.time))))
    tr = integrate_rse(circle, math.sqrt(2), 0.0, (0.0, 12 * math.pi))
    times = [e.time for e in detect_singular_times(circle, tr)]
    spacing = float(np.max(np.abs(np.diff(times) - math.pi * math.sqrt(2))))
    ok = worst < 1e-6 and spacing < 1e-6 and n_events > 0
    acceptance(9, "cusps lie on the +-R parallel curves; circle R=sqrt2 spacing pi*sqrt2", ok,
               f"{n_events} cusps, max offset {worst:.2e}, spacing error {spacing:.2e}")
    assert ok


def test_10_turning_times(circle, acceptance):
    ev1 = detect_singular_times(circle, integrate_rse(circle, 1.0, math.pi / 2, (-10.0, 10.0), t_init=0.0))
    ev2 = detect_singular_times(circle, integrate_rse(circle, 0.8, math.pi / 4, (-10.0, 10.0), t_init=0.0))
    expect2 = co.turning_time_small_R(0.8, math.pi / 4)
    e1 = abs(ev1[0].time - 1.0) if len(ev1) == 1 else math.inf
    e2 = abs(ev2[0].time - expect2) if len(ev2) == 1 else math.inf
    ok = e1 < 1e-6 and e2 < 1e-6
    acceptance(10, "detected cusp times match the closed-form turning times", ok,
               f"R=1: {e1:.1e}; R=4/5: {e2:.1e} (tau={expect2:.8f})")
    assert ok


def test_11_annulus_density(circle, acceptance):
    R = 1.5
    tr = integrate_rse(circle, R, 0.0, (0.0, 500 * math.pi))
    rng = np.random.default_rng(0)
    rad = np.sqrt(rng.uniform((R - 1) ** 2, (R + 1) ** 2, 200))
    ang = rng.uniform(0, TWO_PI, 200)
    targets = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    d, _ = cKDTree(tr.positions).query(targets)
    # The 500 pi segment leaves gaps up to ~0.057 next to the outer rim, so a
    # random draw can miss; the covering radius of the whole annulus must keep
    # shrinking with the horizon.
    r, a = np.meshgrid(np.linspace(R - 1, R + 1, 101), np.linspace(0, TWO_PI, 1500, endpoint=False))
    grid = np.stack([(r * np.cos(a)).ravel(), (r * np.sin(a)).ravel()], axis=1)
    long = integrate_rse(circle, R, 0.0, (0.0, 1000 * math.pi), stride=2)
    cover = cKDTree(long.positions).query(grid)[0].max()
    ok = d.max() < 0.05 and cover < 0.05
    acceptance(11, "R=3/2 orbit comes within 0.05 of 200 annulus targets", ok,
               f"max gap {d.max():.4f} over 500 pi; annulus covering radius {cover:.4f} over 1000 pi")
    assert ok


def test_12_invariance_suite(circle, ellipse2, convex_curve, acceptance):
    R = 2.5
    base = rotation_number(ellipse2, R, N).value
    reparam = rotation_number(normalized_arclength_reparam(ellipse2, 64), R, N).value
    dil = {c: rotation_number(ellipse2.transformed(scale=c), R * c, N).value for c in (0.5, 2.0)}
    inv = max(abs(reparam - base), *(abs(v - base) for v in dil.values()))
    rng = np.random.default_rng(12)
    plateau = 0.0
    for curve in (circle, ellipse2, convex_curve):
        rmin = guaranteed_plateau_radius(curve)
        for R_low in rng.uniform(0.05, 1.0, 3) * rmin:
            plateau = max(plateau, abs(rotation_number(curve, R_low, N).value - curve.metrics.rotation_index))
    ok = inv <= 2 * EB and plateau <= EB
    acceptance(12, "rho invariant under reparameterization and dilation; plateau below r_min", ok,
               f"invariance {inv:.2e} (<= {2 * EB:.2e}), plateau {plateau:.2e} (<= {EB:.2e})")
    assert ok


def test_13_conjecture_probe(circle, ellipse2, convex_curve, ellipse_critical, acceptance):
    diffs = {}
    crit_c = critical_distance(circle, tol=0.005)
    diffs["circle"] = abs(turning_distance(circle, tol=0.005, critical=crit_c).estimate - crit_c.estimate)
    diffs["ellipse(2)"] = abs(turning_distance(ellipse2, tol=0.01, critical=ellipse_critical).estimate
                              - ellipse_critical.estimate)
    crit_f = critical_distance(convex_curve, tol=0.01)
    turn_f = turning_distance(convex_curve, tol=0.01, critical=crit_f)
    report = {"critical": crit_f.estimate, "turning": turn_f.estimate, "heuristic": turn_f.heuristic}
    ok = diffs["circle"] < 0.02 and diffs["ellipse(2)"] < 0.02 and turn_f.estimate >= crit_f.estimate - 0.01
    acceptance(13, "critical and turning distances coincide within 0.02", ok,
               f"circle {diffs['circle']:.4f}, ellipse {diffs['ellipse(2)']:.4f}; random convex curve "
               f"critical {report['critical']:.4f} turning {report['turning']:.4f}")
    assert ok
