"""Cross-validation of the integrators against the unit-circle closed forms.

``run_oracle_battery`` is what ``shadowtrace oracle-check`` executes.  Each
check records the worst observed discrepancy next to its threshold so a
failing scorecard says by how much it failed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from . import circle_oracle as co
from .dynamics import (DEFAULT_CONFIG, IntegrationConfig, integrate_ese, integrate_rse,
                       integrate_se_direct)
from .errors import ShadowError
from .geometry import TWO_PI, make_circle
from .rotation import find_distance_for_rotation, rotation_sweep
from .singularities import count_cusps_per_period, detect_singular_times


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None
    threshold: float | None
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "value": self.value,
                "threshold": self.threshold, "detail": self.detail}


def _guard(name, threshold, fn):
    try:
        value, detail = fn()
    except ShadowError as exc:
        return Check(name, False, None, threshold, {"error": f"{type(exc).__name__}: {exc}"})
    return Check(name, bool(value < threshold), float(value), threshold, detail)


def _random_configs(rng, k):
    """k (R, theta0) pairs spread over the three circle regimes."""
    out = []
    for i in range(k):
        regime = i % 3
        if regime == 0:
            out.append((float(rng.uniform(0.1, 0.95)), float(rng.uniform(-6, 6))))
        elif regime == 1:
            out.append((1.0, float(rng.uniform(-3.0, 3.0))))
        else:
            out.append((float(rng.uniform(1.05, 5.0)), float(rng.uniform(-6, 6))))
    return out


def check_theta_oracle(cfg, rng, k=20, span=10 * math.pi):
    circle = make_circle()

    def run():
        worst = 0.0
        for R, th in _random_configs(rng, k):
            tr = integrate_rse(circle, R, th, (0.0, span), cfg)
            worst = max(worst, float(np.max(np.abs(tr.theta - co.theta_oracle(R, th, tr.t)))))
        return worst, {"configs": k, "span": span}
    return _guard("theta_vs_closed_form", 1e-6, run)


def check_rotation_law(cfg, n_periods, n_grid=50):
    circle = make_circle()
    grid = np.linspace(0.1, 5.0, n_grid)

    def run():
        pts = rotation_sweep(circle, grid, cfg, n_periods)
        bad = [p.R for p in pts if p.estimate is None]
        if bad:
            return math.inf, {"failed_R": bad}
        dev = [abs(p.rho - co.rotation_number_circle(p.R)) for p in pts]
        i = int(np.argmax(dev))
        return dev[i], {"worst_R": pts[i].R, "grid_points": n_grid}
    return _guard("rotation_number_law", 1.0 / n_periods + 1e-6, run)


def check_distance_invariance(cfg, rng, k=6, periods=10):
    """Direct SE integration must keep the distance to the escaper fixed."""
    circle = make_circle()

    def run():
        worst = 0.0
        for R, th in _random_configs(rng, k):
            r_init = circle.evaluate(0.0) + R * np.array([math.cos(th), math.sin(th)])
            se = integrate_se_direct(circle, r_init, (0.0, TWO_PI * periods), cfg)
            rse = integrate_rse(circle, R, th, (0.0, TWO_PI * periods), cfg)
            worst = max(worst, se.distance_error() / max(1.0, R), rse.distance_error() / max(1.0, R))
        return worst, {"configs": k, "periods": periods}
    return _guard("distance_invariance", 1e-7, run)


def check_first_integral(cfg, rng, k=6, periods=10):
    circle = make_circle()

    def run():
        worst = 0.0
        for R, th in _random_configs(rng, k):
            es = integrate_ese(circle, R, th, (0.0, TWO_PI * periods), cfg)
            worst = max(worst, float(np.max(np.abs(es.first_integral()))))
        return worst, {"configs": k}
    return _guard("ese_first_integral", 1e-8, run)


def check_three_way(cfg, rng, k=6):
    circle = make_circle()

    def run():
        worst = 0.0
        for R, th in _random_configs(rng, k):
            span = (0.0, TWO_PI)
            rse = integrate_rse(circle, R, th, span, cfg)
            ese = integrate_ese(circle, R, th, span, cfg)
            se = integrate_se_direct(circle, rse.positions[0], span, cfg)
            worst = max(worst,
                        float(np.max(np.abs(rse.positions - ese.positions))),
                        float(np.max(np.abs(rse.positions - se.positions))),
                        float(np.max(np.abs(ese.positions - se.positions))))
        return worst, {"configs": k}
    return _guard("three_way_agreement", 1e-6, run)


def check_turning_times(cfg):
    circle = make_circle()

    def run():
        errs = {}
        for R, th, expect in ((1.0, math.pi / 2, co.turning_time_R1(math.pi / 2)),
                              (0.8, math.pi / 4, co.turning_time_small_R(0.8, math.pi / 4))):
            ev = detect_singular_times(circle, integrate_rse(circle, R, th, (-5.0, 5.0), cfg, t_init=0.0))
            if len(ev) != 1:
                return math.inf, {"R": R, "events": len(ev)}
            errs[f"R={R:g}"] = abs(ev[0].time - expect)
        return max(errs.values()), errs
    return _guard("turning_times", 1e-6, run)


def check_cusp_spacing(cfg):
    circle = make_circle()
    R = math.sqrt(2.0)

    def run():
        tr = integrate_rse(circle, R, 0.3, (0.0, 10 * math.pi), cfg)
        ev = detect_singular_times(circle, tr)
        oracle = co.turning_data_large_R(R, 0.3, range(-2, 12))
        tk = np.array([t for t, _ in oracle])
        worst = max(float(np.min(np.abs(tk - e.time))) for e in ev)
        spacing = np.diff([e.time for e in ev])
        worst = max(worst, float(np.max(np.abs(spacing - math.pi * math.sqrt(2)))))
        radii = [abs(math.hypot(*e.location) - (R + 1 if e.branch == "outer" else R - 1)) for e in ev]
        return max(worst, max(radii)), {"events": len(ev)}
    return _guard("cusp_times_large_R", 1e-6, run)


def check_subharmonic(cfg):
    circle = make_circle()
    R = co.subharmonic_distance(2, 1)

    def run():
        rep = count_cusps_per_period(circle, R, 0.0, cfg)
        if not rep.ok:
            return math.inf, rep.to_dict()
        tr = integrate_rse(circle, R, 0.0, (0.0, 8 * math.pi), cfg)
        ts = np.linspace(0.0, 4 * math.pi, 17)
        closure = np.linalg.norm(tr.position_at(ts + 4 * math.pi) - tr.position_at(ts), axis=1)
        gap = np.linalg.norm(tr.position_at(ts + 2 * math.pi) - tr.position_at(ts), axis=1)
        if gap.min() <= 0.1:
            return math.inf, {"two_pi_gap": float(gap.min())}
        return float(closure.max()), {"cusps": rep.count, "two_pi_gap": float(gap.min())}
    return _guard("subharmonic_2_1", 1e-6, run)


def check_subharmonic_root(cfg):
    circle = make_circle()

    def run():
        rep = find_distance_for_rotation(circle, Fraction(1, 2), tol=1e-9, cfg=cfg)
        return abs(rep.estimate - co.subharmonic_distance(2, 1)), {"bracket": list(rep.bracket)}
    return _guard("subharmonic_distance_root", 1e-7, run)


def check_equilibrium_attraction(cfg):
    circle = make_circle()
    R = 0.8
    tp, _ = co.equilibria(R)

    def run():
        tr = integrate_rse(circle, R, tp + 0.1, (0.0, 20 * math.pi), cfg)
        gap = np.linalg.norm(tr.positions - co.sc_position(R, tp, tr.t), axis=1)
        return float(gap[-1]), {"initial_gap": float(gap[0])}
    return _guard("equilibrium_attraction", 1e-6, run)


def check_density(cfg, rng, horizon=500 * math.pi, n_targets=200, radius=0.05):
    circle = make_circle()
    R = 1.5

    def run():
        tr = integrate_rse(circle, R, 0.0, (0.0, horizon), cfg)
        tree = cKDTree(tr.positions)
        rad = np.sqrt(rng.uniform((R - 1) ** 2, (R + 1) ** 2, n_targets))
        ang = rng.uniform(0, TWO_PI, n_targets)
        targets = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
        d, _ = tree.query(targets)
        return float(np.max(d)), {"targets": n_targets, "horizon": horizon}
    return _guard("annulus_density", radius, run)


def run_oracle_battery(n_periods: int = 512, cfg: IntegrationConfig = DEFAULT_CONFIG,
                       seed: int = 20240611, rotation_grid: int = 50) -> dict:
    rng = np.random.default_rng(seed)
    checks = [
        check_theta_oracle(cfg, rng),
        check_rotation_law(cfg, n_periods, rotation_grid),
        check_distance_invariance(cfg, rng),
        check_first_integral(cfg, rng),
        check_three_way(cfg, rng),
        check_turning_times(cfg),
        check_cusp_spacing(cfg),
        check_subharmonic(cfg),
        check_subharmonic_root(cfg),
        check_equilibrium_attraction(cfg),
        check_density(cfg, rng),
    ]
    return {"passed": all(c.passed for c in checks), "n_periods": n_periods, "seed": seed,
            "checks": [c.to_dict() for c in checks]}
