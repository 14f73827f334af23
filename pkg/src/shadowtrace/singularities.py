"""Singular times of shadowing curves.

The shadower stops exactly when its bearing is perpendicular to the
escaper's velocity, i.e. ``cos(theta - psi) = 0``.  At such a time it sits
on one of the two parallel curves at distance R, and the stop is an
ordinary cusp whenever the acceleration does not vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .dynamics import DEFAULT_CONFIG, IntegrationConfig, Trajectory, integrate_rse, se_rhs
from .errors import DegenerateSingularityError, NumericalError
from .geometry import TWO_PI, ClosedCurve, curvature, outer_normal, speed_and_angle
from .rotation import displacement, locate_periodic_orbit, rotation_number

TIME_TOL = 1e-10
ORDINARY_THRESHOLD = 1e-6
FD_STEP = 1e-4
CLUSTER_TOL = 1e-6


@dataclass(frozen=True)
class CuspEvent:
    time: float
    location: tuple[float, float]
    branch: str                     # "outer" (+R parallel curve) or "inner" (-R)
    phi_level: int                  # phi(time) = phi_level * pi
    second_derivative_norm: float | None = None
    second_derivative_fd: float | None = None
    kind: str | None = None         # "ordinary" / "degenerate" once classified

    def to_dict(self):
        return {"t": self.time, "x": self.location[0], "y": self.location[1],
                "branch": self.branch, "d2norm": self.second_derivative_norm,
                "phi_level": self.phi_level}


def _bearing_cos(curve, t, theta):
    """cos(theta - psi) without needing an unwrapped psi."""
    d = curve.derivative(t)
    return (d[..., 0] * np.cos(theta) + d[..., 1] * np.sin(theta)) / np.hypot(d[..., 0], d[..., 1])


def detect_singular_times(curve: ClosedCurve, traj: Trajectory) -> list[CuspEvent]:
    """All sign changes of ``cos(theta - psi)`` along the trajectory, polished to 1e-10."""
    t = traj.t
    if t.size < 2:
        return []
    g = _bearing_cos(curve, t, traj.theta)
    flat = np.abs(g) < 1e-12
    if np.any(flat[:-2] & flat[1:-1] & flat[2:]):
        i = int(np.argmax(flat[:-2] & flat[1:-1] & flat[2:]))
        raise DegenerateSingularityError(
            "staring coefficient vanishes on a whole interval of samples", interval=(t[i], t[i + 2]))

    def gq(tq):
        return float(_bearing_cos(curve, tq, traj.theta_at(tq)))

    roots = []
    for i in np.nonzero(g == 0)[0]:
        roots.append(float(t[i]))
    for i in np.nonzero(g[:-1] * g[1:] < 0)[0]:
        a, b = float(t[i]), float(t[i + 1])
        ga = g[i]
        while b - a > TIME_TOL:
            m = 0.5 * (a + b)
            gm = gq(m)
            if gm == 0:
                a = b = m
                break
            if (gm > 0) == (ga > 0):
                a, ga = m, gm
            else:
                b = m
        roots.append(0.5 * (a + b))
    roots.sort()
    if not roots:
        return []
    times = np.array(roots)
    theta = traj.theta_at(times)
    pos = traj.position_at(times)
    _, psi = speed_and_angle(curve, times)
    phi = theta - psi + math.pi / 2
    e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    side = np.sum(e * outer_normal(curve, times), axis=-1)
    return [CuspEvent(float(tt), (float(p[0]), float(p[1])), "outer" if s > 0 else "inner",
                      int(round(ph / math.pi)))
            for tt, p, s, ph in zip(times, pos, side, phi)]


def cusp_acceleration(curve: ClosedCurve, R: float, t: float, phi_level: int) -> float:
    """``B |-(B/R) cos(phi) - psi'|`` at a singular time."""
    d = curve.derivative(t)
    B = math.hypot(d[0], d[1])
    dpsi = float(curvature(curve, t)) * B
    return B * abs(-(B / R) * (-1) ** (phi_level % 2) - dpsi)


def classify_cusp(curve: ClosedCurve, R: float, event: CuspEvent,
                  cfg: IntegrationConfig = DEFAULT_CONFIG) -> CuspEvent:
    """Attach |r''| at the event (closed form and finite differences) and a kind."""
    t = event.time
    r0 = curve.evaluate(t)
    theta_star = math.atan2(event.location[1] - r0[1], event.location[0] - r0[0])
    local = integrate_rse(curve, R, theta_star, (t - FD_STEP, t + FD_STEP), cfg, t_init=t)
    pm = local.position_at(np.array([t - FD_STEP, t + FD_STEP]))
    v = se_rhs(curve, np.array([t - FD_STEP, t + FD_STEP]), pm)
    fd = float(np.linalg.norm((v[1] - v[0]) / (2 * FD_STEP)))
    an = cusp_acceleration(curve, R, t, event.phi_level)
    if abs(an - fd) > 1e-4 * max(an, fd, 1e-3):
        raise NumericalError(
            f"cusp acceleration mismatch at t={t:.12g}: closed form {an:.9g}, finite difference {fd:.9g}")
    kind = "ordinary" if an > ORDINARY_THRESHOLD else "degenerate"
    return replace(event, second_derivative_norm=an, second_derivative_fd=fd, kind=kind)


@dataclass
class CuspCountReport:
    status: str                     # "asserted", "hypothesis boundary", "declined" or "unresolved"
    regime: str                     # "small", "large" or "between"
    R: float
    theta0: float
    count: int | None = None
    outer: int | None = None
    inner: int | None = None
    rotation: str | None = None     # exact rational rotation number, if found
    q: int | None = None
    period: float | None = None
    expected: int | None = None
    events: list = field(default_factory=list)
    message: str = ""

    @property
    def ok(self) -> bool:
        if self.status != "asserted":
            return False
        if self.regime == "small":
            return self.count <= 1
        return self.count == self.expected and self.outer == self.inner == self.q

    def to_dict(self):
        d = {k: getattr(self, k) for k in ("status", "regime", "R", "theta0", "count", "outer",
                                           "inner", "rotation", "q", "period", "expected", "message")}
        d["ok"] = self.ok
        d["events"] = [e.to_dict() for e in self.events]
        return d


def distinct_cusps(events):
    kept = []
    for e in events:
        if all(math.dist(e.location, k.location) > CLUSTER_TOL for k in kept):
            kept.append(e)
    return kept


def _rational_rotation(curve, R, cfg, n_periods, max_den):
    est = rotation_number(curve, R, n_periods, cfg).value
    cands = sorted({Fraction(est).limit_denominator(d) for d in range(1, max_den + 1)},
                   key=lambda f: f.denominator)
    th = np.linspace(0.0, TWO_PI, 64, endpoint=False)
    for f in cands:
        if abs(float(f) - est) > 1.0 / n_periods:
            continue
        D = displacement(curve, R, th, f.denominator, f.numerator, cfg)
        if D.min() <= 1e-8 and D.max() >= -1e-8:
            return f
    return None


def count_cusps_per_period(curve: ClosedCurve, R: float, theta0: float = 0.0,
                           cfg: IntegrationConfig = DEFAULT_CONFIG, n_periods: int = 1024,
                           max_denominator: int = 64, small_span: float = 20 * math.pi) -> CuspCountReport:
    """Count turning points against the convex-curve theorem.

    Below the smallest radius of curvature a whole trajectory (over
    ``[-small_span, small_span]``) has at most one cusp.  Above the largest,
    when ``rho = w0 - q/p``, a periodic SC has exactly 2q distinct cusps per
    minimal period ``2 p pi``, q on each parallel curve.
    """
    m = curve.metrics
    if not m.convex or abs(m.rotation_index) != 1:
        return CuspCountReport("declined", "between", R, theta0,
                               message="curve is not strictly convex; the counting theorem does not apply")
    for edge in (m.r_min, m.r_max):
        if abs(R - edge) <= 1e-9 * edge:
            return CuspCountReport("hypothesis boundary", "between", R, theta0,
                                   message=f"R equals a curvature radius extreme ({edge:.12g})")
    if m.r_min < R < m.r_max:
        return CuspCountReport("declined", "between", R, theta0,
                               message="R lies between the curvature radius extremes")
    if R < m.r_min:
        traj = integrate_rse(curve, R, theta0, (-small_span, small_span), cfg, t_init=0.0)
        ev = [classify_cusp(curve, R, e, cfg) for e in detect_singular_times(curve, traj)]
        return CuspCountReport("asserted", "small", R, theta0, count=len(ev),
                               outer=sum(e.branch == "outer" for e in ev),
                               inner=sum(e.branch == "inner" for e in ev), events=ev, expected=1)

    w0 = m.rotation_index
    rho = _rational_rotation(curve, R, cfg, n_periods, max_denominator)
    if rho is None:
        return CuspCountReport("unresolved", "large", R, theta0,
                               message=f"no rational rotation number with denominator <= {max_denominator}")
    p = rho.denominator
    q = w0 * p - rho.numerator
    T = TWO_PI * p
    D0 = float(displacement(curve, R, np.array([theta0]), p, rho.numerator, cfg)[0])
    start = theta0 if abs(D0) < 1e-7 else locate_periodic_orbit(curve, R, rho, cfg=cfg)
    traj = integrate_rse(curve, R, start, (0.0, T), cfg)
    ev = [e for e in detect_singular_times(curve, traj) if e.time < T - 1e-9]
    ev = distinct_cusps([classify_cusp(curve, R, e, cfg) for e in ev])
    return CuspCountReport("asserted", "large", R, start, count=len(ev),
                           outer=sum(e.branch == "outer" for e in ev),
                           inner=sum(e.branch == "inner" for e in ev), rotation=str(rho), q=q,
                           period=T, expected=2 * q, events=ev,
                           message="" if start == theta0 else "traced the periodic orbit found from the displacement")
