"""Shadowing ODEs: direct (SE), extended linear (ESE) and reduced (RSE).

The reduced equation for the bearing angle ``theta`` of the shadower seen
from the escaper,

    theta' = -(1/R) (-xi'(t) sin(theta) + eta'(t) cos(theta)),

is the workhorse.  Positions follow from ``r = r0 + R (cos theta, sin theta)``
so the shadowing distance is preserved exactly by construction.  ``theta``
is always kept as a continuous lift and never reduced modulo 2 pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp

from . import _kernels
from .errors import NumericalError, ValidationError
from .geometry import TWO_PI, ClosedCurve, speed_and_angle

# Field used by the direct SE integrator.  Kept as a module attribute so a
# different compiled field can be swapped in (fault-injection tests).
SE_FIELD = _kernels.se_field


@dataclass(frozen=True)
class IntegrationConfig:
    """Numerical settings shared by all integrators.

    ``method`` is ``"rk4"`` (fixed step, bit-reproducible) or ``"rk45"``
    (adaptive Dormand-Prince via scipy).
    """

    method: str = "rk4"
    steps_per_period: int = 4096
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_step: float = math.inf

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValidationError(f"unknown integration method {self.method!r}")
        if int(self.steps_per_period) != self.steps_per_period or self.steps_per_period < 64:
            raise ValidationError("steps_per_period must be an integer >= 64")
        for name in ("abs_tol", "rel_tol"):
            v = getattr(self, name)
            if not 0 < v <= 1e-3:
                raise ValidationError(f"{name} must lie in (0, 1e-3], got {v!r}")
        if not self.max_step > 0:
            raise ValidationError("max_step must be positive")


DEFAULT_CONFIG = IntegrationConfig()


def _check_R(R):
    if not (isinstance(R, (int, float, np.floating)) and math.isfinite(R) and R > 0):
        raise ValidationError(f"shadowing distance must be a positive number, got {R!r}")
    return float(R)


def _plan(t_start, t_end, steps_per_period):
    span = t_end - t_start
    if span == 0:
        return 0, 0.0
    n = max(1, math.ceil(abs(span) / TWO_PI * steps_per_period - 1e-9))
    return n, span / n


def _nodes(t_start, h, n):
    """RK4 stage nodes; one period's worth when the step divides 2 pi."""
    per = round(TWO_PI / abs(h))
    if n > per and abs(per * abs(h) - TWO_PI) < 1e-9:
        return t_start + np.arange(2 * per) * (0.5 * h)
    return t_start + np.arange(2 * n + 1) * (0.5 * h)


def _ivp(fun, t0, t1, y0, cfg):
    sol = solve_ivp(fun, (t0, t1), y0, method="RK45", rtol=cfg.rel_tol,
                    atol=cfg.abs_tol, max_step=cfg.max_step)
    if sol.status != 0:
        raise NumericalError(f"adaptive integration failed at t={sol.t[-1]:.6g}: {sol.message}")
    return sol.t, sol.y


# RSE ------------------------------------------------------------------------

def rse_rhs(curve: ClosedCurve, R: float, t, theta):
    """Right-hand side of the reduced shadowing equation."""
    R = _check_R(R)
    return -(-curve.x(t, 1) * np.sin(theta) + curve.y(t, 1) * np.cos(theta)) / R


def _rse_segment(curve, R, theta0, t0, t1, cfg, stride):
    """Samples (t, theta) from t0 to t1 (either direction)."""
    if t1 == t0:
        return np.array([t0]), np.array([theta0])
    if cfg.method == "rk45":
        ts, ys = _ivp(lambda t, th: rse_rhs(curve, R, t, th), t0, t1, [theta0], cfg)
        return ts, ys[0]
    n, h = _plan(t0, t1, cfg.steps_per_period)
    nodes = _nodes(t0, h, n)
    dx, dy = curve.x(nodes, 1), curve.y(nodes, 1)
    m = n // stride
    out = np.empty(m + 1)
    last = _kernels.rse_rk4(float(theta0), n, h, dx, dy, 1.0 / R, stride, out)
    ts = t0 + np.arange(m + 1) * (stride * h)
    if n % stride:
        ts = np.append(ts, t1)
        out = np.append(out, last)
    else:
        ts[-1] = t1
    return ts, out


def _theta_end(curve, R, theta0, t0, t1, cfg):
    n, h = _plan(t0, t1, cfg.steps_per_period)
    if n == 0:
        return np.asarray(theta0, dtype=float).copy()
    if cfg.method == "rk45":
        th = np.atleast_1d(np.asarray(theta0, dtype=float))
        res = np.array([_ivp(lambda t, y: rse_rhs(curve, R, t, y), t0, t1, [v], cfg)[1][0, -1]
                        for v in th])
        return res.reshape(np.shape(theta0))
    nodes = _nodes(t0, h, n)
    dx, dy = curve.x(nodes, 1), curve.y(nodes, 1)
    th = np.atleast_1d(np.asarray(theta0, dtype=float))
    res = _kernels.rse_rk4_batch(np.ascontiguousarray(th), n, h, dx, dy, 1.0 / R)
    return res.reshape(np.shape(theta0))


@dataclass(eq=False)
class Trajectory:
    """Samples of the lifted bearing angle along one shadowing curve.

    ``t`` is increasing; ``theta(t_init) == theta0``.
    """

    curve: ClosedCurve
    R: float
    theta0: float
    t: np.ndarray
    theta: np.ndarray
    t_init: float = 0.0
    meta: dict = field(default_factory=dict)

    @cached_property
    def positions(self) -> np.ndarray:
        return reconstruct_positions(self.curve, self.R, self.t, self.theta)

    @cached_property
    def alpha(self) -> np.ndarray:
        return alpha(self.curve, self.R, self.t, self.theta)

    @cached_property
    def dtheta(self) -> np.ndarray:
        return rse_rhs(self.curve, self.R, self.t, self.theta)

    def theta_at(self, tq):
        """Cubic Hermite interpolation of theta between samples."""
        tq = np.asarray(tq, dtype=float)
        t, th, dth = self.t, self.theta, self.dtheta
        if t.size == 1:
            return np.full_like(tq, th[0])
        if np.any(tq < t[0] - 1e-12) or np.any(tq > t[-1] + 1e-12):
            raise ValidationError("interpolation time outside trajectory span")
        i = np.clip(np.searchsorted(t, tq, side="right") - 1, 0, t.size - 2)
        h = t[i + 1] - t[i]
        s = (tq - t[i]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * th[i] + h10 * h * dth[i] + h01 * th[i + 1] + h11 * h * dth[i + 1]

    def position_at(self, tq):
        return reconstruct_positions(self.curve, self.R, tq, self.theta_at(tq))

    def distance_error(self) -> float:
        """max | |r - r0| - R | over the samples."""
        d = np.linalg.norm(self.positions - self.curve.evaluate(self.t), axis=-1)
        return float(np.max(np.abs(d - self.R)))

    def rows(self):
        """(t, theta, x, y, alpha) per sample, for the trajectory CSV."""
        p = self.positions
        return zip(self.t, self.theta, p[:, 0], p[:, 1], self.alpha)


def reconstruct_positions(curve: ClosedCurve, R: float, t, theta):
    """Moving polar coordinates: ``r0(t) + R (cos theta, sin theta)``."""
    theta = np.asarray(theta, dtype=float)
    e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    return curve.evaluate(t) + R * e


def integrate_rse(curve: ClosedCurve, R: float, theta0: float, t_span=(0.0, TWO_PI),
                  cfg: IntegrationConfig = DEFAULT_CONFIG, t_init: float | None = None,
                  stride: int = 1) -> Trajectory:
    """Integrate the reduced equation over ``t_span`` with ``theta(t_init) = theta0``.

    ``t_init`` defaults to ``t_span[0]``; when it lies strictly inside the
    span the solution is integrated both forwards and backwards.  ``stride``
    thins the stored samples (fixed-step method only).
    """
    R = _check_R(R)
    a, b = (float(v) for v in t_span)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValidationError("t_span must be finite")
    if t_init is None:
        t_init = a
    lo, hi = min(a, b), max(a, b)
    if not lo <= t_init <= hi:
        raise ValidationError("t_init must lie inside t_span")
    if stride < 1:
        raise ValidationError("stride must be >= 1")
    tf, thf = _rse_segment(curve, R, theta0, t_init, hi, cfg, stride)
    tb, thb = _rse_segment(curve, R, theta0, t_init, lo, cfg, stride)
    t = np.concatenate([tb[::-1], tf[1:]])
    th = np.concatenate([thb[::-1], thf[1:]])
    traj = Trajectory(curve, R, float(theta0), t, th, float(t_init))
    traj.meta.update(method=cfg.method, steps_per_period=cfg.steps_per_period)
    return traj


def poincare_map(curve: ClosedCurve, R: float, theta0, cfg: IntegrationConfig = DEFAULT_CONFIG,
                 periods: int = 1):
    """Lifted time-2*pi map (iterated ``periods`` times); vectorised over theta0."""
    R = _check_R(R)
    return _theta_end(curve, R, theta0, 0.0, TWO_PI * periods, cfg)


# direct SE --------------------------------------------------------------------

def se_rhs(curve: ClosedCurve, t, r):
    """Vector field of the shadowing equation at time ``t``, position ``r``."""
    u = np.asarray(r, dtype=float) - curve.evaluate(t)
    dp = curve.derivative(t)
    return (np.sum(dp * u, axis=-1) / np.sum(u * u, axis=-1))[..., None] * u


@dataclass(eq=False)
class SeTrajectory:
    curve: ClosedCurve
    R: float
    t: np.ndarray
    positions: np.ndarray

    def distance_error(self) -> float:
        d = np.linalg.norm(self.positions - self.curve.evaluate(self.t), axis=-1)
        return float(np.max(np.abs(d - self.R)))


def integrate_se_direct(curve: ClosedCurve, r_init, t_span=(0.0, TWO_PI),
                        cfg: IntegrationConfig = DEFAULT_CONFIG) -> SeTrajectory:
    """Integrate the planar shadowing equation from ``r(t_span[0]) = r_init``.

    The field is singular at the escaper; the run aborts if the distance
    ever falls below half its initial value.
    """
    t0, t1 = (float(v) for v in t_span)
    r_init = np.asarray(r_init, dtype=float)
    R = float(np.linalg.norm(r_init - curve.evaluate(t0)))
    if not R > 1e-12 * max(1.0, float(np.linalg.norm(r_init))):
        raise ValidationError("initial shadower position coincides with the escaper")
    if t1 == t0:
        return SeTrajectory(curve, R, np.array([t0]), r_init[None, :].copy())
    if cfg.method == "rk45":
        ts, ys = _ivp(lambda t, r: se_rhs(curve, t, r), t0, t1, r_init, cfg)
        traj = SeTrajectory(curve, R, ts, ys.T.copy())
        d = np.linalg.norm(traj.positions - curve.evaluate(ts), axis=-1)
        if np.any(d < R / 2):
            raise NumericalError("direct SE integration collapsed onto the escaper")
        return traj
    n, h = _plan(t0, t1, cfg.steps_per_period)
    nodes = _nodes(t0, h, n)
    p = curve.evaluate(nodes)
    dp = curve.derivative(nodes)
    out = np.empty((n + 1, 2))
    status = _kernels.se_rk4(r_init[0], r_init[1], n, h,
                             np.ascontiguousarray(p[:, 0]), np.ascontiguousarray(p[:, 1]),
                             np.ascontiguousarray(dp[:, 0]), np.ascontiguousarray(dp[:, 1]),
                             R / 2, SE_FIELD, out)
    if status >= 0:
        raise NumericalError(
            f"direct SE integration collapsed onto the escaper at t={t0 + status * h:.6g}")
    ts = t0 + np.arange(n + 1) * h
    ts[-1] = t1
    if h < 0:
        ts, out = ts[::-1], out[::-1]
    return SeTrajectory(curve, R, ts, out)


# ESE ------------------------------------------------------------------------

@dataclass(eq=False)
class EseTrajectory:
    """Solution of the extended linear system started on the unit cone.

    The state is stored rescaled (``y`` kept O(1)); the true solution is
    ``exp(log_scale) * (x, y)``.
    """

    curve: ClosedCurve
    R: float
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    log_scale: np.ndarray

    @cached_property
    def positions(self) -> np.ndarray:
        """``r0 + R x / y``."""
        return self.curve.evaluate(self.t) + self.R * self.x / self.y[:, None]

    def first_integral(self) -> np.ndarray:
        """``y^2 - |x|^2`` of the stored (rescaled) state."""
        return self.y ** 2 - np.sum(self.x ** 2, axis=1)


def integrate_ese(curve: ClosedCurve, R: float, theta0: float, t_span=(0.0, TWO_PI),
                  cfg: IntegrationConfig = DEFAULT_CONFIG) -> EseTrajectory:
    """Integrate the extended system from ``x = (cos theta0, sin theta0), y = 1``."""
    R = _check_R(R)
    t0, t1 = (float(v) for v in t_span)
    x0 = np.array([math.cos(theta0), math.sin(theta0)])
    if t1 == t0:
        return EseTrajectory(curve, R, np.array([t0]), x0[None, :], np.ones(1), np.zeros(1))
    if cfg.method == "rk45":
        def fun(t, s):
            dp = curve.derivative(t)
            return np.array([-dp[0] * s[2] / R, -dp[1] * s[2] / R, -(dp @ s[:2]) / R])
        ts, ys = _ivp(fun, t0, t1, np.array([x0[0], x0[1], 1.0]), cfg)
        if np.any(ys[2] <= 0):
            raise NumericalError("ESE component y became non-positive")
        return EseTrajectory(curve, R, ts, ys[:2].T.copy(), ys[2].copy(), np.zeros(ts.size))
    n, h = _plan(t0, t1, cfg.steps_per_period)
    nodes = _nodes(t0, h, n)
    out = np.empty((n + 1, 4))
    status = _kernels.ese_rk4(x0[0], x0[1], 1.0, n, h, curve.x(nodes, 1), curve.y(nodes, 1),
                              1.0 / R, out)
    if status >= 0:
        raise NumericalError(f"ESE component y became non-positive at t={t0 + status * h:.6g}")
    ts = t0 + np.arange(n + 1) * h
    ts[-1] = t1
    if h < 0:
        ts, out = ts[::-1], out[::-1]
    return EseTrajectory(curve, R, ts, out[:, :2].copy(), out[:, 2].copy(), out[:, 3].copy())


# derived quantities -------------------------------------------------------------

def alpha(curve: ClosedCurve, R: float, t, theta):
    """Staring coefficient with ``r' = alpha (r0 - r)``.

    Projection form ``r0' . (r0 - r) / |r0 - r|^2``; positive when the
    shadower moves towards the escaper.
    """
    R = _check_R(R)
    theta = np.asarray(theta, dtype=float)
    u = -R * np.stack([np.cos(theta), np.sin(theta)], axis=-1)   # r0 - r
    dp = curve.derivative(t)
    return np.sum(dp * u, axis=-1) / np.sum(u * u, axis=-1)


def alpha_polar(curve: ClosedCurve, R: float, t, theta):
    """Same coefficient written as ``-(B/R) cos(theta - psi)``."""
    dp = curve.derivative(t)
    B = np.hypot(dp[..., 0], dp[..., 1])
    psi = np.arctan2(dp[..., 1], dp[..., 0])
    return -(B / R) * np.cos(np.asarray(theta) - psi)


def phi_lift(curve: ClosedCurve, traj: Trajectory) -> np.ndarray:
    """``phi = theta - psi + pi/2`` along a trajectory.

    Satisfies ``phi' = -(B/R) cos(phi) - psi'``; singular times are exactly
    those with ``phi`` in pi*Z.
    """
    if traj.curve != curve:
        raise ValidationError("trajectory was integrated on a different curve")
    _, psi = speed_and_angle(curve, traj.t)
    return traj.theta - psi + math.pi / 2
