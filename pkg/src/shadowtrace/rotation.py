"""Rotation numbers of the reduced equation and the distances derived from them.

``rho(R)`` is estimated from the lifted time-2*pi map as
``(P^n(theta0) - theta0) / (2 pi n)``.  For a circle homeomorphism the orbit
never drifts more than one turn from its mean rotation, so ``1/n`` is an
honest error bound.

Rational values ``m/p`` are decided exactly (up to integration error) by the
sign of the displacement ``P^p(theta) - theta - 2 pi m`` over a grid of
initial angles: it is negative everywhere iff ``rho < m/p``, positive
everywhere iff ``rho > m/p``, and changes sign iff a periodic orbit exists.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .dynamics import DEFAULT_CONFIG, IntegrationConfig, _check_R, poincare_map
from .errors import BracketError, HypothesisError, NumericalError, ShadowError, ValidationError
from .geometry import TWO_PI, ClosedCurve

DEFAULT_PERIODS = 512
# cheap settings for very large R, where theta turns slowly
ASYMPTOTIC_PERIODS = 20000
ASYMPTOTIC_CONFIG = IntegrationConfig(steps_per_period=512)


@dataclass(frozen=True)
class RotationEstimate:
    value: float
    error_bound: float
    periods_used: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class DistanceReport:
    kind: str                          # "critical", "turning" or "target-rotation"
    estimate: float
    bracket: tuple[float, float]
    rho_at_estimate: float
    diagnostics: tuple = ()            # (R, rho) pairs evaluated along the way
    heuristic: bool = False
    notes: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "kind": self.kind,
            "estimate": self.estimate,
            "bracket": list(self.bracket),
            "rho_at_estimate": self.rho_at_estimate,
            "diagnostics": [list(p) for p in self.diagnostics],
            "heuristic": self.heuristic,
            "notes": self.notes,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def rotation_number(curve: ClosedCurve, R: float, n_periods: int = DEFAULT_PERIODS,
                    cfg: IntegrationConfig = DEFAULT_CONFIG, theta0: float = 0.0) -> RotationEstimate:
    R = _check_R(R)
    if int(n_periods) != n_periods or n_periods < 16:
        raise ValidationError("n_periods must be an integer >= 16")
    n = int(n_periods)
    end = float(poincare_map(curve, R, float(theta0), cfg, periods=n))
    if not math.isfinite(end):
        raise NumericalError(f"non-finite lift after {n} periods at R={R}")
    return RotationEstimate((end - theta0) / (TWO_PI * n), 1.0 / n, n)


@dataclass(frozen=True)
class SweepPoint:
    R: float
    estimate: RotationEstimate | None
    error: str | None = None

    @property
    def rho(self) -> float:
        return self.estimate.value if self.estimate else math.nan


def _workers(max_workers):
    if max_workers is not None:
        return max(1, int(max_workers))
    env = os.environ.get("SHADOWTRACE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"SHADOWTRACE_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def rotation_sweep(curve: ClosedCurve, R_grid, cfg: IntegrationConfig = DEFAULT_CONFIG,
                   n_periods: int = DEFAULT_PERIODS, max_workers: int | None = None) -> list[SweepPoint]:
    """One rotation number per grid value; failures are recorded, not raised."""
    grid = [float(r) for r in R_grid]
    if any(not (math.isfinite(r) and r > 0) for r in grid):
        raise ValidationError("sweep grid must be positive and finite")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValidationError("sweep grid must be sorted")

    def one(R):
        try:
            return SweepPoint(R, rotation_number(curve, R, n_periods, cfg))
        except ShadowError as exc:
            return SweepPoint(R, None, f"{type(exc).__name__}: {exc}")

    workers = min(_workers(max_workers), max(1, len(grid)))
    if workers == 1:
        return [one(R) for R in grid]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(one, grid))


@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    value: float
    bound: float
    slack: float


def check_upper_bound(curve: ClosedCurve, estimate: RotationEstimate, R: float) -> BoundCheck:
    """|rho(R)| <= perimeter / (2 pi R), allowing the estimate's error bound."""
    R = _check_R(R)
    bound = curve.metrics.perimeter / (TWO_PI * R)
    slack = bound + estimate.error_bound - abs(estimate.value)
    return BoundCheck(slack >= 0, estimate.value, bound, slack)


def _require_area(curve):
    m = curve.metrics
    if abs(m.signed_area) <= 1e-9 * m.perimeter ** 2:
        raise HypothesisError("enclosed algebraic area vanishes; the large-distance law does not apply")
    return m


def asymptotic_area_ratio(curve: ClosedCurve, R_list, n_periods: int = ASYMPTOTIC_PERIODS,
                          cfg: IntegrationConfig = ASYMPTOTIC_CONFIG) -> list[float]:
    """``rho(R) * 2 pi R^2 / A0`` for large R; tends to 1."""
    m = _require_area(curve)
    out = []
    for R in R_list:
        R = _check_R(R)
        if m.r_max != math.inf and R < 10 * m.r_max:
            raise ValidationError(f"R={R} is not large: need R >= 10 * r_max = {10 * m.r_max:.6g}")
        est = rotation_number(curve, R, n_periods, cfg)
        out.append(est.value * TWO_PI * R * R / m.signed_area)
    return out


def guaranteed_plateau_radius(curve: ClosedCurve) -> float:
    """Smallest radius of curvature; below it rho equals the rotation index."""
    return curve.metrics.r_min


# rational targets ----------------------------------------------------------------

def displacement(curve: ClosedCurve, R: float, thetas, periods: int, turns: int,
                 cfg: IntegrationConfig = DEFAULT_CONFIG):
    """``P^periods(theta) - theta - 2 pi turns`` (vectorised)."""
    thetas = np.asarray(thetas, dtype=float)
    return poincare_map(curve, R, thetas, cfg, periods=periods) - thetas - TWO_PI * turns


def compare_rational(curve: ClosedCurve, R: float, target: Fraction, n_theta: int = 64,
                     cfg: IntegrationConfig = DEFAULT_CONFIG) -> int:
    """Sign of ``rho(R) - target``; 0 when a periodic orbit of that type exists."""
    th = np.linspace(0.0, TWO_PI, n_theta, endpoint=False)
    D = displacement(curve, R, th, target.denominator, target.numerator, cfg)
    if np.all(D > 0):
        return 1
    if np.all(D < 0):
        return -1
    return 0


def locate_periodic_orbit(curve: ClosedCurve, R: float, target: Fraction, n_theta: int = 64,
                          cfg: IntegrationConfig = DEFAULT_CONFIG) -> float:
    """Initial angle of a periodic orbit with rotation number ``target``.

    Uses a sign change of the displacement when there is one, otherwise the
    grid point of smallest |displacement| (the whole circle is periodic for
    an exactly resonant rotation).
    """
    p, m = target.denominator, target.numerator
    th = np.linspace(0.0, TWO_PI, n_theta + 1)
    D = displacement(curve, R, th, p, m, cfg)
    for i in range(n_theta):
        if D[i] == 0:
            return float(th[i])
        if D[i] * D[i + 1] < 0:
            f = lambda x: float(displacement(curve, R, np.array([x]), p, m, cfg)[0])
            return float(brentq(f, th[i], th[i + 1], xtol=1e-13, rtol=4e-16))
    return float(th[int(np.argmin(np.abs(D)))])


# distances ---------------------------------------------------------------------

def critical_distance(curve: ClosedCurve, tol: float = 1e-3, cfg: IntegrationConfig = DEFAULT_CONFIG,
                      n_periods: int = DEFAULT_PERIODS) -> DistanceReport:
    """Largest R up to which rho stays at the rotation index."""
    if not tol > 0:
        raise ValidationError("tol must be positive")
    m = curve.metrics
    if m.rotation_index == 0:
        raise HypothesisError("rotation index is zero; there is no plateau to leave")
    w0 = m.rotation_index
    eps = 3.0 / n_periods
    diag = []

    def rho(R):
        v = rotation_number(curve, R, n_periods, cfg).value
        diag.append((R, v))
        return v

    lo = guaranteed_plateau_radius(curve)
    if abs(rho(lo) - w0) > eps:
        raise NumericalError(f"rho at the minimal curvature radius {lo:.6g} is off the plateau")
    hi = lo
    while True:
        hi = hi * 1.05
        if hi > 10 * m.mu:
            raise NumericalError("rho never left the plateau below 10 * mu; scan range too short")
        if abs(rho(hi) - w0) > eps:
            break
        lo = hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if abs(rho(mid) - w0) > eps:
            hi = mid
        else:
            lo = mid
    est = 0.5 * (lo + hi)
    upper = m.mu / abs(w0)
    return DistanceReport("critical", est, (lo, hi), rho(est), tuple(sorted(diag)),
                          notes={"upper_bound": upper, "rotation_index": w0,
                                 "plateau_threshold": eps, "n_periods": n_periods})


def turning_distance(curve: ClosedCurve, tol: float = 1e-3, cfg: IntegrationConfig = DEFAULT_CONFIG,
                     n_periods: int = DEFAULT_PERIODS, critical: DistanceReport | None = None,
                     ratio: float = 1.1) -> DistanceReport:
    """Onset of the monotone tail of rho (heuristic: checked up to 20 mu)."""
    m = curve.metrics
    _require_area(curve)
    if m.rotation_index == 0:
        raise HypothesisError("rotation index is zero")
    w0 = m.rotation_index
    sgn = 1.0 if w0 > 0 else -1.0
    eb = 1.0 / n_periods
    if critical is None:
        critical = critical_distance(curve, tol, cfg, n_periods)
    start = critical.estimate
    n_grid = max(2, math.ceil(math.log(20 * m.mu / start) / math.log(ratio)) + 1)
    grid = list(start * np.geomspace(1.0, 20 * m.mu / start, n_grid))
    diag = []

    def rhos(Rs):
        vals = [p.rho for p in rotation_sweep(curve, Rs, cfg, n_periods)]
        diag.extend(zip(Rs, vals))
        return vals

    def last_bad(Rs, vals):
        bad = -1
        for i, v in enumerate(vals):
            if not math.isfinite(v) or abs(v - w0) <= 3 * eb:
                bad = i
            if i + 1 < len(vals) and sgn * (vals[i + 1] - v) > 2 * eb:
                bad = i
        return bad

    vals = rhos(grid)
    i = last_bad(grid, vals)
    if i < 0:
        return DistanceReport("turning", critical.estimate, critical.bracket, critical.rho_at_estimate,
                              tuple(sorted(diag)), heuristic=True,
                              notes={"checked_up_to": grid[-1], "reason": "monotone from critical"})
    lo, hi = grid[i], grid[min(i + 1, len(grid) - 1)]
    # local refinement: resample the offending cell with spacing tol
    while hi - lo > tol:
        k = min(64, math.ceil((hi - lo) / tol) + 1)
        sub = list(np.linspace(lo, hi, k + 1))
        svals = rhos(sub)
        j = last_bad(sub, svals)
        if j < 0:
            break
        if j + 1 >= len(sub):
            lo = hi
            break
        lo, hi = sub[j], sub[j + 1]
    rho_hi = rotation_number(curve, hi, n_periods, cfg).value
    return DistanceReport("turning", hi, (lo, hi), rho_hi, tuple(sorted(diag)), heuristic=True,
                          notes={"checked_up_to": grid[-1], "reason": "plateau or non-monotone point"})


def find_distance_for_rotation(curve: ClosedCurve, target, bracket=None, tol: float = 1e-6,
                               cfg: IntegrationConfig = DEFAULT_CONFIG,
                               n_periods: int = DEFAULT_PERIODS) -> DistanceReport:
    """A shadowing distance with rotation number ``target``.

    ``target`` may be a ``Fraction`` (decided through periodic orbits, exact
    up to integration error) or a float (decided through the ``n_periods``
    estimate).  Bisection converges to the smallest R in the bracket beyond
    which rho no longer exceeds the target; for a mode-locked target that is
    the left edge of the locking interval.
    """
    m = curve.metrics
    w0 = m.rotation_index
    if w0 == 0:
        raise HypothesisError("rotation index is zero")
    sgn = 1 if w0 > 0 else -1
    exact = isinstance(target, Fraction)
    tv = float(target)
    if not 0 < sgn * tv < abs(w0):
        raise ValidationError(f"target rotation {target} must lie strictly between 0 and {w0}")
    diag = []

    def beyond(R):
        """True while rho(R) is still strictly on the plateau side of the target."""
        if exact:
            return sgn * compare_rational(curve, R, target, cfg=cfg) > 0
        v = rotation_number(curve, R, n_periods, cfg).value
        diag.append((R, v))
        return sgn * (v - tv) > 0

    if bracket is None:
        lo = guaranteed_plateau_radius(curve)
        if not beyond(lo):
            raise BracketError("rho at the minimal curvature radius is already past the target")
        hi = lo * 1.25
        while beyond(hi):
            lo, hi = hi, hi * 1.25
            if hi > 100 * m.mu:
                raise BracketError("target rotation not reached below 100 * mu")
    else:
        lo, hi = (float(v) for v in bracket)
        if not 0 < lo < hi:
            raise ValidationError("bracket must satisfy 0 < low < high")
        if not beyond(lo) or beyond(hi):
            raise BracketError(f"target {target} is not bracketed by [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if beyond(mid):
            lo = mid
        else:
            hi = mid
    est = 0.5 * (lo + hi)
    rho_est = rotation_number(curve, est, n_periods, cfg).value
    return DistanceReport("target-rotation", est, (lo, hi), rho_est, tuple(sorted(diag)),
                          notes={"target": str(target), "exact_rational": exact,
                                 "n_periods": n_periods})
