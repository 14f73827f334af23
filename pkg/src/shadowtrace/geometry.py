"""Closed planar curves as truncated Fourier series and their invariants.

A curve is a 2*pi-periodic map ``t -> (xi(t), eta(t))`` where each
coordinate is ``a0 + sum_k a_k cos(k t) + b_k sin(k t)``.  Derivatives are
taken term by term, so periodicity and differentiation are exact.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import NumericalError, RegularityError, ValidationError

TWO_PI = 2.0 * math.pi

#: grid used for regularity checks and curvature extrema
DENSE_GRID = 4096

_CHUNK = 1 << 16


@dataclass(frozen=True)
class FourierSeries:
    """Real trigonometric polynomial ``a0 + sum a_k cos kt + b_k sin kt``."""

    a0: float
    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        b = tuple(float(v) for v in self.b)
        n = max(len(a), len(b))
        a += (0.0,) * (n - len(a))
        b += (0.0,) * (n - len(b))
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if not all(map(math.isfinite, (self.a0,) + a + b)):
            raise ValidationError("Fourier coefficients must be finite")

    @property
    def degree(self) -> int:
        return len(self.a)

    def is_zero(self) -> bool:
        return self.a0 == 0.0 and not any(self.a) and not any(self.b)

    def __call__(self, t, order: int = 0):
        """Evaluate the ``order``-th derivative at ``t`` (scalar or array)."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        flat = t.reshape(-1)
        out = np.empty_like(flat)
        for start in range(0, flat.size, _CHUNK):
            out[start:start + _CHUNK] = self._eval(flat[start:start + _CHUNK], order)
        out = out.reshape(t.shape)
        return float(out) if scalar else out

    def _eval(self, t, order):
        acc = np.full_like(t, self.a0 if order == 0 else 0.0)
        # d^n/dt^n of cos/sin cycles through (cos, -sin, -cos, sin)
        for k, (ak, bk) in enumerate(zip(self.a, self.b), start=1):
            if ak == 0.0 and bk == 0.0:
                continue
            kt = k * t
            c, s = np.cos(kt), np.sin(kt)
            scale = float(k) ** order
            phase = order % 4
            if phase == 0:
                acc += scale * (ak * c + bk * s)
            elif phase == 1:
                acc += scale * (-ak * s + bk * c)
            elif phase == 2:
                acc -= scale * (ak * c + bk * s)
            else:
                acc += scale * (ak * s - bk * c)
        return acc

    def time_shifted(self, beta: float) -> "FourierSeries":
        """Series of ``t -> f(t + beta)``."""
        a, b = [], []
        for k, (ak, bk) in enumerate(zip(self.a, self.b), start=1):
            c, s = math.cos(k * beta), math.sin(k * beta)
            a.append(ak * c + bk * s)
            b.append(bk * c - ak * s)
        return FourierSeries(self.a0, tuple(a), tuple(b))

    def to_dict(self) -> dict:
        return {"a0": self.a0, "a": list(self.a), "b": list(self.b)}

    @classmethod
    def from_dict(cls, d) -> "FourierSeries":
        if not isinstance(d, dict):
            raise ValidationError("Fourier coordinate must be an object with a0/a/b")
        unknown = set(d) - {"a0", "a", "b"}
        if unknown:
            raise ValidationError(f"unknown Fourier keys: {sorted(unknown)}")
        try:
            return cls(float(d.get("a0", 0.0)), tuple(d.get("a", ())), tuple(d.get("b", ())))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad Fourier coefficients: {exc}") from None


def _combine(alpha: float, f: FourierSeries, beta: float, g: FourierSeries) -> FourierSeries:
    n = max(f.degree, g.degree)
    fa = f.a + (0.0,) * (n - f.degree)
    fb = f.b + (0.0,) * (n - f.degree)
    ga = g.a + (0.0,) * (n - g.degree)
    gb = g.b + (0.0,) * (n - g.degree)
    return FourierSeries(
        alpha * f.a0 + beta * g.a0,
        tuple(alpha * p + beta * q for p, q in zip(fa, ga)),
        tuple(alpha * p + beta * q for p, q in zip(fb, gb)),
    )


@dataclass(frozen=True)
class ClosedCurve:
    """Regular 2*pi-periodic planar curve ``r0(t) = (xi(t), eta(t))``.

    Construction validates regularity: the speed on a dense grid must stay
    bounded away from zero.
    """

    x: FourierSeries
    y: FourierSeries

    def __post_init__(self):
        if self.x.is_zero() and self.y.is_zero():
            raise ValidationError("curve has all-zero coefficients")
        t = np.linspace(0.0, TWO_PI, DENSE_GRID, endpoint=False)
        speed = np.hypot(self.x(t, 1), self.y(t, 1))
        i = int(np.argmin(speed))
        if not speed[i] > 1e-9 * max(float(speed.max()), 1e-300):
            raise RegularityError(
                f"curve is not regular: speed {speed[i]:.3g} at t={t[i]:.6g}",
                t_min=float(t[i]), speed_min=float(speed[i]),
            )

    @property
    def degree(self) -> int:
        return max(self.x.degree, self.y.degree)

    def evaluate(self, t):
        """Point(s) r0(t); shape ``t.shape + (2,)``."""
        return np.stack([self.x(t), self.y(t)], axis=-1)

    def derivative(self, t):
        return np.stack([self.x(t, 1), self.y(t, 1)], axis=-1)

    def second_derivative(self, t):
        return np.stack([self.x(t, 2), self.y(t, 2)], axis=-1)

    # spatial / temporal transforms used by the invariance checks

    def transformed(self, scale: float = 1.0, angle: float = 0.0,
                    shift: Sequence[float] = (0.0, 0.0)) -> "ClosedCurve":
        """Image under ``v -> scale * Rot(angle) v + shift``."""
        if not scale > 0:
            raise ValidationError("scale must be positive")
        c, s = math.cos(angle), math.sin(angle)
        x = _combine(scale * c, self.x, -scale * s, self.y)
        y = _combine(scale * s, self.x, scale * c, self.y)
        x = FourierSeries(x.a0 + shift[0], x.a, x.b)
        y = FourierSeries(y.a0 + shift[1], y.a, y.b)
        return ClosedCurve(x, y)

    def time_shifted(self, beta: float) -> "ClosedCurve":
        """Curve ``t -> r0(t + beta)``."""
        return ClosedCurve(self.x.time_shifted(beta), self.y.time_shifted(beta))

    def reversed(self) -> "ClosedCurve":
        """Curve ``t -> r0(-t)``."""
        return ClosedCurve(
            FourierSeries(self.x.a0, self.x.a, tuple(-v for v in self.x.b)),
            FourierSeries(self.y.a0, self.y.a, tuple(-v for v in self.y.b)),
        )

    def to_spec(self) -> dict:
        return {"type": "fourier", "x": self.x.to_dict(), "y": self.y.to_dict()}

    @cached_property
    def metrics(self) -> "CurveMetrics":
        return curve_metrics(self)


# constructors -------------------------------------------------------------

def make_circle(radius: float = 1.0) -> ClosedCurve:
    if not radius > 0:
        raise ValidationError(f"circle radius must be positive, got {radius!r}")
    return ClosedCurve(FourierSeries(0.0, (radius,), (0.0,)),
                       FourierSeries(0.0, (0.0,), (radius,)))


def make_ellipse(b: float) -> ClosedCurve:
    """Ellipse ``(cos t, b sin t)``."""
    if not b > 0:
        raise ValidationError(f"ellipse semi-axis b must be positive, got {b!r}")
    return ClosedCurve(FourierSeries(0.0, (1.0,), (0.0,)),
                       FourierSeries(0.0, (0.0,), (b,)))


def make_fourier(x_coeffs, y_coeffs) -> ClosedCurve:
    """Curve from coefficient triples ``(a0, a, b)`` or dicts with those keys."""
    def as_series(c):
        if isinstance(c, FourierSeries):
            return c
        if isinstance(c, dict):
            return FourierSeries.from_dict(c)
        a0, a, b = c
        return FourierSeries(a0, tuple(a), tuple(b))

    return ClosedCurve(as_series(x_coeffs), as_series(y_coeffs))


def curve_from_spec(spec) -> ClosedCurve:
    """Build a curve from the curve-spec JSON (dict or JSON text).

    Accepted forms::

        {"type": "circle", "radius": r}
        {"type": "ellipse", "b": b}
        {"type": "fourier", "x": {"a0":..,"a":[..],"b":[..]}, "y": {...}}
    """
    if isinstance(spec, (str, bytes)):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"curve spec is not valid JSON: {exc}") from None
    if not isinstance(spec, dict) or "type" not in spec:
        raise ValidationError("curve spec must be an object with a 'type' field")
    kind = spec["type"]
    allowed = {"circle": {"radius"}, "ellipse": {"b"}, "fourier": {"x", "y"}}
    if kind not in allowed:
        raise ValidationError(f"unknown curve type {kind!r}")
    extra = set(spec) - allowed[kind] - {"type"}
    missing = allowed[kind] - set(spec) - ({"radius"} if kind == "circle" else set())
    if extra or missing:
        raise ValidationError(f"{kind} spec: unexpected {sorted(extra)}, missing {sorted(missing)}")
    try:
        if kind == "circle":
            return make_circle(float(spec.get("radius", 1.0)))
        if kind == "ellipse":
            return make_ellipse(float(spec["b"]))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad {kind} parameter: {exc}") from None
    return make_fourier(spec["x"], spec["y"])


# differential geometry ------------------------------------------------------

def _max_turning_rate(curve: ClosedCurve) -> float:
    t = np.linspace(0.0, TWO_PI, DENSE_GRID, endpoint=False)
    d1 = curve.derivative(t)
    d2 = curve.second_derivative(t)
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    return float(np.max(np.abs(cross) / np.sum(d1 * d1, axis=1)))


def _refined(t_grid: np.ndarray, h_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Insert points so neighbours are at most ``h_max`` apart.

    Returns the refined grid and the indices of the original points in it.
    """
    dt = np.diff(t_grid)
    m = np.maximum(1, np.ceil(dt / h_max).astype(np.int64))
    if np.all(m == 1):
        return t_grid, np.arange(t_grid.size)
    starts = np.concatenate([[0], np.cumsum(m)])
    fine = np.empty(starts[-1] + 1)
    fine[-1] = t_grid[-1]
    owner = np.repeat(np.arange(dt.size), m)
    offset = np.arange(starts[-1]) - starts[owner]
    fine[:-1] = t_grid[owner] + dt[owner] * offset / m[owner]
    return fine, starts


def speed_and_angle(curve: ClosedCurve, t_grid) -> tuple[np.ndarray, np.ndarray]:
    """Speed ``B(t)`` and continuous tangent angle ``psi(t)`` on ``t_grid``.

    ``psi`` is unwrapped along the grid (refined internally so consecutive
    points differ by less than pi/2) and normalised so that
    ``psi(0)`` lies in ``[-pi, pi)``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValidationError("t_grid must be a non-empty 1-d array")
    if np.any(np.diff(t_grid) <= 0):
        raise ValidationError("t_grid must be strictly increasing")

    # anchor the lift at t = 0
    pos0 = int(np.searchsorted(t_grid, 0.0))
    has_zero = pos0 < t_grid.size and t_grid[pos0] == 0.0
    grid = t_grid if has_zero else np.insert(t_grid, pos0, 0.0)

    h_max = (math.pi / 2) / (1.5 * _max_turning_rate(curve) + 1e-300)
    fine, idx = _refined(grid, h_max)
    d1 = curve.derivative(fine)
    psi = np.unwrap(np.arctan2(d1[:, 1], d1[:, 0]))
    speed = np.hypot(d1[:, 0], d1[:, 1])

    i0 = idx[pos0]
    start = math.atan2(d1[i0, 1], d1[i0, 0])
    if start >= math.pi:
        start -= TWO_PI
    psi += start - psi[i0]

    keep = idx if has_zero else np.delete(idx, pos0)
    B, psi = speed[keep], psi[keep]
    if np.any(B <= 0):
        raise RegularityError("zero speed encountered on grid")
    return B, psi


def tangent_angle(curve: ClosedCurve, t) -> np.ndarray:
    """Lifted tangent angle psi at arbitrary times (sorted or not)."""
    t = np.asarray(t, dtype=float)
    order = np.argsort(t, kind="stable")
    ts = t[order]
    uniq, inverse = np.unique(ts, return_inverse=True)
    _, psi = speed_and_angle(curve, uniq)
    out = np.empty_like(t)
    out[order] = psi[inverse]
    return out


def rotation_index(curve: ClosedCurve, n: int = DENSE_GRID) -> int:
    """Winding number of the tangent vector over one period."""
    t = np.linspace(0.0, TWO_PI, n + 1)
    _, psi = speed_and_angle(curve, t)
    w = (psi[-1] - psi[0]) / TWO_PI
    k = round(w)
    if abs(w - k) > 1e-6:
        raise NumericalError(f"rotation index residual {abs(w - k):.3g} too large")
    return int(k)


def _quad(f, what: str, scale: float) -> float:
    """Adaptive quadrature over one period; ``scale`` floors the tolerance."""
    with warnings.catch_warnings():
        # roundoff warnings are expected when the integral is ~0
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, 0.0, TWO_PI, epsabs=1e-13 * scale,
                                  epsrel=1e-10, limit=500)
    if not err <= 1e-9 * max(abs(val), scale):
        raise NumericalError(f"{what} quadrature did not converge (est. error {err:.3g})")
    return float(val)


def perimeter(curve: ClosedCurve) -> float:
    """Algebraic perimeter ``int_0^{2pi} |r0'(t)| dt``."""
    return _quad(lambda t: math.hypot(curve.x(t, 1), curve.y(t, 1)), "perimeter",
                 perimeter_scale(curve))


def enclosed_area(curve: ClosedCurve) -> float:
    """Signed area ``oint x dy``, cross-checked against ``-oint y dx``."""
    size = perimeter_scale(curve) ** 2
    a1 = _quad(lambda t: curve.x(t) * curve.y(t, 1), "area", size)
    a2 = -_quad(lambda t: curve.y(t) * curve.x(t, 1), "area", size)
    if abs(a1 - a2) > 1e-8 * max(abs(a1), abs(a2), size):
        raise NumericalError(f"area cross-check failed: {a1!r} vs {a2!r}")
    return a1


def perimeter_scale(curve: ClosedCurve) -> float:
    """Cheap length scale (RMS speed) used for relative tolerances."""
    t = np.linspace(0.0, TWO_PI, 256, endpoint=False)
    return float(np.sqrt(np.mean(np.sum(curve.derivative(t) ** 2, axis=-1))))


def curvature(curve: ClosedCurve, t):
    """Signed curvature ``det(r0', r0'') / |r0'|^3``."""
    d1 = curve.derivative(t)
    d2 = curve.second_derivative(t)
    cross = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    return cross / np.sum(d1 * d1, axis=-1) ** 1.5


def _polish(f, t_grid, vals, i, sign):
    """Refine a grid extremum of ``f`` with a 3-point parabola."""
    h = t_grid[1] - t_grid[0]
    n = t_grid.size
    fm, f0, fp = vals[(i - 1) % n], vals[i], vals[(i + 1) % n]
    denom = fm - 2.0 * f0 + fp
    if denom == 0.0:
        return float(f0)
    delta = 0.5 * h * (fm - fp) / denom
    cand = f(t_grid[i] + delta)
    return float(min(f0, cand) if sign > 0 else max(f0, cand))


def radius_of_curvature_extrema(curve: ClosedCurve) -> tuple[float, float]:
    """``(r_min, r_max)`` of ``1/|kappa|``; ``r_max`` is ``inf`` if kappa vanishes."""
    t = np.linspace(0.0, TWO_PI, DENSE_GRID, endpoint=False)
    kappa = curvature(curve, t)
    absk = np.abs(kappa)
    f_kappa = lambda s: abs(float(curvature(curve, s)))  # noqa: E731
    k_max = _polish(f_kappa, t, absk, int(np.argmax(absk)), -1)
    r_min = 1.0 / k_max
    if np.any(np.sign(kappa) != np.sign(kappa[0])) or np.min(absk) < 1e-12 * k_max:
        return r_min, math.inf
    k_min = _polish(f_kappa, t, absk, int(np.argmin(absk)), +1)
    return r_min, 1.0 / k_min


@dataclass(frozen=True)
class CurveMetrics:
    perimeter: float
    signed_area: float
    rotation_index: int
    mu: float
    r_min: float
    r_max: float

    @property
    def convex(self) -> bool:
        """Curvature never vanishes (so r_max is finite)."""
        return math.isfinite(self.r_max)

    def to_dict(self) -> dict:
        return {
            "perimeter": self.perimeter, "signed_area": self.signed_area,
            "rotation_index": self.rotation_index, "mu": self.mu,
            "r_min": self.r_min, "r_max": self.r_max if self.convex else None,
        }


def curve_metrics(curve: ClosedCurve) -> CurveMetrics:
    ell = perimeter(curve)
    r_min, r_max = radius_of_curvature_extrema(curve)
    return CurveMetrics(ell, enclosed_area(curve), rotation_index(curve),
                        ell / TWO_PI, r_min, r_max)


def outer_normal(curve: ClosedCurve, t) -> np.ndarray:
    """Unit outer normal.

    The unit tangent is turned by -pi/2 for counterclockwise curves
    (rotation index > 0) and by +pi/2 for clockwise ones, so that positive
    offsets of a circle point away from its centre.  Curves with index 0
    use the -pi/2 rule.
    """
    d1 = curve.derivative(t)
    tang = d1 / np.linalg.norm(d1, axis=-1, keepdims=True)
    sign = -1.0 if curve.metrics.rotation_index < 0 else 1.0
    return sign * np.stack([tang[..., 1], -tang[..., 0]], axis=-1)


def parallel_curve_point(curve: ClosedCurve, d: float, t):
    """Point ``r0(t) + d N(t)`` on the offset curve at signed distance ``d``."""
    return curve.evaluate(t) + d * outer_normal(curve, t)


# arc-length reparameterisation ------------------------------------------------

def normalized_arclength_reparam(curve: ClosedCurve, K_out: int = 64,
                                 tol: float = 1e-6) -> ClosedCurve:
    """Refit the curve at constant speed ``mu = perimeter / 2 pi``.

    ``s(t)`` is integrated spectrally from the speed, inverted by Newton's
    method and the resampled curve is refitted with ``K_out`` harmonics.
    Raises :class:`NumericalError` if the refit speed deviates from ``mu``
    by more than ``tol`` (relative).
    """
    if K_out < 1:
        raise ValidationError("K_out must be >= 1")
    M = max(8192, 64 * curve.degree)
    t = np.linspace(0.0, TWO_PI, M, endpoint=False)
    B = np.hypot(curve.x(t, 1), curve.y(t, 1))
    spec = np.fft.rfft(B) / M
    mu = float(spec[0].real)
    k = np.arange(1, spec.size)
    alpha = 2.0 * spec[1:].real
    beta = -2.0 * spec[1:].imag
    keep = np.abs(alpha) + np.abs(beta) > 1e-17 * mu
    k, alpha, beta = k[keep], alpha[keep], beta[keep]

    def arclength(tt):
        kt = np.multiply.outer(tt, k)
        return mu * tt + (np.sin(kt) @ (alpha / k)) + ((1.0 - np.cos(kt)) @ (beta / k))

    ns = max(4 * K_out + 4, 512)
    s_target = mu * np.linspace(0.0, TWO_PI, ns, endpoint=False)
    tt = s_target / mu
    for _ in range(50):
        resid = arclength(tt) - s_target
        step = resid / np.hypot(curve.x(tt, 1), curve.y(tt, 1))
        tt = tt - step
        if np.max(np.abs(step)) < 1e-14:
            break
    else:
        raise NumericalError("arc-length inversion did not converge")

    pts = curve.evaluate(tt)
    series = []
    for c in range(2):
        X = np.fft.rfft(pts[:, c]) / ns
        a = 2.0 * X[1:K_out + 1].real
        b = -2.0 * X[1:K_out + 1].imag
        series.append(FourierSeries(float(X[0].real), tuple(a), tuple(b)))
    out = ClosedCurve(*series)

    check = np.linspace(0.0, TWO_PI, 4 * ns, endpoint=False)
    dev = float(np.max(np.abs(np.hypot(out.x(check, 1), out.y(check, 1)) / mu - 1.0)))
    if dev > tol:
        raise NumericalError(
            f"K_out={K_out} too small: speed deviates from mu by {dev:.3g} (relative)")
    return out
