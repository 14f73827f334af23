"""Closed-form shadowing solutions for the unit circle ``r0(t) = e^{it}``.

With ``phi = theta - t`` the reduced equation becomes the autonomous
``phi' = -(cos(phi) + R) / R`` which integrates explicitly in every regime:

* ``R < 1``: two equilibria; every other orbit connects them.
* ``R = 1``: ``tan(phi/2) = tan(phi0/2) - t``.
* ``R > 1``: no equilibria; ``phi`` decreases through every multiple of pi.

Positions are ``e^{it} (1 + R e^{i phi})``.  Everything here is used as
ground truth for the numerical integrators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .geometry import TWO_PI


def _positive(R):
    if not (math.isfinite(R) and R > 0):
        raise ValidationError(f"R must be positive, got {R!r}")
    return float(R)


def _wrap(theta):
    """Reduce to [-pi, pi)."""
    return theta - TWO_PI * np.floor((theta + math.pi) / TWO_PI)


def _atanh(z):
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) >= 1):
        raise NumericalError("arctanh argument left (-1, 1); closed form applied outside its branch")
    return np.arctanh(z)


@dataclass(frozen=True)
class CircleRegime:
    R: float
    regime: str            # "small", "critical" or "large"
    rho_R: float | None    # -sqrt(R^2 - 1)/R in the large regime

    @classmethod
    def of(cls, R: float) -> "CircleRegime":
        R = _positive(R)
        if R < 1:
            return cls(R, "small", None)
        if R == 1:
            return cls(R, "critical", None)
        return cls(R, "large", -math.sqrt(R * R - 1) / R)


# R < 1 -----------------------------------------------------------------------

def equilibria(R: float) -> tuple[float, float]:
    """(theta_plus, theta_minus): forward-stable and backward-stable equilibria of phi."""
    R = _positive(R)
    if R >= 1:
        raise ValidationError("equilibria exist only for R < 1")
    tp = -(math.pi / 2 + math.asin(R))
    return tp, -tp


def _small_branch(R, theta0):
    """Lift index j and branch for theta0 relative to [theta_plus, theta_plus + 2 pi)."""
    tp, tm = equilibria(R)
    j = math.floor((theta0 - tp) / TWO_PI)
    red = theta0 - TWO_PI * j
    if red == tp or red == tm:
        return j, red, "equilibrium"
    return j, red, ("zero" if red < tm else "pi")


def turning_time_small_R(R: float, theta0: float) -> float:
    """Unique singular time of the SC with ``phi(0) = theta0`` for R < 1."""
    R = _positive(R)
    j, red, branch = _small_branch(R, theta0)
    if branch == "equilibrium":
        raise ValidationError("theta0 is an equilibrium; the circular SC has no turning point")
    k = 2 * R / math.sqrt(1 - R * R)
    if branch == "zero":
        return float(k * _atanh(math.sqrt((1 - R) / (1 + R)) * math.tan(red / 2)))
    return float(k * _atanh(math.sqrt((1 + R) / (1 - R)) / math.tan(red / 2)))


def _phi_small(R, theta0, t):
    j, red, branch = _small_branch(R, theta0)
    if branch == "equilibrium":
        return np.full_like(t, theta0)
    s = math.sqrt(1 - R * R) / (2 * R)
    if branch == "zero":
        a = math.sqrt((1 + R) / (1 - R))
        z = _atanh(math.tan(red / 2) / a) - s * t
        phi = 2 * np.arctan(a * np.tanh(z))
    else:
        c = math.sqrt((1 - R) / (1 + R))
        z = _atanh(math.tan((red - math.pi) / 2) / c) + s * t
        phi = math.pi + 2 * np.arctan(c * np.tanh(z))
    return phi + TWO_PI * j


# R = 1 -----------------------------------------------------------------------

def _check_open_pi(theta0):
    if not -math.pi < theta0 < math.pi:
        raise ValidationError("theta0 must lie in (-pi, pi); theta0 = +-pi is the constant SC at the origin")


def turning_time_R1(theta0: float) -> float:
    _check_open_pi(theta0)
    return math.tan(theta0 / 2)


def sc_at_R_equal_1(theta0: float, t):
    """Position(s) of the R = 1 shadowing curve as an array ``(..., 2)``."""
    _check_open_pi(theta0)
    t = np.asarray(t, dtype=float)
    num = np.exp(1j * t) * (1 + np.exp(1j * theta0) - 1j * t * (math.cos(theta0) + 1))
    den = 1 - t * math.sin(theta0) + t * t * math.cos(theta0 / 2) ** 2
    z = num / den
    return np.stack([z.real, z.imag], axis=-1)


def _phi_critical(theta0, t):
    red = float(_wrap(theta0))
    j = round((theta0 - red) / TWO_PI)
    if red == -math.pi:
        return np.full_like(t, theta0)
    return 2 * np.arctan(math.tan(red / 2) - t) + TWO_PI * j


# R > 1 -----------------------------------------------------------------------

def _large(R):
    R = _positive(R)
    if R <= 1:
        raise ValidationError("this closed form needs R > 1")
    return R, -math.sqrt(R * R - 1) / R, math.sqrt((R - 1) / (R + 1))


def F_large_R(R: float, phi):
    """``F(phi) = -int_0^phi R / (cos + R)``; strictly decreasing and odd."""
    R, rho, s = _large(R)
    phi = np.asarray(phi, dtype=float)
    k = np.round(phi / TWO_PI)
    red = phi - TWO_PI * k
    return (2 / rho) * np.arctan(s * np.tan(red / 2)) + TWO_PI * k / rho


def F_inverse_large_R(R: float, value):
    R, rho, s = _large(R)
    v = np.asarray(value, dtype=float)
    k = np.round(v * rho / TWO_PI)
    w = v - TWO_PI * k / rho
    return 2 * np.arctan(np.tan(rho * w / 2) / s) + TWO_PI * k


def _phi_large(R, theta0, t):
    return F_inverse_large_R(R, F_large_R(R, theta0) + t)


def turning_data_large_R(R: float, theta0: float, k_range) -> list[tuple[float, np.ndarray]]:
    """Singular times ``tau_k`` and cusp points ``r_k`` for each k in ``k_range``.

    Even k sit on the circle of radius R + 1, odd k on radius R - 1.
    """
    R, rho, _ = _large(R)
    tau0 = -float(F_large_R(R, theta0))
    out = []
    for k in k_range:
        tau = tau0 + k * math.pi / abs(rho)
        sgn = -1.0 if k % 2 else 1.0
        z = sgn * (R + sgn) * complex(math.cos(tau), math.sin(tau))
        out.append((tau, np.array([z.real, z.imag])))
    return out


# all regimes -------------------------------------------------------------------

def phi_of_t(R: float, theta0: float, t):
    """Lifted ``phi(t) = theta(t) - t`` with ``phi(0) = theta0``."""
    R = _positive(R)
    t = np.asarray(t, dtype=float)
    if R < 1:
        return _phi_small(R, theta0, t)
    if R == 1:
        return _phi_critical(theta0, t)
    return _phi_large(R, theta0, t)


def theta_oracle(R: float, theta0: float, t):
    """Lifted bearing angle of the RSE for the unit circle."""
    t = np.asarray(t, dtype=float)
    return t + phi_of_t(R, theta0, t)


def sc_position(R: float, theta0: float, t):
    t = np.asarray(t, dtype=float)
    z = np.exp(1j * t) * (1 + R * np.exp(1j * phi_of_t(R, theta0, t)))
    return np.stack([z.real, z.imag], axis=-1)


def rotation_number_circle(R: float) -> float:
    R = _positive(R)
    if R <= 1:
        return 1.0
    return 1 - math.sqrt(R * R - 1) / R


def subharmonic_distance(p: int, q: int) -> float:
    """Distance at which the circle's rotation number is (p - q)/p."""
    if int(p) != p or int(q) != q:
        raise ValidationError("p and q must be integers")
    p, q = int(p), int(q)
    if not p > q >= 1:
        raise ValidationError("need p > q >= 1")
    if math.gcd(p, q) != 1:
        raise ValidationError(f"p={p} and q={q} are not co-prime")
    return p / math.sqrt(p * p - q * q)
