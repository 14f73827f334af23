"""Compiled fixed-step RK4 loops.

Every kernel reads the escaping curve from tables sampled at the RK4 stage
nodes ``t0 + j*h/2``.  When the step divides the period the table covers a
single period and is indexed modulo its length.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def rse_rk4(theta, n, h, dx, dy, inv_r, stride, out):
    """Integrate theta' = (xi' sin theta - eta' cos theta) / R.

    Stores theta every ``stride`` steps into ``out`` (``out[0]`` is the
    initial value) and returns the final theta.
    """
    L = dx.shape[0]
    if stride > 0:
        out[0] = theta
    for i in range(n):
        j0 = (2 * i) % L
        j1 = (2 * i + 1) % L
        j2 = (2 * i + 2) % L
        k1 = inv_r * (dx[j0] * math.sin(theta) - dy[j0] * math.cos(theta))
        u = theta + 0.5 * h * k1
        k2 = inv_r * (dx[j1] * math.sin(u) - dy[j1] * math.cos(u))
        u = theta + 0.5 * h * k2
        k3 = inv_r * (dx[j1] * math.sin(u) - dy[j1] * math.cos(u))
        u = theta + h * k3
        k4 = inv_r * (dx[j2] * math.sin(u) - dy[j2] * math.cos(u))
        theta += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if stride > 0 and (i + 1) % stride == 0:
            out[(i + 1) // stride] = theta
    return theta


@njit(cache=True, nogil=True)
def rse_rk4_batch(thetas, n, h, dx, dy, inv_r):
    res = np.empty_like(thetas)
    dummy = np.empty(0)
    for m in range(thetas.shape[0]):
        res[m] = rse_rk4(thetas[m], n, h, dx, dy, inv_r, 0, dummy)
    return res


@njit(cache=True, nogil=True)
def ese_rk4(x1, x2, y, n, h, dx, dy, inv_r, out):
    """Linear system x' = -r0' y / R, y' = -r0'.x / R.

    The state is rescaled to y = 1 whenever y leaves [1/2, 2]; the
    accumulated log of the scale factors is stored alongside.  ``out`` has
    shape (n + 1, 4): x1, x2, y, log_scale.
    """
    L = dx.shape[0]
    logs = 0.0
    out[0, 0] = x1
    out[0, 1] = x2
    out[0, 2] = y
    out[0, 3] = 0.0
    for i in range(n):
        j0 = (2 * i) % L
        j1 = (2 * i + 1) % L
        j2 = (2 * i + 2) % L
        a = -inv_r * dx[j0]
        b = -inv_r * dy[j0]
        k1x1 = a * y
        k1x2 = b * y
        k1y = a * x1 + b * x2
        a = -inv_r * dx[j1]
        b = -inv_r * dy[j1]
        u1 = x1 + 0.5 * h * k1x1
        u2 = x2 + 0.5 * h * k1x2
        v = y + 0.5 * h * k1y
        k2x1 = a * v
        k2x2 = b * v
        k2y = a * u1 + b * u2
        u1 = x1 + 0.5 * h * k2x1
        u2 = x2 + 0.5 * h * k2x2
        v = y + 0.5 * h * k2y
        k3x1 = a * v
        k3x2 = b * v
        k3y = a * u1 + b * u2
        a = -inv_r * dx[j2]
        b = -inv_r * dy[j2]
        u1 = x1 + h * k3x1
        u2 = x2 + h * k3x2
        v = y + h * k3y
        k4x1 = a * v
        k4x2 = b * v
        k4y = a * u1 + b * u2
        x1 += h / 6.0 * (k1x1 + 2.0 * k2x1 + 2.0 * k3x1 + k4x1)
        x2 += h / 6.0 * (k1x2 + 2.0 * k2x2 + 2.0 * k3x2 + k4x2)
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        if y <= 0.0:
            return i + 1
        if y > 2.0 or y < 0.5:
            logs += math.log(y)
            x1 /= y
            x2 /= y
            y = 1.0
        out[i + 1, 0] = x1
        out[i + 1, 1] = x2
        out[i + 1, 2] = y
        out[i + 1, 3] = logs
    return -1


@njit(cache=True, nogil=True)
def se_field(px, py, dpx, dpy, ux, uy):
    """Projection of the escaper velocity onto u = r - r0."""
    c = (dpx * ux + dpy * uy) / (ux * ux + uy * uy)
    return c * ux, c * uy


@njit(cache=True, nogil=True)
def se_rk4(rx, ry, n, h, px, py, dpx, dpy, min_dist, field, out):
    """Direct integration of the planar shadowing equation.

    Aborts (returning the failing step index) when |r - r0| drops below
    ``min_dist``; returns -1 on success.
    """
    L = px.shape[0]
    out[0, 0] = rx
    out[0, 1] = ry
    for i in range(n):
        j0 = (2 * i) % L
        j1 = (2 * i + 1) % L
        j2 = (2 * i + 2) % L
        ux = rx - px[j0]
        uy = ry - py[j0]
        if math.sqrt(ux * ux + uy * uy) < min_dist:
            return i
        k1x, k1y = field(px[j0], py[j0], dpx[j0], dpy[j0], ux, uy)
        ux = rx + 0.5 * h * k1x - px[j1]
        uy = ry + 0.5 * h * k1y - py[j1]
        k2x, k2y = field(px[j1], py[j1], dpx[j1], dpy[j1], ux, uy)
        ux = rx + 0.5 * h * k2x - px[j1]
        uy = ry + 0.5 * h * k2y - py[j1]
        k3x, k3y = field(px[j1], py[j1], dpx[j1], dpy[j1], ux, uy)
        ux = rx + h * k3x - px[j2]
        uy = ry + h * k3y - py[j2]
        k4x, k4y = field(px[j2], py[j2], dpx[j2], dpy[j2], ux, uy)
        rx += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        ry += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        out[i + 1, 0] = rx
        out[i + 1, 1] = ry
    ux = rx - px[(2 * n) % L]
    uy = ry - py[(2 * n) % L]
    if math.sqrt(ux * ux + uy * uy) < min_dist:
        return n
    return -1
