"""SVG figures of shadowing curves and rotation-number sweeps."""

from __future__ import annotations

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .geometry import TWO_PI

# stable element ids so repeated runs produce comparable documents
matplotlib.rcParams["svg.hashsalt"] = "shadowtrace"


def _save(fig, path):
    FigureCanvasSVG(fig)
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def trace_figure(curve, traj, events, path, title=None):
    """Escaping curve, shadowing curve, initial point and cusp markers."""
    fig = Figure(figsize=(6, 6))
    ax = fig.add_subplot()
    s = np.linspace(0.0, TWO_PI, 1025)
    ec = curve.evaluate(s)
    line, = ax.plot(ec[:, 0], ec[:, 1], color="0.4", lw=1.0, label="escaping curve")
    line.set_gid("escaping-curve")
    pos = traj.positions
    if pos.shape[0] >= 2:
        fwd = traj.t >= traj.t_init
        for mask, style, gid in ((fwd, "-", "shadowing-forward"), (~fwd, "-.", "shadowing-backward")):
            # include the initial sample in both halves so they join up
            idx = np.nonzero(mask | (traj.t == traj.t_init))[0]
            if idx.size >= 2:
                ln, = ax.plot(pos[idx, 0], pos[idx, 1], style, color="C0", lw=1.2)
                ln.set_gid(gid)
    p0 = traj.position_at(np.array([traj.t_init]))[0]
    mk, = ax.plot([p0[0]], [p0[1]], "o", mfc="none", mec="k", ms=7, label="initial point")
    mk.set_gid("initial-point")
    if events:
        loc = np.array([e.location for e in events])
        cm, = ax.plot(loc[:, 0], loc[:, 1], "x", color="C3", ms=7, label="cusps")
        cm.set_gid("cusps")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_title(title or f"R = {traj.R:.6g}, theta0 = {traj.theta0:.6g}")
    ax.legend(loc="upper right", fontsize=8)
    return _save(fig, path)


def sweep_figure(points, path, oracle=None, title=None):
    """rho against R; ``oracle`` is an optional callable drawn for comparison."""
    fig = Figure(figsize=(7, 4.5))
    ax = fig.add_subplot()
    R = np.array([p.R for p in points])
    rho = np.array([p.rho for p in points])
    ok = np.isfinite(rho)
    if ok.sum() >= 2:
        ln, = ax.plot(R[ok], rho[ok], "-", color="C0", lw=1.2, label="numeric")
    else:
        ln, = ax.plot(R[ok], rho[ok], "o", color="C0", label="numeric")
    ln.set_gid("rho-numeric")
    if oracle is not None and R.size >= 2:
        fine = np.linspace(R.min(), R.max(), 400)
        ol, = ax.plot(fine, [oracle(r) for r in fine], "--", color="C1", lw=1.0, label="closed form")
        ol.set_gid("rho-oracle")
    if (~ok).any():
        ax.plot(R[~ok], np.zeros((~ok).sum()), "|", color="C3", label="failed")
    ax.set_xlabel("R")
    ax.set_ylabel("rotation number")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)

