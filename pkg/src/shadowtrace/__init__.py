"""Numerics for the planar shadowing problem.

A shadower keeps a fixed distance R from an escaper moving on a closed
curve while always heading along the line of sight.  The package integrates
the resulting ODEs, computes rotation numbers and the distances at which
they change character, and locates cusps of the shadowing curves.
"""

from .dynamics import (IntegrationConfig, Trajectory, alpha, integrate_ese, integrate_rse,
                       integrate_se_direct, phi_lift, poincare_map, rse_rhs)
from .errors import (DegenerateSingularityError, HypothesisError, NumericalError, RegularityError,
                     ShadowError, ValidationError)
from .geometry import (ClosedCurve, CurveMetrics, FourierSeries, curve_from_spec, curve_metrics,
                       make_circle, make_ellipse, make_fourier)
from .rotation import (DistanceReport, RotationEstimate, critical_distance,
                       find_distance_for_rotation, rotation_number, rotation_sweep, turning_distance)
from .singularities import CuspEvent, classify_cusp, count_cusps_per_period, detect_singular_times

__version__ = "0.1.0"

__all__ = [
    "ClosedCurve", "CurveMetrics", "CuspEvent", "DegenerateSingularityError", "DistanceReport",
    "FourierSeries", "HypothesisError", "IntegrationConfig", "NumericalError", "RegularityError",
    "RotationEstimate", "ShadowError", "Trajectory", "ValidationError", "alpha", "classify_cusp",
    "count_cusps_per_period", "critical_distance", "curve_from_spec", "curve_metrics",
    "detect_singular_times", "find_distance_for_rotation", "integrate_ese", "integrate_rse",
    "integrate_se_direct", "make_circle", "make_ellipse", "make_fourier", "phi_lift",
    "poincare_map", "rotation_number", "rotation_sweep", "rse_rhs", "turning_distance",
]
