"""Scalar conservation laws u_t + G(u)_x = 0: fluxes, envelopes, Riemann and Cauchy solvers."""

from .cauchy import (
    Approximation,
    CauchyTrajectory,
    approximate_profile,
    cauchy_solve,
    check_cfl,
    density_levels,
    snap,
)
from .envelope import ConvexEnvelope, EnvelopePiece, envelope, grid_hull, lower_envelope, lower_hull_indices, upper_envelope
from .flux import FluxFunction, oleinik_check, rh_speed, variational_extremum
from .riemann import (
    RiemannCase,
    RiemannFan,
    Wave,
    case_profile,
    check_admissible,
    classify_riemann,
    delta_to_fan,
    fan_discontinuities,
    inverse_speed,
    riemann_current,
    riemann_solve,
    single_inflexion,
    tangent_partner,
)

__all__ = [
    "Approximation",
    "CauchyTrajectory",
    "ConvexEnvelope",
    "EnvelopePiece",
    "FluxFunction",
    "RiemannCase",
    "RiemannFan",
    "Wave",
    "approximate_profile",
    "case_profile",
    "cauchy_solve",
    "check_admissible",
    "check_cfl",
    "classify_riemann",
    "delta_to_fan",
    "density_levels",
    "envelope",
    "fan_discontinuities",
    "grid_hull",
    "inverse_speed",
    "lower_envelope",
    "lower_hull_indices",
    "oleinik_check",
    "rh_speed",
    "riemann_current",
    "riemann_solve",
    "single_inflexion",
    "snap",
    "tangent_partner",
    "upper_envelope",
    "variational_extremum",
]
