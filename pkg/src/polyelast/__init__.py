"""Numerical toolkit for radial stationary points of a planar polyconvex
energy and for incompressible pressure/uniqueness estimates on the unit disk."""

from .rho import RhoSpec, build_rho, f_aux, rho_eval
from .radial_bvp import (
    BvpDiagnostics,
    LiftOff,
    NoBracketError,
    RadialProfile,
    SolveOptions,
    diagnostics,
    shoot,
    solve_bvp,
)
from .energy import EnergyReport, full_energy, radial_energy
from .direct_min import MinimizeOptions, minimize
from .pressure import (
    GENERAL_PREFACTOR,
    PolarQuadForm,
    TwistProfile,
    buckling_energy,
    hf_thresholds,
    ncover_min_energy,
    ncover_pressure_system,
    quadratic_energy,
    small_pressure_check,
)
from .fourier import DiskField, decompose, strip_low_modes, weighted_norms

__version__ = "0.1.0"
