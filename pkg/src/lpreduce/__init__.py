"""Symmetry reduction of mechanical systems on P x V in dependent coordinates.

Public surface: group charts (:mod:`lpreduce.lie_group`), system definitions
and validation (:mod:`lpreduce.system_model`), adapted coordinates and
projectors (:mod:`lpreduce.gauge_slice`), connection geometry
(:mod:`lpreduce.connection_geometry`), the reduced equations of motion
(:mod:`lpreduce.reduced_dynamics`), the full-space oracle and the
equivalence comparison (:mod:`lpreduce.full_oracle`), relative equilibria
(:mod:`lpreduce.equilibria`) and the CLI (:mod:`lpreduce.cli`).
"""

from .builtin_systems import builtin_names, builtin_system
from .connection_geometry import GeometryEngine
from .equilibria import solve_equilibrium, vertical_candidates
from .full_oracle import FullState, compare, full_rhs, integrate_full, reduced_initial_from_full
from .gauge_slice import AdaptedPoint, compose, decompose, projector_set, solve_gauge
from .lie_group import LieGroupChart, builtin_group, so3, su2
from .reduced_dynamics import ReducedState, Trajectory, energy, integrate, rhs, vertical_invariant
from .system_model import SystemDefinition, killing_p, killing_v, validate

__version__ = "0.1.0"

__all__ = [
    "AdaptedPoint", "FullState", "GeometryEngine", "LieGroupChart",
    "ReducedState", "SystemDefinition", "Trajectory", "builtin_group",
    "builtin_names", "builtin_system", "compare", "compose", "decompose",
    "energy", "full_rhs", "integrate", "integrate_full", "killing_p",
    "killing_v", "projector_set", "reduced_initial_from_full", "rhs",
    "so3", "solve_equilibrium", "solve_gauge", "su2", "validate",
    "vertical_candidates", "vertical_invariant",
]
