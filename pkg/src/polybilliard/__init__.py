"""Billiard tables with polynomial first integrals.

Planar, wire and surface billiards, conservation audits of their integrals,
the integrability residuals and a profile ODE integrator.
"""
from .dynamics import (BranchPolicy, Orbit, PhaseState, WireChord, initial_condition,
                       planar_step, propagate, reflect, surface_step, wire_step)
from .errors import (AmbiguousBranch, AxisTouching, BilliardError, BranchLoss, ConfigError,
                     Degenerate, DegenerateChord, EdgeImpact, EmptyRegion, NoIntersection,
                     NoReflection, SchemaMismatch, TangentialImpact, Termination)
from .geom import Curve, SkewMatrix, SurfacePatch, matrix_exp_action
from .integrals import (AxialDeg1, ConicIntegral, ConservationReport, Degree2Axial,
                        LinearMomentum, ParabolaIntegral, PlanarDeg1, audit_orbit)
from .ode import ImplicitODEProblem, solve_profile_ode
from .tables import (ArctanSurface, CircleTable, EllipseTable, ExpWire, HyperbolaTable,
                     ParabolaTable, ProfileFamily, Spiral, ToricKnot, make_parabolic_lens,
                     make_tetragon_torus)

__version__ = "0.1.0"
