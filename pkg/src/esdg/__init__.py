"""Entropy-stable h/p non-conforming DG spectral element solver in 2D."""

__version__ = "0.1.0"

from .dg import COUPLINGS, Discretization, InterfaceFluxSet, SideFlux
from .field import ElementLayout, Residual, SolutionField
from .mesh import (Element, Interface, Mesh, build_mixed_refinement_mesh,
                   build_uniform_mesh, read_mesh_file, validate_mesh,
                   write_mesh_file)
from .physics import (Burgers2D, ConservationLaw, EulerEquations,
                      PhysicsError, make_law)
from .projection import (InterfaceGeometry, ProjectionPair, build_h_pairs,
                         build_p_pair, compatibility_residual)
from .quadrature import LGLRule, SBPOperators, build_sbp, lgl_rule
from .time_integration import IntegrationError, cfl_dt, integrate, lsrk54_step

__all__ = [
    "COUPLINGS", "Discretization", "InterfaceFluxSet", "SideFlux",
    "ElementLayout", "Residual", "SolutionField",
    "Element", "Interface", "Mesh", "build_mixed_refinement_mesh",
    "build_uniform_mesh", "read_mesh_file", "validate_mesh",
    "write_mesh_file",
    "Burgers2D", "ConservationLaw", "EulerEquations", "PhysicsError",
    "make_law",
    "InterfaceGeometry", "ProjectionPair", "build_h_pairs", "build_p_pair",
    "compatibility_residual",
    "LGLRule", "SBPOperators", "build_sbp", "lgl_rule",
    "IntegrationError", "cfl_dt", "integrate", "lsrk54_step",
]
