"""Enriched H(div) mixed finite elements on quadrilaterals and triangles.

Builds the hierarchical Raviart-Thomas and Brezzi-Douglas-Marini spaces
V_k^{n+} paired with U_{k+n}, their commuting projections, a statically
condensed mixed Darcy solver and mesh-refinement convergence studies.
"""

from __future__ import annotations

from .assembly import assemble_system, condense, solve_mixed
from .convergence import exact_fields, fit_orders, l2_errors, linear_fields
from .exceptions import HdivError
from .mesh import build_mesh
from .models import MeshFamily, SpaceConfig, SpaceFamily
from .projection import build_projection_system, project_flux
from .spaces import build_hdiv_basis
from .study import StudyConfig, expected_orders, run_study

__version__ = "0.1.0"

__all__ = [
    "HdivError",
    "MeshFamily",
    "SpaceConfig",
    "SpaceFamily",
    "StudyConfig",
    "__version__",
    "assemble_system",
    "build_hdiv_basis",
    "build_mesh",
    "build_projection_system",
    "condense",
    "exact_fields",
    "expected_orders",
    "fit_orders",
    "l2_errors",
    "linear_fields",
    "project_flux",
    "run_study",
    "solve_mixed",
]
