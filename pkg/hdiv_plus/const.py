"""Constants for hdiv-plus."""

import os
from typing import Final

PACKAGE: Final = "hdiv_plus"

# Config file keys
CONF_MESH: Final = "mesh"
CONF_FAMILY: Final = "family"
CONF_K: Final = "k"
CONF_N: Final = "n"
CONF_LEVELS: Final = "levels"
CONF_OUT: Final = "out"
CONF_DIRECT: Final = "direct"
CONF_BIG: Final = "big"
CONF_QUAD_BUMP: Final = "quad_bump"
CONF_PROJECTION: Final = "projection"

# Enable debug logging from the environment, e.g. HDIV_PLUS_DEBUG=true
CONF_ENV_DEBUG: Final = os.getenv("HDIV_PLUS_DEBUG", "false").lower() == "true"

# Refinement levels (h = 2^-i)
MIN_LEVEL: Final = 1
MAX_LEVEL: Final = 8
DEFAULT_LEVEL_MIN: Final = 2
DEFAULT_LEVEL_MAX: Final = 5
# Trapezoid divergence errors carry an h^k term that only dominates from i = 5 on
TRAP_LEVEL_MAX: Final = 7

# Polynomial orders
MIN_K: Final = 1
MAX_K: Final = 8
MAX_N: Final = 6
DEFAULT_K_LIST: Final = (1, 2)
BIG_K_LIST: Final = (3, 4)

# Quadrature
MIN_GAUSS_DEGREE: Final = 1
MAX_GAUSS_DEGREE: Final = 40
MAX_TRIANGLE_DEGREE: Final = 30
DEFAULT_QUAD_BUMP: Final = 4  # Extra degrees for non-polynomial integrands

# Tolerances
AREA_TOL: Final = 1e-12
RESIDUAL_TOL: Final = 1e-10
NULLSPACE_RCOND: Final = 1e-10
UNIQUENESS_RATIO: Final = 1e-8
GRAM_RCOND_MIN: Final = 1e-13
SPD_EIG_MIN: Final = 0.0

# Convergence acceptance
SLOPE_BAND: Final = 0.2
FIT_LEVELS: Final = 3  # Least-squares slope over the finest levels

# Output
CSV_FILENAME: Final = "results.csv"
PROJECTION_CSV_FILENAME: Final = "projection.csv"
CSV_COLUMNS: Final = (
    "family",
    "k",
    "n",
    "i",
    "h",
    "dofs_total",
    "dofs_condensed",
    "e_flux",
    "e_pot",
    "e_div",
    "slope_flux",
    "slope_pot",
    "slope_div",
    "status",
)
ERROR_KINDS: Final = ("flux", "pot", "div")
PLOT_FILENAMES: Final[dict[str, str]] = {
    "flux": "flux.svg",
    "pot": "potential.svg",
    "div": "divergence.svg",
}

# Manufactured arctan solution parameters
ARCTAN_CENTER: Final = (1.25, -0.25)
ARCTAN_SLOPE: Final = 5.0
ARCTAN_RADIUS: Final = 1.0471975511965976  # pi / 3

# Trapezoid mesh: vertical sides 0.75h / 1.25h
TRAP_SHIFT: Final = 0.25
PROJECTION_COLUMNS: Final = (
    "family",
    "k",
    "n",
    "i",
    "h",
    "e_flux",
    "e_pot",
    "e_div",
    "slope_flux",
    "slope_pot",
    "slope_div",
)
