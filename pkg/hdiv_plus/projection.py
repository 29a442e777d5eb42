"""Commuting projections onto V_k^{n+} and U_{k+n}.

The flux projection acts on the master element through the inverse Piola
map. Edge coefficients match the normal-trace moments of degree <= k
edge by edge. Internal coefficients match the divergence in the range of
the internal divergences and the L2 moments against the divergence-free
internal subspace. Together these make projection commute with div.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve, null_space

from .const import DEFAULT_QUAD_BUMP, NULLSPACE_RCOND, UNIQUENESS_RATIO
from .convergence import ManufacturedSolution, element_error_squares, sum_error_squares
from .exceptions import ConfigurationError, SingularSystemError
from .geometry import GeoMap, edge_points, eval_map, jacobian, piola_pull, scaled_normal
from .helpers.logging_utils import get_summarizing_logger
from .mesh import Mesh2D, element_geomap
from .models import MESH_SHAPE, ErrorTriple, FluxField, ScalarField, SpaceConfig
from .quadrature import element_rule
from .spaces import NUM_EDGES, ReferenceData, ScalarBasis, reference_data

_LOGGER = get_summarizing_logger(__name__)

__all__ = [
    "FluxField",
    "ProjectionSystem",
    "ScalarField",
    "boundary_flux_residual",
    "build_projection_system",
    "de_rham_residual",
    "global_projection_errors",
    "project_flux",
    "project_scalar",
    "uniqueness_probe",
]


@dataclass(frozen=True, slots=True, eq=False)
class ProjectionSystem:
    """Factorized constraint blocks of the master-element flux projection."""

    config: SpaceConfig
    data: ReferenceData
    edge_mass: np.ndarray  # (k+1, k+1) Gram matrix of 1D edge functions
    edge_factor: tuple[np.ndarray, bool]
    divergence_tests: np.ndarray  # (ns - 1, N) weighted non-constant scalar members
    divergence_free: np.ndarray  # Z: (n_int, n_free)
    internal_factor: tuple[np.ndarray, np.ndarray] | None
    constraint_matrix: np.ndarray  # full homogeneous system (nf, nf)

    @property
    def n_edge(self) -> int:
        """Return the number of edge functions."""
        return self.data.basis.n_edge


def _mass_rows(data: ReferenceData) -> np.ndarray:
    """Return the L2 couplings of the internals against all members."""
    internal = data.basis.internal_indices
    return np.einsum("iqc,jqc,q->ij", data.values[internal], data.values, data.rule.weights)


def _edge_rows(data: ReferenceData) -> np.ndarray:
    weighted = data.edge_functions * data.edge_rule.weights
    return np.vstack([weighted @ traces.T for traces in data.edge_traces])


@lru_cache(maxsize=None)
def build_projection_system(
    config: SpaceConfig, bump: int = DEFAULT_QUAD_BUMP
) -> ProjectionSystem:
    """Assemble and factor the projection constraints of a configuration.

    Raises:
        SingularSystemError: if the internal constraint block is singular.
    """
    data = reference_data(config, bump)
    weights = data.edge_rule.weights
    edge_mass = (data.edge_functions * weights) @ data.edge_functions.T
    edge_factor = cho_factor(edge_mass)

    internal = data.basis.internal_indices
    n_int = len(internal)
    # Internal divergences have zero mean, so they are tested against the
    # non-constant potential members only
    tests = data.scalars[1:] * data.rule.weights
    div_rows = tests @ data.divs.T
    if n_int:
        free = null_space(div_rows[:, internal], rcond=NULLSPACE_RCOND)
    else:
        free = np.zeros((0, 0))
    mass_rows = free.T @ _mass_rows(data) if n_int else np.zeros((0, len(data.basis)))

    constraint = np.vstack([_edge_rows(data), div_rows, mass_rows])
    internal_factor = None
    if n_int:
        block = constraint[data.basis.n_edge :, internal]
        if not uniqueness_ratio_ok(block):
            raise SingularSystemError(f"{config.label()} internal projection block is singular")
        internal_factor = lu_factor(block)

    _LOGGER.debug(
        "Projection system %s: %d internal, %d divergence-free",
        config.label(),
        n_int,
        free.shape[1] if n_int else 0,
    )
    return ProjectionSystem(
        config, data, edge_mass, edge_factor, tests, free, internal_factor, constraint
    )


def _equilibrated(matrix: np.ndarray) -> np.ndarray:
    """Scale rows, then columns, to unit 2-norm; zero lines stay zero."""
    scaled = matrix.copy()
    for axis in (1, 0):
        norms = np.linalg.norm(scaled, axis=axis, keepdims=True)
        scaled = np.divide(scaled, norms, out=np.zeros_like(scaled), where=norms > 0.0)
    return scaled


def uniqueness_ratio_ok(matrix: np.ndarray) -> bool:
    """Return True when sigma_min > UNIQUENESS_RATIO * sigma_max after equilibration."""
    if matrix.size == 0:
        return True
    if matrix.shape[0] != matrix.shape[1]:
        return False
    singular = np.linalg.svd(_equilibrated(matrix), compute_uv=False)
    return bool(singular[-1] > UNIQUENESS_RATIO * singular[0])


def uniqueness_probe(system: ProjectionSystem) -> bool:
    """Return True iff zero constraint data forces the zero projection."""
    return uniqueness_ratio_ok(system.constraint_matrix)


def _pulled_back_edge(
    system: ProjectionSystem, q: FluxField, geomap: GeoMap, edge: int
) -> np.ndarray:
    """Master normal trace q_hat . N_hat at the edge quadrature points."""
    shape = system.config.shape
    master = edge_points(shape, edge, system.data.edge_rule.points[:, 0])
    q_hat = piola_pull(jacobian(geomap, master), q.value(eval_map(geomap, master)))
    return q_hat @ scaled_normal(shape, edge)


def _pulled_back(
    system: ProjectionSystem, q: FluxField, geomap: GeoMap
) -> tuple[np.ndarray, np.ndarray]:
    """Return q_hat (N, 2) and div_hat q_hat = J div q (N,) at element points."""
    points = system.data.rule.points
    jac = jacobian(geomap, points)
    physical = eval_map(geomap, points)
    return piola_pull(jac, q.value(physical)), jac.J * q.divergence(physical)


def project_flux(system: ProjectionSystem, q: FluxField, geomap: GeoMap) -> np.ndarray:
    """Return the coefficients of the projection of q over the local basis."""
    data = system.data
    basis = data.basis
    coeffs = np.zeros(len(basis))
    weighted = data.edge_functions * data.edge_rule.weights
    for edge in range(NUM_EDGES[basis.shape]):
        moments = weighted @ _pulled_back_edge(system, q, geomap, edge)
        coeffs[basis.edge_indices(edge)] = cho_solve(system.edge_factor, moments)

    if system.internal_factor is None:
        return coeffs

    weights = data.rule.weights
    internal = basis.internal_indices
    n_edge = system.n_edge
    q_hat, div_hat = _pulled_back(system, q, geomap)
    rest = q_hat - np.tensordot(coeffs[:n_edge], data.values[:n_edge], axes=1)
    rest_div = div_hat - coeffs[:n_edge] @ data.divs[:n_edge]
    div_moments = system.divergence_tests @ rest_div
    mass_moments = np.einsum("iqc,qc,q->i", data.values[internal], rest, weights)
    rhs = np.concatenate([div_moments, system.divergence_free.T @ mass_moments])
    coeffs[internal] = lu_solve(system.internal_factor, rhs)
    return coeffs


def project_scalar(
    basis: ScalarBasis,
    u: ScalarField,
    geomap: GeoMap,
    bump: int = DEFAULT_QUAD_BUMP,
) -> np.ndarray:
    """L2 projection onto the mapped scalar basis with measure J dK_hat."""
    rule = element_rule(basis.shape, 2 * basis.degree + 2 + bump)
    jac = jacobian(geomap, rule.points)
    values = basis.evaluate(rule.points)
    measure = rule.weights * jac.J
    gram = (values * measure) @ values.T
    moments = values @ (measure * u(eval_map(geomap, rule.points)))
    return cho_solve(cho_factor(gram), moments)


def de_rham_residual(system: ProjectionSystem, q: FluxField, geomap: GeoMap) -> float:
    """Largest |int div_hat(pi q - q_hat) phi| over the scalar basis members."""
    data = system.data
    coeffs = project_flux(system, q, geomap)
    _, div_hat = _pulled_back(system, q, geomap)
    defect = coeffs @ data.divs - div_hat
    return float(np.max(np.abs(data.scalars @ (data.rule.weights * defect))))


def boundary_flux_residual(system: ProjectionSystem, q: FluxField, geomap: GeoMap) -> float:
    """Largest per-edge |int (pi q - q_hat) . N_hat ds|."""
    data = system.data
    coeffs = project_flux(system, q, geomap)
    weights = data.edge_rule.weights
    worst = 0.0
    for edge, traces in enumerate(data.edge_traces):
        defect = coeffs @ traces - _pulled_back_edge(system, q, geomap, edge)
        worst = max(worst, abs(float(weights @ defect)))
    return worst


def global_projection_errors(
    mesh: Mesh2D,
    config: SpaceConfig,
    exact: ManufacturedSolution,
    bump: int = DEFAULT_QUAD_BUMP,
) -> ErrorTriple:
    """L2 errors of the projected exact flux, its divergence and the projected potential."""
    if MESH_SHAPE[mesh.family] is not config.shape:
        raise ConfigurationError(f"{config.family} space does not fit a {mesh.family} mesh")
    system = build_projection_system(config, bump)
    squares = []
    for eid in range(mesh.num_elements):
        geomap = element_geomap(mesh, eid)
        flux_coeffs = project_flux(system, exact.flux, geomap)
        pot_coeffs = project_scalar(system.data.scalar, exact.potential, geomap, bump)
        squares.append(
            element_error_squares(system.data, geomap, flux_coeffs, pot_coeffs, exact)
        )
    return sum_error_squares(squares)
