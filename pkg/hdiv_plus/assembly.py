"""Mixed Darcy assembly and static condensation.

Global system in flux coefficients sigma and potential coefficients u:

    [ A   -B^T ] [sigma]   [ g ]
    [ -B   0   ] [  u  ] = [ -f]

with A the K^{-1}-weighted flux mass matrix, B the divergence coupling,
g = -<u_D, v . n> on the boundary and f the source moments.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .const import DEFAULT_QUAD_BUMP, GRAM_RCOND_MIN, SPD_EIG_MIN
from .exceptions import ConfigurationError, PermeabilityError, SingularSystemError
from .geometry import GeoMap, edge_points, eval_map, jacobian
from .helpers.logging_utils import get_summarizing_logger
from .mesh import Mesh2D, element_geomap
from .models import MESH_SHAPE, ScalarField, SpaceConfig
from .solver import SparseMatrix, factor_and_solve
from .spaces import build_hdiv_basis, divergence_scalar_basis, reference_data

_LOGGER = get_summarizing_logger(__name__)

# Permeability tensor at physical points: (N, 2) -> (N, 2, 2)
Permeability = Callable[[np.ndarray], np.ndarray]


def _bubble_sign(j: int) -> int:
    return 1 if j % 2 else -1


@dataclass(frozen=True, slots=True, eq=False)
class DofMap:
    """Global numbering of flux and potential coefficients.

    Flux numbering: k + 1 dofs per edge (edge-major), then internal dofs
    element by element. ``flux_signs`` relates local and global
    coefficients: c_local[i] = flux_signs[e, i] * c_global[flux_dofs[e, i]].
    """

    config: SpaceConfig
    num_edges: int
    num_elements: int
    num_internal: int
    num_pot_local: int
    flux_dofs: np.ndarray  # (ne, nf)
    flux_signs: np.ndarray  # (ne, nf)
    pot_dofs: np.ndarray  # (ne, npot)

    @property
    def dofs_per_edge(self) -> int:
        """Return k + 1."""
        return self.config.k + 1

    @property
    def num_edge_dofs(self) -> int:
        """Return the number of shared edge-flux dofs."""
        return self.dofs_per_edge * self.num_edges

    @property
    def num_flux(self) -> int:
        """Return the total number of flux dofs."""
        return self.num_edge_dofs + self.num_elements * self.num_internal

    @property
    def num_pot(self) -> int:
        """Return the total number of potential dofs."""
        return self.num_elements * self.num_pot_local

    @property
    def num_dofs(self) -> int:
        """Return the size of the uncondensed system."""
        return self.num_flux + self.num_pot

    @property
    def num_condensed(self) -> int:
        """Return the size of the condensed system."""
        return self.num_edge_dofs + self.num_elements

    def local_flux(self, element_id: int, flux: np.ndarray) -> np.ndarray:
        """Return local flux coefficients of an element."""
        return self.flux_signs[element_id] * flux[self.flux_dofs[element_id]]

    def local_pot(self, element_id: int, pot: np.ndarray) -> np.ndarray:
        """Return local potential coefficients of an element."""
        return pot[self.pot_dofs[element_id]]


def build_dof_map(mesh: Mesh2D, config: SpaceConfig) -> DofMap:
    """Number the dofs of V_k^{n+} x U_{k+n} on an oriented mesh.

    A local edge traversed against the global edge direction swaps the two
    vertex functions and flips signs so that the normal trace seen from
    both neighbours is the same global function.
    """
    if MESH_SHAPE[mesh.family] is not config.shape:
        raise ConfigurationError(
            f"{config.family} space requires {config.shape} elements, mesh is {mesh.family}"
        )
    basis = build_hdiv_basis(config)
    per_edge = config.k + 1
    n_int = basis.n_internal
    n_pot = len(divergence_scalar_basis(config))
    n_el = mesh.num_elements

    flux_dofs = np.empty((n_el, len(basis)), dtype=int)
    flux_signs = np.ones((n_el, len(basis)))
    first_internal = per_edge * mesh.num_edges
    for eid, element in enumerate(mesh.elements):
        for local, (gid, sign) in enumerate(zip(element.edge_ids, element.edge_signs)):
            for j, idx in enumerate(basis.edge_indices(local)):
                if sign > 0:
                    flux_dofs[eid, idx] = gid * per_edge + j
                elif j < 2:
                    flux_dofs[eid, idx] = gid * per_edge + (1 - j)
                    flux_signs[eid, idx] = -1.0
                else:
                    flux_dofs[eid, idx] = gid * per_edge + j
                    flux_signs[eid, idx] = _bubble_sign(j)
        flux_dofs[eid, basis.n_edge :] = first_internal + eid * n_int + np.arange(n_int)

    pot_dofs = np.arange(n_el * n_pot).reshape(n_el, n_pot)
    return DofMap(
        config, mesh.num_edges, n_el, n_int, n_pot, flux_dofs, flux_signs, pot_dofs
    )


@dataclass(frozen=True, slots=True)
class ElementBlocks:
    """Local blocks A_K (nf x nf), B_K (npot x nf) and f_K (npot,)."""

    A: np.ndarray
    B: np.ndarray
    f: np.ndarray


def _inverse_permeability(permeability: Permeability, points: np.ndarray) -> np.ndarray:
    tensor = np.asarray(permeability(points), dtype=float)
    if not np.allclose(tensor, np.swapaxes(tensor, 1, 2), atol=1e-14):
        raise PermeabilityError("permeability sample is not symmetric")
    if np.any(np.linalg.eigvalsh(tensor) <= SPD_EIG_MIN):
        raise PermeabilityError("permeability sample is not positive definite")
    return np.linalg.inv(tensor)


def assemble_element(
    geomap: GeoMap,
    config: SpaceConfig,
    permeability: Permeability | None = None,
    source: ScalarField | None = None,
    bump: int = DEFAULT_QUAD_BUMP,
) -> ElementBlocks:
    """Assemble the local mixed blocks by mapped quadrature.

    Args:
        geomap: Geometric map of the element.
        config: Space configuration.
        permeability: SPD tensor field; ``None`` means identity.
        source: Source term f; ``None`` means zero.
        bump: Extra quadrature degree over the polynomial exactness.

    Returns:
        Blocks with A[i, j] = int K^{-1} v_i . v_j, B[m, j] = int phi_m div v_j
        and f[m] = int f phi_m.
    """
    data = reference_data(config, bump)
    weights = data.rule.weights
    jac = jacobian(geomap, data.rule.points)
    # Piola: v = DF v_hat / J and dK = J dK_hat leave a single 1/J factor
    pushed = np.einsum("qij,fqj->fqi", jac.DF, data.values)
    physical = eval_map(geomap, data.rule.points)
    if permeability is None:
        A = np.einsum("fqi,gqi,q->fg", pushed, pushed, weights / jac.J)
    else:
        k_inv = _inverse_permeability(permeability, physical)
        A = np.einsum("fqi,qij,gqj,q->fg", pushed, k_inv, pushed, weights / jac.J)
    A = 0.5 * (A + A.T)
    B = np.einsum("mq,fq,q->mf", data.scalars, data.divs, weights)
    if source is None:
        f = np.zeros(len(data.scalar))
    else:
        f = data.scalars @ (weights * jac.J * source(physical))
    return ElementBlocks(A, B, f)


def assemble_dirichlet(
    mesh: Mesh2D,
    dof_map: DofMap,
    boundary_potential: ScalarField,
    bump: int = DEFAULT_QUAD_BUMP,
) -> np.ndarray:
    """Return g with g_j = -int_{dOmega} u_D v_j . n ds on boundary-edge dofs."""
    config = dof_map.config
    data = reference_data(config, bump)
    weighted = data.edge_functions * data.edge_rule.weights
    s = data.edge_rule.points[:, 0]
    g = np.zeros(dof_map.num_flux)
    per_edge = dof_map.dofs_per_edge
    for gid in mesh.boundary_edge_ids():
        eid = mesh.edges[gid].element_ids[0]
        local = mesh.elements[eid].edge_ids.index(gid)
        physical = eval_map(element_geomap(mesh, eid), edge_points(config.shape, local, s))
        g[gid * per_edge : (gid + 1) * per_edge] -= weighted @ boundary_potential(physical)
    return g


@dataclass(frozen=True, slots=True, eq=False)
class MixedSystem:
    """Assembled global mixed system together with its element blocks."""

    mesh: Mesh2D
    dof_map: DofMap
    blocks: tuple[ElementBlocks, ...]
    dirichlet: np.ndarray
    matrix: SparseMatrix
    rhs: np.ndarray


def assemble_system(
    mesh: Mesh2D,
    config: SpaceConfig,
    source: ScalarField,
    boundary_potential: ScalarField,
    permeability: Permeability | None = None,
    bump: int = DEFAULT_QUAD_BUMP,
) -> MixedSystem:
    """Assemble the symmetric indefinite mixed system on a mesh."""
    dof_map = build_dof_map(mesh, config)
    n_flux = dof_map.num_flux
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    rhs = np.zeros(dof_map.num_dofs)
    blocks = []
    for eid in range(mesh.num_elements):
        block = assemble_element(
            element_geomap(mesh, eid), config, permeability, source, bump
        )
        blocks.append(block)
        dofs = dof_map.flux_dofs[eid]
        signs = dof_map.flux_signs[eid]
        pots = n_flux + dof_map.pot_dofs[eid]

        signed_a = signs[:, None] * block.A * signs[None, :]
        signed_b = block.B * signs[None, :]
        rows += [np.repeat(dofs, dofs.size), np.repeat(pots, dofs.size)]
        cols += [np.tile(dofs, dofs.size), np.tile(dofs, pots.size)]
        vals += [signed_a.ravel(), -signed_b.ravel()]
        rows.append(np.tile(dofs, pots.size))
        cols.append(np.repeat(pots, dofs.size))
        vals.append(-signed_b.ravel())
        rhs[pots] -= block.f

    g = assemble_dirichlet(mesh, dof_map, boundary_potential, bump)
    rhs[:n_flux] += g
    matrix = SparseMatrix.from_triplets(
        np.concatenate(rows),
        np.concatenate(cols),
        np.concatenate(vals),
        dof_map.num_dofs,
        symmetric=True,
    )
    _LOGGER.debug(
        "Assembled %s on %s mesh (h=%g): %d flux + %d potential dofs",
        config.label(),
        mesh.family,
        mesh.h,
        n_flux,
        dof_map.num_pot,
    )
    return MixedSystem(mesh, dof_map, tuple(blocks), g, matrix, rhs)


@dataclass(frozen=True, slots=True, eq=False)
class LocalRecovery:
    """Recovers eliminated unknowns: x_e = L_ee^{-1} (r_e - L_ek x_k)."""

    factor: tuple[np.ndarray, np.ndarray] | None
    coupling: np.ndarray  # L_ek
    rhs: np.ndarray  # r_e

    def recover(self, kept: np.ndarray) -> np.ndarray:
        """Return the eliminated unknowns from the kept local unknowns."""
        if self.factor is None:
            return np.zeros(0)
        return lu_solve(self.factor, self.rhs - self.coupling @ kept)


@dataclass(frozen=True, slots=True, eq=False)
class CondensedSystem:
    """Edge fluxes plus one constant potential per element."""

    system: MixedSystem
    matrix: SparseMatrix
    rhs: np.ndarray
    recovery: tuple[LocalRecovery, ...]

    @property
    def dimension(self) -> int:
        """Return the number of global unknowns."""
        return self.matrix.dimension


def _local_partition(n_edge: int, nf: int, n_pot: int) -> tuple[np.ndarray, np.ndarray]:
    kept = np.concatenate([np.arange(n_edge), [nf]])
    eliminated = np.concatenate([np.arange(n_edge, nf), np.arange(nf + 1, nf + n_pot)])
    return kept.astype(int), eliminated.astype(int)


def condense(system: MixedSystem) -> CondensedSystem:
    """Eliminate internal fluxes and higher potential modes element by element.

    Raises:
        SingularSystemError: if a local elimination block is singular.
    """
    dof_map = system.dof_map
    basis = build_hdiv_basis(dof_map.config)
    nf, n_edge = len(basis), basis.n_edge
    kept, eliminated = _local_partition(n_edge, nf, dof_map.num_pot_local)

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    rhs = np.zeros(dof_map.num_condensed)
    rhs[: dof_map.num_edge_dofs] = system.dirichlet[: dof_map.num_edge_dofs]
    recovery = []
    for eid, block in enumerate(system.blocks):
        local = np.block(
            [[block.A, -block.B.T], [-block.B, np.zeros((block.B.shape[0],) * 2)]]
        )
        local_rhs = np.concatenate([np.zeros(nf), -block.f])
        l_kk = local[np.ix_(kept, kept)]
        r_k = local_rhs[kept]
        if eliminated.size:
            l_ee = local[np.ix_(eliminated, eliminated)]
            l_ek = local[np.ix_(eliminated, kept)]
            r_e = local_rhs[eliminated]
            cond = np.linalg.cond(l_ee)
            if not np.isfinite(cond) or 1.0 / cond < GRAM_RCOND_MIN:
                raise SingularSystemError(
                    f"singular local block on element {eid} (condition {cond:.3e})"
                )
            factor = lu_factor(l_ee)
            schur = l_kk - l_ek.T @ lu_solve(factor, l_ek)
            r_k = r_k - l_ek.T @ lu_solve(factor, r_e)
            recovery.append(LocalRecovery(factor, l_ek, r_e))
        else:
            schur = l_kk
            recovery.append(LocalRecovery(None, np.zeros((0, kept.size)), np.zeros(0)))

        dofs = np.append(dof_map.flux_dofs[eid, :n_edge], dof_map.num_edge_dofs + eid)
        signs = np.append(dof_map.flux_signs[eid, :n_edge], 1.0)
        rows.append(np.repeat(dofs, dofs.size))
        cols.append(np.tile(dofs, dofs.size))
        vals.append((signs[:, None] * schur * signs[None, :]).ravel())
        np.add.at(rhs, dofs, signs * r_k)

    matrix = SparseMatrix.from_triplets(
        np.concatenate(rows),
        np.concatenate(cols),
        np.concatenate(vals),
        dof_map.num_condensed,
        symmetric=True,
    )
    _LOGGER.debug(
        "Condensed %d unknowns to %d", dof_map.num_dofs, dof_map.num_condensed
    )
    return CondensedSystem(system, matrix, rhs, tuple(recovery))


@dataclass(frozen=True, slots=True, eq=False)
class MixedSolution:
    """Global flux and potential coefficients."""

    dof_map: DofMap
    flux: np.ndarray
    pot: np.ndarray

    def local_flux(self, element_id: int) -> np.ndarray:
        """Return the local flux coefficients of an element."""
        return self.dof_map.local_flux(element_id, self.flux)

    def local_pot(self, element_id: int) -> np.ndarray:
        """Return the local potential coefficients of an element."""
        return self.dof_map.local_pot(element_id, self.pot)


def solve_mixed(system: MixedSystem, condensed: bool = True) -> MixedSolution:
    """Solve the mixed system directly or through static condensation."""
    dof_map = system.dof_map
    if not condensed:
        x = factor_and_solve(system.matrix, system.rhs)
        return MixedSolution(dof_map, x[: dof_map.num_flux], x[dof_map.num_flux :])

    reduced = condense(system)
    xk = factor_and_solve(reduced.matrix, reduced.rhs)
    n_edge = build_hdiv_basis(dof_map.config).n_edge
    n_int = dof_map.num_internal
    flux = np.zeros(dof_map.num_flux)
    pot = np.zeros(dof_map.num_pot)
    flux[: dof_map.num_edge_dofs] = xk[: dof_map.num_edge_dofs]
    for eid, recovery in enumerate(reduced.recovery):
        edge_dofs = dof_map.flux_dofs[eid, :n_edge]
        kept = np.append(
            dof_map.flux_signs[eid, :n_edge] * xk[edge_dofs],
            xk[dof_map.num_edge_dofs + eid],
        )
        eliminated = recovery.recover(kept)
        flux[dof_map.flux_dofs[eid, n_edge:]] = eliminated[:n_int]
        pot[dof_map.pot_dofs[eid]] = np.concatenate([[kept[-1]], eliminated[n_int:]])
    return MixedSolution(dof_map, flux, pot)


def flux_jump(mesh: Mesh2D, solution: MixedSolution, bump: int = DEFAULT_QUAD_BUMP) -> float:
    """Largest jump of the global normal flux across interior edges."""
    data = reference_data(solution.dof_map.config, bump)
    worst = 0.0
    for gid, edge in enumerate(mesh.edges):
        if edge.boundary:
            continue
        sides = []
        for eid in edge.element_ids:
            element = mesh.elements[eid]
            local = element.edge_ids.index(gid)
            sign = element.edge_signs[local]
            trace = solution.local_flux(eid) @ data.edge_traces[local]
            # Gauss nodes are symmetric: reversing samples evaluates at -s
            sides.append(sign * (trace if sign > 0 else trace[::-1]))
        worst = max(worst, float(np.max(np.abs(sides[0] - sides[1]))))
    return worst


def conservation_defect(
    mesh: Mesh2D,
    solution: MixedSolution,
    source: ScalarField,
    bump: int = DEFAULT_QUAD_BUMP,
) -> float:
    """Largest |int_K div sigma_h - int_K f| over the elements."""
    data = reference_data(solution.dof_map.config, bump)
    weights = data.rule.weights
    div_moments = data.divs @ weights
    worst = 0.0
    for eid in range(mesh.num_elements):
        geomap = element_geomap(mesh, eid)
        jac = jacobian(geomap, data.rule.points)
        source_integral = float(
            np.sum(weights * jac.J * source(eval_map(geomap, data.rule.points)))
        )
        worst = max(worst, abs(float(solution.local_flux(eid) @ div_moments) - source_integral))
    return worst
