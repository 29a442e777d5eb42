"""Tests for the commuting projections."""

from __future__ import annotations

import numpy as np
import pytest

from hdiv_plus.convergence import exact_fields, linear_fields
from hdiv_plus.geometry import GeoMap, eval_map, jacobian, piola_push
from hdiv_plus.mesh import build_mesh
from hdiv_plus.models import ElementShape, FluxField, MeshFamily, SpaceConfig, SpaceFamily
from hdiv_plus.projection import (
    boundary_flux_residual,
    build_projection_system,
    de_rham_residual,
    global_projection_errors,
    project_flux,
    project_scalar,
    uniqueness_probe,
    uniqueness_ratio_ok,
)
from hdiv_plus.spaces import eval_basis

CONFIGS = [
    SpaceConfig(family, k, n)
    for family in SpaceFamily
    for k in (1, 2, 3, 4)
    for n in (0, 1, 2, 3)
]


def _maps() -> dict[ElementShape, GeoMap]:
    return {
        ElementShape.QUADRILATERAL: GeoMap.from_corners(
            np.array([[0.0, 0.0], [0.25, 0.0], [0.25, 0.3125], [0.0, 0.1875]])
        ),
        ElementShape.TRIANGLE: GeoMap.from_corners(
            np.array([[0.1, 0.2], [0.6, 0.25], [0.3, 0.7]])
        ),
    }


def _member_field(config: SpaceConfig, geomap: GeoMap, coeffs: np.ndarray) -> FluxField:
    """Pushed discrete field sum c_i v_i, evaluated through the inverse map."""
    system = build_projection_system(config)
    basis = system.data.basis

    def master_points(x: np.ndarray) -> np.ndarray:
        guess = np.full_like(x, 0.0 if config.shape is ElementShape.QUADRILATERAL else 1 / 3)
        for _ in range(40):
            res = eval_map(geomap, guess) - x
            guess = guess - np.einsum("qij,qj->qi", jacobian(geomap, guess).DF_inv, res)
        return guess

    def value(x: np.ndarray) -> np.ndarray:
        pts = master_points(x)
        values, _ = eval_basis(basis, pts)
        return piola_push(jacobian(geomap, pts), np.tensordot(coeffs, values, axes=1))

    def divergence(x: np.ndarray) -> np.ndarray:
        pts = master_points(x)
        _, divs = eval_basis(basis, pts)
        return (coeffs @ divs) / jacobian(geomap, pts).J

    return FluxField(value, divergence)


def _polynomial_field(degree: int, rng: np.random.Generator) -> FluxField:
    cx = rng.normal(size=(degree + 1, degree + 1))
    cy = rng.normal(size=(degree + 1, degree + 1))
    mask = np.add.outer(np.arange(degree + 1), np.arange(degree + 1)) <= degree
    cx, cy = cx * mask, cy * mask

    def value(x: np.ndarray) -> np.ndarray:
        return np.column_stack(
            [
                np.polynomial.polynomial.polyval2d(x[:, 0], x[:, 1], cx),
                np.polynomial.polynomial.polyval2d(x[:, 0], x[:, 1], cy),
            ]
        )

    def divergence(x: np.ndarray) -> np.ndarray:
        dx = np.polynomial.polynomial.polyder(cx, axis=0)
        dy = np.polynomial.polynomial.polyder(cy, axis=1)
        return np.polynomial.polynomial.polyval2d(
            x[:, 0], x[:, 1], dx
        ) + np.polynomial.polynomial.polyval2d(x[:, 0], x[:, 1], dy)

    return FluxField(value, divergence)


@pytest.mark.parametrize("config", CONFIGS, ids=lambda c: c.label())
def test_uniqueness(config: SpaceConfig) -> None:
    assert uniqueness_probe(build_projection_system(config))


def test_uniqueness_enriched_bdm() -> None:
    assert uniqueness_probe(build_projection_system(SpaceConfig(SpaceFamily.BDM, 2, 3)))


def test_uniqueness_negative_control() -> None:
    system = build_projection_system(SpaceConfig(SpaceFamily.RT, 1))
    doctored = system.constraint_matrix.copy()
    internal = system.data.basis.internal_indices
    doctored[:, internal[1]] = doctored[:, internal[0]]
    assert not uniqueness_ratio_ok(doctored)


@pytest.mark.parametrize("config", CONFIGS, ids=lambda c: c.label())
def test_reproduces_members(config: SpaceConfig, rng: np.random.Generator) -> None:
    geomap = _maps()[config.shape]
    system = build_projection_system(config)
    coeffs = rng.normal(size=len(system.data.basis))
    projected = project_flux(system, _member_field(config, geomap, coeffs), geomap)
    np.testing.assert_allclose(projected, coeffs, rtol=1e-9, atol=1e-9 * np.abs(coeffs).max())


@pytest.mark.parametrize("family", list(SpaceFamily))
def test_constant_field_reproduced(family: SpaceFamily) -> None:
    config = SpaceConfig(family, 1)
    geomap = _maps()[config.shape]
    system = build_projection_system(config)
    field = linear_fields(0.0, -1.0, 0.0).flux
    coeffs = project_flux(system, field, geomap)
    pts = system.data.rule.points
    values = piola_push(jacobian(geomap, pts), np.tensordot(coeffs, system.data.values, axes=1))
    np.testing.assert_allclose(values, np.tile([1.0, 0.0], (len(pts), 1)), atol=1e-12)


@pytest.mark.parametrize("config", CONFIGS, ids=lambda c: c.label())
def test_idempotent(config: SpaceConfig, rng: np.random.Generator) -> None:
    geomap = _maps()[config.shape]
    system = build_projection_system(config)
    first = project_flux(system, _polynomial_field(config.order + 1, rng), geomap)
    second = project_flux(system, _member_field(config, geomap, first), geomap)
    np.testing.assert_allclose(second, first, atol=1e-9 * max(1.0, np.abs(first).max()))


@pytest.mark.parametrize("config", CONFIGS, ids=lambda c: c.label())
def test_de_rham_commutes(config: SpaceConfig, rng: np.random.Generator) -> None:
    geomap = _maps()[ElementShape.TRIANGLE] if config.shape is ElementShape.TRIANGLE else (
        GeoMap.from_corners(np.array([[0.0, 0.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]))
    )
    system = build_projection_system(config)
    field = _polynomial_field(config.order, rng)
    assert de_rham_residual(system, field, geomap) <= 1e-8
    assert boundary_flux_residual(system, field, geomap) <= 1e-9


def test_de_rham_arctan_on_trapezoid() -> None:
    config = SpaceConfig(SpaceFamily.RT, 2, 1)
    h = 0.125
    geomap = GeoMap.from_corners(
        np.array([[0.5, 0.5], [0.5 + h, 0.5], [0.5 + h, 0.5 + 1.25 * h], [0.5, 0.5 + 0.75 * h]])
    )
    system = build_projection_system(config)
    assert de_rham_residual(system, exact_fields().flux, geomap) <= 1e-7


def test_edge_internal_decoupling(rng: np.random.Generator) -> None:
    config = SpaceConfig(SpaceFamily.BDM, 2, 1)
    geomap = _maps()[config.shape]
    system = build_projection_system(config)
    base = _polynomial_field(2, rng)
    bubble = np.zeros(len(system.data.basis))
    bubble[system.data.basis.internal_indices[-1]] = 1.0
    bump = _member_field(config, geomap, bubble)
    perturbed = FluxField(
        lambda x: base.value(x) + bump.value(x),
        lambda x: base.divergence(x) + bump.divergence(x),
    )
    n_edge = system.n_edge
    np.testing.assert_allclose(
        project_flux(system, perturbed, geomap)[:n_edge],
        project_flux(system, base, geomap)[:n_edge],
        atol=1e-12,
    )


@pytest.mark.parametrize("family", list(SpaceFamily))
def test_project_scalar(family: SpaceFamily, rng: np.random.Generator) -> None:
    config = SpaceConfig(family, 2, 1)
    geomap = _maps()[config.shape]
    scalar = build_projection_system(config).data.scalar
    coeffs = project_scalar(scalar, lambda x: np.full(len(x), 3.0), geomap)
    np.testing.assert_allclose(coeffs[0] * scalar.members[0](np.zeros((1, 2))), [3.0])
    np.testing.assert_allclose(coeffs[1:], 0.0, atol=1e-12)

    target = rng.normal(size=len(scalar))

    def member(x: np.ndarray) -> np.ndarray:
        guess = np.zeros_like(x)
        for _ in range(40):
            res = eval_map(geomap, guess) - x
            guess = guess - np.einsum("qij,qj->qi", jacobian(geomap, guess).DF_inv, res)
        return target @ scalar.evaluate(guess)

    np.testing.assert_allclose(project_scalar(scalar, member, geomap), target, atol=1e-10)


def test_projection_cache() -> None:
    config = SpaceConfig(SpaceFamily.RT, 1, 1)
    assert build_projection_system(config) is build_projection_system(config)


def test_global_projection_errors_shrink() -> None:
    config = SpaceConfig(SpaceFamily.RT, 1, 1)
    exact = exact_fields()
    coarse = global_projection_errors(build_mesh(MeshFamily.RECT, 2), config, exact)
    fine = global_projection_errors(build_mesh(MeshFamily.RECT, 3), config, exact)
    assert fine.flux < coarse.flux
    assert fine.div < coarse.div
    assert fine.pot < coarse.pot


@pytest.mark.slow
@pytest.mark.parametrize(
    ("mesh_family", "config", "div_order", "levels"),
    [
        (MeshFamily.RECT, SpaceConfig(SpaceFamily.RT, 1, 1), 3, (4, 5)),
        (MeshFamily.TRAP, SpaceConfig(SpaceFamily.RT, 1, 1), 2, (6, 7)),
        (MeshFamily.TRI, SpaceConfig(SpaceFamily.BDM, 2, 1), 3, (4, 5)),
    ],
)
def test_projection_slopes(
    mesh_family: MeshFamily, config: SpaceConfig, div_order: int, levels: tuple[int, int]
) -> None:
    exact = exact_fields()
    errors = [global_projection_errors(build_mesh(mesh_family, i), config, exact) for i in levels]
    flux = np.log2(errors[-2].flux / errors[-1].flux)
    div = np.log2(errors[-2].div / errors[-1].div)
    assert flux == pytest.approx(config.k + 1, abs=0.2)
    assert div == pytest.approx(div_order, abs=0.2)
