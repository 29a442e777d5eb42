"""Tests for manufactured solutions, error norms and order fitting."""

from __future__ import annotations

import numpy as np
import pytest

from hdiv_plus.assembly import assemble_system, solve_mixed
from hdiv_plus.convergence import (
    element_error_squares,
    exact_fields,
    fit_orders,
    l2_errors,
    linear_fields,
)
from hdiv_plus.exceptions import ConfigurationError
from hdiv_plus.geometry import jacobian
from hdiv_plus.mesh import build_mesh, element_geomap, renumber_edges
from hdiv_plus.models import (
    ErrorTriple,
    LevelErrors,
    MeshFamily,
    SpaceConfig,
    SpaceFamily,
    StudyResult,
)
from hdiv_plus.projection import global_projection_errors
from hdiv_plus.spaces import reference_data


def _result(errors: list[float], h0: float = 0.25) -> StudyResult:
    result = StudyResult(MeshFamily.RECT, SpaceConfig(SpaceFamily.RT, 1))
    for idx, e in enumerate(errors):
        result.levels.append(LevelErrors(idx + 2, h0 / 2**idx, ErrorTriple(e, e, e)))
    return result


def _solve(mesh_family: MeshFamily, config: SpaceConfig, level: int) -> ErrorTriple:
    mesh = build_mesh(mesh_family, level)
    exact = exact_fields()
    system = assemble_system(mesh, config, exact.source, exact.potential)
    return l2_errors(mesh, solve_mixed(system), exact)


def test_potential_on_contour() -> None:
    exact = exact_fields()
    point = np.array([[1.25 - np.pi / 3 * np.cos(0.7), -0.25 + np.pi / 3 * np.sin(0.7)]])
    assert exact.potential(point)[0] == pytest.approx(np.pi / 2)


def test_gradient_matches_finite_differences() -> None:
    exact = exact_fields()
    point = np.array([[0.5, 0.5]])
    eps = 1e-6
    fd = [
        (exact.potential(point + eps * e) - exact.potential(point - eps * e))[0] / (2 * eps)
        for e in np.eye(2)
    ]
    np.testing.assert_allclose(exact.gradient(point)[0], fd, atol=1e-6)
    np.testing.assert_allclose(exact.flux.value(point), -exact.gradient(point), atol=1e-12)


def test_source_matches_finite_difference_laplacian(rng: np.random.Generator) -> None:
    exact = exact_fields()
    eps = 1e-4
    for point in [np.array([[0.5, 0.5]]), *rng.uniform(0.05, 0.95, (4, 1, 2))]:
        laplacian = sum(
            exact.potential(point + eps * e) - 2 * exact.potential(point) + exact.potential(point - eps * e)
            for e in np.eye(2)
        ) / eps**2
        assert exact.source(point)[0] == pytest.approx(-laplacian[0], abs=1e-4)

        div = sum(
            (exact.flux.value(point + 1e-6 * e)[0, i] - exact.flux.value(point - 1e-6 * e)[0, i])
            / 2e-6
            for i, e in enumerate(np.eye(2))
        )
        assert exact.source(point)[0] == pytest.approx(div, abs=1e-6)


def test_linear_fields() -> None:
    exact = linear_fields(1.0, 2.0, 3.0)
    pts = np.array([[0.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(exact.potential(pts), [1.0, 6.0])
    np.testing.assert_allclose(exact.flux.value(pts), [[-2.0, -3.0], [-2.0, -3.0]])
    np.testing.assert_allclose(exact.source(pts), 0.0)


@pytest.mark.parametrize(("errors", "slope"), [([1, 1 / 4, 1 / 16], 2.0), ([1, 1 / 8, 1 / 64], 3.0)])
def test_fit_geometric_decay(errors: list[float], slope: float) -> None:
    report = fit_orders(_result(errors))
    for kind in ("flux", "pot", "div"):
        assert report.least_squares[kind] == pytest.approx(slope)
        np.testing.assert_allclose(report.pairwise[kind], slope)
    assert not report.warnings


def test_fit_reports_non_monotone() -> None:
    report = fit_orders(_result([1.0, 0.5, 0.6, 0.1]))
    assert len(report.warnings) == 3


def test_fit_requires_two_levels() -> None:
    with pytest.raises(ConfigurationError):
        fit_orders(_result([1.0]))


def test_fit_rejects_increasing_h() -> None:
    result = _result([1.0, 0.5])
    result.levels.reverse()
    with pytest.raises(ConfigurationError):
        fit_orders(result)


def test_errors_invariant_under_edge_renumbering(rng: np.random.Generator) -> None:
    mesh = build_mesh(MeshFamily.TRI, 2)
    config = SpaceConfig(SpaceFamily.BDM, 2, 1)
    exact = exact_fields()
    shuffled = renumber_edges(mesh, rng.permutation(mesh.num_edges))
    errors = []
    for candidate in (mesh, shuffled):
        system = assemble_system(candidate, config, exact.source, exact.potential)
        errors.append(l2_errors(candidate, solve_mixed(system), exact))
    for kind in ("flux", "pot", "div"):
        assert getattr(errors[1], kind) == pytest.approx(getattr(errors[0], kind), abs=1e-10)


@pytest.mark.slow
@pytest.mark.parametrize(
    ("mesh_family", "family", "k", "flux_spread"),
    [
        (MeshFamily.RECT, SpaceFamily.RT, 1, 0.05),
        (MeshFamily.TRAP, SpaceFamily.RT, 2, 0.05),
        # Richer P_{k+n} interiors still lower the constant behind degree-k traces
        (MeshFamily.TRI, SpaceFamily.BDM, 2, 0.3),
    ],
)
def test_enrichment_improves_divergence_only(
    mesh_family: MeshFamily, family: SpaceFamily, k: int, flux_spread: float
) -> None:
    results = [_solve(mesh_family, SpaceConfig(family, k, n), 4) for n in range(4)]
    divs = [r.div for r in results]
    assert all(coarse > fine for coarse, fine in zip(divs, divs[1:]))
    enriched = [r.flux for r in results[1:]]
    assert max(enriched) <= results[0].flux
    for flux in enriched[1:]:
        assert flux == pytest.approx(enriched[0], rel=flux_spread)


@pytest.mark.parametrize(
    ("mesh_family", "config"),
    [
        (MeshFamily.RECT, SpaceConfig(SpaceFamily.RT, 1, 1)),
        (MeshFamily.TRAP, SpaceConfig(SpaceFamily.RT, 1, 0)),
        (MeshFamily.TRI, SpaceConfig(SpaceFamily.BDM, 2, 1)),
    ],
)
def test_divergence_error_matches_projection(mesh_family: MeshFamily, config: SpaceConfig) -> None:
    mixed = _solve(mesh_family, config, 3)
    projected = global_projection_errors(build_mesh(mesh_family, 3), config, exact_fields())
    assert mixed.div == pytest.approx(projected.div, rel=0.1)


def _slopes(
    mesh_family: MeshFamily, config: SpaceConfig, levels: range = range(2, 6)
) -> dict[str, float]:
    result = StudyResult(mesh_family, config)
    for level in levels:
        errors = _solve(mesh_family, config, level)
        result.levels.append(LevelErrors(level, 2.0**-level, errors))
    return fit_orders(result).least_squares


@pytest.mark.slow
@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("n", [0, 1, 2])
def test_rect_rates(k: int, n: int) -> None:
    slopes = _slopes(MeshFamily.RECT, SpaceConfig(SpaceFamily.RT, k, n))
    assert slopes["flux"] == pytest.approx(k + 1, abs=0.2)
    assert slopes["pot"] == pytest.approx(k + 1 if n == 0 else k + 2, abs=0.2)
    assert slopes["div"] == pytest.approx(k + n + 1, abs=0.2)


@pytest.mark.slow
@pytest.mark.parametrize(("n", "pot", "div"), [(0, 2, 2), (1, 3, 3), (2, 4, 4)])
def test_tri_rates(n: int, pot: int, div: int) -> None:
    slopes = _slopes(MeshFamily.TRI, SpaceConfig(SpaceFamily.BDM, 2, n))
    assert slopes["flux"] == pytest.approx(3, abs=0.2)
    assert slopes["pot"] == pytest.approx(pot, abs=0.2)
    assert slopes["div"] == pytest.approx(div, abs=0.2)


@pytest.mark.slow
@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_trap_rates(k: int, n: int) -> None:
    # Fit where the h^k divergence term has taken over
    slopes = _slopes(MeshFamily.TRAP, SpaceConfig(SpaceFamily.RT, k, n), range(5, 8))
    assert slopes["flux"] == pytest.approx(k + 1, abs=0.2)
    assert slopes["div"] == pytest.approx(k if n == 0 else k + n, abs=0.2)


def test_element_divergence_is_piola_scaled() -> None:
    data = reference_data(SpaceConfig(SpaceFamily.RT, 1, 1))
    geomap = element_geomap(build_mesh(MeshFamily.TRAP, 1), 0)
    member = int(np.argmax(np.abs(data.divs).sum(axis=1)))
    coeffs = np.zeros(len(data.basis))
    coeffs[member] = 1.0
    _, _, div_sq = element_error_squares(
        data, geomap, coeffs, np.zeros(len(data.scalars)), linear_fields()
    )
    J = jacobian(geomap, data.rule.points).J
    # integral of (div_hat / J)^2 over the physical cell
    expected = float(data.rule.weights @ (data.divs[member] ** 2 / J))
    assert div_sq == pytest.approx(expected, rel=1e-12)
    assert np.ptp(J) > 0
