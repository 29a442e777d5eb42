"""Manufactured solutions, L2 error norms and convergence-order fitting."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import fsum, pi, sqrt

import numpy as np
from scipy.stats import linregress

from .assembly import MixedSolution
from .const import (
    ARCTAN_CENTER,
    ARCTAN_RADIUS,
    ARCTAN_SLOPE,
    DEFAULT_QUAD_BUMP,
    ERROR_KINDS,
    FIT_LEVELS,
)
from .exceptions import ConfigurationError
from .geometry import GeoMap, eval_map, jacobian, piola_div, piola_push
from .helpers.logging_utils import get_summarizing_logger
from .mesh import Mesh2D, element_geomap
from .models import ErrorTriple, FluxField, ScalarField, StudyResult
from .spaces import ReferenceData, reference_data

_LOGGER = get_summarizing_logger(__name__)


@dataclass(frozen=True, slots=True)
class ManufacturedSolution:
    """Exact potential u, its gradient and the flux sigma = -grad u with div sigma = f."""

    name: str
    potential: ScalarField
    gradient: ScalarField  # (N, 2) -> (N, 2)
    flux: FluxField
    parameters: dict[str, float] = field(default_factory=dict)

    @property
    def source(self) -> ScalarField:
        """Return the source term f = div sigma."""
        return self.flux.divergence


def exact_fields(
    center: tuple[float, float] = ARCTAN_CENTER,
    slope: float = ARCTAN_SLOPE,
    radius: float = ARCTAN_RADIUS,
) -> ManufacturedSolution:
    """Return u = pi/2 - arctan(slope (r - radius)), r the distance to ``center``.

    The center lies outside the closed unit square, so all fields are smooth.
    """
    cx, cy = center

    def _polar(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        dx = points[:, 0] - cx
        dy = points[:, 1] - cy
        r = np.hypot(dx, dy)
        return dx, dy, r

    def potential(points: np.ndarray) -> np.ndarray:
        _, _, r = _polar(np.atleast_2d(points))
        return pi / 2.0 - np.arctan(slope * (r - radius))

    def gradient(points: np.ndarray) -> np.ndarray:
        dx, dy, r = _polar(np.atleast_2d(points))
        w = slope * (r - radius)
        du_dr = -slope / (1.0 + w**2)
        return np.column_stack([du_dr * dx / r, du_dr * dy / r])

    def flux(points: np.ndarray) -> np.ndarray:
        return -gradient(points)

    def source(points: np.ndarray) -> np.ndarray:
        # f = -(u'' + u'/r) for the radial potential
        _, _, r = _polar(np.atleast_2d(points))
        w = slope * (r - radius)
        q = 1.0 + w**2
        return slope / (q * r) - 2.0 * slope**2 * w / q**2

    return ManufacturedSolution(
        "arctan",
        potential,
        gradient,
        FluxField(flux, source),
        {"cx": cx, "cy": cy, "slope": slope, "radius": radius},
    )


def linear_fields(a: float = 1.0, b: float = 0.5, c: float = -0.25) -> ManufacturedSolution:
    """Return the patch-test solution u = a + b x + c y with constant flux and f = 0."""

    def potential(points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return a + b * pts[:, 0] + c * pts[:, 1]

    def gradient(points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.tile([b, c], (pts.shape[0], 1)).astype(float)

    def flux(points: np.ndarray) -> np.ndarray:
        return -gradient(points)

    def source(points: np.ndarray) -> np.ndarray:
        return np.zeros(np.atleast_2d(points).shape[0])

    return ManufacturedSolution(
        "linear", potential, gradient, FluxField(flux, source), {"a": a, "b": b, "c": c}
    )


def element_error_squares(
    data: ReferenceData,
    geomap: GeoMap,
    flux_coeffs: np.ndarray,
    pot_coeffs: np.ndarray,
    exact: ManufacturedSolution,
) -> tuple[float, float, float]:
    """Squared L2 errors of flux, potential and divergence on one element.

    The discrete divergence is div_hat / J, never a difference quotient.
    """
    weights = data.rule.weights
    jac = jacobian(geomap, data.rule.points)
    physical = eval_map(geomap, data.rule.points)
    measure = weights * jac.J

    flux_h = piola_push(jac, np.tensordot(flux_coeffs, data.values, axes=1))
    div_h = piola_div(jac.J, flux_coeffs @ data.divs)
    pot_h = pot_coeffs @ data.scalars

    flux_err = np.sum((exact.flux.value(physical) - flux_h) ** 2, axis=1)
    pot_err = (exact.potential(physical) - pot_h) ** 2
    div_err = (exact.source(physical) - div_h) ** 2
    return (
        float(measure @ flux_err),
        float(measure @ pot_err),
        float(measure @ div_err),
    )


def l2_errors(
    mesh: Mesh2D,
    solution: MixedSolution,
    exact: ManufacturedSolution,
    bump: int = DEFAULT_QUAD_BUMP,
) -> ErrorTriple:
    """Return the global L2 errors of a mixed solution."""
    data = reference_data(solution.dof_map.config, bump)
    squares = [
        element_error_squares(
            data,
            element_geomap(mesh, eid),
            solution.local_flux(eid),
            solution.local_pot(eid),
            exact,
        )
        for eid in range(mesh.num_elements)
    ]
    return sum_error_squares(squares)


def sum_error_squares(squares: list[tuple[float, float, float]]) -> ErrorTriple:
    """Combine per-element squared errors by compensated summation."""
    flux, pot, div = zip(*squares) if squares else ((), (), ())
    return ErrorTriple(sqrt(fsum(flux)), sqrt(fsum(pot)), sqrt(fsum(div)))


@dataclass(slots=True)
class FitReport:
    """Pairwise and least-squares convergence slopes per error kind."""

    pairwise: dict[str, list[float]]
    least_squares: dict[str, float]
    warnings: list[str] = field(default_factory=list)


def _slope(h: np.ndarray, errors: np.ndarray) -> float:
    if np.any(errors <= 0.0) or h.size < 2:
        return float("nan")
    return float(linregress(np.log10(h), np.log10(errors)).slope)


def fit_orders(result: StudyResult, fit_levels: int = FIT_LEVELS) -> FitReport:
    """Fit convergence orders over a mesh sequence.

    Pairwise slopes are log(e_i / e_{i+1}) / log(h_i / h_{i+1}); the
    least-squares slope uses the finest ``fit_levels`` levels. Non-monotone
    sequences are reported in ``warnings``.
    """
    h = np.asarray(result.spacings, dtype=float)
    if h.size < 2:
        raise ConfigurationError(f"at least two levels are needed, got {h.size}")
    if np.any(np.diff(h) >= 0.0):
        raise ConfigurationError("mesh spacings must be strictly decreasing")

    report = FitReport({}, {})
    for kind in ERROR_KINDS:
        errors = np.asarray(result.series(kind), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            pairwise = np.log(errors[:-1] / errors[1:]) / np.log(h[:-1] / h[1:])
        report.pairwise[kind] = [float(p) for p in pairwise]
        report.least_squares[kind] = _slope(h[-fit_levels:], errors[-fit_levels:])
        if np.any(np.diff(errors) >= 0.0):
            message = (
                f"{result.config.label()} on {result.mesh_family}: "
                f"non-monotone {kind} errors {errors.tolist()}"
            )
            report.warnings.append(message)
            _LOGGER.warning(message)
    return report
