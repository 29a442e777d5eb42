"""Gauss quadrature rules on the reference interval, square and triangle.

Master elements:
    interval  [-1, 1]                         measure 2
    square    R = [-1, 1] x [-1, 1]           measure 4
    triangle  T = {x >= 0, y >= 0, x + y <= 1} measure 1/2

The triangle rule is the collapsed-coordinate tensor product of a
Gauss-Legendre rule and a Gauss-Jacobi(1, 0) rule, so a rule with
``m`` points per direction integrates total degree ``2m - 1`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre
from scipy.special import roots_jacobi

from .const import MAX_GAUSS_DEGREE, MAX_TRIANGLE_DEGREE, MIN_GAUSS_DEGREE
from .exceptions import QuadratureError
from .models import ElementShape


@dataclass(frozen=True, slots=True)
class QuadRule:
    """Points and positive weights of a quadrature rule."""

    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def __len__(self) -> int:
        """Return the number of points."""
        return int(self.weights.shape[0])

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate sampled values; the last axis runs over the points."""
        return np.asarray(values) @ self.weights


def _freeze(*arrays: np.ndarray) -> None:
    for array in arrays:
        array.setflags(write=False)


def _points_for(degree: int) -> int:
    return degree // 2 + 1


def _check_degree(degree: int, upper: int) -> None:
    if not MIN_GAUSS_DEGREE <= degree <= upper:
        raise QuadratureError(
            f"quadrature degree must lie in [{MIN_GAUSS_DEGREE}, {upper}], got {degree}"
        )


@lru_cache(maxsize=None)
def gauss_interval(degree: int) -> QuadRule:
    """Gauss-Legendre rule on [-1, 1] exact for polynomials of ``degree``."""
    _check_degree(degree, MAX_GAUSS_DEGREE)
    nodes, weights = legendre.leggauss(_points_for(degree))
    points = nodes.reshape(-1, 1)
    _freeze(points, weights)
    return QuadRule(points, weights, degree)


@lru_cache(maxsize=None)
def gauss_square(degree: int) -> QuadRule:
    """Tensor Gauss-Legendre rule on R, exact for Q_{degree,degree}."""
    line = gauss_interval(degree)
    nodes = line.points[:, 0]
    xx, yy = np.meshgrid(nodes, nodes, indexing="ij")
    points = np.column_stack([xx.ravel(), yy.ravel()])
    weights = np.outer(line.weights, line.weights).ravel()
    _freeze(points, weights)
    return QuadRule(points, weights, degree)


@lru_cache(maxsize=None)
def gauss_triangle(degree: int) -> QuadRule:
    """Collapsed Gauss rule on T, exact for total degree ``degree``."""
    _check_degree(degree, MAX_TRIANGLE_DEGREE)
    count = _points_for(degree)
    u_nodes, u_weights = legendre.leggauss(count)
    v_nodes, v_weights = roots_jacobi(count, 1.0, 0.0)

    uu, vv = np.meshgrid(u_nodes, v_nodes, indexing="ij")
    # Duffy collapse of [-1, 1]^2 onto T; (1 - v) / 8 is absorbed by the Jacobi weight
    x = (1.0 + uu) * (1.0 - vv) / 4.0
    y = (1.0 + vv) / 2.0
    points = np.column_stack([x.ravel(), y.ravel()])
    weights = np.outer(u_weights, v_weights).ravel() / 8.0
    _freeze(points, weights)
    return QuadRule(points, weights, degree)


def element_rule(shape: ElementShape, degree: int) -> QuadRule:
    """Return the master rule for an element shape."""
    if shape is ElementShape.TRIANGLE:
        return gauss_triangle(min(degree, MAX_TRIANGLE_DEGREE))
    return gauss_square(min(degree, MAX_GAUSS_DEGREE))


def master_measure(shape: ElementShape) -> float:
    """Return the area of the master element."""
    return 0.5 if shape is ElementShape.TRIANGLE else 4.0
