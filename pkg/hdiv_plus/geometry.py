"""Geometric maps, Jacobians and the Piola transformation.

A linear map sends the master triangle T onto a triangle,
``F(x, y) = A0 + A1 x + A2 y``; a bilinear map sends the master square
R = [-1, 1]^2 onto a quadrilateral, ``F = A0 + A1 x + A2 y + A3 x y``.
All functions are vectorized over arrays of master points.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from .exceptions import DegenerateGeometryError
from .models import ElementShape


class MapKind(StrEnum):
    """Kinds of geometric maps."""

    LINEAR = "linear"
    BILINEAR = "bilinear"


MASTER_VERTICES: dict[ElementShape, np.ndarray] = {
    ElementShape.TRIANGLE: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    ElementShape.QUADRILATERAL: np.array(
        [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]
    ),
}


@dataclass(frozen=True, slots=True, eq=False)
class GeoMap:
    """Geometric map F_K given by its coefficient vectors A0..A3."""

    kind: MapKind
    coefficients: np.ndarray  # rows A0, A1, A2 (, A3)

    @classmethod
    def from_corners(cls, corners: np.ndarray) -> GeoMap:
        """Build the map interpolating counterclockwise element corners."""
        p = np.asarray(corners, dtype=float)
        if p.shape == (3, 2):
            coeffs = np.array([p[0], p[1] - p[0], p[2] - p[0]])
            return cls(MapKind.LINEAR, coeffs)
        if p.shape == (4, 2):
            # Corner interpolation at (-1,-1), (1,-1), (1,1), (-1,1) in closed form
            coeffs = 0.25 * np.array(
                [
                    p[0] + p[1] + p[2] + p[3],
                    -p[0] + p[1] + p[2] - p[3],
                    -p[0] - p[1] + p[2] + p[3],
                    p[0] - p[1] + p[2] - p[3],
                ]
            )
            return cls(MapKind.BILINEAR, coeffs)
        raise DegenerateGeometryError(f"unsupported corner array of shape {p.shape}")

    @classmethod
    def identity(cls, shape: ElementShape) -> GeoMap:
        """Return the identity map of a master element."""
        return cls.from_corners(MASTER_VERTICES[shape])

    @property
    def shape(self) -> ElementShape:
        """Return the master element shape of the map."""
        if self.kind is MapKind.LINEAR:
            return ElementShape.TRIANGLE
        return ElementShape.QUADRILATERAL

    @property
    def is_affine(self) -> bool:
        """Return True when the Jacobian is constant."""
        return self.kind is MapKind.LINEAR or bool(
            np.allclose(self.coefficients[3], 0.0, atol=1e-14)
        )


@dataclass(frozen=True, slots=True, eq=False)
class JacobianData:
    """Jacobian matrices, determinants and inverses at a set of points."""

    DF: np.ndarray  # (N, 2, 2)
    J: np.ndarray  # (N,)
    DF_inv: np.ndarray  # (N, 2, 2)


def _as_points(points: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(points, dtype=float))


def eval_map(geomap: GeoMap, points: np.ndarray) -> np.ndarray:
    """Map master points to physical coordinates, shape (N, 2)."""
    pts = _as_points(points)
    x, y = pts[:, 0:1], pts[:, 1:2]
    a = geomap.coefficients
    out = a[0] + x * a[1] + y * a[2]
    if geomap.kind is MapKind.BILINEAR:
        out = out + (x * y) * a[3]
    return out


def jacobian(geomap: GeoMap, points: np.ndarray) -> JacobianData:
    """Evaluate DF, J and DF^{-1} at master points."""
    pts = _as_points(points)
    a = geomap.coefficients
    npts = pts.shape[0]
    col_x = np.broadcast_to(a[1], (npts, 2)).copy()
    col_y = np.broadcast_to(a[2], (npts, 2)).copy()
    if geomap.kind is MapKind.BILINEAR:
        col_x += pts[:, 1:2] * a[3]
        col_y += pts[:, 0:1] * a[3]
    df = np.stack([col_x, col_y], axis=2)
    det = df[:, 0, 0] * df[:, 1, 1] - df[:, 0, 1] * df[:, 1, 0]
    if np.any(det <= 0.0):
        raise DegenerateGeometryError(
            f"non-positive Jacobian determinant (min {det.min():.3e})"
        )
    inv = np.empty_like(df)
    inv[:, 0, 0] = df[:, 1, 1] / det
    inv[:, 1, 1] = df[:, 0, 0] / det
    inv[:, 0, 1] = -df[:, 0, 1] / det
    inv[:, 1, 0] = -df[:, 1, 0] / det
    return JacobianData(df, det, inv)


def piola_push(jac: JacobianData, v_hat: np.ndarray) -> np.ndarray:
    """Contravariant Piola map v = DF v_hat / J.

    ``v_hat`` has shape (..., N, 2) with N matching the Jacobian points.
    """
    return np.einsum("qij,...qj->...qi", jac.DF, v_hat) / jac.J[:, None]


def piola_pull(jac: JacobianData, v: np.ndarray) -> np.ndarray:
    """Inverse Piola map v_hat = J DF^{-1} v."""
    return np.einsum("qij,...qj->...qi", jac.DF_inv, v) * jac.J[:, None]


def piola_div(J: np.ndarray | float, div_hat: np.ndarray | float) -> np.ndarray:
    """Physical divergence of a Piola-pushed field."""
    return np.asarray(div_hat) / J


# Edge parametrization: local edge e runs from vertex e to vertex e+1 with s in [-1, 1]


def master_edge(shape: ElementShape, edge: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the start and end vertices of a master edge."""
    verts = MASTER_VERTICES[shape]
    return verts[edge], verts[(edge + 1) % len(verts)]


def edge_points(shape: ElementShape, edge: int, s: np.ndarray) -> np.ndarray:
    """Master points x(s) = (a + b)/2 + s (b - a)/2 on a master edge."""
    start, end = master_edge(shape, edge)
    s = np.asarray(s, dtype=float).reshape(-1, 1)
    return 0.5 * (start + end) + s * (0.5 * (end - start))


def rotate_clockwise(t: np.ndarray) -> np.ndarray:
    """Rotate tangent vectors by -90 degrees: (t_y, -t_x)."""
    t = np.asarray(t, dtype=float)
    return np.stack([t[..., 1], -t[..., 0]], axis=-1)


def scaled_normal(shape: ElementShape, edge: int) -> np.ndarray:
    """Outward normal scaled by dx/ds, so that v . N ds = v . n dl."""
    start, end = master_edge(shape, edge)
    return rotate_clockwise(0.5 * (end - start))


def physical_scaled_normal(geomap: GeoMap, edge: int, s: np.ndarray) -> np.ndarray:
    """Outward scaled normal rot(DF t_hat) of a mapped edge, shape (N, 2)."""
    start, end = master_edge(geomap.shape, edge)
    jac = jacobian(geomap, edge_points(geomap.shape, edge, s))
    tangent = jac.DF @ (0.5 * (end - start))
    return rotate_clockwise(tangent)
