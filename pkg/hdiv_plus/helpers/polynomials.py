"""Bivariate polynomial algebra on power-basis coefficient arrays."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Self

import numpy as np
from numpy.polynomial import Legendre, Polynomial
from numpy.polynomial import polynomial as P
from scipy.signal import convolve2d


def _pad(c: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    out = np.zeros(shape)
    out[: c.shape[0], : c.shape[1]] = c
    return out


@dataclass(frozen=True, slots=True, eq=False)
class BivariatePolynomial:
    """Polynomial sum_{ij} c[i, j] x^i y^j."""

    coef: np.ndarray

    # numpy scalars defer to the reflected operators below
    __array_ufunc__ = None

    @classmethod
    def constant(cls, value: float) -> Self:
        """Return a constant polynomial."""
        return cls(np.array([[float(value)]]))

    @classmethod
    def in_x(cls, poly: Polynomial | Legendre) -> Self:
        """Lift a univariate polynomial in x."""
        c = poly.convert(kind=Polynomial).coef
        return cls(c.reshape(-1, 1).astype(float))

    @classmethod
    def in_y(cls, poly: Polynomial | Legendre) -> Self:
        """Lift a univariate polynomial in y."""
        c = poly.convert(kind=Polynomial).coef
        return cls(c.reshape(1, -1).astype(float))

    @classmethod
    def linear(cls, c0: float, cx: float, cy: float) -> Self:
        """Return c0 + cx x + cy y."""
        return cls(np.array([[c0, cy], [cx, 0.0]]))

    @property
    def degree(self) -> int:
        """Return the total degree (0 for the zero polynomial)."""
        i, j = np.nonzero(np.abs(self.coef) > 0.0)
        return int(np.max(i + j)) if i.size else 0

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at points of shape (N, 2)."""
        pts = np.atleast_2d(points)
        return P.polyval2d(pts[:, 0], pts[:, 1], self.coef)

    def __add__(self, other: BivariatePolynomial | float) -> BivariatePolynomial:
        if not isinstance(other, BivariatePolynomial):
            other = BivariatePolynomial.constant(other)
        shape = (
            max(self.coef.shape[0], other.coef.shape[0]),
            max(self.coef.shape[1], other.coef.shape[1]),
        )
        return BivariatePolynomial(_pad(self.coef, shape) + _pad(other.coef, shape))

    __radd__ = __add__

    def __neg__(self) -> BivariatePolynomial:
        return BivariatePolynomial(-self.coef)

    def __sub__(self, other: BivariatePolynomial | float) -> BivariatePolynomial:
        return self + (-other)

    def __mul__(self, other: BivariatePolynomial | float) -> BivariatePolynomial:
        if isinstance(other, BivariatePolynomial):
            return BivariatePolynomial(convolve2d(self.coef, other.coef))
        return BivariatePolynomial(self.coef * float(other))

    __rmul__ = __mul__

    def deriv(self, axis: int) -> BivariatePolynomial:
        """Partial derivative in x (axis 0) or y (axis 1)."""
        if self.coef.shape[axis] == 1:
            return BivariatePolynomial(np.zeros((1, 1)))
        return BivariatePolynomial(P.polyder(self.coef, axis=axis))


def compose(poly: Polynomial | Legendre, inner: BivariatePolynomial) -> BivariatePolynomial:
    """Return poly(inner(x, y)) by Horner's scheme."""
    coef = poly.convert(kind=Polynomial).coef
    result = BivariatePolynomial.constant(coef[-1])
    for c in coef[-2::-1]:
        result = result * inner + float(c)
    return result


def compose_homogeneous(
    poly: Polynomial | Legendre, top: BivariatePolynomial, bottom: BivariatePolynomial
) -> BivariatePolynomial:
    """Return bottom^d poly(top / bottom) with d the degree of poly, a polynomial."""
    coef = poly.convert(kind=Polynomial).coef
    degree = len(coef) - 1
    result = BivariatePolynomial.constant(0.0)
    top_power = BivariatePolynomial.constant(1.0)
    for i, c in enumerate(coef):
        term = top_power
        for _ in range(degree - i):
            term = term * bottom
        result = result + float(c) * term
        top_power = top_power * top
    return result
