"""Tests for the Gauss rules."""

from __future__ import annotations

from math import factorial

import numpy as np
import pytest

from hdiv_plus.exceptions import QuadratureError
from hdiv_plus.models import ElementShape
from hdiv_plus.quadrature import (
    element_rule,
    gauss_interval,
    gauss_square,
    gauss_triangle,
    master_measure,
)


def test_interval_midpoint() -> None:
    rule = gauss_interval(1)
    np.testing.assert_allclose(rule.points[:, 0], [0.0])
    np.testing.assert_allclose(rule.weights, [2.0])


def test_interval_two_point() -> None:
    rule = gauss_interval(3)
    np.testing.assert_allclose(np.sort(rule.points[:, 0]), [-1 / np.sqrt(3), 1 / np.sqrt(3)])
    np.testing.assert_allclose(rule.weights, [1.0, 1.0])


def test_interval_quartic() -> None:
    rule = gauss_interval(5)
    assert rule.integrate(rule.points[:, 0] ** 4) == pytest.approx(0.4, abs=1e-14)


def test_square_rules() -> None:
    assert len(gauss_square(1)) == 1
    assert gauss_square(1).weights[0] == pytest.approx(4.0)
    assert len(gauss_square(3)) == 4
    rule = gauss_square(5)
    x, y = rule.points.T
    assert rule.integrate(x**2 * y**4) == pytest.approx((2 / 3) * (2 / 5), abs=1e-14)


def test_triangle_centroid() -> None:
    rule = gauss_triangle(1)
    np.testing.assert_allclose(rule.points, [[1 / 3, 1 / 3]], atol=1e-15)
    np.testing.assert_allclose(rule.weights, [0.5])


def test_triangle_monomials() -> None:
    x, y = gauss_triangle(2).points.T
    assert gauss_triangle(2).integrate(x * y) == pytest.approx(1 / 24, abs=1e-14)
    x, y = gauss_triangle(6).points.T
    assert gauss_triangle(6).integrate(x**3 * y**3) == pytest.approx(1 / 1120, abs=1e-13)


@pytest.mark.parametrize("degree", [1, 4, 7, 12])
def test_triangle_exactness_sweep(degree: int) -> None:
    rule = gauss_triangle(degree)
    x, y = rule.points.T
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            exact = factorial(a) * factorial(b) / factorial(a + b + 2)
            assert rule.integrate(x**a * y**b) == pytest.approx(exact, abs=1e-12)
    assert np.all(rule.weights > 0.0)


@pytest.mark.parametrize("degree", [2, 5, 9])
def test_square_exactness_sweep(degree: int) -> None:
    rule = gauss_square(degree)
    x, y = rule.points.T
    for a in range(degree + 1):
        for b in range(degree + 1):
            exact = (1 + (-1) ** a) / (a + 1) * (1 + (-1) ** b) / (b + 1)
            assert rule.integrate(x**a * y**b) == pytest.approx(exact, abs=1e-12)
    assert np.all(rule.weights > 0.0)


def test_rules_are_cached_and_read_only() -> None:
    rule = gauss_square(6)
    assert rule is gauss_square(6)
    with pytest.raises(ValueError):
        rule.weights[0] = 0.0


@pytest.mark.parametrize("degree", [0, 41])
def test_degree_out_of_range(degree: int) -> None:
    with pytest.raises(QuadratureError):
        gauss_interval(degree)


@pytest.mark.parametrize("shape", list(ElementShape))
def test_element_rule_measure(shape: ElementShape) -> None:
    assert element_rule(shape, 3).weights.sum() == pytest.approx(master_measure(shape))
