"""Shared fixtures for hdiv-plus tests."""

from __future__ import annotations

import numpy as np
import pytest

from hdiv_plus.geometry import GeoMap
from hdiv_plus.models import ElementShape


@pytest.fixture
def rng() -> np.random.Generator:
    """Return a seeded random generator."""
    return np.random.default_rng(20240611)


@pytest.fixture
def trapezoid_map() -> GeoMap:
    """Bilinear map of R onto the trapezoid (0,0), (h,0), (h,1.25h), (0,0.75h)."""
    h = 0.25
    return GeoMap.from_corners(
        np.array([[0.0, 0.0], [h, 0.0], [h, 1.25 * h], [0.0, 0.75 * h]])
    )


@pytest.fixture
def skewed_triangle_map() -> GeoMap:
    """Affine map of T onto a non-right triangle."""
    return GeoMap.from_corners(np.array([[0.1, 0.2], [0.6, 0.25], [0.3, 0.7]]))


@pytest.fixture
def identity_maps() -> dict[ElementShape, GeoMap]:
    """Return identity maps of both master elements."""
    return {shape: GeoMap.identity(shape) for shape in ElementShape}
