"""Models for hdiv-plus."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from .const import MIN_K
from .exceptions import ConfigurationError


class ElementShape(StrEnum):
    """Master element shapes."""

    TRIANGLE = "triangle"
    QUADRILATERAL = "quadrilateral"


class MeshFamily(StrEnum):
    """Structured mesh families over the unit square."""

    RECT = "rect"
    TRI = "tri"
    TRAP = "trap"


class SpaceFamily(StrEnum):
    """H(div) space families."""

    RT = "RT"
    BDM = "BDM"


class ShapeClass(StrEnum):
    """Classification of vector shape functions."""

    EDGE = "edge"
    INTERNAL = "internal"


class RunStatus(StrEnum):
    """Outcome of a single study run or slope check."""

    PASS = "PASS"
    FAIL = "FAIL"
    ERROR = "ERROR"


FAMILY_SHAPE: dict[SpaceFamily, ElementShape] = {
    SpaceFamily.RT: ElementShape.QUADRILATERAL,
    SpaceFamily.BDM: ElementShape.TRIANGLE,
}

MESH_SHAPE: dict[MeshFamily, ElementShape] = {
    MeshFamily.RECT: ElementShape.QUADRILATERAL,
    MeshFamily.TRAP: ElementShape.QUADRILATERAL,
    MeshFamily.TRI: ElementShape.TRIANGLE,
}


@dataclass(frozen=True, slots=True)
class SpaceConfig:
    """Flux space V_k^{n+} with potential space U_{k+n}.

    n = 0 is the original RT_k / BDM_k space.
    """

    family: SpaceFamily
    k: int
    n: int = 0

    def __post_init__(self) -> None:
        """Validate the order parameters."""
        if self.k < MIN_K:
            raise ConfigurationError(f"edge degree k must be >= {MIN_K}, got {self.k}")
        if self.n < 0:
            raise ConfigurationError(f"enrichment n must be >= 0, got {self.n}")

    @property
    def shape(self) -> ElementShape:
        """Return the master element shape paired with the family."""
        return FAMILY_SHAPE[self.family]

    @property
    def order(self) -> int:
        """Return the internal level k + n."""
        return self.k + self.n

    def label(self) -> str:
        """Return a short label such as RT_2^{1+}."""
        if self.n == 0:
            return f"{self.family.value}_{self.k}"
        return f"{self.family.value}_{self.k}^{{{self.n}+}}"


@dataclass(frozen=True, slots=True)
class ErrorTriple:
    """L2 errors in flux, potential and flux divergence."""

    flux: float
    pot: float
    div: float

    def as_dict(self) -> dict[str, float]:
        """Return the errors keyed by kind."""
        return {"flux": self.flux, "pot": self.pot, "div": self.div}


@dataclass(slots=True)
class LevelErrors:
    """Errors and sizes measured on one refinement level."""

    i: int
    h: float
    errors: ErrorTriple
    dofs_total: int = 0
    dofs_condensed: int = 0
    residual: float = 0.0  # Max of the normal-flux jump and the conservation defect


@dataclass
class StudyResult:
    """Errors over a mesh sequence for one space configuration."""

    mesh_family: MeshFamily
    config: SpaceConfig
    levels: list[LevelErrors] = field(default_factory=list)

    def series(self, kind: str) -> list[float]:
        """Return the error sequence of one kind ordered by level."""
        return [getattr(row.errors, kind) for row in self.levels]

    @property
    def spacings(self) -> list[float]:
        """Return the mesh spacings ordered by level."""
        return [row.h for row in self.levels]


# Scalar field in physical coordinates: points (N, 2) -> values (N,)
ScalarField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, slots=True)
class FluxField:
    """Smooth vector field with its divergence, both in physical coordinates."""

    value: Callable[[np.ndarray], np.ndarray]  # (N, 2) -> (N, 2)
    divergence: Callable[[np.ndarray], np.ndarray]  # (N, 2) -> (N,)
