"""Custom exceptions for hdiv-plus."""


class HdivError(Exception):
    """Base error for hdiv-plus."""


class ConfigurationError(HdivError):
    """Error indicating an invalid space or study configuration."""


class MeshError(HdivError):
    """Error indicating inconsistent mesh connectivity."""


class DegenerateGeometryError(HdivError):
    """Error indicating a non-positive Jacobian determinant."""


class QuadratureError(HdivError):
    """Error indicating an unsupported quadrature degree."""


class BasisConstructionError(HdivError):
    """Error indicating a linearly dependent shape function set."""


class SingularSystemError(HdivError):
    """Error indicating a singular local or global linear system."""


class PermeabilityError(HdivError):
    """Error indicating a permeability sample that is not SPD."""
