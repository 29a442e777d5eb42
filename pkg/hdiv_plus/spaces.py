"""Hierarchical H(div) bases on the master triangle and square.

Shape functions are products of constant vector fields with hierarchical
scalar polynomials. Each basis splits into edge functions (normal trace
supported on one edge, equal to a 1D hierarchical function there) and
internal functions (vanishing normal trace on the whole boundary).

The enriched space of edge degree ``k`` and enrichment ``n`` keeps the
edge functions of trace degree <= k and all internal functions of the
order-(k+n) space:

    RT   on R: order m spans Q_{m+1,m} x Q_{m,m+1}, divergence Q_{m,m}
    BDM  on T: order m spans [P_m]^2,             divergence P_{m-1}
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass, replace
from functools import lru_cache
from math import sqrt

import numpy as np
from numpy.polynomial import Legendre, Polynomial, legendre
from scipy.special import jacobi

from .const import GRAM_RCOND_MIN
from .exceptions import BasisConstructionError, ConfigurationError
from .geometry import MASTER_VERTICES, edge_points, scaled_normal
from .helpers.logging_utils import get_summarizing_logger
from .helpers.polynomials import BivariatePolynomial, compose, compose_homogeneous
from .models import ElementShape, ShapeClass, SpaceConfig, SpaceFamily
from .quadrature import QuadRule, element_rule, gauss_interval

_LOGGER = get_summarizing_logger(__name__)

_X = BivariatePolynomial.in_x
_Y = BivariatePolynomial.in_y
_ZERO = BivariatePolynomial.constant(0.0)

NUM_EDGES: dict[ElementShape, int] = {
    ElementShape.TRIANGLE: 3,
    ElementShape.QUADRILATERAL: 4,
}


def scalar_hierarchical_1d(k: int) -> list[Legendre]:
    """Return the k + 1 hierarchical H1 functions on [-1, 1].

    Members are (1 - s)/2, (1 + s)/2 and the bubbles
    (P_j - P_{j-2}) / sqrt(2 (2j - 1)) for j = 2..k. The degree-k set is a
    prefix of the degree-(k+1) set. ``k = 0`` yields the constant.
    """
    if k < 0:
        raise ConfigurationError(f"degree must be >= 0, got {k}")
    if k == 0:
        return [Legendre([1.0])]
    funcs = [Legendre([0.5, -0.5]), Legendre([0.5, 0.5])]
    for j in range(2, k + 1):
        coef = np.zeros(j + 1)
        coef[j] = 1.0
        coef[j - 2] = -1.0
        funcs.append(Legendre(coef / sqrt(2.0 * (2 * j - 1))))
    return funcs


def _legendre(degree: int) -> Legendre:
    return Legendre.basis(degree)


def dubiner(a: int, b: int) -> BivariatePolynomial:
    """Return the orthogonal triangle polynomial of bidegree (a, b).

    In collapsed coordinates r = 2x / (1 - y) - 1, s = 2y - 1 it reads
    P_a(r) ((1 - s) / 2)^a P_b^{(2a+1, 0)}(s). Members are L2-orthogonal on
    the master triangle and the (0, 0) member is the constant 1.
    """
    radial = compose_homogeneous(
        _legendre(a),
        BivariatePolynomial.linear(-1.0, 2.0, 1.0),
        BivariatePolynomial.linear(1.0, 0.0, -1.0),
    )
    jacobi_b = Polynomial(jacobi(b, 2 * a + 1, 0.0).coeffs[::-1])
    return radial * compose(jacobi_b, BivariatePolynomial.linear(-1.0, 0.0, 2.0))


def _bubble_kernel(phi: Legendre) -> Polynomial:
    """Return kappa with phi(s) = (1 - s^2)/4 kappa(s)."""
    quotient, remainder = divmod(
        phi.convert(kind=Polynomial), Polynomial([0.25, 0.0, -0.25])
    )
    if np.max(np.abs(remainder.coef)) > 1e-12:
        raise BasisConstructionError("edge bubble does not vanish at the endpoints")
    return quotient


@dataclass(frozen=True, slots=True, eq=False)
class ShapeFn:
    """Vector shape function v = (vx, vy) on a master element."""

    index: int
    shape_class: ShapeClass
    edge: int | None
    degree: int
    level: int
    vx: BivariatePolynomial
    vy: BivariatePolynomial
    div: BivariatePolynomial
    key: tuple[int, ...] = ()

    def evaluate(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return values (N, 2) and master divergence (N,)."""
        values = np.column_stack([self.vx(points), self.vy(points)])
        return values, self.div(points)


def _shape_fn(
    shape_class: ShapeClass,
    edge: int | None,
    degree: int,
    level: int,
    vx: BivariatePolynomial,
    vy: BivariatePolynomial,
    key: tuple[int, ...],
) -> ShapeFn:
    return ShapeFn(
        index=-1,
        shape_class=shape_class,
        edge=edge,
        degree=degree,
        level=level,
        vx=vx,
        vy=vy,
        div=vx.deriv(0) + vy.deriv(1),
        key=key,
    )


@dataclass(frozen=True, slots=True, eq=False)
class HDivBasis:
    """Ordered shape functions: edge functions grouped by edge, then internals."""

    config: SpaceConfig
    shape_fns: tuple[ShapeFn, ...]

    def __len__(self) -> int:
        """Return the dimension."""
        return len(self.shape_fns)

    @property
    def shape(self) -> ElementShape:
        """Return the master element shape."""
        return self.config.shape

    @property
    def n_edge(self) -> int:
        """Return the number of edge functions."""
        return sum(fn.shape_class is ShapeClass.EDGE for fn in self.shape_fns)

    @property
    def n_internal(self) -> int:
        """Return the number of internal functions."""
        return len(self.shape_fns) - self.n_edge

    @property
    def counts(self) -> tuple[int, int]:
        """Return (n_edge, n_internal)."""
        return self.n_edge, self.n_internal

    def edge_indices(self, edge: int) -> list[int]:
        """Return the indices of the edge functions of a local edge, by trace degree."""
        return [fn.index for fn in self.shape_fns if fn.edge == edge]

    @property
    def internal_indices(self) -> list[int]:
        """Return the indices of the internal functions."""
        return [
            fn.index for fn in self.shape_fns if fn.shape_class is ShapeClass.INTERNAL
        ]


@dataclass(frozen=True, slots=True, eq=False)
class ScalarBasis:
    """Hierarchical scalar basis; member 0 is the constant function."""

    space: str
    shape: ElementShape
    degree: int
    members: tuple[BivariatePolynomial, ...]

    def __len__(self) -> int:
        """Return the dimension."""
        return len(self.members)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Return member values, shape (n_members, N)."""
        return np.array([member(points) for member in self.members])


# Square: edges 0..3 are bottom, right, top, left with unit scaled normals


def _rt_candidates(m: int) -> Iterator[ShapeFn]:
    phi = scalar_hierarchical_1d(m + 1)
    minus_x = BivariatePolynomial.linear(0.0, -1.0, 0.0)
    minus_y = BivariatePolynomial.linear(0.0, 0.0, -1.0)
    for j in range(m + 1):
        level = max(j, 1)
        traces = (
            (_ZERO, -(_Y(phi[0]) * _X(phi[j]))),
            (_X(phi[1]) * _Y(phi[j]), _ZERO),
            (_ZERO, _Y(phi[1]) * compose(phi[j], minus_x)),
            (-(_X(phi[0]) * compose(phi[j], minus_y)), _ZERO),
        )
        for edge, (vx, vy) in enumerate(traces):
            yield _shape_fn(ShapeClass.EDGE, edge, j, level, vx, vy, (edge, j))

    for a in range(2, m + 2):
        for b in range(m + 1):
            level = max(a - 1, b)
            yield _shape_fn(
                ShapeClass.INTERNAL,
                None,
                max(a, b),
                level,
                _X(phi[a]) * _Y(_legendre(b)),
                _ZERO,
                (level, 0, a, b),
            )
            yield _shape_fn(
                ShapeClass.INTERNAL,
                None,
                max(a, b),
                level,
                _ZERO,
                _X(_legendre(b)) * _Y(phi[a]),
                (level, 1, a, b),
            )


def _barycentrics() -> list[BivariatePolynomial]:
    return [
        BivariatePolynomial.linear(1.0, -1.0, -1.0),
        BivariatePolynomial.linear(0.0, 1.0, 0.0),
        BivariatePolynomial.linear(0.0, 0.0, 1.0),
    ]


def _bdm_candidates(m: int) -> Iterator[ShapeFn]:
    lam = _barycentrics()
    verts = MASTER_VERTICES[ElementShape.TRIANGLE]
    phi = scalar_hierarchical_1d(m)
    for edge in range(3):
        a, b, c = edge, (edge + 1) % 3, (edge + 2) % 3
        normal = scaled_normal(ElementShape.TRIANGLE, edge)
        for j, vertex in ((0, a), (1, b)):
            # Parallel to the other edge through the vertex, unit normal component on this one
            direction = verts[c] - verts[vertex]
            w = direction / float(direction @ normal)
            fn = float(w[0]) * lam[vertex], float(w[1]) * lam[vertex]
            yield _shape_fn(ShapeClass.EDGE, edge, j, 1, *fn, (edge, j))
        w = normal / float(normal @ normal)
        along = lam[b] - lam[a]
        for j in range(2, m + 1):
            scalar = lam[a] * lam[b] * compose(_bubble_kernel(phi[j]), along)
            fn = float(w[0]) * scalar, float(w[1]) * scalar
            yield _shape_fn(ShapeClass.EDGE, edge, j, j, *fn, (edge, j))

    for edge in range(3):
        a, b = edge, (edge + 1) % 3
        tangent = verts[b] - verts[a]
        along = lam[b] - lam[a]
        for j in range(m - 1):
            scalar = lam[a] * lam[b] * compose(_legendre(j), along)
            yield _shape_fn(
                ShapeClass.INTERNAL,
                None,
                j + 2,
                j + 2,
                float(tangent[0]) * scalar,
                float(tangent[1]) * scalar,
                (j + 2, 0, edge, j),
            )

    cubic = lam[0] * lam[1] * lam[2]
    for total in range(m - 2):
        for a in range(total, -1, -1):
            scalar = cubic * dubiner(a, total - a)
            for direction in (0, 1):
                vx, vy = (scalar, _ZERO) if direction == 0 else (_ZERO, scalar)
                yield _shape_fn(
                    ShapeClass.INTERNAL,
                    None,
                    total + 3,
                    total + 3,
                    vx,
                    vy,
                    (total + 3, 1, a, direction),
                )


_CANDIDATES = {
    SpaceFamily.RT: _rt_candidates,
    SpaceFamily.BDM: _bdm_candidates,
}


def _indexed(fns: list[ShapeFn]) -> tuple[ShapeFn, ...]:
    return tuple(replace(fn, index=idx) for idx, fn in enumerate(fns))


def _unit_norm(fn: ShapeFn, rule: QuadRule) -> ShapeFn:
    """Scale a shape function to unit L2 norm on the master element."""
    values, _ = fn.evaluate(rule.points)
    scale = 1.0 / sqrt(float(np.einsum("qc,qc,q->", values, values, rule.weights)))
    return replace(fn, vx=fn.vx * scale, vy=fn.vy * scale, div=fn.div * scale)


@lru_cache(maxsize=None)
def build_hdiv_basis(config: SpaceConfig) -> HDivBasis:
    """Build the hierarchical basis of V_k^{n+}.

    The full basis of order k + n is generated, then edge functions of
    trace degree > k are pruned. Internal functions carry unit L2 norm on
    the master element; edge functions keep their hierarchical traces.

    Raises:
        BasisConstructionError: if the members are numerically dependent.
    """
    candidates = list(_CANDIDATES[config.family](config.order))
    edges = sorted(
        (fn for fn in candidates if fn.shape_class is ShapeClass.EDGE and fn.degree <= config.k),
        key=lambda fn: fn.key,
    )
    rule = element_rule(config.shape, element_degree(config))
    internals = [
        _unit_norm(fn, rule)
        for fn in sorted(
            (fn for fn in candidates if fn.shape_class is ShapeClass.INTERNAL),
            key=lambda fn: fn.key,
        )
    ]
    basis = HDivBasis(config, _indexed(edges + internals))

    cond = gram_condition(basis)
    if not np.isfinite(cond) or 1.0 / cond < GRAM_RCOND_MIN:
        raise BasisConstructionError(
            f"{config.label()} basis is numerically dependent (Gram condition {cond:.3e})"
        )
    _LOGGER.debug(
        "Built %s basis: %d edge + %d internal (Gram condition %.3e)",
        config.label(),
        basis.n_edge,
        basis.n_internal,
        cond,
    )
    return basis


def truncate_basis(basis: HDivBasis, drop: int | Iterable[int]) -> HDivBasis:
    """Return the basis without the members in ``drop``, without independence checks."""
    dropped = {drop} if isinstance(drop, int) else set(drop)
    kept = [fn for fn in basis.shape_fns if fn.index not in dropped]
    return HDivBasis(basis.config, _indexed(kept))


@lru_cache(maxsize=None)
def divergence_scalar_basis(config: SpaceConfig) -> ScalarBasis:
    """Return the potential space U_{k+n}: Q_{m,m} on R or P_{m-1} on T."""
    m = config.order
    if config.family is SpaceFamily.RT:
        pairs = sorted(
            ((a, b) for a in range(m + 1) for b in range(m + 1)),
            key=lambda ab: (max(ab), ab),
        )
        members = tuple(_X(_legendre(a)) * _Y(_legendre(b)) for a, b in pairs)
        return ScalarBasis(f"Q_{m},{m}", ElementShape.QUADRILATERAL, m, members)

    pairs = [(a, total - a) for total in range(m) for a in range(total, -1, -1)]
    members = tuple(dubiner(a, b) for a, b in pairs)
    return ScalarBasis(f"P_{m - 1}", ElementShape.TRIANGLE, m - 1, members)


def element_degree(config: SpaceConfig) -> int:
    """Quadrature degree exact for products of two basis members."""
    return 2 * config.order + 2


def edge_degree(config: SpaceConfig) -> int:
    """Quadrature degree exact for traces of order-(k + n) fields times edge functions."""
    return 2 * config.order + 2


def eval_basis(basis: HDivBasis, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return values (nf, N, 2) and master divergences (nf, N)."""
    pts = np.atleast_2d(points)
    values = np.empty((len(basis), pts.shape[0], 2))
    divs = np.empty((len(basis), pts.shape[0]))
    for fn in basis.shape_fns:
        values[fn.index], divs[fn.index] = fn.evaluate(pts)
    return values, divs


def normal_traces(basis: HDivBasis, edge: int, s: np.ndarray) -> np.ndarray:
    """Return v . N at edge parameters s for all members, shape (nf, len(s))."""
    values, _ = eval_basis(basis, edge_points(basis.shape, edge, s))
    return values @ scaled_normal(basis.shape, edge)


def trace_vandermonde(basis: HDivBasis, edge: int) -> np.ndarray:
    """Normal traces of one edge's functions at k + 1 Gauss points."""
    nodes, _ = legendre.leggauss(basis.config.k + 1)
    return normal_traces(basis, edge, nodes)[basis.edge_indices(edge)]


def gram_condition(basis: HDivBasis) -> float:
    """Return the 2-norm condition number of the L2 Gram matrix."""
    rule = element_rule(basis.shape, element_degree(basis.config))
    values, _ = eval_basis(basis, rule.points)
    gram = np.einsum("iqc,jqc,q->ij", values, values, rule.weights)
    return float(np.linalg.cond(gram))


def _relative_lstsq_residual(span: np.ndarray, targets: np.ndarray) -> float:
    """Largest relative residual of fitting rows of ``targets`` by rows of ``span``."""
    if targets.size == 0:
        return 0.0
    if span.size == 0:
        norms = np.linalg.norm(targets, axis=1)
        return float(np.max(np.where(norms > 0.0, 1.0, 0.0)))
    coef, *_ = np.linalg.lstsq(span.T, targets.T, rcond=None)
    residual = np.linalg.norm(span.T @ coef - targets.T, axis=0)
    norms = np.linalg.norm(targets, axis=1)
    scaled = np.divide(residual, norms, out=np.zeros_like(residual), where=norms > 1e-14)
    return float(np.max(scaled))


def check_div_exactness(config: SpaceConfig, basis: HDivBasis | None = None) -> float:
    """Certify that div maps the flux basis onto U_{k+n}.

    Returns the larger of the containment residual (each divergence
    expressed in the scalar basis) and the surjectivity residual (each
    scalar member expressed as a divergence), in weighted L2.
    """
    basis = basis or build_hdiv_basis(config)
    scalar = divergence_scalar_basis(config)
    rule = element_rule(config.shape, element_degree(config))
    sqrt_w = np.sqrt(rule.weights)
    _, divs = eval_basis(basis, rule.points)
    weighted_divs = divs * sqrt_w
    weighted_scalars = scalar.evaluate(rule.points) * sqrt_w
    containment = _relative_lstsq_residual(weighted_scalars, weighted_divs)
    surjectivity = _relative_lstsq_residual(weighted_divs, weighted_scalars)
    _LOGGER.debug(
        "%s exactness: containment %.2e, surjectivity %.2e",
        config.label(),
        containment,
        surjectivity,
    )
    return max(containment, surjectivity)


@dataclass(frozen=True, slots=True, eq=False)
class ReferenceData:
    """Basis samples at element and edge quadrature points."""

    basis: HDivBasis
    scalar: ScalarBasis
    rule: QuadRule
    values: np.ndarray  # (nf, N, 2)
    divs: np.ndarray  # (nf, N)
    scalars: np.ndarray  # (ns, N)
    edge_rule: QuadRule
    edge_traces: tuple[np.ndarray, ...]  # per edge (nf, Ne)
    edge_functions: np.ndarray  # (k + 1, Ne) hierarchical 1D values


@lru_cache(maxsize=None)
def reference_data(config: SpaceConfig, bump: int = 0) -> ReferenceData:
    """Sample the basis of a configuration, over-integrating by ``bump`` degrees."""
    basis = build_hdiv_basis(config)
    scalar = divergence_scalar_basis(config)
    rule = element_rule(config.shape, element_degree(config) + bump)
    values, divs = eval_basis(basis, rule.points)
    edge_rule = gauss_interval(edge_degree(config) + bump)
    s = edge_rule.points[:, 0]
    traces = tuple(
        normal_traces(basis, edge, s) for edge in range(NUM_EDGES[config.shape])
    )
    hier = np.array([fn(s) for fn in scalar_hierarchical_1d(config.k)])
    for array in (values, divs, hier, *traces):
        array.setflags(write=False)
    scalars = scalar.evaluate(rule.points)
    scalars.setflags(write=False)
    return ReferenceData(
        basis, scalar, rule, values, divs, scalars, edge_rule, traces, hier
    )
