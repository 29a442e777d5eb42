"""Structured meshes of the unit square with oriented edge topology."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .const import AREA_TOL, MAX_LEVEL, MIN_LEVEL, TRAP_SHIFT
from .exceptions import ConfigurationError, MeshError
from .geometry import GeoMap
from .helpers.logging_utils import get_summarizing_logger
from .models import ElementShape, MeshFamily

_LOGGER = get_summarizing_logger(__name__)


@dataclass(frozen=True, slots=True)
class Vertex:
    """Mesh vertex in the unit square."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise MeshError(f"non-finite vertex ({self.x}, {self.y})")


@dataclass(frozen=True, slots=True)
class Element:
    """Element with counterclockwise vertices and oriented local edges.

    Local edge l joins local vertices l and l+1 (mod number of vertices).
    ``edge_signs[l]`` is +1 when the element's outward normal agrees with
    the global normal of the edge, -1 otherwise.
    """

    shape: ElementShape
    vertex_ids: tuple[int, ...]
    edge_ids: tuple[int, ...] = ()
    edge_signs: tuple[int, ...] = ()


@dataclass(frozen=True, slots=True)
class Edge:
    """Globally oriented edge; the global normal is the tangent rotated clockwise."""

    vertex_ids: tuple[int, int]
    element_ids: tuple[int, ...]
    boundary: bool


@dataclass(frozen=True, slots=True, eq=False)
class Mesh2D:
    """Conforming partition of the unit square."""

    vertices: np.ndarray  # (nv, 2)
    elements: tuple[Element, ...]
    edges: tuple[Edge, ...]
    family: MeshFamily
    h: float

    @property
    def num_elements(self) -> int:
        """Return the number of elements."""
        return len(self.elements)

    @property
    def num_edges(self) -> int:
        """Return the number of edges."""
        return len(self.edges)

    def vertex(self, vertex_id: int) -> Vertex:
        """Return a vertex as a value object."""
        x, y = self.vertices[vertex_id]
        return Vertex(float(x), float(y))

    def corners(self, element_id: int) -> np.ndarray:
        """Return the vertex coordinates of an element, shape (nv, 2)."""
        return self.vertices[list(self.elements[element_id].vertex_ids)]

    def element_areas(self) -> np.ndarray:
        """Return element areas by the shoelace formula."""
        areas = np.empty(self.num_elements)
        for idx in range(self.num_elements):
            p = self.corners(idx)
            q = np.roll(p, -1, axis=0)
            areas[idx] = 0.5 * np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1])
        return areas

    def total_area(self) -> float:
        """Return the sum of element areas."""
        return float(np.sum(self.element_areas()))

    def boundary_edge_ids(self) -> list[int]:
        """Return the ids of edges on the boundary of the square."""
        return [idx for idx, edge in enumerate(self.edges) if edge.boundary]


def element_geomap(mesh: Mesh2D, element_id: int) -> GeoMap:
    """Return the geometric map of an element."""
    return GeoMap.from_corners(mesh.corners(element_id))


def _check_level(level: int) -> float:
    if not MIN_LEVEL <= level <= MAX_LEVEL:
        raise ConfigurationError(
            f"refinement level must lie in [{MIN_LEVEL}, {MAX_LEVEL}], got {level}"
        )
    return 2.0**-level


def _grid_vertices(cells: int, h: float, shift: float = 0.0) -> np.ndarray:
    """Vertex (i, j) has id j (cells + 1) + i."""
    idx = np.arange(cells + 1)
    ii, jj = np.meshgrid(idx, idx, indexing="xy")
    x = ii * h
    y = jj * h
    if shift:
        # Odd rows move by -/+ shift h alternating per column; even rows stay
        odd = (jj % 2) == 1
        y = y + np.where(odd, np.where(ii % 2 == 0, -shift * h, shift * h), 0.0)
    return np.column_stack([x.ravel(), y.ravel()])


def _quad_elements(cells: int) -> list[Element]:
    elements = []
    for j in range(cells):
        for i in range(cells):
            v0 = j * (cells + 1) + i
            elements.append(
                Element(
                    ElementShape.QUADRILATERAL,
                    (v0, v0 + 1, v0 + cells + 2, v0 + cells + 1),
                )
            )
    return elements


def build_rect_mesh(level: int) -> Mesh2D:
    """Uniform square elements of side h = 2^-level."""
    h = _check_level(level)
    cells = 2**level
    mesh = Mesh2D(
        _grid_vertices(cells, h), tuple(_quad_elements(cells)), (), MeshFamily.RECT, h
    )
    return orient_edges(mesh)


def build_tri_mesh(level: int) -> Mesh2D:
    """Squares of the rect mesh split along the lower-left to upper-right diagonal."""
    h = _check_level(level)
    cells = 2**level
    elements = []
    for quad in _quad_elements(cells):
        v0, v1, v2, v3 = quad.vertex_ids
        elements.append(Element(ElementShape.TRIANGLE, (v0, v1, v2)))
        elements.append(Element(ElementShape.TRIANGLE, (v0, v2, v3)))
    mesh = Mesh2D(_grid_vertices(cells, h), tuple(elements), (), MeshFamily.TRI, h)
    return orient_edges(mesh)


def build_trap_mesh(level: int) -> Mesh2D:
    """Trapezoids with base h and vertical sides 0.75h / 1.25h.

    Vertical sides alternate 0.75h, 1.25h up each grid line, starting
    with 0.75h on even lines and 1.25h on odd lines, so every element is a
    genuinely bilinear trapezoid and the boundary rows stay on y = 0, 1.
    """
    h = _check_level(level)
    cells = 2**level
    mesh = Mesh2D(
        _grid_vertices(cells, h, shift=TRAP_SHIFT),
        tuple(_quad_elements(cells)),
        (),
        MeshFamily.TRAP,
        h,
    )
    return orient_edges(mesh)


MESH_BUILDERS = {
    MeshFamily.RECT: build_rect_mesh,
    MeshFamily.TRI: build_tri_mesh,
    MeshFamily.TRAP: build_trap_mesh,
}


def build_mesh(family: MeshFamily, level: int) -> Mesh2D:
    """Build a mesh of the given family and refinement level."""
    return MESH_BUILDERS[MeshFamily(family)](level)


def orient_edges(mesh: Mesh2D) -> Mesh2D:
    """Derive globally oriented edges and per-element orientation signs.

    Interior edges point from the lower to the higher vertex id. Boundary
    edges follow their element's counterclockwise traversal so the global
    normal points out of the domain.
    """
    owners: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for eid, element in enumerate(mesh.elements):
        nv = len(element.vertex_ids)
        if nv != (3 if element.shape is ElementShape.TRIANGLE else 4):
            raise MeshError(f"element {eid} has {nv} vertices for shape {element.shape}")
        for local in range(nv):
            a = element.vertex_ids[local]
            b = element.vertex_ids[(local + 1) % nv]
            owners.setdefault((min(a, b), max(a, b)), []).append((eid, local))

    edges: list[Edge] = []
    edge_of: dict[tuple[int, int], int] = {}
    for key in sorted(owners):
        adjacent = owners[key]
        if len(adjacent) > 2:
            raise MeshError(f"edge {key} shared by {len(adjacent)} elements")
        boundary = len(adjacent) == 1
        if boundary:
            eid, local = adjacent[0]
            element = mesh.elements[eid]
            nv = len(element.vertex_ids)
            direction = (
                element.vertex_ids[local],
                element.vertex_ids[(local + 1) % nv],
            )
        else:
            direction = key
        edge_of[key] = len(edges)
        edges.append(Edge(direction, tuple(e for e, _ in adjacent), boundary))

    elements: list[Element] = []
    for element in mesh.elements:
        nv = len(element.vertex_ids)
        ids, signs = [], []
        for local in range(nv):
            a = element.vertex_ids[local]
            b = element.vertex_ids[(local + 1) % nv]
            gid = edge_of[(min(a, b), max(a, b))]
            ids.append(gid)
            signs.append(1 if edges[gid].vertex_ids == (a, b) else -1)
        elements.append(replace(element, edge_ids=tuple(ids), edge_signs=tuple(signs)))

    oriented = replace(mesh, elements=tuple(elements), edges=tuple(edges))
    _check_mesh(oriented)
    _LOGGER.debug(
        "Oriented %s mesh: %d elements, %d edges (%d boundary)",
        mesh.family,
        oriented.num_elements,
        oriented.num_edges,
        len(oriented.boundary_edge_ids()),
    )
    return oriented


def _check_mesh(mesh: Mesh2D) -> None:
    if not np.all(np.isfinite(mesh.vertices)):
        raise MeshError("non-finite vertex coordinates")
    areas = mesh.element_areas()
    if np.any(areas <= 0.0):
        raise MeshError("element with non-positive area (clockwise vertex order)")
    if abs(float(np.sum(areas)) - 1.0) > AREA_TOL * max(1, mesh.num_elements):
        raise MeshError(f"elements cover area {np.sum(areas)!r}, expected 1")


def renumber_edges(mesh: Mesh2D, permutation: np.ndarray) -> Mesh2D:
    """Return the same mesh with edge ``old`` renumbered to ``permutation[old]``."""
    perm = np.asarray(permutation, dtype=int)
    if sorted(perm.tolist()) != list(range(mesh.num_edges)):
        raise MeshError("edge renumbering is not a permutation")
    edges: list[Edge | None] = [None] * mesh.num_edges
    for old, edge in enumerate(mesh.edges):
        edges[perm[old]] = edge
    elements = tuple(
        replace(element, edge_ids=tuple(int(perm[e]) for e in element.edge_ids))
        for element in mesh.elements
    )
    return replace(mesh, elements=elements, edges=tuple(e for e in edges if e))


def dump_mesh(mesh: Mesh2D, path: str | Path) -> None:
    """Write a plain-text dump: "v x y" per vertex, "e shape v0 v1 ..." per element."""
    vertices = (mesh.vertex(vid) for vid in range(len(mesh.vertices)))
    lines = [f"v {v.x:.17g} {v.y:.17g}" for v in vertices]
    lines += [
        "e " + " ".join([element.shape.value, *map(str, element.vertex_ids)])
        for element in mesh.elements
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
