"""Tests for the structured mesh builders."""

from __future__ import annotations

import numpy as np
import pytest

from hdiv_plus.exceptions import ConfigurationError, MeshError
from hdiv_plus.geometry import jacobian
from hdiv_plus.mesh import (
    build_mesh,
    build_rect_mesh,
    build_trap_mesh,
    build_tri_mesh,
    dump_mesh,
    element_geomap,
    Vertex,
    renumber_edges,
)
from hdiv_plus.models import MeshFamily
from hdiv_plus.quadrature import gauss_square


def test_rect_counts() -> None:
    mesh = build_rect_mesh(2)
    assert mesh.num_elements == 16
    assert mesh.vertices.shape == (25, 2)
    assert mesh.num_edges == 40
    assert len(mesh.boundary_edge_ids()) == 16
    assert mesh.total_area() == pytest.approx(1.0, abs=1e-12)


def test_rect_spacing() -> None:
    mesh = build_rect_mesh(3)
    assert mesh.h == 0.125
    assert mesh.num_elements == 64


def test_tri_counts_and_areas() -> None:
    mesh = build_tri_mesh(2)
    assert mesh.num_elements == 32
    assert mesh.num_edges == 56
    np.testing.assert_allclose(mesh.element_areas(), mesh.h**2 / 2, atol=1e-15)


def test_trap_tiles_square() -> None:
    mesh = build_trap_mesh(2)
    assert mesh.num_elements == 16
    assert mesh.total_area() == pytest.approx(1.0, abs=1e-12)
    ys = mesh.vertices[:, 1]
    assert ys.min() == 0.0
    assert ys.max() == 1.0


@pytest.mark.parametrize("level", [1, 2, 3])
def test_trap_vertical_sides(level: int) -> None:
    mesh = build_trap_mesh(level)
    h = mesh.h
    for eid in range(mesh.num_elements):
        p = mesh.corners(eid)
        left = p[3, 1] - p[0, 1]
        right = p[2, 1] - p[1, 1]
        assert sorted([left, right]) == pytest.approx([0.75 * h, 1.25 * h])


def test_trap_jacobian_not_constant() -> None:
    mesh = build_trap_mesh(2)
    rule = gauss_square(4)
    ratios = []
    for eid in range(mesh.num_elements):
        J = jacobian(element_geomap(mesh, eid), rule.points).J
        ratios.append(J.max() / J.min())
    assert max(ratios) > 1.0 + 1e-6


def test_trap_edge_midlines_offset() -> None:
    mesh = build_trap_mesh(2)
    h = mesh.h
    offsets = set()
    for edge in mesh.edges:
        a, b = mesh.vertices[list(edge.vertex_ids)]
        if edge.boundary or abs(a[0] - b[0]) > 1e-14:
            continue
        mid = 0.5 * (a[1] + b[1])
        grid = round(mid / h - 0.5) + 0.5
        offsets.add(round((mid - grid * h) / h, 6))
    assert offsets == {-0.125, 0.125}


def test_nested_spacings() -> None:
    assert build_trap_mesh(2).h / build_trap_mesh(3).h == 2.0


@pytest.mark.parametrize("family", list(MeshFamily))
@pytest.mark.parametrize("level", [1, 2, 4])
def test_orientation_signs(family: MeshFamily, level: int) -> None:
    mesh = build_mesh(family, level)
    assert mesh.total_area() == pytest.approx(1.0, abs=1e-12)
    signs: dict[int, list[int]] = {}
    for element in mesh.elements:
        for gid, sign in zip(element.edge_ids, element.edge_signs, strict=True):
            signs.setdefault(gid, []).append(sign)
    for gid, edge in enumerate(mesh.edges):
        if edge.boundary:
            assert signs[gid] == [1]
            assert len(edge.element_ids) == 1
        else:
            assert len(edge.element_ids) == 2
            assert signs[gid][0] * signs[gid][1] == -1
            assert edge.vertex_ids[0] < edge.vertex_ids[1]


def test_boundary_normals_point_outward() -> None:
    mesh = build_rect_mesh(2)
    for gid in mesh.boundary_edge_ids():
        a, b = mesh.vertices[list(mesh.edges[gid].vertex_ids)]
        t = b - a
        normal = np.array([t[1], -t[0]])
        mid = 0.5 * (a + b)
        assert normal @ (mid - 0.5) > 0.0


@pytest.mark.parametrize("level", [0, 9])
def test_level_out_of_range(level: int) -> None:
    with pytest.raises(ConfigurationError):
        build_rect_mesh(level)


def test_renumber_edges() -> None:
    mesh = build_tri_mesh(1)
    perm = np.arange(mesh.num_edges)[::-1]
    renumbered = renumber_edges(mesh, perm)
    for old, edge in enumerate(mesh.edges):
        assert renumbered.edges[perm[old]] == edge
    with pytest.raises(MeshError):
        renumber_edges(mesh, np.zeros(mesh.num_edges, dtype=int))


def test_dump_mesh(tmp_path) -> None:
    mesh = build_tri_mesh(1)
    path = tmp_path / "mesh.txt"
    dump_mesh(mesh, path)
    lines = path.read_text().splitlines()
    assert sum(line.startswith("v ") for line in lines) == 9
    assert sum(line.startswith("e triangle ") for line in lines) == 8
    assert lines[0] == "v 0 0"


def test_trap_vertex_offsets() -> None:
    mesh = build_trap_mesh(2)
    h = mesh.h
    # Row 1, columns 0 and 1
    left, right = mesh.vertex(5), mesh.vertex(6)
    assert isinstance(left, Vertex)
    assert (left.x, right.x) == (0.0, h)
    assert left.y == pytest.approx(0.75 * h)
    assert right.y == pytest.approx(1.25 * h)


@pytest.mark.parametrize("coords", [(np.nan, 0.0), (0.5, np.inf)])
def test_vertex_rejects_non_finite(coords: tuple[float, float]) -> None:
    with pytest.raises(MeshError):
        Vertex(*coords)
