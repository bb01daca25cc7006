"""Mesh generation, topology, refinement, and the text round trip."""

import numpy as np
import pytest

from bdmdarcy.mesh import (
    coarse_mesh,
    disk_domain,
    load_mesh,
    mesh_stats,
    refine_project,
    ring_domain,
    save_mesh,
    single_triangle_mesh,
    unit_square_mesh,
)


def disk_hierarchy(levels):
    curves = disk_domain()
    mesh = coarse_mesh(curves)
    out = [mesh]
    for _ in range(levels):
        mesh = refine_project(mesh, curves)
        out.append(mesh)
    return curves, out


def test_disk_coarse_counts():
    mesh = coarse_mesh(disk_domain())
    assert mesh.n_vertices == 7
    assert mesh.n_triangles == 6
    assert len(mesh.boundary_edges) == 6
    rim = mesh.vertices[1:]
    assert np.abs(np.hypot(rim[:, 0], rim[:, 1]) - 1.0).max() < 1e-15


def test_euler_relation():
    disk = coarse_mesh(disk_domain())
    assert disk.n_vertices - disk.n_edges + disk.n_triangles == 1
    ring = coarse_mesh(ring_domain())
    assert ring.n_vertices - ring.n_edges + ring.n_triangles == 0
    curves = ring_domain()
    fine = refine_project(ring, curves)
    assert fine.n_vertices - fine.n_edges + fine.n_triangles == 0


def test_refine_multiplies_triangles_by_four():
    curves, meshes = disk_hierarchy(3)
    for coarse, fine in zip(meshes, meshes[1:]):
        assert fine.n_triangles == 4 * coarse.n_triangles
        assert (fine.signed_areas() > 0).all()


def test_boundary_midpoint_is_projected():
    curves, meshes = disk_hierarchy(1)
    m1 = meshes[1]
    # every boundary vertex created by refinement must land on the circle
    new_boundary = m1.vertices[[v for v in range(7, m1.n_vertices)
                                if m1.vertex_component[v] >= 0]]
    assert np.abs(np.hypot(new_boundary[:, 0], new_boundary[:, 1]) - 1.0).max() < 1e-15


def test_chord_midpoint_projection_example():
    # midpoint of the chord (1,0)-(0,1) projects to (sqrt2/2, sqrt2/2)
    curve = disk_domain()[0]
    projected, _, _, _ = curve.project_many(np.array([[0.5, 0.5]]))
    assert projected[0] == pytest.approx([np.sqrt(2) / 2, np.sqrt(2) / 2], abs=1e-15)


def test_h_reduction_ratio():
    curves, meshes = disk_hierarchy(4)
    hs = [mesh_stats(m).h for m in meshes]
    for h0, h1 in zip(hs, hs[1:]):
        assert 0.45 <= h1 / h0 <= 0.62


def test_adjacency_counts_and_orientation():
    curves, meshes = disk_hierarchy(2)
    mesh = meshes[-1]
    counts = np.where(mesh.edge_tris[:, 1] >= 0, 2, 1)
    assert (counts[mesh.boundary_edges] == 1).all()
    interior = np.setdiff1d(np.arange(mesh.n_edges), mesh.boundary_edges)
    assert (counts[interior] == 2).all()
    # E = V + F - 1 on the disk
    assert mesh.n_edges == mesh.n_vertices + mesh.n_triangles - 1
    # global edge normal: outward of the lower adjacent triangle
    for e in range(mesh.n_edges):
        t0 = mesh.edge_tris[e, 0]
        centroid = mesh.vertices[mesh.triangles[t0]].mean(axis=0)
        a, b = mesh.vertices[mesh.edges[e]]
        assert (centroid - 0.5 * (a + b)) @ mesh.edge_normal[e] < 0
    # boundary normals point out of the meshed region
    for e in mesh.boundary_edges:
        mid = mesh.vertices[mesh.edges[e]].mean(axis=0)
        assert mid @ mesh.edge_normal[e] > 0


def test_all_boundary_vertices_on_curve():
    curves, meshes = disk_hierarchy(3)
    mesh = meshes[-1]
    on_b = mesh.vertex_component >= 0
    r = np.hypot(mesh.vertices[on_b, 0], mesh.vertices[on_b, 1])
    assert np.abs(r - 1.0).max() < 1e-12


def test_stats_equilateral():
    mesh = single_triangle_mesh([(0.0, 0.0), (1.0, 0.0), (0.5, np.sqrt(3) / 2)])
    stats = mesh_stats(mesh)
    assert stats.h == pytest.approx(1.0, abs=1e-15)
    assert stats.min_angle == pytest.approx(60.0, abs=1e-10)
    assert stats.uniformity == 1.0


def test_shape_regularity_across_levels():
    curves, meshes = disk_hierarchy(5)
    for mesh in meshes:
        stats = mesh_stats(mesh)
        assert stats.min_angle >= 20.0
        assert stats.uniformity < 4.0
    hs = [mesh_stats(m).h for m in meshes]
    assert all(h1 / h0 == pytest.approx(0.5, abs=0.12) for h0, h1 in zip(hs, hs[1:]))


def test_ring_components_tagged():
    curves = ring_domain()
    mesh = refine_project(coarse_mesh(curves), curves)
    comps = mesh.edge_component[mesh.boundary_edges]
    assert set(comps) == {0, 1}
    for e in mesh.boundary_edges:
        mid = mesh.vertices[mesh.edges[e]].mean(axis=0)
        r = np.hypot(*mid)
        assert (r > 0.75) == (mesh.edge_component[e] == 0)


def test_unit_square_mesh_is_flat_polygon():
    mesh = unit_square_mesh(4)
    assert mesh.n_triangles == 32
    assert (mesh.signed_areas() > 0).all()
    for e in mesh.boundary_edges:
        a, b = mesh.vertices[mesh.edges[e]]
        assert np.hypot(*(b - a)) == pytest.approx(0.25, abs=1e-15)


def test_save_load_round_trip(tmp_path):
    curves, meshes = disk_hierarchy(2)
    mesh = meshes[-1]
    path = tmp_path / "disk.txt"
    save_mesh(mesh, path)
    loaded = load_mesh(path, level=mesh.level)
    assert np.array_equal(loaded.triangles, mesh.triangles)
    assert np.abs(loaded.vertices - mesh.vertices).max() == 0.0  # 17 digits round trip
    assert np.array_equal(np.sort(loaded.boundary_edges), np.sort(mesh.boundary_edges))
    assert np.array_equal(loaded.edge_component, mesh.edge_component)


def test_non_manifold_rejected():
    from bdmdarcy.mesh import _build_mesh

    # three triangles sharing the edge (1, 2)
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 2.0]])
    triangles = np.array([[0, 1, 2], [1, 3, 2], [1, 4, 2]])
    with pytest.raises(ValueError):
        _build_mesh(vertices, triangles, curves=None, level=0)
