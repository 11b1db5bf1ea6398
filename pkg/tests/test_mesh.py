import numpy as np
import pytest

from surfstokes.errors import MemoryGuard, NonManifold
from surfstokes.geometry import LevelSetSurface, closest_point
from surfstokes.mesh import SurfaceMesh, build_edge_frames, edge_normal, generate, write_off


def test_icosahedron_counts(sphere):
    mesh = generate(sphere, 0)
    assert (mesh.n_vertices, mesh.n_faces, mesh.n_edges) == (12, 20, 30)


@pytest.mark.parametrize("level", [0, 1, 2, 3])
def test_counts_per_level(mesh_at, level):
    mesh = mesh_at(level)
    F = 20 * 4**level
    assert mesh.n_faces == F
    assert mesh.n_vertices == 2 + F // 2
    assert mesh.n_edges == 3 * F // 2
    assert mesh.euler_characteristic() == 2


@pytest.mark.parametrize("level", [1, 3])
def test_mesh_invariants(mesh_at, level):
    mesh = mesh_at(level)
    assert np.all(np.bincount(mesh.edge_faces.ravel(), minlength=mesh.n_faces) == 3)
    assert np.abs(mesh.surface.psi(mesh.vertices)).max() <= 1e-12
    assert np.all(np.einsum("ij,ij->i", mesh.geometry.nu, mesh.centroids) > 0)
    assert mesh.min_angle() >= 20.0
    spd = closest_point(mesh.surface, mesh.centroids)
    assert np.einsum("ij,ij->i", spd.nu, mesh.geometry.nu).min() >= 0.9


def test_face_geometry_invariants(mesh_at):
    geo = mesh_at(2).geometry
    assert np.abs(np.einsum("fmr,fm->fr", geo.DF, geo.nu)).max() <= 1e-14
    np.testing.assert_allclose(geo.J, 2.0 * geo.area, rtol=1e-14)


def test_refine_keeps_parent_vertices_and_quadruples(mesh_at):
    parent, child = mesh_at(2), mesh_at(3)
    assert child.n_faces == 4 * parent.n_faces
    np.testing.assert_array_equal(child.vertices[: parent.n_vertices], parent.vertices)
    assert child.level == parent.level + 1


def test_h_halves_quasi_uniformly(mesh_at):
    hs = [mesh_at(k).h for k in range(1, 5)]
    ratios = np.array(hs[:-1]) / np.array(hs[1:])
    assert np.all(np.abs(ratios - 2.0) <= 0.2)
    for k in range(1, 5):
        lengths = mesh_at(k).edge_lengths
        assert lengths.max() / lengths.min() < 2.0


def test_distance_scales_like_h_squared(mesh_at):
    # max |d(centroid)| / h_K^2 stays bounded under refinement
    ratios = []
    for k in range(1, 6):
        mesh = mesh_at(k)
        d = np.abs(closest_point(mesh.surface, mesh.centroids).d)
        ratios.append(np.max(d / mesh.face_diameters**2))
    assert max(ratios) / min(ratios) < 1.5
    assert max(ratios) < 1.0


def test_memory_guard(ellipsoid):
    with pytest.raises(MemoryGuard):
        generate(ellipsoid, 9)


def test_edge_frame_invariants(mesh_at):
    mesh = mesh_at(2)
    frames = build_edge_frames(mesh)
    nu = mesh.geometry.nu[mesh.edge_faces]  # (E, 2, 3)
    assert np.abs(np.einsum("ekm,ekm->ek", frames.normals, nu)).max() <= 1e-14
    np.testing.assert_allclose(np.linalg.norm(frames.normals, axis=2), 1.0, rtol=1e-14)
    # generically not anti-parallel on a curved polyhedron
    assert np.abs(frames.normals[:, 0] + frames.normals[:, 1]).max() > 1e-3


def test_edge_normal_planar_cases():
    a, b, c = np.array([0.0, 0, 0]), np.array([1.0, 0, 0]), np.array([0.5, np.sqrt(3) / 2, 0])
    n = edge_normal(a, b, c, np.array([0.0, 0.0, 1.0]))
    np.testing.assert_allclose(n, [0.0, -1.0, 0.0], atol=1e-15)
    # coplanar neighbour across the same edge
    n2 = edge_normal(a, b, np.array([0.5, -np.sqrt(3) / 2, 0]), np.array([0.0, 0.0, 1.0]))
    np.testing.assert_allclose(n + n2, 0.0, atol=1e-14)


def test_open_mesh_is_rejected():
    surface = LevelSetSurface.sphere(1.0)
    verts = surface.radial_projection(np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]]))
    mesh = SurfaceMesh(verts, np.array([[0, 1, 2]]), surface)
    with pytest.raises(NonManifold):
        mesh.edge_faces


def test_vertex_stars_contain_vertex(mesh_at):
    mesh = mesh_at(2)
    for a in (0, 17, mesh.n_vertices - 1):
        star = mesh.vertex_star(a)
        assert np.all(np.any(mesh.faces[star] == a, axis=1))
        assert len(star) in (5, 6)


def test_write_off(tmp_path, mesh_at):
    mesh = mesh_at(1)
    path = tmp_path / "m.off"
    write_off(mesh, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "OFF"
    assert lines[1] == f"{mesh.n_vertices} {mesh.n_faces} 0"
    back = np.array([[float(t) for t in ln.split()] for ln in lines[2 : 2 + mesh.n_vertices]])
    np.testing.assert_array_equal(back, mesh.vertices)
    assert lines[-1].startswith("3 ")


def test_generation_is_deterministic(ellipsoid):
    m1, m2 = generate(ellipsoid, 2), generate(ellipsoid, 2)
    np.testing.assert_array_equal(m1.vertices, m2.vertices)
    np.testing.assert_array_equal(m1.faces, m2.faces)
