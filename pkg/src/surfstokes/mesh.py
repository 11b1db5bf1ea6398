"""Icosahedral triangulations inscribed in a level-set surface."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from surfstokes.errors import DegenerateGeometry, MemoryGuard, NonManifold
from surfstokes.geometry import closest_point

MAX_LEVEL = 8
MIN_ANGLE_DEG = 20.0


@dataclass(frozen=True)
class FaceGeometry:
    """Per-face affine data, arrays over all faces."""

    nu: np.ndarray  # (F, 3) unit normals
    area: np.ndarray  # (F,)
    DF: np.ndarray  # (F, 3, 2) Jacobian of the reference map
    J: np.ndarray  # (F,) sqrt(det(DF^T DF)) = 2 * area

    @classmethod
    def from_arrays(cls, vertices, faces):
        P = vertices[faces]
        DF = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]], axis=2)
        cr = np.cross(DF[:, :, 0], DF[:, :, 1])
        J = np.linalg.norm(cr, axis=1)
        return cls(nu=cr / J[:, None], area=0.5 * J, DF=DF, J=J)


@dataclass(frozen=True)
class EdgeFrame:
    """In-plane outward unit normals n_j^e for each (edge, incident face)."""

    normals: np.ndarray  # (E, 2, 3), paired with SurfaceMesh.edge_faces


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Triangulated polyhedral surface with the topology needed for the DOF map.

    Vertices, faces and edges are numbered deterministically: vertices and
    faces in creation order, edges in lexicographic order of their sorted
    endpoint pairs.
    """

    vertices: np.ndarray  # (V, 3)
    faces: np.ndarray  # (F, 3), counter-clockwise seen from outside
    surface: object = None
    level: int = 0

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def geometry(self):
        return FaceGeometry.from_arrays(self.vertices, self.faces)

    @cached_property
    def _edge_table(self):
        local = np.array([[0, 1], [1, 2], [2, 0]])
        pairs = np.sort(self.faces[:, local], axis=2).reshape(-1, 2)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        return edges, inverse.reshape(-1, 3)

    @property
    def edges(self):
        """(E, 2) sorted vertex pairs."""
        return self._edge_table[0]

    @property
    def face_edges(self):
        """(F, 3) edge index of local edge (j, j+1) of each face."""
        return self._edge_table[1]

    @cached_property
    def edge_faces(self):
        """(E, 2) the two faces sharing each edge (lower face index first)."""
        fe = self.face_edges.ravel()
        counts = np.bincount(fe, minlength=self.n_edges)
        if np.any(counts != 2):
            bad = int(np.flatnonzero(counts != 2)[0])
            raise NonManifold(f"edge {self.edges[bad].tolist()} has {counts[bad]} incident faces")
        order = np.argsort(fe, kind="stable")
        return (order // 3).reshape(-1, 2)

    @cached_property
    def _stars(self):
        flat = self.faces.ravel()
        order = np.argsort(flat, kind="stable")
        counts = np.bincount(flat, minlength=self.n_vertices)
        ptr = np.concatenate([[0], np.cumsum(counts)])
        return ptr, order // 3

    def vertex_star(self, a):
        """Faces incident to vertex ``a`` in increasing index order."""
        ptr, star = self._stars
        return star[ptr[a]:ptr[a + 1]]

    @property
    def vertex_stars(self):
        return [self.vertex_star(a) for a in range(self.n_vertices)]

    @cached_property
    def edge_lengths(self):
        e = self.edges
        return np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)

    @cached_property
    def face_diameters(self):
        return self.edge_lengths[self.face_edges].max(axis=1)

    @property
    def h(self):
        """Mesh size: the longest edge."""
        return float(self.edge_lengths.max())

    @cached_property
    def centroids(self):
        return self.vertices[self.faces].mean(axis=1)

    def min_angle(self):
        """Smallest interior angle over all faces, in degrees."""
        P = self.vertices[self.faces]
        angles = []
        for j in range(3):
            u = P[:, (j + 1) % 3] - P[:, j]
            w = P[:, (j + 2) % 3] - P[:, j]
            c = np.einsum("ij,ij->i", u, w) / (np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1))
            angles.append(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))
        return float(np.min(angles))

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    def validate(self, min_angle=MIN_ANGLE_DEG):
        """Check the closed-mesh invariants; raise on the first violation."""
        _ = self.edge_faces
        if self.euler_characteristic() != 2:
            raise NonManifold(f"Euler characteristic {self.euler_characteristic()} != 2")
        center = np.asarray(self.surface.center)
        if np.any(np.einsum("ij,ij->i", self.geometry.nu, self.centroids - center) <= 0):
            raise DegenerateGeometry("face normals not consistently outward")
        if np.any(np.abs(self.surface.psi(self.vertices)) > 1e-12):
            raise DegenerateGeometry("mesh vertices are not on the surface")
        if self.min_angle() < min_angle:
            raise DegenerateGeometry(f"min angle {self.min_angle():.1f} deg below {min_angle} deg")
        dist = np.abs(closest_point(self.surface, self.centroids).d)
        if dist.max() > self.surface.tube_halfwidth:
            raise DegenerateGeometry(
                f"max |d| = {dist.max():.3f} exceeds tube half-width {self.surface.tube_halfwidth}"
            )
        return self


def _icosahedron():
    t = (1.0 + 5.0**0.5) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=float,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    return verts, faces


def generate(surface, level, max_level=MAX_LEVEL):
    """Icosahedron mapped radially onto the surface, refined ``level`` times."""
    if level < 0:
        raise ValueError("level must be non-negative")
    if level > max_level:
        raise MemoryGuard(f"level {level} exceeds the cap of {max_level}")
    verts, faces = _icosahedron()
    verts = surface.radial_projection(verts + np.asarray(surface.center))
    centroids = verts[faces].mean(axis=1)
    nu = np.cross(verts[faces[:, 1]] - verts[faces[:, 0]], verts[faces[:, 2]] - verts[faces[:, 0]])
    flip = np.einsum("ij,ij->i", nu, centroids - np.asarray(surface.center)) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    mesh = SurfaceMesh(verts, faces, surface, 0).validate()
    for _ in range(level):
        mesh = refine(mesh, max_level=max_level)
    return mesh


def refine(mesh, max_level=MAX_LEVEL):
    """One round of 4-way midpoint subdivision; midpoints projected onto the surface."""
    if mesh.level + 1 > max_level:
        raise MemoryGuard(f"level {mesh.level + 1} exceeds the cap of {max_level}")
    V = mesh.n_vertices
    edges = mesh.edges
    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    new = closest_point(mesh.surface, mid).p
    vertices = np.concatenate([mesh.vertices, new])
    m = V + mesh.face_edges  # m[:, j] is the midpoint of local edge (j, j+1)
    f = mesh.faces
    faces = np.concatenate(
        [
            np.stack([f[:, 0], m[:, 0], m[:, 2]], axis=1),
            np.stack([f[:, 1], m[:, 1], m[:, 0]], axis=1),
            np.stack([f[:, 2], m[:, 2], m[:, 1]], axis=1),
            np.stack([m[:, 0], m[:, 1], m[:, 2]], axis=1),
        ]
    )
    # interleave so that children of face k are 4k..4k+3
    faces = faces.reshape(4, -1, 3).transpose(1, 0, 2).reshape(-1, 3)
    return SurfaceMesh(vertices, faces, mesh.surface, mesh.level + 1).validate()


def edge_normal(a, b, opposite, nu_K):
    """Unit in-plane normal of edge (a, b) pointing out of the face."""
    n = np.cross(b - a, nu_K)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    mid = 0.5 * (a + b)
    sign = np.where(np.einsum("...i,...i->...", n, opposite - mid) > 0, -1.0, 1.0)
    return n * sign[..., None]


def build_edge_frames(mesh):
    edges = mesh.edges
    ef = mesh.edge_faces
    normals = np.empty((len(edges), 2, 3))
    for k in range(2):
        faces = mesh.faces[ef[:, k]]
        # the vertex of the face not on the edge
        on_edge = (faces == edges[:, :1]) | (faces == edges[:, 1:])
        opp = faces[~on_edge]
        normals[:, k] = edge_normal(
            mesh.vertices[edges[:, 0]], mesh.vertices[edges[:, 1]], mesh.vertices[opp], mesh.geometry.nu[ef[:, k]]
        )
    return EdgeFrame(normals)


def write_off(mesh, path):
    """ASCII OFF export (vertices and triangles)."""
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} 0"]
    lines += [f"{x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"3 {i} {j} {k}" for i, j, k in mesh.faces.tolist()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
