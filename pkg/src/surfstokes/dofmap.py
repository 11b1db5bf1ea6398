"""Vertex degrees of freedom for tangential MINI fields.

Each vertex ``a`` owns two velocity DOFs, interpreted as components along an
orthonormal frame in the plane of a fixed master face ``K_a``. On every other
face of the vertex star the frame vectors are carried over by the vertex
transfer map and expressed in reference-element coordinates (the ``alpha``
table), so that element routines only ever see "hat function times constant
face-tangent vector".

Global numbering::

    [0, 2V)              vertex velocity DOFs, 2a + i
    [2V, 2V + 2F)        bubble velocity DOFs, 2V + 2K + l
    [2V + 2F, 3V + 2F)   pressure DOFs, one per vertex
    3V + 2F              mean-value multiplier
"""

from dataclasses import dataclass

import numpy as np

from surfstokes.geometry import DEFAULT_NORMAL_THRESHOLD, edge_transfer, tangent_frame


@dataclass(frozen=True)
class VertexDofRecord:
    vertex: int
    master_face: int
    frame: np.ndarray  # (2, 3)
    faces: np.ndarray  # (k,) incident faces
    transferred: np.ndarray  # (k, 2, 3) v_{i,a,K}
    alpha: np.ndarray  # (k, 2, 2) alpha[K, i, :]


@dataclass(frozen=True, eq=False)
class DofMap:
    mesh: object
    masters: np.ndarray  # (V,)
    frames: np.ndarray  # (V, 2, 3)
    face_dirs: np.ndarray  # (F, 3, 2, 3) transferred frame vectors per local vertex
    face_alpha: np.ndarray  # (F, 3, 2, 2) reference coefficients per local vertex
    bubble_frames: np.ndarray  # (F, 2, 3)

    @property
    def n_vertex_dofs(self):
        return 2 * self.mesh.n_vertices

    @property
    def n_velocity(self):
        return 2 * self.mesh.n_vertices + 2 * self.mesh.n_faces

    @property
    def n_pressure(self):
        return self.mesh.n_vertices

    @property
    def n_total(self):
        return self.n_velocity + self.n_pressure + 1

    @property
    def pressure_offset(self):
        return self.n_velocity

    @property
    def multiplier_index(self):
        return self.n_velocity + self.n_pressure

    def face_directions(self):
        """(F, 3, 2, 3) directions P_FK alpha used by the global basis functions."""
        P = self.mesh.geometry.DF / self.mesh.geometry.J[:, None, None]
        return np.einsum("fmr,fjir->fjim", P, self.face_alpha)

    def velocity_dofs(self):
        """(F, 8) global velocity indices in local order (vertex j, dir i)..., bubble 0, 1."""
        faces = self.mesh.faces
        F = len(faces)
        vert = (2 * faces[:, :, None] + np.arange(2)).reshape(F, 6)
        bub = self.n_vertex_dofs + 2 * np.arange(F)[:, None] + np.arange(2)
        return np.concatenate([vert, bub], axis=1)

    def record(self, a):
        star = self.mesh.vertex_star(a)
        local = np.argmax(self.mesh.faces[star] == a, axis=1)
        return VertexDofRecord(
            vertex=a,
            master_face=int(self.masters[a]),
            frame=self.frames[a],
            faces=star,
            transferred=self.face_dirs[star, local],
            alpha=self.face_alpha[star, local],
        )


def master_face(star):
    """Deterministic master-face rule: the lowest face index of the star."""
    return int(np.min(star))


def assign_masters(mesh):
    ptr, star = mesh._stars
    return star[ptr[:-1]].copy()


def build_frames(mesh, masters):
    v1, v2 = tangent_frame(mesh.geometry.nu[masters])
    return np.stack([v1, v2], axis=1)


def build_rosetta(mesh, masters, frames, threshold=DEFAULT_NORMAL_THRESHOLD):
    """Transfer each vertex frame to its incident faces and solve for alpha.

    Returns the transferred vectors (F, 3, 2, 3) and coefficients (F, 3, 2, 2).
    """
    geo = mesh.geometry
    faces = mesh.faces
    nu_master = geo.nu[masters[faces]]  # (F, 3, 3)
    M = edge_transfer(nu_master, geo.nu[:, None, :], threshold)  # (F, 3, 3, 3)
    dirs = np.einsum("fjmn,fjin->fjim", M, frames[faces])
    P = geo.DF / geo.J[:, None, None]
    normal = np.einsum("fmr,fms->frs", P, P)
    pinv = np.linalg.solve(normal, P.transpose(0, 2, 1))  # (F, 2, 3)
    alpha = np.einsum("frm,fjim->fjir", pinv, dirs)
    return dirs, alpha


def build_dofmap(mesh, threshold=DEFAULT_NORMAL_THRESHOLD):
    masters = assign_masters(mesh)
    frames = build_frames(mesh, masters)
    dirs, alpha = build_rosetta(mesh, masters, frames, threshold)
    b1, b2 = tangent_frame(mesh.geometry.nu)
    return DofMap(
        mesh=mesh,
        masters=masters,
        frames=frames,
        face_dirs=dirs,
        face_alpha=alpha,
        bubble_frames=np.stack([b1, b2], axis=1),
    )
