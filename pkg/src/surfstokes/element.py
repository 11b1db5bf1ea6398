"""Reference MINI element and per-face evaluation of the global basis.

On face K the vertex basis function for (vertex a, direction i) is
``phi_a(x) * P_FK alpha_{i,a,K}`` and the bubble functions are
``b_K(x) * t_l`` with ``b_K`` the product of the barycentrics and ``t_l``
the face tangent frame. Tangential gradients are stored as 3x3 matrices
``G[m, n] = d_n v_m`` restricted to the face plane.
"""

from dataclasses import dataclass

import numpy as np

N_LOCAL_VELOCITY = 8


def barycentric(ref_points):
    ref_points = np.atleast_2d(np.asarray(ref_points, dtype=float))
    x, y = ref_points[:, 0], ref_points[:, 1]
    return np.stack([1.0 - x - y, x, y], axis=1)


def reference_bubble(ref_points):
    lam = barycentric(ref_points)
    return lam.prod(axis=1)


def reference_hat_gradients():
    """Gradients of the three reference hats in reference coordinates, (3, 2)."""
    return np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def barycentric_gradients(geometry, faces=None):
    """Tangential gradients of the three barycentrics on each face, (F, 3, 3)."""
    DF = geometry.DF if faces is None else geometry.DF[faces]
    G = np.einsum("fmr,fms->frs", DF, DF)
    # DF G^{-1} maps reference gradients to ambient tangential gradients
    push = np.einsum("fmr,frs->fms", DF, np.linalg.inv(G))
    return np.einsum("fms,js->fjm", push, reference_hat_gradients())


@dataclass(frozen=True)
class FaceBasisEval:
    """Basis data at reference points for a set of faces.

    Shapes: values (F, Q, 8, 3), grads (F, Q, 8, 3, 3), div (F, Q, 8),
    p_values (Q, 3), p_grads (F, 3, 3).
    """

    values: np.ndarray
    grads: np.ndarray
    div: np.ndarray
    p_values: np.ndarray
    p_grads: np.ndarray


def eval_face_basis(dofmap, ref_points, faces=None):
    """Evaluate the 8 velocity and 3 pressure basis functions on faces."""
    geo = dofmap.mesh.geometry
    if faces is None:
        faces = np.arange(dofmap.mesh.n_faces)
    lam = barycentric(ref_points)  # (Q, 3)
    glam = barycentric_gradients(geo, faces)  # (F, 3, 3)
    dirs = dofmap.face_directions()[faces]  # (F, 3, 2, 3)
    tb = dofmap.bubble_frames[faces]  # (F, 2, 3)
    F, Q = len(faces), len(lam)

    bub = lam.prod(axis=1)  # (Q,)
    # d b / d lam_j = product of the other two
    db = np.stack([lam[:, 1] * lam[:, 2], lam[:, 0] * lam[:, 2], lam[:, 0] * lam[:, 1]], axis=1)
    gbub = np.einsum("qj,fjm->fqm", db, glam)  # (F, Q, 3)

    values = np.empty((F, Q, 8, 3))
    values[:, :, :6] = (lam[None, :, :, None, None] * dirs[:, None]).reshape(F, Q, 6, 3)
    values[:, :, 6:] = bub[None, :, None, None] * tb[:, None]

    grads = np.empty((F, Q, 8, 3, 3))
    gv = dirs[:, :, :, :, None] * glam[:, :, None, None, :]  # (F, 3, 2, 3, 3)
    grads[:, :, :6] = gv.reshape(F, 1, 6, 3, 3)
    grads[:, :, 6:] = tb[:, None, :, :, None] * gbub[:, :, None, None, :]
    div = np.trace(grads, axis1=-2, axis2=-1)
    return FaceBasisEval(values=values, grads=grads, div=div, p_values=lam, p_grads=glam)


def deformation(ev):
    """Symmetric part of the tangential gradients, (F, Q, 8, 3, 3)."""
    return 0.5 * (ev.grads + np.swapaxes(ev.grads, -1, -2))


def evaluate_velocity(dofmap, coeffs, ref_points, faces=None):
    """Discrete velocity values (F, Q, 3) and gradients (F, Q, 3, 3)."""
    if faces is None:
        faces = np.arange(dofmap.mesh.n_faces)
    ev = eval_face_basis(dofmap, ref_points, faces)
    c = np.asarray(coeffs)[dofmap.velocity_dofs()[faces]]  # (F, 8)
    vals = np.einsum("fqkm,fk->fqm", ev.values, c)
    grads = np.einsum("fqkmn,fk->fqmn", ev.grads, c)
    return vals, grads


def evaluate_pressure(dofmap, pcoeffs, ref_points, faces=None):
    """Discrete pressure values (F, Q)."""
    if faces is None:
        faces = np.arange(dofmap.mesh.n_faces)
    lam = barycentric(ref_points)
    return np.asarray(pcoeffs)[dofmap.mesh.faces[faces]] @ lam.T


def ref_to_physical(mesh, ref_points, faces=None):
    """Physical points (F, Q, 3) of reference points on each face."""
    if faces is None:
        faces = np.arange(mesh.n_faces)
    lam = barycentric(ref_points)
    return np.einsum("qj,fjm->fqm", lam, mesh.vertices[mesh.faces[faces]])
