"""Global assembly of the discrete surface Stokes saddle-point system.

Block structure (u velocity, p pressure, lam mean-value multiplier)::

    [ A   B^T  0 ] [u  ]   [F]
    [ B   0    c ] [p  ] = [G]
    [ 0   c^T  0 ] [lam]   [0]

with ``A`` the deformation + mass form, ``B`` the (negative) divergence
form, ``c_k`` the integral of pressure hat ``k`` and ``G`` the divergence
data ``-int mu_h (g o p) q_k``.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from surfstokes.element import deformation, eval_face_basis, ref_to_physical
from surfstokes.errors import AssemblyOverflow
from surfstokes.geometry import closest_point
from surfstokes.quadrature import quadrature_rule

log = logging.getLogger(__name__)

MAX_DIMENSION = 400_000


@dataclass(frozen=True, eq=False)
class SaddleSystem:
    A: sp.csr_matrix
    B: sp.csr_matrix
    c: np.ndarray
    F: np.ndarray
    G: np.ndarray
    Mp: sp.csr_matrix  # pressure mass matrix (preconditioning and inf-sup)
    dofmap: object
    compatibility_defect: float = 0.0  # sum(G) before the mean shift

    @property
    def n_velocity(self):
        return self.A.shape[0]

    @property
    def n_pressure(self):
        return self.B.shape[0]

    @property
    def dimension(self):
        return self.n_velocity + self.n_pressure + 1

    def matrix(self):
        c = sp.csr_matrix(self.c[:, None])
        return sp.bmat(
            [[self.A, self.B.T, None], [self.B, None, c], [None, c.T, None]],
            format="csc",
        )

    def rhs(self):
        return np.concatenate([self.F, self.G, [0.0]])

    def split(self, x):
        nv, npr = self.n_velocity, self.n_pressure
        return x[:nv], x[nv:nv + npr], float(x[nv + npr])


def _scatter(rows, cols, vals, shape):
    m = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape).tocsr()
    m.sum_duplicates()
    return m


def assemble(mesh, dofmap, data, quad_degree=6, fh_mode="piola", max_dimension=MAX_DIMENSION):
    """Assemble the saddle system for the given data (an ExactSolution-like object)."""
    n_total = dofmap.n_total
    if n_total > max_dimension:
        raise AssemblyOverflow(f"system dimension {n_total} exceeds cap {max_dimension}")
    rule = quadrature_rule(quad_degree)
    geo = mesh.geometry
    nf = mesh.n_faces
    Aloc = np.zeros((nf, 8, 8))
    Bloc = np.zeros((nf, 3, 8))
    Mloc = np.zeros((nf, 3, 3))
    Floc = np.zeros((nf, 8))
    Gloc = np.zeros((nf, 3))
    cloc = np.zeros((nf, 3))
    for q in range(len(rule)):
        ref = rule.points[q:q + 1]
        ev = eval_face_basis(dofmap, ref)
        w = rule.weights[q] * geo.J
        vals = ev.values[:, 0]
        Def = deformation(ev)[:, 0]
        lam = ev.p_values[0]
        Aloc += w[:, None, None] * (
            np.einsum("fimn,fjmn->fij", Def, Def) + np.einsum("fim,fjm->fij", vals, vals)
        )
        Bloc -= w[:, None, None] * lam[None, :, None] * ev.div[:, 0, None, :]
        Mloc += w[:, None, None] * np.outer(lam, lam)[None]
        cloc += w[:, None] * lam[None]
        x = ref_to_physical(mesh, ref)[:, 0]
        spd = closest_point(mesh.surface, x)
        fh, gdata, _ = data.transfer_to_mesh(geo.nu, spd, fh_mode)
        Floc += w[:, None] * np.einsum("fim,fm->fi", vals, fh)
        Gloc -= (w * gdata)[:, None] * lam[None]
    Aloc = 0.5 * (Aloc + Aloc.transpose(0, 2, 1))

    vd = dofmap.velocity_dofs()
    pd = mesh.faces
    nv, npr = dofmap.n_velocity, dofmap.n_pressure
    A = _scatter(np.repeat(vd, 8, axis=1), np.tile(vd, (1, 8)), Aloc, (nv, nv))
    A = ((A + A.T) * 0.5).tocsr()
    B = _scatter(np.repeat(pd, 8, axis=1), np.tile(vd, (1, 3)), Bloc, (npr, nv))
    Mp = _scatter(np.repeat(pd, 3, axis=1), np.tile(pd, (1, 3)), Mloc, (npr, npr))
    Fv = np.bincount(vd.ravel(), weights=Floc.ravel(), minlength=nv)
    G = np.bincount(pd.ravel(), weights=Gloc.ravel(), minlength=npr)
    c = np.bincount(pd.ravel(), weights=cloc.ravel(), minlength=npr)
    defect = float(G.sum())
    # remove the quadrature-level incompatibility so that the multiplier vanishes
    G = G - (defect / c.sum()) * c
    log.debug("assembled level %d: %d unknowns, compatibility defect %.2e", mesh.level, n_total, defect)
    return SaddleSystem(A=A, B=B, c=c, F=Fv, G=G, Mp=Mp, dofmap=dofmap, compatibility_defect=defect)
