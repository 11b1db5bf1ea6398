"""Manufactured surface Stokes solution and its data on the discrete surface.

Velocity ``u = Pi (-z^2, x, y)`` and pressure ``p = x y^3 + z``. Surface
operators are evaluated from a smooth extension (the level-set normal
``grad psi / |grad psi|`` is used for ``Pi`` off the surface); only
tangential derivatives enter, so the choice of extension does not matter.
First and second derivatives come from :mod:`surfstokes.jet`.
"""

from dataclasses import dataclass

import numpy as np

from surfstokes.errors import OffSurface
from surfstokes.geometry import measure_ratio, piola_inverse
from surfstokes.jet import stack_hessians, stack_jacobian, stack_values

FH_MODES = ("piola", "projected")
_CHUNK = 40000


@dataclass(frozen=True)
class SurfaceOps:
    u: np.ndarray  # (N, 3)
    grad_u: np.ndarray  # (N, 3, 3) Pi grad(u^e) Pi
    def_u: np.ndarray  # (N, 3, 3)
    div_u: np.ndarray  # (N,)
    p: np.ndarray  # (N,)
    grad_p: np.ndarray  # (N, 3)
    div_def: np.ndarray  # (N, 3) Pi div Def u
    f: np.ndarray  # (N, 3)


def _concat(parts):
    return SurfaceOps(*(np.concatenate([getattr(p, k) for p in parts]) for k in SurfaceOps.__dataclass_fields__))


class ExactSolution:
    """The ellipsoid test pair; works on any :class:`LevelSetSurface`."""

    def __init__(self, surface, on_surface_tol=1e-10):
        self.surface = surface
        self.on_surface_tol = on_surface_tol

    # plain evaluations, valid on the surface
    def velocity(self, x):
        x = np.atleast_2d(x)
        g = self.surface.grad_psi(x)
        nu = g / np.linalg.norm(g, axis=1, keepdims=True)
        w = np.stack([-x[:, 2] ** 2, x[:, 0], x[:, 1]], axis=1)
        return w - np.einsum("ni,ni->n", nu, w)[:, None] * nu

    def pressure(self, x):
        x = np.atleast_2d(x)
        return x[:, 0] * x[:, 1] ** 3 + x[:, 2]

    def _jets(self, x):
        nu, (X, Y, Z) = self.surface.normal_jets(x)
        w = [-(Z * Z), X, Y]
        Pi = [[(1.0 if i == j else 0.0) - nu[i] * nu[j] for j in range(3)] for i in range(3)]
        u = [Pi[i][0] * w[0] + Pi[i][1] * w[1] + Pi[i][2] * w[2] for i in range(3)]
        p = X * Y**3 + Z
        return Pi, u, p

    def surface_ops(self, x):
        """All surface differential operators of (u, p) at points on the surface."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        off = np.abs(self.surface.psi(x))
        if np.any(off > self.on_surface_tol):
            raise OffSurface(f"point off the surface by |psi| = {off.max():.2e}")
        if len(x) > _CHUNK:
            return _concat([self.surface_ops(x[i:i + _CHUNK]) for i in range(0, len(x), _CHUNK)])
        Pi_j, u_j, p_j = self._jets(x)
        P = np.stack([stack_values(row) for row in Pi_j], axis=1)  # (N, 3, 3)
        dP = np.stack([stack_jacobian(row) for row in Pi_j], axis=1)  # (N, 3, 3, 3) [i, j, k]
        u = stack_values(u_j)
        J = stack_jacobian(u_j)  # [i, j] = d_j u_i
        Hu = stack_hessians(u_j)  # [i, j, k] = d_j d_k u_i

        G = P @ J @ P
        dG = (
            np.einsum("niak,nab,nbj->nijk", dP, J, P)
            + np.einsum("nia,nabk,nbj->nijk", P, Hu, P)
            + np.einsum("nia,nab,nbjk->nijk", P, J, dP)
        )
        D = 0.5 * (G + G.transpose(0, 2, 1))
        dD = 0.5 * (dG + dG.transpose(0, 2, 1, 3))
        div_D = np.einsum("nijk,nkj->ni", dD, P)
        div_def = np.einsum("nij,nj->ni", P, div_D)
        grad_p = np.einsum("nij,nj->ni", P, p_j.grad)
        f = -div_def + grad_p + u
        return SurfaceOps(
            u=u,
            grad_u=G,
            def_u=D,
            div_u=np.trace(G, axis1=1, axis2=2),
            p=p_j.val,
            grad_p=grad_p,
            div_def=div_def,
            f=f,
        )

    def transfer_to_mesh(self, nu_K, spd, fh_mode="piola"):
        """Load and divergence data at points of the discrete surface.

        Returns ``(f_h, mu_h * (g o p), mu_h)`` where ``g = div_gamma u``.
        ``fh_mode='piola'`` pulls f back with the inverse Piola transform,
        ``'projected'`` uses ``Pi_K (f o p)``.
        """
        ops = self.surface_ops(spd.p)
        mu = measure_ratio(nu_K, spd)
        if fh_mode == "piola":
            fh = piola_inverse(nu_K, spd, ops.f)
        elif fh_mode == "projected":
            nu_K = np.broadcast_to(nu_K, ops.f.shape)
            fh = ops.f - np.einsum("ni,ni->n", ops.f, nu_K)[:, None] * nu_K
        else:
            raise ValueError(f"fh_mode must be one of {FH_MODES}")
        return fh, mu * ops.div_u, mu


class ZeroSolution(ExactSolution):
    """Trivial pair u = 0, p = 0."""

    def velocity(self, x):
        return np.zeros_like(np.atleast_2d(x), dtype=float)

    def pressure(self, x):
        return np.zeros(len(np.atleast_2d(x)))

    def surface_ops(self, x):
        n = len(np.atleast_2d(x))
        z3, z33 = np.zeros((n, 3)), np.zeros((n, 3, 3))
        return SurfaceOps(z3, z33, z33, np.zeros(n), np.zeros(n), z3, z3, z3)
