"""Differential geometry of level-set surfaces and the surface Piola transforms.

All point-wise routines are vectorised: points are arrays of shape (N, 3)
(a single point of shape (3,) is promoted and the result squeezed back).
Sign conventions: the signed distance ``d`` is positive outside, the normal
points outward, and the Weingarten map ``H = D^2 d`` is positive
semi-definite on convex surfaces.
"""

from dataclasses import dataclass, field

import numpy as np

from surfstokes.errors import DegenerateGeometry, NoConvergence, OffSurface
from surfstokes.jet import Jet

DEFAULT_NORMAL_THRESHOLD = 0.1


@dataclass(frozen=True)
class LevelSetSurface:
    """Axis-aligned ellipsoid (or sphere) ``sum x_i^2 / a_i^2 - 1 = 0``.

    Only quadrics of this form are supported; other implicit surfaces would
    need their own closest-point solver and ``normal_jets``.
    """

    kind: str
    semi_axes: tuple
    tube_halfwidth: float = 0.25
    center: tuple = field(default=(0.0, 0.0, 0.0))

    def __post_init__(self):
        if self.kind not in ("ellipsoid", "sphere"):
            raise ValueError(f"unknown surface kind {self.kind!r}")
        if len(self.semi_axes) != 3 or min(self.semi_axes) <= 0:
            raise ValueError("semi-axes must be three positive reals")
        if self.tube_halfwidth <= 0:
            raise ValueError("tube half-width must be positive")

    @classmethod
    def sphere(cls, radius=1.0, tube_halfwidth=None):
        r = float(radius)
        return cls("sphere", (r, r, r), tube_halfwidth or 0.5 * r)

    @classmethod
    def ellipsoid(cls, a, b, c, tube_halfwidth=None):
        axes = (float(a), float(b), float(c))
        # half the reach: the smallest principal radius of curvature is a_min^2 / a_max
        return cls("ellipsoid", axes, tube_halfwidth or 0.5 * min(axes) ** 2 / max(axes))

    @property
    def axes2(self):
        return np.asarray(self.semi_axes, dtype=float) ** 2

    @property
    def diam(self):
        return 2.0 * max(self.semi_axes)

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum(x**2 / self.axes2, axis=-1) - 1.0

    def grad_psi(self, x):
        return 2.0 * np.asarray(x, dtype=float) / self.axes2

    def hess_psi(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.diag(2.0 / self.axes2), x.shape[:-1] + (3, 3)).copy()

    def radial_projection(self, x):
        """Scale each point along the ray from the center onto the surface."""
        x = np.asarray(x, dtype=float)
        return x / np.sqrt(self.psi(x) + 1.0)[..., None]

    def normal_jets(self, x):
        """Level-set normal extension grad(psi)/|grad(psi)| as three jets."""
        xs = Jet.variables(x)
        g = [xi * (2.0 / a2) for xi, a2 in zip(xs, self.axes2)]
        norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt()
        inv = norm.reciprocal()
        return [gi * inv for gi in g], xs


@dataclass(frozen=True)
class SurfacePointData:
    """Closest-point data for a batch of query points.

    ``H`` is the Weingarten map at the query point (off-surface), ``H_p`` the
    one at the projected point.
    """

    x: np.ndarray
    p: np.ndarray
    d: np.ndarray
    nu: np.ndarray
    H: np.ndarray
    Pi: np.ndarray
    H_p: np.ndarray

    def __len__(self):
        return len(self.d)


def _as_batch(x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    return np.atleast_2d(x), single


def _squeeze(spd):
    return SurfacePointData(*(getattr(spd, f)[0] for f in ("x", "p", "d", "nu", "H", "Pi", "H_p")))


def closest_point(surface, x, max_iter=50, tol=1e-12):
    """Closest point projection with distance, normal and Weingarten map.

    The Lagrange conditions ``y + (t/2) grad psi(y) = x``, ``psi(y) = 0`` are
    reduced to the scalar secular equation in ``t`` (``y_i = a_i^2 x_i /
    (a_i^2 + t)``) and solved by safeguarded Newton iteration on the branch
    ``t > -min(a_i^2)``, where the root is unique and is the global minimiser.
    """
    xb, single = _as_batch(x)
    a2 = surface.axes2
    lower = -a2.min()
    xx = xb**2 * a2
    t = np.zeros(len(xb))
    done = np.zeros(len(xb), dtype=bool)
    for _ in range(max_iter):
        den = a2 + t[:, None]
        r = xx / den**2
        F = r.sum(axis=1) - 1.0
        dF = -2.0 * (r / den).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dF != 0.0, F / dF, np.inf)
        t_new = t - step
        bad = ~np.isfinite(t_new) | (t_new <= lower)
        t_new = np.where(bad, 0.5 * (t + lower), t_new)
        t_new = np.where(done, t, t_new)
        done |= np.abs(t_new - t) <= 4e-16 * (a2.max() + np.abs(t))
        t = t_new
        if done.all():
            break
    p = a2 * xb / (a2 + t[:, None])
    resid = np.abs(surface.psi(p))
    if not done.all() or np.any(resid > tol * max(1.0, surface.diam)):
        worst = int(np.argmax(np.where(done, resid, np.inf)))
        raise NoConvergence(
            f"closest-point iteration failed at {xb[worst].tolist()} "
            f"(|psi|={resid[worst]:.2e}); point outside the tube or degenerate"
        )
    grad = surface.grad_psi(p)
    gnorm = np.linalg.norm(grad, axis=1)
    nu = grad / gnorm[:, None]
    d = 0.5 * t * gnorm
    Pi = np.eye(3) - nu[:, :, None] * nu[:, None, :]
    Hp = Pi @ surface.hess_psi(p) @ Pi / gnorm[:, None, None]
    Hp = 0.5 * (Hp + Hp.transpose(0, 2, 1))
    # d^2 d at x: H_p (I + d H_p)^{-1}; the two factors commute
    H = np.linalg.solve(np.eye(3) + d[:, None, None] * Hp, Hp)
    H = 0.5 * (H + H.transpose(0, 2, 1))
    spd = SurfacePointData(x=xb, p=p, d=d, nu=nu, H=H, Pi=Pi, H_p=Hp)
    return _squeeze(spd) if single else spd


def weingarten_on_surface(surface, p, tol=1e-10):
    """Weingarten map ``Pi Hess(psi) Pi / |grad psi|`` at points of the surface."""
    pb, single = _as_batch(p)
    if np.any(np.abs(surface.psi(pb)) > tol):
        raise OffSurface("weingarten_on_surface requires points on the surface")
    grad = surface.grad_psi(pb)
    gnorm = np.linalg.norm(grad, axis=1)
    nu = grad / gnorm[:, None]
    Pi = np.eye(3) - nu[:, :, None] * nu[:, None, :]
    H = Pi @ surface.hess_psi(pb) @ Pi / gnorm[:, None, None]
    H = 0.5 * (H + H.transpose(0, 2, 1))
    return H[0] if single else H


def curvature_invariants(H):
    """Trace and second invariant of H; with H nu = 0 these are k1 + k2, k1 k2."""
    tr = np.trace(H, axis1=-2, axis2=-1)
    tr2 = np.einsum("...ij,...ji->...", H, H)
    return tr, 0.5 * (tr**2 - tr2)


def principal_curvatures(H):
    """The two eigenvalues of H belonging to tangent eigenvectors (k1 >= k2)."""
    s, q = curvature_invariants(H)
    disc = np.sqrt(np.maximum(0.25 * s**2 - q, 0.0))
    return 0.5 * s + disc, 0.5 * s - disc


def _normal_cosine(nu_K, spd, threshold):
    cos = np.einsum("...i,...i->...", spd.nu, nu_K)
    if np.any(cos <= threshold):
        raise DegenerateGeometry(
            f"nu . nu_K = {np.min(cos):.3f} <= {threshold}; mesh too coarse for the tube assumption"
        )
    return cos


def measure_ratio(nu_K, spd, threshold=0.0):
    """Surface-measure ratio mu_h = (nu . nu_K)(1 - d k1)(1 - d k2)."""
    cos = _normal_cosine(nu_K, spd, threshold)
    s, q = curvature_invariants(spd.H)
    return cos * (1.0 - spd.d * s + spd.d**2 * q)


def piola_forward(nu_K, spd, v, mu=None):
    """Piola transform of a face-tangent vector to the tangent plane at p(x)."""
    if mu is None:
        mu = measure_ratio(nu_K, spd)
    L = spd.Pi - spd.d[..., None, None] * spd.H
    return np.einsum("...ij,...j->...i", L, v) / np.asarray(mu)[..., None]


def inverse_piola_matrix(nu_K, spd, threshold=DEFAULT_NORMAL_THRESHOLD):
    """The 3x3 matrix mu_h [I - nu (x) nu_K / (nu . nu_K)] [I - d H]^{-1}."""
    cos = _normal_cosine(nu_K, spd, threshold)
    s, q = curvature_invariants(spd.H)
    mu = cos * (1.0 - spd.d * s + spd.d**2 * q)
    nu_K = np.broadcast_to(nu_K, spd.nu.shape)
    oblique = np.eye(3) - spd.nu[..., :, None] * nu_K[..., None, :] / cos[..., None, None]
    # [I - d H(x)]^{-1} = I + d H(p)
    shrink = np.eye(3) + spd.d[..., None, None] * spd.H_p
    return mu[..., None, None] * (oblique @ shrink)


def piola_inverse(nu_K, spd, w, threshold=DEFAULT_NORMAL_THRESHOLD):
    """Pull a vector tangent at p(x) back to the plane of the face."""
    return np.einsum("...ij,...j->...i", inverse_piola_matrix(nu_K, spd, threshold), w)


def edge_transfer(nu_master, nu_K, threshold=DEFAULT_NORMAL_THRESHOLD):
    """Vertex transfer map (nu_m . nu_K) I - nu_m (x) nu_K between face planes."""
    nu_master = np.asarray(nu_master, dtype=float)
    nu_K = np.asarray(nu_K, dtype=float)
    cos = np.einsum("...i,...i->...", nu_master, nu_K)
    if np.any(cos <= threshold):
        raise DegenerateGeometry(f"adjacent face normals too far apart (cos = {np.min(cos):.3f})")
    return cos[..., None, None] * np.eye(3) - nu_master[..., :, None] * nu_K[..., None, :]


def tangent_frame(normal):
    """Orthonormal tangent pair for unit normals.

    The first vector is the projection of the coordinate axis least aligned
    with the normal (lowest axis index on ties); the second is normal x first.
    """
    normal = np.asarray(normal, dtype=float)
    j = np.argmin(np.abs(normal), axis=-1)
    e = np.eye(3)[j]
    v1 = e - np.take_along_axis(normal, j[..., None], axis=-1) * normal
    v1 /= np.linalg.norm(v1, axis=-1, keepdims=True)
    v2 = np.cross(normal, v1)
    return v1, v2
