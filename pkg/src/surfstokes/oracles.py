"""Independent reference computations used to validate the production kernels.

Nothing here is used by the solver pipeline. Each oracle takes a different
route to the same quantity: closed forms on the sphere, finite differences
instead of automatic differentiation, parametric minimisation instead of the
secular-equation Newton solve, and recursive subdivision instead of the
measure ratio.
"""

import numpy as np
from scipy.optimize import minimize, root

from surfstokes.geometry import closest_point, measure_ratio
from surfstokes.quadrature import quadrature_rule


# -- sphere closed forms ---------------------------------------------------------


def sphere_closest_point(x, radius=1.0):
    """Closest point, signed distance, normal and Weingarten map for a centred sphere."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.linalg.norm(x, axis=1)
    nu = x / r[:, None]
    Pi = np.eye(3) - nu[:, :, None] * nu[:, None, :]
    return radius * nu, r - radius, nu, Pi / r[:, None, None]


# -- finite differences ----------------------------------------------------------


def richardson_jacobian(fun, x, step):
    """Central-difference Jacobian with one Richardson step.

    ``fun`` maps (N, 3) points to arrays of shape (N, ...); the result has
    shape (N, ..., 3) with the differentiation index last.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    cols = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1.0
        d1 = (fun(x + step * e) - fun(x - step * e)) / (2 * step)
        d2 = (fun(x + 0.5 * step * e) - fun(x - 0.5 * step * e)) / step
        cols.append((4.0 * d2 - d1) / 3.0)
    return np.stack(cols, axis=-1)


def _extension_fields(surface):
    """Plain-numpy versions of the extended velocity, pressure and projector."""

    def proj(x):
        g = surface.grad_psi(x)
        nu = g / np.linalg.norm(g, axis=1, keepdims=True)
        return np.eye(3) - nu[:, :, None] * nu[:, None, :]

    def vel(x):
        w = np.stack([-x[:, 2] ** 2, x[:, 0], x[:, 1]], axis=1)
        return np.einsum("nij,nj->ni", proj(x), w)

    def pres(x):
        return x[:, 0] * x[:, 1] ** 3 + x[:, 2]

    return proj, vel, pres


def fd_surface_ops(surface, x, inner_step=1e-5, outer_step=1e-3):
    """Surface operators of the manufactured pair by nested finite differences.

    First derivatives use ``inner_step``; the divergence of the deformation
    tensor differentiates that finite-difference field again with the larger
    ``outer_step`` so that round-off of the inner level is not amplified.
    Returns a dict with keys u, grad_u, def_u, div_u, grad_p, div_def, f.
    """
    proj, vel, pres = _extension_fields(surface)
    x = np.atleast_2d(np.asarray(x, dtype=float))

    def grad_gamma(y):
        P = proj(y)
        return P @ richardson_jacobian(vel, y, inner_step) @ P

    def def_field(y):
        G = grad_gamma(y)
        return 0.5 * (G + G.transpose(0, 2, 1))

    P = proj(x)
    G = grad_gamma(x)
    D = 0.5 * (G + G.transpose(0, 2, 1))
    dD = richardson_jacobian(def_field, x, outer_step)  # [i, j, k] = d_k D_ij
    div_def = np.einsum("nij,nj->ni", P, np.einsum("nijk,nkj->ni", dD, P))
    grad_p = np.einsum("nij,nj->ni", P, richardson_jacobian(pres, x, inner_step))
    u = vel(x)
    return {
        "u": u,
        "grad_u": G,
        "def_u": D,
        "div_u": np.trace(G, axis1=1, axis2=2),
        "grad_p": grad_p,
        "div_def": div_def,
        "f": -div_def + grad_p + u,
    }


def fd_weingarten(surface, p, step=1e-6):
    """Pi grad(nu~) Pi at surface points by central differences of the level-set normal."""

    def normal(y):
        g = surface.grad_psi(y)
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    p = np.atleast_2d(p)
    nu = normal(p)
    Pi = np.eye(3) - nu[:, :, None] * nu[:, None, :]
    return Pi @ richardson_jacobian(normal, p, step) @ Pi


# -- closest point by parametric minimisation -------------------------------------------


def parametric_closest_point(surface, x, grid=400):
    """Closest point on an ellipsoid by dense angular sampling plus local polishing.

    Uses the parametrisation (a cos t sin s, b sin t sin s, c cos s), a
    ``grid x grid`` global search, a BFGS refinement in (s, t) and a final
    root solve of the stationarity conditions (x - y) . dy/ds = (x - y) . dy/dt = 0.
    """
    a, b, c = surface.semi_axes
    x = np.asarray(x, dtype=float)

    def point(st):
        s, t = st
        return np.array([a * np.cos(t) * np.sin(s), b * np.sin(t) * np.sin(s), c * np.cos(s)])

    s = np.linspace(0.0, np.pi, grid)
    t = np.linspace(-np.pi, np.pi, 2 * grid, endpoint=False)
    S, T = np.meshgrid(s, t, indexing="ij")
    P = np.stack([a * np.cos(T) * np.sin(S), b * np.sin(T) * np.sin(S), c * np.cos(S)], axis=-1)
    d2 = np.sum((P - x) ** 2, axis=-1)
    i, j = np.unravel_index(np.argmin(d2), d2.shape)
    res = minimize(
        lambda st: np.sum((point(st) - x) ** 2),
        x0=[S[i, j], T[i, j]],
        method="BFGS",
        options={"gtol": 1e-14, "xrtol": 1e-15},
    )

    def stationarity(st):
        s, t = st
        ds = np.array([a * np.cos(t) * np.cos(s), b * np.sin(t) * np.cos(s), -c * np.sin(s)])
        dt = np.array([-a * np.sin(t) * np.sin(s), b * np.cos(t) * np.sin(s), 0.0])
        r = point(st) - x
        return [r @ ds, r @ dt]

    # hybr reports failure when it stalls at round-off; keep whichever is more stationary
    sol = root(stationarity, res.x, method="hybr", tol=1e-13)
    better = np.linalg.norm(stationarity(sol.x)) < np.linalg.norm(stationarity(res.x))
    p = point(sol.x if better else res.x)
    sign = 1.0 if surface.psi(x) > 0 else -1.0
    return p, sign * np.linalg.norm(x - p)


# -- subdivision integrals ---------------------------------------------------------


def subdivide_triangle(tri, n):
    """Split a triangle (3, 3) into 4**n congruent sub-triangles (4**n, 3, 3)."""
    tris = np.asarray(tri, dtype=float)[None]
    for _ in range(n):
        a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
        ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
        tris = np.stack(
            [
                np.stack([a, ab, ca], 1),
                np.stack([ab, b, bc], 1),
                np.stack([ca, bc, c], 1),
                np.stack([ab, bc, ca], 1),
            ],
            axis=1,
        ).reshape(-1, 3, 3)
    return tris


def projected_area(surface, tri, n):
    """Area of the polyhedron obtained by projecting the corners of a 4**n subdivision."""
    sub = subdivide_triangle(tri, n)
    P = closest_point(surface, sub.reshape(-1, 3)).p.reshape(sub.shape)
    cr = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
    return 0.5 * np.linalg.norm(cr, axis=1).sum()


def subdivision_area(surface, tri, levels=(5, 6, 7)):
    """Area of p(K) from projected subdivisions with two Richardson steps (O(h^2), O(h^4))."""
    A = np.array([projected_area(surface, tri, n) for n in levels])
    R1 = (4.0 * A[1:] - A[:-1]) / 3.0
    if len(R1) == 1:
        return float(R1[0])
    return float((16.0 * R1[-1] - R1[-2]) / 15.0)


def lifted_quadrature(mesh, faces, subdivisions=3, degree=6):
    """Composite quadrature on the lifted faces p(K).

    Returns ``(x, face, weight)``: points on the flat faces, the face each
    belongs to, and weights such that ``sum(weight * g(p(x)))`` approximates
    the integral of ``g`` over the union of the lifted faces.
    """
    rule = quadrature_rule(degree)
    faces = np.atleast_1d(faces)
    xs, fs, ws = [], [], []
    for f in faces:
        tri = mesh.vertices[mesh.faces[f]]
        sub = subdivide_triangle(tri, subdivisions)
        lam = rule.barycentric
        pts = np.einsum("qj,tjm->tqm", lam, sub).reshape(-1, 3)
        J = np.linalg.norm(np.cross(sub[:, 1] - sub[:, 0], sub[:, 2] - sub[:, 0]), axis=1)
        xs.append(pts)
        ws.append((J[:, None] * rule.weights[None]).ravel())
        fs.append(np.full(len(pts), f))
    x, face, w = np.concatenate(xs), np.concatenate(fs), np.concatenate(ws)
    spd = closest_point(mesh.surface, x)
    mu = measure_ratio(mesh.geometry.nu[face], spd)
    return x, face, w * mu
