"""Errors against the lifted exact solution, the nodal interpolant, and
numerical checks of the geometric estimates behind the method."""

import math
import time
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg as sla

from surfstokes.element import (
    barycentric_gradients,
    eval_face_basis,
    evaluate_pressure,
    evaluate_velocity,
    ref_to_physical,
)
from surfstokes.geometry import (
    closest_point,
    edge_transfer,
    inverse_piola_matrix,
    measure_ratio,
    piola_forward,
    tangent_frame,
)
from surfstokes.mesh import build_edge_frames
from surfstokes.quadrature import quadrature_rule

FD_STEP_FACTOR = 1e-4


@dataclass(frozen=True)
class LiftedExact:
    u: np.ndarray  # (F, Q, 3) inverse Piola transform of the exact velocity
    grad_u: np.ndarray  # (F, Q, 3, 3) tangential gradient on the face
    p: np.ndarray  # (F, Q) p o p(x)


@dataclass
class ErrorReport:
    level: int
    h: float
    dof_v: int
    dof_p: int
    e_energy: float
    e_l2_vel: float
    e_l2_pres: float
    e_h1_vel: float = math.nan
    seconds: float = math.nan

    def as_dict(self):
        return asdict(self)


def lifted_velocity(mesh, exact, x, face_idx):
    """Inverse Piola transform of the exact velocity onto the planes of ``face_idx``."""
    spd = closest_point(mesh.surface, x)
    M = inverse_piola_matrix(mesh.geometry.nu[face_idx], spd)
    return np.einsum("nij,nj->ni", M, exact.velocity(spd.p)), spd


def lift_exact(mesh, exact, ref_points, faces=None, step_factor=FD_STEP_FACTOR):
    """Exact solution transported to the discrete surface at reference points.

    Gradients are in-plane central differences with step ``step_factor * h_K``
    projected with Pi_K on both sides.
    """
    if faces is None:
        faces = np.arange(mesh.n_faces)
    X = ref_to_physical(mesh, ref_points, faces)
    F, Q = X.shape[:2]
    x = X.reshape(-1, 3)
    fidx = np.repeat(faces, Q)
    u, spd = lifted_velocity(mesh, exact, x, fidx)
    nu = mesh.geometry.nu[fidx]
    t1, t2 = tangent_frame(nu)
    delta = (step_factor * mesh.face_diameters[fidx])[:, None]
    grad = np.zeros((len(x), 3, 3))
    for t in (t1, t2):
        up, _ = lifted_velocity(mesh, exact, x + delta * t, fidx)
        um, _ = lifted_velocity(mesh, exact, x - delta * t, fidx)
        grad += ((up - um) / (2.0 * delta))[:, :, None] * t[:, None, :]
    PiK = np.eye(3) - nu[:, :, None] * nu[:, None, :]
    grad = PiK @ grad @ PiK
    p = exact.pressure(spd.p)
    return LiftedExact(u.reshape(F, Q, 3), grad.reshape(F, Q, 3, 3), p.reshape(F, Q))


def _weights(mesh, rule, faces=None):
    J = mesh.geometry.J if faces is None else mesh.geometry.J[faces]
    return J[:, None] * rule.weights[None, :]


def error_norms(mesh, dofmap, solution, exact, quad_degree=6, level=None, seconds=math.nan):
    """Velocity and pressure errors on the discrete surface."""
    rule = quadrature_rule(quad_degree)
    w = _weights(mesh, rule)
    lifted = lift_exact(mesh, exact, rule.points)
    uh, guh = evaluate_velocity(dofmap, solution.velocity, rule.points)
    ph = evaluate_pressure(dofmap, solution.pressure, rule.points)
    eu = lifted.u - uh
    eg = lifted.grad_u - guh
    l2 = math.sqrt(np.sum(w * np.einsum("fqi,fqi->fq", eu, eu)))
    h1 = math.sqrt(np.sum(w * np.einsum("fqij,fqij->fq", eg, eg)))
    pe = lifted.p - np.sum(w * lifted.p) / np.sum(w)
    l2p = math.sqrt(np.sum(w * (pe - ph) ** 2))
    return ErrorReport(
        level=mesh.level if level is None else level,
        h=mesh.h,
        dof_v=dofmap.n_velocity,
        dof_p=dofmap.n_pressure,
        e_energy=math.sqrt(l2**2 + h1**2) + l2p,
        e_l2_vel=l2,
        e_l2_pres=l2p,
        e_h1_vel=h1,
        seconds=seconds,
    )


def eoc(errors):
    """Rates log2(e_k / e_{k+1}) for consecutive levels."""
    errors = np.asarray(errors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log2(errors[:-1] / errors[1:])


def eoc_table(reports, keys=("e_energy", "e_l2_vel", "e_l2_pres")):
    """List of per-level dicts with ``rate_*`` entries (None on the first level)."""
    rows = []
    for k, rep in enumerate(reports):
        row = rep.as_dict()
        for key in keys:
            name = "rate_" + key[2:]
            if k == 0:
                row[name] = None
            else:
                row[name] = float(math.log2(getattr(reports[k - 1], key) / getattr(rep, key)))
        rows.append(row)
    return rows


# -- interpolation -----------------------------------------------------------


def interpolate_vertex_values(dofmap, values):
    """Velocity coefficients from vertex values given on the master faces.

    ``values[a]`` must be tangent to face ``K_a``; bubbles are set to zero.
    """
    coeffs = np.zeros(dofmap.n_velocity)
    vd = np.einsum("vim,vm->vi", dofmap.frames, values)
    coeffs[: dofmap.n_vertex_dofs] = vd.ravel()
    return coeffs


def interpolate(exact, mesh, dofmap):
    """Nodal interpolant: vertex DOFs from the inverse Piola samples on K_a."""
    u, _ = lifted_velocity(mesh, exact, mesh.vertices, dofmap.masters)
    return interpolate_vertex_values(dofmap, u)


def vertex_values_on_masters(dofmap, coeffs):
    """Value of a discrete field at each vertex as seen from its master face."""
    V = dofmap.mesh.n_vertices
    return np.einsum("vi,vim->vm", coeffs[: 2 * V].reshape(V, 2), dofmap.frames)


def interpolation_errors(mesh, dofmap, exact, quad_degree=6):
    """L2 and H1-seminorm errors of the nodal interpolant of the lifted velocity."""
    rule = quadrature_rule(quad_degree)
    w = _weights(mesh, rule)
    lifted = lift_exact(mesh, exact, rule.points)
    coeffs = interpolate(exact, mesh, dofmap)
    uh, guh = evaluate_velocity(dofmap, coeffs, rule.points)
    eu, eg = lifted.u - uh, lifted.grad_u - guh
    l2 = math.sqrt(np.sum(w * np.einsum("fqi,fqi->fq", eu, eu)))
    h1 = math.sqrt(np.sum(w * np.einsum("fqij,fqij->fq", eg, eg)))
    return l2, h1


# -- pointwise evaluation at per-face barycentric coordinates ------------------


def velocity_at(dofmap, coeffs, faces, lam):
    """Discrete velocity on ``faces[n]`` at barycentric coordinates ``lam[n]``.

    Coordinates outside [0, 1] evaluate the face polynomial extended to its plane.
    """
    dirs = dofmap.face_directions()[faces]  # (N, 3, 2, 3)
    c = np.asarray(coeffs)[dofmap.velocity_dofs()[faces]]  # (N, 8)
    vert = np.einsum("nj,nji,njim->nm", lam, c[:, :6].reshape(-1, 3, 2), dirs)
    bub = lam.prod(axis=1)[:, None] * np.einsum("nl,nlm->nm", c[:, 6:], dofmap.bubble_frames[faces])
    return vert + bub


def normal_jumps(mesh, dofmap, coeffs, edge_frames=None):
    """max |v_1 . n_1 + v_2 . n_2| over edges at both endpoints and the midpoint,
    together with the largest field magnitude seen at those points."""
    if edge_frames is None:
        edge_frames = build_edge_frames(mesh)
    edges, ef = mesh.edges, mesh.edge_faces
    E = len(edges)
    jump = np.zeros((E, 3))
    vmax = 0.0
    for s, wts in enumerate(([1.0, 0.0], [0.0, 1.0], [0.5, 0.5])):
        total = np.zeros(E)
        for k in range(2):
            f = ef[:, k]
            lam = np.zeros((E, 3))
            for end in range(2):
                local = np.argmax(mesh.faces[f] == edges[:, end:end + 1], axis=1)
                lam[np.arange(E), local] += wts[end]
            v = velocity_at(dofmap, coeffs, f, lam)
            vmax = max(vmax, float(np.abs(v).max()))
            total += np.einsum("ni,ni->n", v, edge_frames.normals[:, k])
        jump[:, s] = total
    return float(np.abs(jump).max()), vmax


def tangentiality(mesh, dofmap, coeffs=None, quad_degree=6):
    """max |v . nu_K| / |v| over basis functions (or a given field) at quadrature points."""
    rule = quadrature_rule(quad_degree)
    nu = mesh.geometry.nu
    if coeffs is None:
        ev = eval_face_basis(dofmap, rule.points)
        vals = ev.values
        dots = np.abs(np.einsum("fqkm,fm->fqk", vals, nu))
    else:
        vals, _ = evaluate_velocity(dofmap, coeffs, rule.points)
        dots = np.abs(np.einsum("fqm,fm->fq", vals, nu))
    mags = np.linalg.norm(vals, axis=-1)
    scale = mags.max()
    return float(dots.max() / scale) if scale > 0 else 0.0


# -- geometric diagnostics -----------------------------------------------------


def transfer_defect(mesh, exact, masters=None):
    """max over (vertex, incident face) of |u_K - M_a^K u_{K_a}| / (h^2 |u|).

    ``u`` is the exact velocity at p(a); ``u_K`` its inverse Piola transform to K.
    """
    if masters is None:
        from surfstokes.dofmap import assign_masters

        masters = assign_masters(mesh)
    faces = mesh.faces
    a = faces.ravel()
    f = np.repeat(np.arange(mesh.n_faces), 3)
    spd = closest_point(mesh.surface, mesh.vertices[a])
    u = exact.velocity(spd.p)
    nu = mesh.geometry.nu
    uK = np.einsum("nij,nj->ni", inverse_piola_matrix(nu[f], spd), u)
    uKa = np.einsum("nij,nj->ni", inverse_piola_matrix(nu[masters[a]], spd), u)
    M = edge_transfer(nu[masters[a]], nu[f])
    diff = np.linalg.norm(uK - np.einsum("nij,nj->ni", M, uKa), axis=1)
    mag = np.linalg.norm(u, axis=1)
    keep = mag > 0
    return float(np.max(diff[keep] / mag[keep]) / mesh.h**2)


def measure_ratio_bound(mesh, quad_degree=6):
    """max over quadrature points of |1 - mu_h| / h^2."""
    rule = quadrature_rule(quad_degree)
    X = ref_to_physical(mesh, rule.points).reshape(-1, 3)
    spd = closest_point(mesh.surface, X)
    mu = measure_ratio(np.repeat(mesh.geometry.nu, len(rule), axis=0), spd)
    return float(np.max(np.abs(1.0 - mu)) / mesh.h**2)


def normal_deviation(mesh):
    """max over faces of |nu(p(centroid)) - nu_K| / h."""
    spd = closest_point(mesh.surface, mesh.centroids)
    return float(np.max(np.linalg.norm(spd.nu - mesh.geometry.nu, axis=1)) / mesh.h)


def inf_sup_constant(system):
    """Discrete inf-sup constant from the dense generalised eigenproblem
    B A^{-1} B^T p = beta^2 M_p p with constant pressures deflated."""
    A = system.A.toarray()
    B = system.B.toarray()
    Mp = system.Mp.toarray()
    S = B @ sla.cho_solve(sla.cho_factor(A), B.T)
    S = 0.5 * (S + S.T)
    # deflate the constants: restrict to the M_p-orthogonal complement of 1
    one = np.ones(len(Mp))
    Q, _ = np.linalg.qr(np.column_stack([Mp @ one, np.eye(len(Mp))[:, :-1]]))
    Z = Q[:, 1:]
    lam = sla.eigh(Z.T @ S @ Z, Z.T @ Mp @ Z, eigvals_only=True)
    return float(math.sqrt(max(lam[0], 0.0)))


def pushforward_gradient(mesh, field, x, face_idx, step_factor=FD_STEP_FACTOR):
    """Value and surface gradient on the exact surface of the Piola transform
    of a face field.

    ``field(y)`` returns the (face-tangent) field at points ``y`` in the planes
    of ``face_idx``. The surface gradient at p(x) is recovered from in-plane
    central differences of ``W = L v`` through the chain rule
    ``grad_gamma W . Dp t = d_t W`` with ``Dp = Pi - d H``.
    """
    nu = mesh.geometry.nu[face_idx]
    t1, t2 = tangent_frame(nu)
    delta = (step_factor * mesh.face_diameters[face_idx])[:, None]

    def W(y):
        spd = closest_point(mesh.surface, y)
        return piola_forward(nu, spd, field(y)), spd

    W0, spd = W(x)
    dW, tau = [], []
    Dp = spd.Pi - spd.d[:, None, None] * spd.H
    for t in (t1, t2):
        dW.append((W(x + delta * t)[0] - W(x - delta * t)[0]) / (2.0 * delta))
        tau.append(np.einsum("nij,nj->ni", Dp, t))
    dW = np.stack(dW, axis=2)  # (N, 3, 2)
    T = np.stack(tau, axis=2)  # (N, 3, 2)
    pinv = np.linalg.solve(np.einsum("nmr,nms->nrs", T, T), T.transpose(0, 2, 1))
    G = spd.Pi @ np.einsum("nmr,nrk->nmk", dW, pinv)
    return W0, G, spd


def deformation_transfer_ratio(mesh, dofmap, coeffs, quad_degree=6):
    """||Def_gamma(P_p v) - Def_h v o p^{-1}||_{L2(gamma)} / (h ||v||_{H1_h})."""
    rule = quadrature_rule(quad_degree)
    faces = np.arange(mesh.n_faces)
    Q = len(rule)
    fidx = np.repeat(faces, Q)
    lam0 = np.tile(rule.barycentric, (mesh.n_faces, 1))
    x = ref_to_physical(mesh, rule.points).reshape(-1, 3)
    glam = barycentric_gradients(mesh.geometry)[fidx]  # (N, 3, 3)

    def field(y):
        lam = lam0 + np.einsum("njm,nm->nj", glam, y - x)
        return velocity_at(dofmap, coeffs, fidx, lam)

    _, Ggam, spd = pushforward_gradient(mesh, field, x, fidx)
    vh, gh = evaluate_velocity(dofmap, coeffs, rule.points)
    vh, gh = vh.reshape(-1, 3), gh.reshape(-1, 3, 3)
    Dgam = 0.5 * (Ggam + Ggam.transpose(0, 2, 1))
    Dh = 0.5 * (gh + gh.transpose(0, 2, 1))
    mu = measure_ratio(mesh.geometry.nu[fidx], spd)
    w = _weights(mesh, rule).ravel()
    err = math.sqrt(np.sum(w * mu * np.sum((Dgam - Dh) ** 2, axis=(1, 2))))
    h1 = math.sqrt(np.sum(w * (np.sum(vh**2, axis=1) + np.sum(gh**2, axis=(1, 2)))))
    return err / (mesh.h * h1)


@dataclass
class DiagnosticReport:
    level: int
    h: float
    defect_over_h2: float
    mu_over_h2: float
    normal_over_h: float
    def_transfer_ratio: float
    beta: float = math.nan

    def as_dict(self):
        return asdict(self)


def diagnostics(mesh, exact, dofmap=None, seed=0, inf_sup=True):
    """Per-level normalised constants of the geometric estimates."""
    from surfstokes.assembly import assemble
    from surfstokes.dofmap import build_dofmap
    from surfstokes.manufactured import ZeroSolution

    if dofmap is None:
        dofmap = build_dofmap(mesh)
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(dofmap.n_velocity)
    beta = math.nan
    if inf_sup:
        beta = inf_sup_constant(assemble(mesh, dofmap, ZeroSolution(mesh.surface)))
    return DiagnosticReport(
        level=mesh.level,
        h=mesh.h,
        defect_over_h2=transfer_defect(mesh, exact, dofmap.masters),
        mu_over_h2=measure_ratio_bound(mesh),
        normal_over_h=normal_deviation(mesh),
        def_transfer_ratio=deformation_transfer_ratio(mesh, dofmap, coeffs),
        beta=beta,
    )


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0
