"""Solution of the symmetric indefinite saddle-point system."""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from surfstokes.errors import SolverBreakdown

log = logging.getLogger(__name__)

# sparse LU of the indefinite KKT matrix fills in badly beyond ~2e4 unknowns
DIRECT_LIMIT = 20_000


@dataclass(frozen=True)
class SaddleSolution:
    velocity: np.ndarray
    pressure: np.ndarray
    multiplier: float
    residuals: dict = field(default_factory=dict)
    method: str = "direct"


def block_residuals(system, x):
    """Blockwise residual norms of K x = b relative to ||b|| (absolute if b = 0)."""
    K, b = system.matrix(), system.rhs()
    r = K @ x - b
    nv, npr = system.n_velocity, system.n_pressure
    scale = np.linalg.norm(b)
    scale = scale if scale > 0 else 1.0
    return {
        "velocity": float(np.linalg.norm(r[:nv]) / scale),
        "pressure": float(np.linalg.norm(r[nv:nv + npr]) / scale),
        "multiplier": float(abs(r[-1]) / scale),
        "total": float(np.linalg.norm(r) / scale),
    }


def _direct(K, b, tol, max_refine=3):
    try:
        lu = spla.splu(K)
    except RuntimeError as exc:
        raise SolverBreakdown(f"sparse LU failed: {exc}", {"dimension": K.shape[0]}) from exc
    x = lu.solve(b)
    scale = max(np.linalg.norm(b), 1e-300)
    for _ in range(max_refine):
        r = b - K @ x
        if np.linalg.norm(r) <= 0.01 * tol * scale:
            break
        x = x + lu.solve(r)
    return x


def _block_preconditioner(system):
    # A is SPD: diagonal pivoting on a symmetric ordering is stable and cheap
    A_lu = spla.splu(
        system.A.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options={"SymmetricMode": True}
    )
    M_lu = spla.splu(system.Mp.tocsc())
    s = float(system.c @ M_lu.solve(system.c))
    nv, npr = system.n_velocity, system.n_pressure

    def apply(r):
        return np.concatenate([A_lu.solve(r[:nv]), M_lu.solve(r[nv:nv + npr]), [r[-1] / s]])

    n = nv + npr + 1
    return spla.LinearOperator((n, n), matvec=apply)


def _iterative(K, b, system, tol, x0=None, maxiter=2000, max_cycles=8):
    """Preconditioned MINRES restarted on the true residual until it meets ``tol``."""
    P = _block_preconditioner(system)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    scale = np.linalg.norm(b)
    for cycle in range(max_cycles):
        r = b - K @ x
        if np.linalg.norm(r) <= 0.1 * tol * scale:
            return x
        dx, info = spla.minres(K, r, M=P, rtol=1e-3 * tol * scale / np.linalg.norm(r), maxiter=maxiter)
        if info != 0 and cycle == max_cycles - 1:
            raise SolverBreakdown("MINRES did not converge", {"info": info, "dimension": K.shape[0]})
        x = x + dx
    if np.linalg.norm(b - K @ x) > tol * scale:
        raise SolverBreakdown("MINRES stagnated", {"cycles": max_cycles, "dimension": K.shape[0]})
    return x


def solve(system, tol=1e-10, method="auto", x0=None):
    """Solve the saddle system; the contract is the independently checked residual.

    ``method`` is ``'direct'`` (sparse LU), ``'iterative'`` (block-diagonally
    preconditioned MINRES) or ``'auto'`` (direct up to ``DIRECT_LIMIT``).
    """
    K, b = system.matrix(), system.rhs()
    if method == "auto":
        method = "direct" if K.shape[0] <= DIRECT_LIMIT else "iterative"
    if not np.any(b):
        x = np.zeros_like(b)
    elif method == "direct":
        x = _direct(K, b, tol)
    elif method == "iterative":
        x = _iterative(K, b, system, tol, x0=x0)
    else:
        raise ValueError(f"unknown solver method {method!r}")
    if not np.all(np.isfinite(x)):
        raise SolverBreakdown("non-finite solution", {"method": method})
    res = block_residuals(system, x)
    u, p, lam = system.split(x)
    res["pressure_mean"] = float(abs(system.c @ p))
    if max(res["velocity"], res["pressure"], res["multiplier"]) > tol:
        raise SolverBreakdown(f"relative residual {res['total']:.2e} above {tol:.0e}", res)
    if res["pressure_mean"] > 1e-10 * max(np.linalg.norm(p), 1e-300) and np.any(p):
        raise SolverBreakdown("pressure mean constraint violated", res)
    log.debug("solved %d unknowns with %s, residual %.2e", K.shape[0], method, res["total"])
    return SaddleSolution(velocity=u, pressure=p, multiplier=lam, residuals=res, method=method)


def is_symmetric(M):
    D = (M - M.T).tocoo()
    return D.nnz == 0 or np.max(np.abs(D.data)) == 0.0


__all__ = ["SaddleSolution", "block_residuals", "is_symmetric", "solve"]
