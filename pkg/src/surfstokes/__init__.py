"""Tangential H(div)-conforming MINI elements for the surface Stokes problem.

The typical pipeline is::

    surface = LevelSetSurface.ellipsoid(1.1, 1.2, 1.3)
    mesh = generate(surface, level=3)
    dofmap = build_dofmap(mesh)
    system = assemble(mesh, dofmap, ExactSolution(surface))
    sol = solve(system)
"""

from surfstokes.errors import (
    AssemblyOverflow,
    DegenerateGeometry,
    MemoryGuard,
    NoConvergence,
    NonManifold,
    OffSurface,
    SolverBreakdown,
    SurfStokesError,
    UnsupportedDegree,
)
from surfstokes.geometry import LevelSetSurface, SurfacePointData, closest_point
from surfstokes.mesh import SurfaceMesh, generate, refine
from surfstokes.dofmap import DofMap, build_dofmap
from surfstokes.manufactured import ExactSolution, ZeroSolution
from surfstokes.assembly import SaddleSystem, assemble
from surfstokes.solver import SaddleSolution, solve
from surfstokes.analysis import ErrorReport, eoc_table, error_norms, interpolate

__all__ = [
    "AssemblyOverflow",
    "DegenerateGeometry",
    "DofMap",
    "ErrorReport",
    "ExactSolution",
    "LevelSetSurface",
    "MemoryGuard",
    "NoConvergence",
    "NonManifold",
    "OffSurface",
    "SaddleSolution",
    "SaddleSystem",
    "SolverBreakdown",
    "SurfStokesError",
    "SurfaceMesh",
    "SurfacePointData",
    "UnsupportedDegree",
    "ZeroSolution",
    "assemble",
    "build_dofmap",
    "closest_point",
    "eoc_table",
    "error_norms",
    "generate",
    "interpolate",
    "refine",
    "solve",
]
