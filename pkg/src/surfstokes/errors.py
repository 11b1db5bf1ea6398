"""Exception hierarchy."""


class SurfStokesError(Exception):
    """Base class for all library errors."""


class NoConvergence(SurfStokesError):
    """Closest-point iteration did not converge (point outside the tube?)."""


class DegenerateGeometry(SurfStokesError):
    """Face normal and surface normal are too far apart for the tube assumption."""


class MemoryGuard(SurfStokesError):
    """Requested refinement level exceeds the configured cap."""


class NonManifold(SurfStokesError):
    """An edge does not have exactly two incident faces."""


class UnsupportedDegree(SurfStokesError):
    pass


class AssemblyOverflow(SurfStokesError):
    """System dimension exceeds the configured cap."""


class SolverBreakdown(SurfStokesError):
    """Factorization failed or the iterative solver stagnated."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class OffSurface(SurfStokesError):
    """A point expected on the exact surface is not on it."""
