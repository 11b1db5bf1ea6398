import functools

import pytest

from surfstokes import ExactSolution, LevelSetSurface, build_dofmap, generate, refine

AXES = (1.1, 1.2, 1.3)


@functools.lru_cache(maxsize=None)
def ellipsoid_mesh(level):
    """Meshes of the test ellipsoid, refined from the previous level and cached."""
    surface = LevelSetSurface.ellipsoid(*AXES)
    if level == 0:
        return generate(surface, 0)
    return refine(ellipsoid_mesh(level - 1))


@functools.lru_cache(maxsize=None)
def ellipsoid_dofmap(level):
    return build_dofmap(ellipsoid_mesh(level))


@pytest.fixture(scope="session")
def ellipsoid():
    return LevelSetSurface.ellipsoid(*AXES)


@pytest.fixture(scope="session")
def sphere():
    return LevelSetSurface.sphere(1.0)


@pytest.fixture(scope="session")
def exact(ellipsoid):
    return ExactSolution(ellipsoid)


@pytest.fixture(scope="session")
def mesh_at():
    return ellipsoid_mesh


@pytest.fixture(scope="session")
def dofmap_at():
    return ellipsoid_dofmap


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
