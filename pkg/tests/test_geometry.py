import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surfstokes.errors import DegenerateGeometry, NoConvergence, OffSurface
from surfstokes.geometry import (
    LevelSetSurface,
    closest_point,
    curvature_invariants,
    edge_transfer,
    inverse_piola_matrix,
    measure_ratio,
    piola_forward,
    piola_inverse,
    principal_curvatures,
    tangent_frame,
    weingarten_on_surface,
)
from surfstokes.oracles import fd_weingarten, parametric_closest_point, sphere_closest_point


def _tube_points(surface, n, seed=0, spread=0.3):
    rng = np.random.default_rng(seed)
    p = surface.radial_projection(rng.standard_normal((n, 3)))
    spd = closest_point(surface, p)
    return p + rng.uniform(-spread, spread, (n, 1)) * spd.nu


def test_sphere_axis_point():
    spd = closest_point(LevelSetSurface.sphere(1.0), np.array([0.0, 0.0, 2.0]))
    np.testing.assert_allclose(spd.p, [0, 0, 1], atol=1e-15)
    assert spd.d == pytest.approx(1.0)
    np.testing.assert_allclose(spd.nu, [0, 0, 1], atol=1e-15)


def test_ellipsoid_axis_point(ellipsoid):
    spd = closest_point(ellipsoid, np.array([2.2, 0.0, 0.0]))
    np.testing.assert_allclose(spd.p, [1.1, 0, 0], atol=1e-14)
    assert spd.d == pytest.approx(1.1)


def test_ellipsoid_generic_point_matches_parametric_oracle(ellipsoid):
    # frozen from the dense-grid + polished parametric minimisation oracle
    p_ref = [0.9312789696029716, 0.5145210722599528, 0.4098560444241572]
    d_ref = -0.035866099463049396
    spd = closest_point(ellipsoid, np.array([0.9, 0.5, 0.4]))
    np.testing.assert_allclose(spd.p, p_ref, atol=1e-8)
    assert spd.d == pytest.approx(d_ref, abs=1e-8)


def test_parametric_oracle_at_more_points(ellipsoid):
    for x in _tube_points(ellipsoid, 5, seed=3):
        p, d = parametric_closest_point(ellipsoid, x)
        spd = closest_point(ellipsoid, x)
        np.testing.assert_allclose(spd.p, p, atol=1e-8)
        assert spd.d == pytest.approx(d, abs=1e-8)


def test_point_data_invariants(ellipsoid):
    x = _tube_points(ellipsoid, 500)
    spd = closest_point(ellipsoid, x)
    diam = ellipsoid.diam
    np.testing.assert_allclose(np.linalg.norm(spd.nu, axis=1), 1.0, atol=1e-14)
    assert np.abs(np.einsum("nij,nj->ni", spd.H, spd.nu)).max() <= 1e-10
    assert np.abs(ellipsoid.psi(spd.p)).max() <= 1e-12 * diam
    assert np.abs(spd.p + spd.d[:, None] * spd.nu - x).max() <= 1e-12 * diam
    np.testing.assert_allclose(spd.Pi @ spd.Pi, spd.Pi, atol=1e-14)
    # x - p parallel to the normal
    assert np.abs(np.cross(x - spd.p, spd.nu)).max() <= 1e-10


def test_sign_convention(ellipsoid):
    inside = closest_point(ellipsoid, np.array([0.5, 0.0, 0.0]))
    outside = closest_point(ellipsoid, np.array([1.3, 0.0, 0.0]))
    assert inside.d < 0 < outside.d


def test_sphere_closed_form_agreement():
    surface = LevelSetSurface.sphere(1.0)
    x = _tube_points(surface, 1000, seed=5, spread=0.45)
    spd = closest_point(surface, x)
    p, d, nu, H = sphere_closest_point(x)
    for got, ref in ((spd.p, p), (spd.d, d), (spd.nu, nu), (spd.H, H)):
        assert np.abs(got - ref).max() <= 1e-10


def test_no_convergence_at_center(ellipsoid):
    with pytest.raises(NoConvergence):
        closest_point(ellipsoid, np.zeros(3))


def test_weingarten_unit_sphere_pole():
    H = weingarten_on_surface(LevelSetSurface.sphere(1.0), np.array([0.0, 0.0, 1.0]))
    np.testing.assert_allclose(H, np.diag([1.0, 1.0, 0.0]), atol=1e-15)


def test_weingarten_sphere_scaling():
    R = 2.5
    H = weingarten_on_surface(LevelSetSurface.sphere(R), np.array([0.0, R, 0.0]))
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(H)), [0.0, 1 / R, 1 / R], atol=1e-15)


def test_weingarten_ellipsoid_axis_point(ellipsoid):
    H = weingarten_on_surface(ellipsoid, np.array([1.1, 0.0, 0.0]))
    ev = np.sort(np.linalg.eigvalsh(H))
    # finite-difference oracle of the level-set normal, frozen: {0, 1.1/1.3^2, 1.1/1.2^2}
    np.testing.assert_allclose(ev, [0.0, 0.6508875739644971, 0.763888888888889], atol=1e-6)
    np.testing.assert_allclose(ev, [0.0, 1.1 / 1.3**2, 1.1 / 1.2**2], atol=1e-14)


def test_weingarten_matches_finite_differences(ellipsoid):
    p = ellipsoid.radial_projection(np.random.default_rng(2).standard_normal((50, 3)))
    np.testing.assert_allclose(weingarten_on_surface(ellipsoid, p), fd_weingarten(ellipsoid, p), atol=1e-6)


def test_weingarten_rejects_off_surface(ellipsoid):
    with pytest.raises(OffSurface):
        weingarten_on_surface(ellipsoid, np.array([2.0, 0.0, 0.0]))


def test_off_surface_weingarten_transport():
    # sphere: H(x) = Pi / |x|
    surface = LevelSetSurface.sphere(1.0)
    spd = closest_point(surface, np.array([0.0, 0.0, 1.3]))
    np.testing.assert_allclose(spd.H, np.diag([1, 1, 0]) / 1.3, atol=1e-15)


def test_principal_curvatures_from_invariants(ellipsoid):
    p = ellipsoid.radial_projection(np.random.default_rng(4).standard_normal((20, 3)))
    H = weingarten_on_surface(ellipsoid, p)
    k1, k2 = principal_curvatures(H)
    ev = np.sort(np.linalg.eigvalsh(H), axis=1)
    np.testing.assert_allclose(np.stack([k2, k1], 1), ev[:, 1:], atol=1e-12)
    s, q = curvature_invariants(H)
    np.testing.assert_allclose(q, k1 * k2, atol=1e-12)


def test_measure_ratio_tangent_plane_is_one():
    surface = LevelSetSurface.sphere(1.0)
    spd = closest_point(surface, np.array([0.0, 0.0, 1.0]))
    assert measure_ratio(np.array([0.0, 0.0, 1.0]), spd) == pytest.approx(1.0, abs=1e-15)


def test_measure_ratio_degenerate(ellipsoid):
    spd = closest_point(ellipsoid, np.array([1.1, 0.0, 0.0]))
    with pytest.raises(DegenerateGeometry):
        measure_ratio(np.array([-1.0, 0.0, 0.0]), spd)
    with pytest.raises(DegenerateGeometry):
        inverse_piola_matrix(np.array([0.05, 1.0, 0.0]) / np.hypot(0.05, 1.0), spd)


def _random_face_normals(spd, rng, tilt=0.3):
    nK = spd.nu + tilt * rng.standard_normal(spd.nu.shape)
    return nK / np.linalg.norm(nK, axis=1, keepdims=True)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_piola_round_trip(seed):
    rng = np.random.default_rng(seed)
    surface = LevelSetSurface.ellipsoid(1.1, 1.2, 1.3)
    x = _tube_points(surface, 20, seed=seed, spread=0.2)
    spd = closest_point(surface, x)
    nK = _random_face_normals(spd, rng)
    v = rng.standard_normal((20, 3))
    v -= np.einsum("ni,ni->n", v, nK)[:, None] * nK
    w = piola_forward(nK, spd, v)
    assert np.abs(np.einsum("ni,ni->n", w, spd.nu)).max() <= 1e-13 * np.abs(w).max()
    back = piola_inverse(nK, spd, w)
    np.testing.assert_allclose(back, v, atol=1e-12 * np.abs(v).max())
    # and the other way round on vectors tangent to the surface
    t = rng.standard_normal((20, 3))
    t -= np.einsum("ni,ni->n", t, spd.nu)[:, None] * spd.nu
    t_K = piola_inverse(nK, spd, t)
    assert np.abs(np.einsum("ni,ni->n", t_K, nK)).max() <= 1e-13 * np.abs(t).max()
    np.testing.assert_allclose(piola_forward(nK, spd, t_K), t, atol=1e-12 * np.abs(t).max())


def test_piola_identity_in_coincident_plane():
    surface = LevelSetSurface.sphere(1.0)
    spd = closest_point(surface, np.array([0.0, 0.0, 1.0]))
    nK = np.array([0.0, 0.0, 1.0])
    v = np.array([0.3, -0.7, 0.0])
    np.testing.assert_allclose(piola_forward(nK, spd, v), v, atol=1e-15)
    np.testing.assert_allclose(piola_inverse(nK, spd, v), v, atol=1e-15)


def test_edge_transfer_coplanar():
    n = np.array([0.0, 0.0, 1.0])
    np.testing.assert_allclose(edge_transfer(n, n) @ np.array([1.0, 2.0, 5.0]), [1.0, 2.0, 0.0])


def test_edge_transfer_tangency_and_binet_cauchy():
    rng = np.random.default_rng(11)
    nm = np.array([0.0, 0.0, 1.0]) + 0.4 * rng.standard_normal((100, 3))
    nm /= np.linalg.norm(nm, axis=1, keepdims=True)
    nK = nm + 0.4 * rng.standard_normal((100, 3))
    nK /= np.linalg.norm(nK, axis=1, keepdims=True)
    keep = np.einsum("ni,ni->n", nm, nK) > 0.2
    nm, nK = nm[keep], nK[keep]
    M = edge_transfer(nm, nK)
    x = rng.standard_normal((len(nm), 3))
    assert np.abs(np.einsum("nij,nj,ni->n", M, x, nK)).max() <= 1e-14
    u = x - np.einsum("ni,ni->n", x, nm)[:, None] * nm
    n = rng.standard_normal((len(nm), 3))
    lhs = np.einsum("nij,nj,ni->n", M, u, n)
    rhs = np.einsum("ni,ni->n", np.cross(nm, u), np.cross(nK, n))
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)


def test_edge_transfer_degenerate():
    with pytest.raises(DegenerateGeometry):
        edge_transfer(np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))


def test_tangent_frame_rule():
    v1, v2 = tangent_frame(np.array([[0.0, 0.0, 1.0], [1.0, 1.0, 1.0] / np.sqrt(3)]))
    # least-aligned axis of (0,0,1) is x (lowest index among ties)
    np.testing.assert_allclose(v1[0], [1.0, 0.0, 0.0])
    np.testing.assert_allclose(v2[0], [0.0, 1.0, 0.0])
    np.testing.assert_allclose(v1[1], np.array([2.0, -1.0, -1.0]) / np.sqrt(6))
    for a, b, n in zip(v1, v2, [[0, 0, 1], [1 / np.sqrt(3)] * 3]):
        assert abs(a @ n) < 1e-15 and abs(b @ n) < 1e-15 and abs(a @ b) < 1e-15


def test_surface_validation():
    with pytest.raises(ValueError):
        LevelSetSurface("torus", (1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        LevelSetSurface.ellipsoid(1.0, -1.0, 1.0)
