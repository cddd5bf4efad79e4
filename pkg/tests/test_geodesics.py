import numpy as np
import pytest

from ksplines.calculus import tension_field
from ksplines.errors import GeodesicFailure
from ksplines.geodesics import geodesic, relax_geodesic, slerp
from ksplines.manifold import Euclidean, Sphere, Torus


def test_euclidean_geodesic_is_linear():
    g = geodesic(Euclidean(2), [0, 0], [2, 1], 5)
    assert np.allclose(g, [[0, 0], [0.5, 0.25], [1, 0.5], [1.5, 0.75], [2, 1]])


@pytest.mark.parametrize("r", [1.0, 2.0])
def test_slerp_constant_speed_on_sphere(r):
    S = Sphere(r)
    a = S.project(np.array([1.0, 0.2, 0.1]))
    b = S.project(np.array([-0.2, 1.0, 0.4]))
    g = geodesic(S, a, b, 65)
    assert np.allclose(np.linalg.norm(g, axis=1), r, atol=1e-14)
    steps = np.linalg.norm(np.diff(g, axis=0), axis=1)
    assert np.ptp(steps) <= 1e-12
    assert np.max(np.abs(tension_field(S, g)[1:-1])) <= 1e-10
    angle = np.arccos(np.clip(a @ b / r**2, -1, 1))
    assert np.isclose(steps.sum(), 2 * 64 * r * np.sin(angle / 128), rtol=1e-12)


def test_slerp_equal_points_is_constant():
    a = np.array([0.0, 0.0, 1.0])
    assert np.allclose(slerp(a, a, np.linspace(0, 1, 5)), a)


def test_antipodal_points_fail():
    with pytest.raises(GeodesicFailure):
        geodesic(Sphere(), [0, 0, 1], [0, 0, -1], 9)


def test_torus_geodesic_is_harmonic():
    T = Torus(2.0, 0.5)
    a, b = T.point(0.1, 0.3), T.point(1.2, 2.0)
    g = geodesic(T, a, b, 65)
    assert np.allclose(g[0], a) and np.allclose(g[-1], b)
    assert np.max(np.abs(T.distance_to(g))) <= 1e-12
    assert np.max(np.abs(tension_field(T, g)[1:-1])) <= 1e-9


def test_relax_geodesic_keeps_ends():
    S = Sphere()
    seed = S.project(np.array([[1, 0, 0], [1, 1, 0.4], [0.5, 1, 0.3], [0, 1, 0.0]], dtype=float))
    dense = S.project(np.concatenate([np.linspace(seed[i], seed[i + 1], 11)[:-1] for i in range(3)] + [seed[-1:]]))
    out = relax_geodesic(S, dense)
    assert np.array_equal(out[0], dense[0]) and np.array_equal(out[-1], dense[-1])
    assert np.max(np.abs(out[:, 2])) <= 1e-8
