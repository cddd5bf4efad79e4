import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksplines.errors import ConfigError, DegeneratePoint
from ksplines.manifold import (
    Euclidean,
    Sphere,
    Torus,
    curvature,
    make_manifold,
    project_to_manifold,
    second_fundamental_form,
    tangent_project,
)

RNG = np.random.default_rng(7)


def random_points(M, n):
    if isinstance(M, Torus):
        return M.point(RNG.uniform(0, 2 * np.pi, n), RNG.uniform(0, 2 * np.pi, n))
    return M.project(RNG.normal(size=(n, M.ambient_dim)))


def random_tangent(M, p):
    return M.tangent_project(p, RNG.normal(size=p.shape))


MANIFOLDS = [Euclidean(3), Sphere(1.0), Sphere(2.5), Sphere(0.7, dim=3), Torus(2.0, 0.5), Torus(3.0, 1.2)]


def test_projection_examples():
    assert np.allclose(Euclidean(3).project(np.array([1.0, 2.0, 3.0])), [1, 2, 3])
    assert np.allclose(Sphere().project(np.array([2.0, 0.0, 0.0])), [1, 0, 0])


def test_torus_projection_against_grid_search():
    T = Torus(2.0, 0.5)
    p = np.array([3.0, 0.0, 0.0])
    th, ph = np.meshgrid(np.linspace(-0.5, 0.5, 401), np.linspace(-np.pi, np.pi, 801))
    grid = T.point(th.ravel(), ph.ravel())
    best = grid[np.argmin(np.linalg.norm(grid - p, axis=1))]
    # local refinement by alternating projection onto the tube circle
    for _ in range(5):
        t = np.arctan2(best[1], best[0])
        centre = 2.0 * np.array([np.cos(t), np.sin(t), 0.0])
        best = centre + 0.5 * (p - centre) / np.linalg.norm(p - centre)
    assert np.allclose(T.project(p), best, atol=1e-12)
    assert np.allclose(T.project(p), [2.5, 0, 0], atol=1e-12)


def test_projection_degenerate_points():
    with pytest.raises(DegeneratePoint):
        Sphere().project(np.zeros(3))
    with pytest.raises(DegeneratePoint):
        Torus(2.0, 0.5).project(np.array([0.0, 0.0, 0.3]))


@pytest.mark.parametrize("M", MANIFOLDS, ids=lambda M: M.describe()["kind"])
def test_projection_idempotent(M):
    p = RNG.normal(size=(50, M.ambient_dim)) * 0.2 + random_points(M, 50)
    once = M.project(p)
    assert np.max(np.abs(M.project(once) - once)) <= 1e-12
    assert np.all(M.contains(once))


def test_tangent_projection_examples():
    out = Sphere().tangent_project(np.array([0.0, 0.0, 1.0]), np.array([1.0, 1.0, 1.0]))
    assert np.allclose(out, [1, 1, 0])
    v = RNG.normal(size=3)
    assert np.array_equal(Euclidean(3).tangent_project(np.zeros(3), v), v)


@pytest.mark.parametrize("M", MANIFOLDS, ids=lambda M: M.describe()["kind"])
def test_tangent_projection_idempotent(M):
    p = random_points(M, 40)
    v = RNG.normal(size=p.shape)
    once = M.tangent_project(p, v)
    assert np.max(np.abs(M.tangent_project(p, once) - once)) <= 1e-12


def test_second_fundamental_form_euclidean_zero():
    E = Euclidean(3)
    u, v = RNG.normal(size=(2, 3))
    assert np.all(E.second_fundamental_form(np.zeros(3), u, v) == 0)


def _fd_second_form(M, p, u, v, eps=1e-5):
    """Normal part of the derivative of the tangent field P v along the geodesic-ish curve through p."""
    def field(s):
        q = M.project(p + s * u)
        return M.tangent_project(q, v)
    dv = (field(eps) - field(-eps)) / (2 * eps)
    return dv - M.tangent_project(p, dv)


def test_second_fundamental_form_sphere_example():
    S = Sphere()
    p = np.array([0.0, 0.0, 1.0])
    u = np.array([1.0, 0.0, 0.0])
    assert np.allclose(S.second_fundamental_form(p, u, u), [0, 0, -1])
    assert np.allclose(_fd_second_form(S, p, u, u), [0, 0, -1], atol=1e-8)


@pytest.mark.parametrize("M", [Sphere(1.3), Torus(2.0, 0.5)], ids=["sphere", "torus"])
def test_second_fundamental_form_matches_finite_differences(M):
    for p in random_points(M, 10):
        u, v = random_tangent(M, p), random_tangent(M, p)
        assert np.allclose(M.second_fundamental_form(p, u, v), _fd_second_form(M, p, u, v), atol=1e-7)


def test_second_fundamental_form_symmetric_on_torus():
    T = Torus(2.0, 0.5)
    p = random_points(T, 100)
    u, v = random_tangent(T, p), random_tangent(T, p)
    assert np.max(np.abs(T.second_fundamental_form(p, u, v) - T.second_fundamental_form(p, v, u))) <= 1e-10


def gauss_curvature_vector(M, p, x, y, z):
    """R(x,y)z from the Gauss equation, with the ambient basis to read off components."""
    ii = M.second_fundamental_form
    out = np.zeros(np.broadcast_shapes(p.shape, x.shape))
    basis = np.eye(p.shape[-1])
    for i, e in enumerate(basis):
        w = M.tangent_project(p, np.broadcast_to(e, p.shape))
        comp = (np.sum(ii(p, y, z) * ii(p, x, w), -1) - np.sum(ii(p, x, z) * ii(p, y, w), -1))
        out[..., i] = comp
    return M.tangent_project(p, out)


@pytest.mark.parametrize("M", MANIFOLDS, ids=lambda M: M.describe()["kind"])
def test_gauss_equation_consistency(M):
    p = random_points(M, 120)
    x, y, z = (random_tangent(M, p) for _ in range(3))
    assert np.max(np.abs(M.curvature(p, x, y, z) - gauss_curvature_vector(M, p, x, y, z))) <= 1e-10


@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
def test_sphere_curvature_formula_and_sectional(r):
    S = Sphere(r)
    p = random_points(S, 100)
    x, y, z = (random_tangent(S, p) for _ in range(3))
    dot = lambda a, b: np.sum(a * b, -1, keepdims=True)
    expected = (dot(y, z) * x - dot(x, z) * y) / r**2
    assert np.max(np.abs(S.curvature(p, x, y, z) - expected)) <= 1e-10
    e1 = x / np.linalg.norm(x, axis=-1, keepdims=True)
    e2 = y - dot(y, e1) * e1
    e2 /= np.linalg.norm(e2, axis=-1, keepdims=True)
    sectional = np.sum(S.curvature(p, e1, e2, e2) * e1, -1)
    assert np.max(np.abs(sectional - 1 / r**2)) <= 1e-10


@pytest.mark.parametrize("M", MANIFOLDS, ids=lambda M: M.describe()["kind"])
def test_first_bianchi_identity(M):
    p = random_points(M, 50)
    x, y, z = (random_tangent(M, p) for _ in range(3))
    R = M.curvature
    assert np.max(np.abs(R(p, x, y, z) + R(p, y, z, x) + R(p, z, x, y))) <= 1e-10


def test_euclidean_curvature_zero():
    x, y, z = RNG.normal(size=(3, 4))
    assert np.all(Euclidean(4).curvature(np.zeros(4), x, y, z) == 0)


def test_functional_aliases_match_methods():
    T = Torus()
    p = random_points(T, 3)
    u, v, w = (random_tangent(T, p) for _ in range(3))
    assert np.array_equal(project_to_manifold(T, p), T.project(p))
    assert np.array_equal(tangent_project(T, p, u), T.tangent_project(p, u))
    assert np.array_equal(second_fundamental_form(T, p, u, v), T.second_fundamental_form(p, u, v))
    assert np.array_equal(curvature(T, p, u, v, w), T.curvature(p, u, v, w))


def test_make_manifold_round_trip_and_errors():
    for M in MANIFOLDS:
        assert make_manifold(M.describe()).describe() == M.describe()
    with pytest.raises(ConfigError):
        make_manifold({"kind": "klein"})
    with pytest.raises(ConfigError):
        make_manifold({"kind": "sphere", "radius": -1})


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(0.3, 4.0))
def test_sphere_projection_lands_on_sphere(coords, r):
    p = np.array(coords)
    if np.linalg.norm(p) < 1e-3:
        return
    q = Sphere(r).project(p)
    assert abs(np.linalg.norm(q) - r) <= 1e-12 * r
