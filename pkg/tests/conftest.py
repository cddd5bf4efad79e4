import numpy as np
import pytest

from ksplines.flow import initialize_network, run_to_convergence
from ksplines.manifold import Euclidean, Sphere
from ksplines.network import FlowParams


def sphere_points(theta=(0.0, 0.5, 1.0, 1.5), phi=(0.0, 0.3, -0.2, 0.1)):
    th, ph = np.asarray(theta), np.asarray(phi)
    return np.stack([np.cos(th) * np.cos(ph), np.sin(th) * np.cos(ph), np.sin(ph)], axis=1)


PLANAR = np.array([[0.0, 0.0], [1.0, 0.8], [2.0, -0.3], [3.0, 0.5]])


def fast_params(**kw):
    base = dict(k=2, lam=1.0, sigma=1.0, N=32, dt_growth=1.1, dt_max=0.1, max_steps=5000)
    base.update(kw)
    return FlowParams(**base)


def converge(M, points, params):
    init = initialize_network(M, points, params)
    final, trace = run_to_convergence(M, init, params)
    return init, final, trace


@pytest.fixture(scope="session")
def planar_run():
    params = fast_params(z1_tol=1e-12)
    M = Euclidean(2)
    init, final, trace = converge(M, PLANAR, params)
    return M, params, init, final, trace


@pytest.fixture(scope="session")
def sphere_run():
    """Unit sphere, k=2, q=3, N=64, run well past Z1 = 1e-8 so the connectors settle."""
    params = fast_params(N=64, z1_tol=1e-14, max_steps=20000)
    M = Sphere()
    init, final, trace = converge(M, sphere_points(), params)
    return M, params, init, final, trace
