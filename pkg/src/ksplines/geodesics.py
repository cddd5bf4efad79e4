"""Discrete constant-speed geodesics between two points of a manifold."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .calculus import fd_matrix
from .errors import GeodesicFailure
from .manifold import Euclidean, Sphere, Torus

__all__ = ["geodesic", "relax_geodesic", "slerp"]


def slerp(a, b, s, radius=1.0):
    """Great-circle interpolation on a sphere of the given radius, ``s`` in [0, 1]."""
    a = np.asarray(a, dtype=float) / radius
    b = np.asarray(b, dtype=float) / radius
    s = np.asarray(s, dtype=float)[:, None]
    cos = np.clip(np.dot(a, b), -1.0, 1.0)
    omega = np.arccos(cos)
    if omega < 1e-12:
        return radius * ((1 - s) * a + s * b) / np.linalg.norm((1 - s) * a + s * b, axis=1, keepdims=True)
    if np.pi - omega < 1e-8:
        raise GeodesicFailure("antipodal points: the minimal geodesic is not unique")
    out = (np.sin((1 - s) * omega) * a + np.sin(s * omega) * b) / np.sin(omega)
    return radius * out


def _torus_seed(M, a, b, s):
    # shortest angular interpolation in the (theta, phi) chart
    def angles(p):
        theta = np.arctan2(p[1], p[0])
        rho = np.hypot(p[0], p[1])
        phi = np.arctan2(p[2], rho - M.major)
        return theta, phi

    ta, pa = angles(a)
    tb, pb = angles(b)
    dt = (tb - ta + np.pi) % (2 * np.pi) - np.pi
    dp = (pb - pa + np.pi) % (2 * np.pi) - np.pi
    return M.point(ta + s * dt, pa + s * dp)


def relax_geodesic(M, nodes, tol=1e-12, max_iter=500, dt=0.1):
    """Drive a curve with fixed ends to a discrete harmonic map (constant-speed geodesic).

    Implicit heat-flow steps ``(I - dt D2) delta = dt P(D2 u)`` followed by
    projection, until the tension falls below ``tol`` relative to the squared
    chord length.
    """
    u = np.array(nodes, dtype=float)
    npts = u.shape[0]
    d2 = fd_matrix(npts, 2)
    a = (sp.identity(npts, format="lil") - dt * d2).tolil()
    for j in (0, npts - 1):
        a.rows[j] = [j]
        a.data[j] = [1.0]
    lu = spla.splu(a.tocsc())
    scale = max(np.sum((u[-1] - u[0]) ** 2), 1e-300)
    for _ in range(max_iter):
        tau = M.tangent_project(u, d2 @ u)
        tau[0] = tau[-1] = 0.0
        if np.max(np.abs(tau[1:-1])) <= tol * max(scale, 1.0):
            return u
        u[1:-1] = M.project(u[1:-1] + lu.solve(dt * tau)[1:-1])
    raise GeodesicFailure("geodesic relaxation did not converge")


def geodesic(M, a, b, npts):
    """Constant-speed minimal geodesic from ``a`` to ``b`` sampled at ``npts`` nodes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = np.linspace(0.0, 1.0, npts)
    if isinstance(M, Euclidean):
        out = a + s[:, None] * (b - a)
    elif isinstance(M, Sphere):
        out = slerp(a, b, s, M.radius)
    elif isinstance(M, Torus):
        out = relax_geodesic(M, _torus_seed(M, a, b, s))
    else:
        out = relax_geodesic(M, M.project(a + s[:, None] * (b - a)))
    out[0] = a
    out[-1] = b
    return out
