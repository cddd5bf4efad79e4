"""Embedded manifolds M in R^n and their extrinsic geometry.

Every routine is vectorized over leading axes: points and vectors are arrays
of shape ``(..., n)``.  Covariant differentiation along curves is realized as
the tangential part of the ambient derivative, so the only geometric data the
rest of the package needs are the closest-point projection, the tangent
projection, the second fundamental form and the Riemann tensor.

Hypersurfaces (sphere, torus) are described through a unit normal field
``nu`` and its differential, the Weingarten map ``S(u) = d nu(u)``.  With
``h(u, v) = -<S u, v>`` the second fundamental form is ``h(u, v) nu`` and the
Gauss equation gives

    R(X, Y) Z = h(X, Z) S Y - h(Y, Z) S X,

which for the round sphere of radius r reduces to
``(<Y, Z> X - <X, Z> Y) / r**2``.
"""

from __future__ import annotations

import numpy as np

from .errors import DegeneratePoint, ConfigError

__all__ = [
    "Manifold",
    "Euclidean",
    "Sphere",
    "Torus",
    "make_manifold",
    "project_to_manifold",
    "tangent_project",
    "second_fundamental_form",
    "curvature",
]


def _dot(a, b):
    return np.sum(a * b, axis=-1)


class Manifold:
    """Base class; concrete manifolds override the geometric primitives."""

    kind = "abstract"

    def __init__(self, dim, ambient_dim, params=()):
        self.dim = int(dim)
        self.ambient_dim = int(ambient_dim)
        self.params = tuple(float(x) for x in params)

    def __repr__(self):
        args = ", ".join(f"{x:g}" for x in self.params)
        return f"{type(self).__name__}({args})" if args else f"{type(self).__name__}(n={self.ambient_dim})"

    def describe(self):
        """Plain-dict description used for config emission and reports."""
        raise NotImplementedError

    def project(self, p):
        raise NotImplementedError

    def tangent_project(self, p, v):
        raise NotImplementedError

    def second_fundamental_form(self, p, u, v):
        raise NotImplementedError

    def curvature(self, p, x, y, z):
        raise NotImplementedError

    def distance_to(self, p):
        """Ambient distance from ``p`` to its projection onto M."""
        p = np.asarray(p, dtype=float)
        return np.linalg.norm(p - self.project(p), axis=-1)

    def contains(self, p, tol=1e-10):
        return bool(np.all(self.distance_to(p) <= tol))


class Euclidean(Manifold):
    """Flat R^n; all curvature quantities vanish identically."""

    kind = "euclidean"

    def __init__(self, n=2):
        super().__init__(n, n)

    def describe(self):
        return {"kind": self.kind, "n": self.ambient_dim}

    def project(self, p):
        return np.array(p, dtype=float)

    def tangent_project(self, p, v):
        return np.array(v, dtype=float)

    def second_fundamental_form(self, p, u, v):
        return np.zeros(np.broadcast(np.asarray(u), np.asarray(v)).shape)

    def curvature(self, p, x, y, z):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y), np.asarray(z)).shape)


class _Hypersurface(Manifold):
    """Codimension-one manifold given by a unit normal field and its differential."""

    def normal(self, p):
        raise NotImplementedError

    def weingarten(self, p, u):
        """Differential of the unit normal field applied to tangent vectors ``u``."""
        raise NotImplementedError

    def tangent_project(self, p, v):
        nu = self.normal(p)
        v = np.asarray(v, dtype=float)
        return v - _dot(v, nu)[..., None] * nu

    def scalar_form(self, p, u, v):
        """Scalar second fundamental form ``h(u, v) = -<S u, v>``."""
        return -_dot(self.weingarten(p, u), v)

    def second_fundamental_form(self, p, u, v):
        return self.scalar_form(p, u, v)[..., None] * self.normal(p)

    def curvature(self, p, x, y, z):
        sx = self.weingarten(p, x)
        sy = self.weingarten(p, y)
        hxz = -_dot(sx, z)
        hyz = -_dot(sy, z)
        return hxz[..., None] * sy - hyz[..., None] * sx


class Sphere(_Hypersurface):
    """Round sphere S^m(r) centred at the origin of R^(m+1)."""

    kind = "sphere"

    def __init__(self, radius=1.0, dim=2):
        if not radius > 0:
            raise ConfigError("sphere radius must be positive", field="manifold.radius")
        if dim < 1:
            raise ConfigError("sphere dimension must be at least 1", field="manifold.dim")
        super().__init__(dim, dim + 1, (radius,))
        self.radius = float(radius)

    def describe(self):
        return {"kind": self.kind, "radius": self.radius, "dim": self.dim}

    def _norm(self, p):
        p = np.asarray(p, dtype=float)
        rho = np.linalg.norm(p, axis=-1)
        if np.any(rho <= 1e-14 * max(1.0, self.radius)):
            raise DegeneratePoint("radial projection undefined at the centre of the sphere")
        return p, rho

    def normal(self, p):
        p, rho = self._norm(p)
        return p / rho[..., None]

    def project(self, p):
        p, rho = self._norm(p)
        return self.radius * p / rho[..., None]

    def weingarten(self, p, u):
        # on M the differential of p/|p| restricted to tangents is u / r
        return np.asarray(u, dtype=float) / self.radius


class Torus(_Hypersurface):
    """Torus of revolution about the z-axis with radii ``major > minor > 0``."""

    kind = "torus"

    def __init__(self, major=2.0, minor=0.5):
        if not (minor > 0 and major > minor):
            raise ConfigError("torus radii must satisfy major > minor > 0", field="manifold")
        super().__init__(2, 3, (major, minor))
        self.major = float(major)
        self.minor = float(minor)

    def describe(self):
        return {"kind": self.kind, "major": self.major, "minor": self.minor}

    def _frame(self, p):
        p = np.asarray(p, dtype=float)
        rho = np.hypot(p[..., 0], p[..., 1])
        if np.any(rho <= 1e-12 * self.major):
            raise DegeneratePoint("torus projection undefined on the symmetry axis")
        e = np.zeros_like(p)
        e[..., 0] = p[..., 0] / rho
        e[..., 1] = p[..., 1] / rho
        w = p - self.major * e
        wn = np.linalg.norm(w, axis=-1)
        if np.any(wn <= 1e-12 * self.minor):
            raise DegeneratePoint("torus projection undefined on the core circle")
        return p, rho, e, w, wn

    def normal(self, p):
        _, _, _, w, wn = self._frame(p)
        return w / wn[..., None]

    def project(self, p):
        _, _, e, w, wn = self._frame(p)
        return self.major * e + self.minor * w / wn[..., None]

    def weingarten(self, p, u):
        _, rho, e, w, wn = self._frame(p)
        u = np.asarray(u, dtype=float)
        uh = u.copy()
        uh[..., 2] = 0.0
        dc = (self.major / rho)[..., None] * (uh - _dot(uh, e)[..., None] * e)
        nu = w / wn[..., None]
        dw = u - dc
        return (dw - _dot(dw, nu)[..., None] * nu) / wn[..., None]

    def point(self, theta, phi):
        """Parametrization; ``theta`` around the z-axis, ``phi`` around the tube."""
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        rr = self.major + self.minor * np.cos(phi)
        return np.stack([rr * np.cos(theta), rr * np.sin(theta), self.minor * np.sin(phi)], axis=-1)


def make_manifold(desc):
    """Build a manifold from a config mapping such as ``{"kind": "sphere", "radius": 1}``."""
    if isinstance(desc, Manifold):
        return desc
    desc = dict(desc)
    kind = str(desc.pop("kind", "")).lower()
    try:
        if kind == "euclidean":
            return Euclidean(int(desc.pop("n", 2)))
        if kind == "sphere":
            return Sphere(float(desc.pop("radius", 1.0)), int(desc.pop("dim", 2)))
        if kind == "torus":
            return Torus(float(desc.pop("major", 2.0)), float(desc.pop("minor", 0.5)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), field="manifold") from exc
    raise ConfigError(f"unknown manifold kind {kind!r}", field="manifold.kind")


# functional aliases mirroring the method names

def project_to_manifold(M, p):
    return M.project(p)


def tangent_project(M, p, v):
    return M.tangent_project(p, v)


def second_fundamental_form(M, p, u, v):
    return M.second_fundamental_form(p, u, v)


def curvature(M, p, x, y, z):
    return M.curvature(p, x, y, z)
