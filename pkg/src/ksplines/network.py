"""Network state and flow parameters.

A network with data points ``p_0..p_q`` consists of ``q`` spline segments
``gamma_l`` on ``[l-1, l]`` and ``q-1`` connectors ``chi_l`` on ``[l-1, l]``
running from ``p_l`` to the knot value ``gamma_l(l)``.  Every curve is stored
as an ``(N + 1, n)`` array of ambient nodes.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError

__all__ = ["NetworkState", "FlowParams"]


@dataclass
class FlowParams:
    """Order, weights, discretization and stopping controls of a flow run.

    ``boundary_data`` is either ``"clamp-initial"`` (take the covariant
    derivatives of the initial curve at both outer ends) or a mapping with keys
    ``"start"`` and ``"end"``, each a ``(k-1, n)`` array of tangent vectors
    ``D^(mu-1) gamma_x`` for ``mu = 1..k-1``.

    ``dt=None`` selects ``h**2 / 4``.  After every accepted step the step size
    is multiplied by ``dt_growth`` up to ``dt_max``; ``dt_growth=1`` keeps it
    fixed.  A step is rejected when the total energy rises by more than
    ``energy_slack * dt**2``; that test applies once the boundary defect of the
    current state is below ``admissibility_tol``.
    """

    k: int = 2
    lam: float = 1.0
    sigma: float = 1.0
    N: int = 64
    dt: Optional[float] = None
    max_steps: int = 100_000
    z1_tol: float = 1e-8
    resid_tol: float = 1e-6
    junction_tol: float = 1e-9
    on_manifold_tol: float = 1e-10
    boundary_data: object = "clamp-initial"
    dt_growth: float = 1.0
    dt_max: Optional[float] = None
    energy_slack: float = 1.0
    admissibility_tol: float = 1e-6
    max_halvings: int = 10
    init_smoothing_steps: int = 4
    init_smoothing_dt: Optional[float] = None
    log_every: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if int(self.k) != self.k or self.k < 2:
            raise ConfigError("spline order must be an integer >= 2", field="flow.k")
        self.k = int(self.k)
        for name in ("lam", "sigma", "z1_tol", "resid_tol", "junction_tol", "on_manifold_tol",
                     "admissibility_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"must be positive, got {value!r}", field=f"flow.{name}")
        if self.N < 4 * self.k + 2:
            raise ConfigError(f"need N >= {4 * self.k + 2} for order-{2 * self.k} stencils", field="flow.N")
        self.N = int(self.N)
        for name in ("dt", "dt_max", "init_smoothing_dt"):
            value = getattr(self, name)
            if value is not None and not (np.isfinite(value) and value > 0):
                raise ConfigError(f"must be positive, got {value!r}", field=f"flow.{name}")
        if self.max_steps < 1:
            raise ConfigError("must be at least 1", field="flow.max_steps")
        if self.dt_growth < 1.0:
            raise ConfigError("must be >= 1", field="flow.dt_growth")
        if self.energy_slack < 0:
            raise ConfigError("must be nonnegative", field="flow.energy_slack")
        if self.init_smoothing_steps < 0:
            raise ConfigError("must be nonnegative", field="flow.init_smoothing_steps")
        if self.log_every < 1:
            raise ConfigError("must be at least 1", field="flow.log_every")
        bd = self.boundary_data
        if isinstance(bd, str):
            if bd != "clamp-initial":
                raise ConfigError(f"unknown boundary data mode {bd!r}", field="flow.boundary_data")
        elif isinstance(bd, dict):
            if set(bd) != {"start", "end"}:
                raise ConfigError("expected keys 'start' and 'end'", field="flow.boundary_data")
            for key in ("start", "end"):
                arr = np.asarray(bd[key], dtype=float)
                if arr.ndim != 2 or arr.shape[0] != self.k - 1:
                    raise ConfigError(f"{key} must hold k-1 vectors", field=f"flow.boundary_data.{key}")
        else:
            raise ConfigError("must be 'clamp-initial' or a start/end mapping", field="flow.boundary_data")

    @property
    def h(self):
        return 1.0 / self.N

    def initial_dt(self):
        return self.dt if self.dt is not None else self.h**2 / 4

    def replace(self, **changes):
        out = copy.copy(self)
        for key, value in changes.items():
            setattr(out, key, value)
        out.validate()
        return out


@dataclass
class NetworkState:
    """Sampled network; ``gamma`` has q arrays, ``chi`` has q-1, ``knots`` has q+1 rows."""

    gamma: list
    chi: list
    knots: np.ndarray
    t: float = 0.0
    k: int = 2
    boundary_data: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        self.gamma = [np.asarray(g, dtype=float) for g in self.gamma]
        self.chi = [np.asarray(c, dtype=float) for c in self.chi]
        self.knots = np.asarray(self.knots, dtype=float)
        q = len(self.gamma)
        if q < 2:
            raise ValueError("a network needs at least two segments")
        if len(self.chi) != q - 1 or self.knots.shape[0] != q + 1:
            raise ValueError("expected q segments, q-1 connectors and q+1 knots")
        shapes = {a.shape for a in self.gamma + self.chi}
        if len(shapes) != 1:
            raise ValueError("all curves must share one grid")

    @property
    def q(self):
        return len(self.gamma)

    @property
    def N(self):
        return self.gamma[0].shape[0] - 1

    @property
    def ambient_dim(self):
        return self.gamma[0].shape[1]

    def copy(self):
        bd = None
        if self.boundary_data is not None:
            bd = {key: np.array(val) for key, val in self.boundary_data.items()}
        return NetworkState(
            [g.copy() for g in self.gamma], [c.copy() for c in self.chi],
            self.knots.copy(), self.t, self.k, bd,
        )

    def blocks(self):
        """Curves in solver order ``gamma_1, chi_1, gamma_2, ..., gamma_q``."""
        out = []
        for l in range(self.q):
            out.append(self.gamma[l])
            if l < self.q - 1:
                out.append(self.chi[l])
        return out

    def with_blocks(self, blocks, t=None):
        gamma = blocks[0::2]
        chi = blocks[1::2]
        bd = self.boundary_data
        return NetworkState(gamma, chi, self.knots.copy(), self.t if t is None else t, self.k, bd)

    def knot_values(self):
        """``gamma(x_l)`` for l = 0..q."""
        vals = [self.gamma[0][0]] + [g[-1] for g in self.gamma]
        return np.array(vals)

    def reversed(self):
        """Same network traversed backwards with the data relabeled ``p_j -> p_(q-j)``.

        Connector ``chi_l`` of the reversed network runs from the relabeled data
        point to the relabeled knot, so it is the original connector itself.
        """
        gamma = [g[::-1].copy() for g in reversed(self.gamma)]
        chi = [c.copy() for c in reversed(self.chi)]
        bd = None
        if self.boundary_data is not None:
            bd = {"start": self.boundary_data["end"].copy(), "end": self.boundary_data["start"].copy()}
            for key in bd:
                bd[key] = bd[key] * (-1.0) ** np.arange(1, bd[key].shape[0] + 1)[:, None]
        return NetworkState(gamma, chi, self.knots[::-1].copy(), self.t, self.k, bd)

    def max_junction_gap(self):
        gaps = [np.linalg.norm(self.gamma[0][0] - self.knots[0]), np.linalg.norm(self.gamma[-1][-1] - self.knots[-1])]
        for l in range(self.q - 1):
            gaps.append(np.linalg.norm(self.gamma[l][-1] - self.gamma[l + 1][0]))
            gaps.append(np.linalg.norm(self.gamma[l][-1] - self.chi[l][-1]))
            gaps.append(np.linalg.norm(self.chi[l][0] - self.knots[l + 1]))
        return float(max(gaps))

    def max_manifold_distance(self, M):
        return float(max(np.max(M.distance_to(a)) for a in self.blocks()))
