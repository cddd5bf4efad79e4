"""Energies, the stationarity diagnostic Z1, junction defects and a-priori bounds."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .calculus import covariant_chain, euler_lagrange, fd_derivative, tension_field

__all__ = [
    "EnergyReport",
    "BoundsCheck",
    "trapezoid",
    "energy",
    "z1_diagnostic",
    "junction_defects",
    "apriori_bounds_check",
    "pde_rows",
]


@dataclass
class EnergyReport:
    E_k: float
    T_gamma: float
    T_chi: float
    total: float
    Z1: float
    el_residual_max: float
    junction_defect_max: float
    t: float

    def as_dict(self):
        return {key: float(val) for key, val in asdict(self).items()}


@dataclass
class BoundsCheck:
    passed: bool
    gamma_norm: float
    gamma_bound: float
    chi_norm: float
    chi_bound: float

    @property
    def gamma_margin(self):
        return self.gamma_bound - self.gamma_norm

    @property
    def chi_margin(self):
        return self.chi_bound - self.chi_norm


def trapezoid(values, h):
    """Composite trapezoid rule over the first axis of nodal ``values``."""
    values = np.asarray(values, dtype=float)
    return float(h * (values.sum(axis=0) - 0.5 * (values[0] + values[-1])))


def pde_rows(N, k):
    """Nodes of a spline segment where the evolution equation is imposed."""
    return np.arange(k, N - k + 1)


def _sq(v):
    return np.sum(v * v, axis=-1)


def _gamma_terms(M, state, params):
    k = params.k
    h = 1.0 / state.N
    rows = pde_rows(state.N, k)
    e_k = t_gamma = z_gamma = 0.0
    el_max = 0.0
    layers = []
    for g in state.gamma:
        chain = covariant_chain(M, g, 2 * k - 1)
        layers.append(chain)
        e_k += 0.5 * trapezoid(_sq(chain[k - 1]), h)
        t_gamma += 0.5 * trapezoid(_sq(chain[0]), h)
        el = euler_lagrange(M, g, k, params.lam, layers=chain)[rows]
        z_gamma += h * float(np.sum(_sq(el)))
        el_max = max(el_max, float(np.max(np.linalg.norm(el, axis=1))))
    return e_k, t_gamma, z_gamma, el_max, layers


def _chi_terms(M, state):
    h = 1.0 / state.N
    t_chi = z_chi = 0.0
    for c in state.chi:
        t_chi += 0.5 * trapezoid(_sq(M.tangent_project(c, fd_derivative(c, 1))), h)
        tau = tension_field(M, c)[1:-1]
        z_chi += h * float(np.sum(_sq(tau)))
    return t_chi, z_chi


def junction_defects(M, state, params, layers=None):
    """Per-junction defect magnitudes of concurrency, regularity and balancing.

    Regularity compares the covariant layers ``D^(mu-1) gamma_x`` for
    ``mu = 1..2k-2`` on the two sides of each interior knot; balancing
    evaluates ``Delta D^(2k-2) gamma_x + (-1)^k sigma^-2 chi_x`` with the jump
    taken as (right side) minus (left side).  Arrays are indexed by junction.
    """
    k = params.k
    if layers is None:
        layers = [covariant_chain(M, g, 2 * k - 2) for g in state.gamma]
    q = state.q
    conc = np.zeros(q - 1)
    reg = np.zeros((q - 1, 2 * k - 2))
    bal = np.zeros(q - 1)
    for l in range(q - 1):
        left, right = layers[l], layers[l + 1]
        gl, gr, c = state.gamma[l][-1], state.gamma[l + 1][0], state.chi[l][-1]
        conc[l] = max(np.linalg.norm(gl - gr), np.linalg.norm(gl - c))
        for mu in range(1, 2 * k - 1):
            reg[l, mu - 1] = np.linalg.norm(right[mu - 1][0] - left[mu - 1][-1])
        chi_x = M.tangent_project(state.chi[l], fd_derivative(state.chi[l], 1))[-1]
        jump = right[2 * k - 2][0] - left[2 * k - 2][-1]
        bal[l] = np.linalg.norm(jump + (-1.0) ** k / params.sigma**2 * chi_x)
    dirichlet = max(
        np.linalg.norm(state.gamma[0][0] - state.knots[0]),
        np.linalg.norm(state.gamma[-1][-1] - state.knots[-1]),
        max(np.linalg.norm(state.chi[l][0] - state.knots[l + 1]) for l in range(q - 1)),
    )
    return {"concurrency": conc, "regularity": reg, "balancing": bal, "dirichlet": float(dirichlet)}


def energy(M, state, params):
    """Energy report of a network state."""
    e_k, t_gamma, z_gamma, el_max, layers = _gamma_terms(M, state, params)
    t_chi, z_chi = _chi_terms(M, state)
    inv_s2 = 1.0 / params.sigma**2
    total = e_k + params.lam * t_gamma + inv_s2 * t_chi
    jd = junction_defects(M, state, params, layers)
    jmax = max(
        float(np.max(jd["concurrency"])), float(np.max(jd["regularity"])),
        float(np.max(jd["balancing"])), jd["dirichlet"],
    )
    return EnergyReport(
        E_k=e_k, T_gamma=t_gamma, T_chi=t_chi, total=total,
        Z1=z_gamma + inv_s2 * z_chi, el_residual_max=el_max,
        junction_defect_max=jmax, t=float(state.t),
    )


def z1_diagnostic(M, state, params):
    """Squared L2 norm of the flow velocity, evaluated from the spatial operators."""
    _, _, z_gamma, _, _ = _gamma_terms(M, state, params)
    _, z_chi = _chi_terms(M, state)
    return z_gamma + z_chi / params.sigma**2


def apriori_bounds_check(report, report_at_t0, lam, sigma, tol=1e-12):
    """Compare the tension energies with the bounds implied by energy decay from ``t0``.

    ``T_gamma <= total(t0) / lam`` and ``T_chi <= sigma**2 total(t0)``, where
    the ``T`` are the half squared L2 norms of the velocities.
    """
    e0 = report_at_t0.total
    gb = e0 / lam + tol
    cb = sigma**2 * e0 + tol
    ok = report.T_gamma <= gb and report.T_chi <= cb
    return BoundsCheck(bool(ok), report.T_gamma, gb, report.T_chi, cb)
