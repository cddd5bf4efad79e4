"""Order-zero compatibility of initial data with the boundary conditions of the flow."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .calculus import covariant_chain, euler_lagrange, tension_field
from .energy import junction_defects

__all__ = ["CompatibilityReport", "check_compatibility", "compatibilize"]


@dataclass
class CompatibilityReport:
    """Defect magnitudes of each condition group; arrays are indexed by knot or junction."""

    endpoint_EL: np.ndarray
    junction_EL_match: np.ndarray
    dirichlet: float
    chi_dirichlet: np.ndarray
    clamped_v: np.ndarray
    concurrency: np.ndarray
    regularity: np.ndarray
    balancing: np.ndarray
    tol: float

    GROUPS = ("endpoint_EL", "junction_EL_match", "dirichlet", "chi_dirichlet",
              "clamped_v", "concurrency", "regularity", "balancing")

    def group_max(self):
        out = {}
        for name in self.GROUPS:
            arr = np.asarray(getattr(self, name), dtype=float)
            out[name] = float(arr.max()) if arr.size else 0.0
        return out

    @property
    def total(self):
        return float(sum(self.group_max().values()))

    @property
    def verdict(self):
        return all(v <= self.tol for v in self.group_max().values())

    def passes(self, tol):
        return all(v <= tol for v in self.group_max().values())

    def as_dict(self):
        out = {name: np.asarray(getattr(self, name), dtype=float).tolist() for name in self.GROUPS}
        out["tol"] = self.tol
        out["verdict"] = self.verdict
        out["total"] = self.total
        return out


def check_compatibility(M, state, params, tol=1e-8):
    """Evaluate the eight groups of order-zero compatibility conditions."""
    k = params.k
    layers = [covariant_chain(M, g, 2 * k - 1) for g in state.gamma]
    el = [euler_lagrange(M, g, k, params.lam, layers=c) for g, c in zip(state.gamma, layers)]
    endpoint = np.array([np.linalg.norm(el[0][0]), np.linalg.norm(el[-1][-1])])
    match = np.zeros((state.q - 1, 2))
    for l in range(state.q - 1):
        tau = tension_field(M, state.chi[l])[-1]
        match[l, 0] = np.linalg.norm(el[l][-1] - tau)
        match[l, 1] = np.linalg.norm(el[l + 1][0] - tau)
    dirichlet = max(
        float(np.linalg.norm(state.gamma[0][0] - state.knots[0])),
        float(np.linalg.norm(state.gamma[-1][-1] - state.knots[-1])),
    )
    chi_dir = np.array([np.linalg.norm(c[0] - p) for c, p in zip(state.chi, state.knots[1:-1])])
    bd = state.boundary_data
    clamped = np.zeros((2, max(k - 1, 0)))
    for mu in range(1, k):
        clamped[0, mu - 1] = np.linalg.norm(layers[0][mu - 1][0] - bd["start"][mu - 1])
        clamped[1, mu - 1] = np.linalg.norm(layers[-1][mu - 1][-1] - bd["end"][mu - 1])
    jd = junction_defects(M, state, params, layers)
    return CompatibilityReport(
        endpoint_EL=endpoint, junction_EL_match=match, dirichlet=dirichlet,
        chi_dirichlet=chi_dir, clamped_v=clamped, concurrency=jd["concurrency"],
        regularity=jd["regularity"], balancing=jd["balancing"], tol=float(tol),
    )


def compatibilize(M, state, params, steps=8, dt=None, growth=2.0, tol=1e-8):
    """Reduce compatibility defects by a short pre-flow.

    The pre-flow starts at ``dt`` (default ``h**2 / 4``) and multiplies the
    step by ``growth`` after each step, so a few steps cover the time scale on
    which the parabolic smoothing acts.  A state whose defects are all below
    ``tol`` is returned as is.  Otherwise returns the pre-flow iterate with the
    smallest total defect when that is strictly below the defect of ``state``; otherwise returns ``state`` itself
    and issues a warning.  The flow time of the result is reset to that of
    ``state``.
    """
    from .flow import FlowStepper

    best = state
    initial = check_compatibility(M, state, params, tol)
    if initial.verdict:
        return state
    best_defect = initial.total
    stepper = FlowStepper(M, params)
    stepper.dt = dt if dt is not None else params.h**2 / 4
    current = state
    try:
        for _ in range(steps):
            current = stepper.step(current)[0]
            stepper.dt *= growth
            d = check_compatibility(M, current, params).total
            if d < best_defect:
                best, best_defect = current, d
    except Exception as exc:  # the pre-flow is best effort
        warnings.warn(f"pre-flow stopped early: {exc}", RuntimeWarning, stacklevel=2)
    if best is state:
        warnings.warn("pre-flow did not reduce the compatibility defect", RuntimeWarning, stacklevel=2)
        return state
    out = best.copy()
    out.t = state.t
    return out
