"""Semi-implicit gradient flow of a spline network.

Each step solves one sparse linear system for the increment ``delta`` of all
curves at once (unknown blocks ordered ``gamma_1, chi_1, gamma_2, ...``):

* spline interior rows ``(I - dt A) delta = dt L(u)`` with the flat leading
  operator ``A = (-1)^(k+1) d^(2k) + lam d^2`` taken implicitly and the full
  nonlinear Euler-Lagrange operator ``L`` on the right;
* connector interior rows ``(I - dt d^2) delta = dt P(d^2 chi)``;
* boundary rows applying the flat linearization of each boundary or junction
  condition to ``delta`` with the negative current defect on the right.

The matrix acts identically on every ambient coordinate, so it is factored
once per step size.  After the solve every node is projected back onto M.  A
step that raises the total energy by more than ``energy_slack * dt**2`` (plus a
rounding floor) is retried with half the step size.

At a fixed point ``delta = 0`` every right-hand side vanishes: the evolution
equations hold at the interior rows and all boundary conditions hold exactly.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .calculus import covariant_chain, euler_lagrange, fd_matrix, fd_row, tension_field
from .energy import energy, pde_rows
from .errors import ManifoldError, NotConverged, SingularSystem, StepRejected
from .geodesics import geodesic
from .network import NetworkState

__all__ = [
    "initialize_network",
    "StepSystem",
    "assemble_step_system",
    "FlowStepper",
    "step",
    "run_to_convergence",
    "FlowTrace",
    "boundary_defect",
]

log = logging.getLogger(__name__)


def _check_points(M, points, tol):
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != M.ambient_dim:
        raise ManifoldError(f"data points must have shape (q+1, {M.ambient_dim})")
    if pts.shape[0] < 3:
        raise ManifoldError("need at least three data points (q >= 2)")
    if not np.all(np.isfinite(pts)):
        raise ManifoldError("data points must be finite")
    scale = max(1.0, float(np.max(np.abs(pts))))
    dist = M.distance_to(pts)
    bad = np.flatnonzero(dist > max(tol, 1e-9) * scale)
    if bad.size:
        raise ManifoldError(f"data point {int(bad[0])} is off the manifold by {dist[bad[0]]:.3e}")
    return M.project(pts)


def _smooth_polygon(M, curve, N, steps, dt):
    """Implicit heat-flow steps on the concatenated curve with both ends pinned."""
    npts = curve.shape[0]
    q = (npts - 1) // N
    d2 = fd_matrix(npts, 2) / q**2
    a = (sp.identity(npts, format="lil") - dt * d2).tolil()
    for j in (0, npts - 1):
        a.rows[j] = [j]
        a.data[j] = [1.0]
    lu = spla.splu(a.tocsc())
    u = curve.copy()
    for _ in range(steps):
        tau = M.tangent_project(u, d2 @ u)
        tau[0] = tau[-1] = 0.0
        u[1:-1] = M.project(u[1:-1] + lu.solve(dt * tau)[1:-1])
    return u


def _clamp_data(M, gamma, k):
    start = covariant_chain(M, gamma[0], k - 2)
    end = covariant_chain(M, gamma[-1], k - 2)
    return {
        "start": np.array([layer[0] for layer in start]),
        "end": np.array([layer[-1] for layer in end]),
    }


def initialize_network(M, points, params):
    """Initial network: smoothed geodesic polygon through the data with geodesic connectors."""
    pts = _check_points(M, points, params.on_manifold_tol)
    q = pts.shape[0] - 1
    N = params.N
    pieces = [geodesic(M, pts[l], pts[l + 1], N + 1) for l in range(q)]
    curve = np.concatenate([pieces[0]] + [p[1:] for p in pieces[1:]])
    if params.init_smoothing_steps:
        dt = params.init_smoothing_dt if params.init_smoothing_dt is not None else 2e-3
        curve = _smooth_polygon(M, curve, N, params.init_smoothing_steps, dt)
    curve[0], curve[-1] = pts[0], pts[-1]
    gamma = [curve[l * N:(l + 1) * N + 1].copy() for l in range(q)]
    chi = [geodesic(M, pts[l + 1], gamma[l][-1], N + 1) for l in range(q - 1)]
    if isinstance(params.boundary_data, str):
        bd = _clamp_data(M, gamma, params.k)
    else:
        bd = {key: np.asarray(params.boundary_data[key], dtype=float) for key in ("start", "end")}
        for key, node in (("start", pts[0]), ("end", pts[-1])):
            if bd[key].shape[1] != M.ambient_dim:
                raise ManifoldError(f"boundary data '{key}' has the wrong ambient dimension")
            off = np.linalg.norm(bd[key] - M.tangent_project(node, bd[key]))
            if off > 1e-9 * max(1.0, float(np.max(np.abs(bd[key])))):
                raise ManifoldError(f"boundary data '{key}' is not tangent at the endpoint")
    return NetworkState(gamma, chi, pts, 0.0, params.k, bd)


class StepSystem:
    """Assembled step matrix, right-hand side and row labels."""

    def __init__(self, matrix, rhs, labels, block_size, n_blocks):
        self.matrix = matrix
        self.rhs = rhs
        self.labels = labels
        self.block_size = block_size
        self.n_blocks = n_blocks

    def rows_with(self, prefix):
        return [i for i, lab in enumerate(self.labels) if lab.startswith(prefix)]

    def junction_rows(self, l):
        """Row indices belonging to interior knot ``l`` (1-based)."""
        return [i for i, lab in enumerate(self.labels) if lab.startswith(f"junction{l}:")]


class _Builder:
    def __init__(self, n_unknowns):
        self.rows, self.cols, self.vals = [], [], []
        self.labels = [None] * n_unknowns

    def put(self, row, cols, vals, label):
        self.rows.extend([row] * len(cols))
        self.cols.extend(cols)
        self.vals.extend(vals)
        self.labels[row] = label

    def matrix(self, n):
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(n, n))


def _assemble_matrix(q, N, k, lam, sigma, dt):
    npts = N + 1
    nb = 2 * q - 1
    n = nb * npts
    b = _Builder(n)
    h = 1.0 / N
    lead = ((-1.0) ** (k + 1) * fd_matrix(npts, 2 * k) + lam * fd_matrix(npts, 2)).tocsr()
    d2 = fd_matrix(npts, 2).tocsr()

    def off(block, node):
        return block * npts + node

    def stencil(block, order, node, scale=1.0):
        cols, w = fd_row(npts, order, node)
        return [off(block, c) for c in cols], list(scale * w)

    def implicit_row(block, node, op, label):
        row = op.getrow(node)
        cols = [off(block, c) for c in row.indices]
        vals = list(-dt * row.data)
        cols.append(off(block, node))
        vals.append(1.0)
        b.put(off(block, node), cols, vals, label)

    for l in range(q):
        g = 2 * l
        for j in pde_rows(N, k):
            implicit_row(g, j, lead, f"gamma{l + 1}:pde[{j}]")
    for l in range(q - 1):
        c = 2 * l + 1
        for j in range(1, N):
            implicit_row(c, j, d2, f"chi{l + 1}:pde[{j}]")

    # outer ends: Dirichlet and clamped derivatives
    for block, node, side, sign in ((0, 0, "start", 1), (2 * q - 2, N, "end", -1)):
        slots = list(range(0, k)) if node == 0 else list(range(N, N - k, -1))
        b.put(off(block, slots[0]), [off(block, node)], [1.0], f"boundary:{side}:dirichlet")
        for mu in range(1, k):
            cols, vals = stencil(block, mu, node, h**mu)
            b.put(off(block, slots[mu]), cols, vals, f"boundary:{side}:clamped[{mu}]")

    for l in range(q - 1):
        gl, c, gr = 2 * l, 2 * l + 1, 2 * l + 2
        tag = f"junction{l + 1}"
        right_slots = list(range(N, N - k, -1))
        left_slots = list(range(0, k))
        conds = ["concurrency"] + [f"regularity[{mu}]" for mu in range(1, 2 * k - 1)] + ["balancing"]
        slots = [(gl, s) for s in right_slots] + [(gr, s) for s in reversed(left_slots)]
        for (block, slot), cond in zip(slots, conds):
            if cond == "concurrency":
                cols, vals = [off(gl, N), off(gr, 0)], [1.0, -1.0]
            elif cond == "balancing":
                order = 2 * k - 1
                c1, v1 = stencil(gr, order, 0, h**order)
                c2, v2 = stencil(gl, order, N, -h**order)
                c3, v3 = stencil(c, 1, N, (-1.0) ** k / sigma**2 * h**order)
                cols, vals = c1 + c2 + c3, v1 + v2 + v3
            else:
                mu = int(cond[len("regularity["):-1])
                c1, v1 = stencil(gr, mu, 0, h**mu)
                c2, v2 = stencil(gl, mu, N, -h**mu)
                cols, vals = c1 + c2, v1 + v2
            b.put(off(block, slot), cols, vals, f"{tag}:{cond}")
        b.put(off(c, 0), [off(c, 0)], [1.0], f"{tag}:chi_dirichlet")
        b.put(off(c, N), [off(c, N), off(gl, N)], [1.0, -1.0], f"{tag}:chi_concurrency")

    assert all(lab is not None for lab in b.labels)
    return b.matrix(n), b.labels


def _residuals(M, state, params, layers=None):
    """Right-hand side of the step system at ``dt = 1`` scale (PDE rows carry L, tau)."""
    k, N, q = params.k, state.N, state.q
    npts = N + 1
    h = 1.0 / N
    if layers is None:
        layers = [covariant_chain(M, g, 2 * k - 1) for g in state.gamma]
    pde = pde_rows(N, k)
    blocks_pde = []
    el = []
    for l, g in enumerate(state.gamma):
        lval = euler_lagrange(M, g, k, params.lam, layers=layers[l])
        el.append(lval)
        blocks_pde.append(lval)
    taus = [tension_field(M, c) for c in state.chi]
    bc = {}
    raw = 0.0  # largest unscaled boundary defect
    bd = state.boundary_data
    p = state.knots
    bc[("start", "dirichlet")] = p[0] - state.gamma[0][0]
    bc[("end", "dirichlet")] = p[-1] - state.gamma[-1][-1]
    for mu in range(1, k):
        bc[("start", mu)] = -h**mu * (layers[0][mu - 1][0] - bd["start"][mu - 1])
        bc[("end", mu)] = -h**mu * (layers[-1][mu - 1][-1] - bd["end"][mu - 1])
    for l in range(q - 1):
        gl, gr, c = state.gamma[l], state.gamma[l + 1], state.chi[l]
        x = gl[-1]
        bc[(l, "concurrency")] = -(gl[-1] - gr[0])
        for mu in range(1, 2 * k - 1):
            dm = fd_matrix(npts, mu)
            jump = dm.getrow(0) @ gr - dm.getrow(N) @ gl
            bc[(l, mu)] = -h**mu * M.tangent_project(x, jump.ravel())
        order = 2 * k - 1
        dm = fd_matrix(npts, order)
        jump = (dm.getrow(0) @ gr - dm.getrow(N) @ gl).ravel()
        chi_x = (fd_matrix(npts, 1).getrow(N) @ c).ravel()
        bc[(l, "balancing")] = -h**order * M.tangent_project(x, jump + (-1.0) ** k / params.sigma**2 * chi_x)
        bc[(l, "chi_dirichlet")] = p[l + 1] - c[0]
        bc[(l, "chi_concurrency")] = -(c[-1] - gl[-1])
    for key, val in bc.items():
        order = key[1] if isinstance(key[1], int) else (2 * k - 1 if key[1] == "balancing" else 0)
        raw = max(raw, float(np.linalg.norm(val)) / h**order)
    return blocks_pde, taus, bc, raw


def boundary_defect(M, state, params):
    """Largest unscaled residual among the boundary and junction conditions of the flow."""
    return _residuals(M, state, params)[3]


def _rhs(state, params, labels, blocks_pde, taus, bc, dt):
    N, k = state.N, params.k
    n_amb = state.ambient_dim
    npts = N + 1
    rhs = np.zeros((len(labels), n_amb))
    for l in range(state.q):
        rows = pde_rows(N, k)
        rhs[2 * l * npts + rows] = dt * blocks_pde[l][rows]
    for l in range(state.q - 1):
        base = (2 * l + 1) * npts
        rhs[base + 1:base + N] = dt * taus[l][1:-1]
    for i, lab in enumerate(labels):
        if lab.startswith("boundary:"):
            _, side, cond = lab.split(":")
            key = (side, "dirichlet") if cond == "dirichlet" else (side, int(cond[len("clamped["):-1]))
            rhs[i] = bc[key]
        elif lab.startswith("junction"):
            head, cond = lab.split(":")
            l = int(head[len("junction"):]) - 1
            if cond.startswith("regularity["):
                rhs[i] = bc[(l, int(cond[len("regularity["):-1]))]
            else:
                rhs[i] = bc[(l, cond)]
    return rhs


def assemble_step_system(M, state, params, dt=None):
    """Global sparse step system; returns a :class:`StepSystem`."""
    dt = params.initial_dt() if dt is None else dt
    matrix, labels = _assemble_matrix(state.q, state.N, params.k, params.lam, params.sigma, dt)
    blocks_pde, taus, bc, _ = _residuals(M, state, params)
    rhs = _rhs(state, params, labels, blocks_pde, taus, bc, dt)
    return StepSystem(matrix, rhs, labels, state.N + 1, 2 * state.q - 1)


def _factor(matrix):
    try:
        return spla.splu(matrix.tocsc())
    except RuntimeError as exc:
        try:
            cond = float(np.linalg.cond(matrix.toarray())) if matrix.shape[0] <= 4000 else None
        except np.linalg.LinAlgError:
            cond = float("inf")
        raise SingularSystem(f"step matrix is numerically singular: {exc}", cond) from exc


def _apply(M, state, delta, t_new):
    npts = state.N + 1
    blocks = []
    for b, arr in enumerate(state.blocks()):
        blocks.append(M.project(arr + delta[b * npts:(b + 1) * npts]))
    new = state.with_blocks(blocks, t=t_new)
    # tie shared nodes to one value so the junction invariants hold exactly
    new.gamma[0][0] = state.knots[0]
    new.gamma[-1][-1] = state.knots[-1]
    for l in range(state.q - 1):
        new.chi[l][0] = state.knots[l + 1]
        x = new.gamma[l][-1]
        new.gamma[l + 1][0] = x
        new.chi[l][-1] = x
    return new


class FlowTrace(list):
    """Energy reports of logged steps plus run statistics."""

    def __init__(self, *args):
        super().__init__(*args)
        self.steps = 0
        self.rejections = 0
        self.max_energy_increase = 0.0
        self.energy_slack_observed = 0.0
        self.final_dt = None
        self.converged = False
        self.unchecked_steps = 0


class FlowStepper:
    """Stateful integrator caching the factorization for the current step size."""

    def __init__(self, M, params, state=None):
        self.M = M
        self.params = params
        self.dt = params.initial_dt()
        self._lu = None
        self._lu_dt = None
        self._labels = None
        self._shape = None

    def _solver(self, state, dt):
        shape = (state.q, state.N)
        if self._lu is None or self._lu_dt != dt or self._shape != shape:
            matrix, labels = _assemble_matrix(state.q, state.N, self.params.k, self.params.lam, self.params.sigma, dt)
            self._lu = _factor(matrix)
            self._lu_dt = dt
            self._labels = labels
            self._shape = shape
        return self._lu, self._labels

    def propose(self, state, dt):
        """Solve one step of size ``dt``; returns ``(new_state, boundary_defect_before)``."""
        lu, labels = self._solver(state, dt)
        blocks_pde, taus, bc, defect = _residuals(self.M, state, self.params)
        rhs = _rhs(state, self.params, labels, blocks_pde, taus, bc, dt)
        delta = lu.solve(rhs)
        if not np.all(np.isfinite(delta)):
            raise SingularSystem("step solve produced non-finite values")
        return _apply(self.M, state, delta, state.t + dt), defect

    def step(self, state, report=None):
        """One accepted step; returns ``(new_state, new_report, dt_used, energy_change, checked)``.

        The energy comparison is only meaningful between states that satisfy
        the boundary conditions, so while the boundary defect of ``state``
        exceeds ``admissibility_tol`` the step is taken without it
        (``checked`` is False).
        """
        p = self.params
        if report is None:
            report = energy(self.M, state, p)
        dt = self.dt
        for _ in range(p.max_halvings + 1):
            new, defect = self.propose(state, dt)
            new_report = energy(self.M, new, p)
            change = new_report.total - report.total
            if defect > p.admissibility_tol:
                self.dt = dt
                return new, new_report, dt, change, False
            floor = 1e-12 * max(1.0, abs(report.total))
            if change <= p.energy_slack * dt**2 + floor:
                self.dt = dt
                return new, new_report, dt, change, True
            log.debug("step rejected at t=%g dt=%g: energy rose by %g", state.t, dt, change)
            dt *= 0.5
        raise StepRejected(f"energy increased after {p.max_halvings} step halvings at t={state.t:g}")

    def grow(self):
        p = self.params
        if p.dt_growth > 1.0:
            new = self.dt * p.dt_growth
            if p.dt_max is not None:
                new = min(new, p.dt_max)
            self.dt = new


def step(M, state, params, dt=None):
    """Advance the network by one accepted step (with energy-based step halving)."""
    stepper = FlowStepper(M, params)
    if dt is not None:
        stepper.dt = dt
    return stepper.step(state)[0]


def run_to_convergence(M, state, params, callback=None):
    """Integrate until ``Z1 <= z1_tol`` and the boundary defect is below ``resid_tol``.

    The second test matters for data such as a kinked geodesic polygon, whose
    interior velocity vanishes although the junction conditions fail.

    Returns ``(state, trace)``; raises :class:`NotConverged` carrying the last
    state and the trace when the budget runs out.
    """
    stepper = FlowStepper(M, params)
    trace = FlowTrace()
    report = energy(M, state, params)
    trace.append(report)
    if callback is not None:
        callback(state, report)
    steps = 0
    while report.Z1 > params.z1_tol or boundary_defect(M, state, params) > params.resid_tol:
        if steps >= params.max_steps:
            trace.steps = steps
            trace.final_dt = stepper.dt
            if trace[-1] is not report:
                trace.append(report)
            raise NotConverged(
                f"Z1={report.Z1:.3e} above tolerance after {steps} steps", state=state, trace=trace
            )
        dt_before = stepper.dt
        state, new_report, dt, increase, checked = stepper.step(state, report)
        if dt < dt_before:
            trace.rejections += 1
        if not checked:
            trace.unchecked_steps += 1
        elif increase > 0:
            trace.max_energy_increase = max(trace.max_energy_increase, increase)
            trace.energy_slack_observed = max(trace.energy_slack_observed, increase / dt**2)
        report = new_report
        steps += 1
        if steps % params.log_every == 0:
            trace.append(report)
            if callback is not None:
                callback(state, report)
        stepper.grow()
    if trace[-1] is not report:
        trace.append(report)
    trace.steps = steps
    trace.final_dt = stepper.dt
    trace.converged = True
    return state, trace
