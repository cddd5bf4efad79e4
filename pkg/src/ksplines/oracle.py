"""Reference stationary solver for networks in flat space.

In R^n the connectors of a stationary network are straight segments, so
``chi_x(x_l) = gamma(x_l) - p_l`` and the problem reduces to the linear
boundary value problem

    (-1)^(k+1) gamma^(2k) + lam gamma'' = 0        on every segment,

with Dirichlet and clamped data at the outer ends, continuity of
``gamma, gamma', ..., gamma^(2k-2)`` at the interior knots and the jump
condition ``Delta gamma^(2k-1) + (-1)^k sigma^-2 (gamma(x_l) - p_l) = 0``.

The discretization is deliberately different from the flow solver: every
segment carries ``k`` ghost nodes beyond each end, the equation is imposed
at all grid nodes including the ends, and every derivative (also in the
boundary rows) uses a centred second-order stencil.  The result is
optionally Richardson-extrapolated from grids ``N`` and ``2N``.  Rounding
in the ``2k``-th difference grows like ``eps * N**(2k)``, so for ``k >= 3``
grids beyond a few dozen nodes per segment lose accuracy.

``method="basis"`` instead expands each segment in the kernel of the
operator (``1``, ``x`` and the exponentials ``exp(r x)`` with
``(-1)^(k+1) r^(2k-2) + lam = 0``) and solves the small dense system of
boundary and junction conditions exactly; it is accurate to rounding for any
``k`` and serves as a cross-check of the difference scheme.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .calculus import fd_weights
from .errors import ManifoldError, SingularSystem
from .manifold import Euclidean
from .network import NetworkState

__all__ = ["euclidean_stationary_solve", "default_boundary_data", "oracle_vs_flow", "OracleSolution"]


def _central(order):
    half = (order + 1) // 2
    offsets = np.arange(-half, half + 1)
    return offsets, fd_weights(offsets, order)


def default_boundary_data(points, k):
    """Derivatives of the straight first and last chords: velocity, then zeros."""
    pts = np.asarray(points, dtype=float)
    n = pts.shape[1]
    start = np.zeros((k - 1, n))
    end = np.zeros((k - 1, n))
    start[0] = pts[1] - pts[0]
    end[0] = pts[-1] - pts[-2]
    return {"start": start, "end": end}


class OracleSolution:
    """Nodes of the reference solution plus the linear-system residual."""

    def __init__(self, state, residual, scale):
        self.state = state
        self.residual = residual
        self.scale = scale


def _solve_grid(pts, k, lam, sigma, N, bd):
    q = pts.shape[0] - 1
    n = pts.shape[1]
    npts = N + 1 + 2 * k  # k ghosts per end
    nu = q * npts
    h = 1.0 / N
    rows, cols, vals = [], [], []
    rhs = np.zeros((nu, n))
    row = 0

    def col(l, j):
        # grid node j of segment l, ghosts at j < 0 and j > N
        return l * npts + j + k

    def add(r, l, j, order, scale):
        offs, w = _central(order)
        for o, c in zip(offs, w):
            rows.append(r)
            cols.append(col(l, j + o))
            vals.append(scale * c)

    for l in range(q):
        for j in range(N + 1):
            # h^(2k) [(-1)^(k+1) d^(2k) + lam d^2]
            add(row, l, j, 2 * k, (-1.0) ** (k + 1))
            add(row, l, j, 2, lam * h ** (2 * k - 2))
            row += 1

    def dirichlet(l, j, value):
        nonlocal row
        rows.append(row)
        cols.append(col(l, j))
        vals.append(1.0)
        rhs[row] = value
        row += 1

    dirichlet(0, 0, pts[0])
    dirichlet(q - 1, N, pts[-1])
    for mu in range(1, k):
        add(row, 0, 0, mu, 1.0)
        rhs[row] = h**mu * bd["start"][mu - 1]
        row += 1
        add(row, q - 1, N, mu, 1.0)
        rhs[row] = h**mu * bd["end"][mu - 1]
        row += 1
    for l in range(q - 1):
        # continuity of the value
        rows.extend([row, row])
        cols.extend([col(l, N), col(l + 1, 0)])
        vals.extend([1.0, -1.0])
        row += 1
        for mu in range(1, 2 * k - 1):
            add(row, l + 1, 0, mu, 1.0)
            add(row, l, N, mu, -1.0)
            row += 1
        order = 2 * k - 1
        add(row, l + 1, 0, order, 1.0)
        add(row, l, N, order, -1.0)
        coef = (-1.0) ** k / sigma**2 * h**order
        rows.append(row)
        cols.append(col(l, N))
        vals.append(coef)
        rhs[row] = coef * pts[l + 1]
        row += 1
    if row != nu:
        raise AssertionError(f"oracle assembled {row} rows for {nu} unknowns")
    A = sp.csc_matrix((vals, (rows, cols)), shape=(nu, nu))
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularSystem(f"reference system is singular: {exc}") from exc
    sol = lu.solve(rhs)
    resid = float(np.max(np.abs(A @ sol - rhs)))
    scale = float(max(np.max(abs(A).sum(axis=1)) * np.max(np.abs(sol)), np.max(np.abs(rhs)), 1e-300))
    segs = [sol[l * npts + k:l * npts + k + N + 1] for l in range(q)]
    return segs, resid, scale


def _kernel_roots(k, lam):
    roots = np.roots([(-1.0) ** (k + 1)] + [0.0] * (2 * k - 3) + [lam])
    return roots


def _basis_values(roots, s, order):
    """Rows ``d^order`` of the kernel basis at local coordinates ``s`` in [0, 1]."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    cols = []
    cols.append(np.full(s.shape, 1.0 if order == 0 else 0.0, dtype=complex))
    cols.append(s.astype(complex) if order == 0 else np.full(s.shape, 1.0 if order == 1 else 0.0, dtype=complex))
    for r in roots:
        # anchor growing modes at the right end so every entry stays bounded
        anchor = 1.0 if r.real > 0 else 0.0
        cols.append(r**order * np.exp(r * (s - anchor)))
    return np.stack(cols, axis=-1)


def _solve_basis(pts, k, lam, sigma, N, bd):
    q = pts.shape[0] - 1
    n = pts.shape[1]
    roots = _kernel_roots(k, lam)
    m = 2 * k
    A = np.zeros((m * q, m * q), dtype=complex)
    b = np.zeros((m * q, n), dtype=complex)
    row = 0

    def put(l, s, order, scale=1.0):
        A[row, l * m:(l + 1) * m] += scale * _basis_values(roots, s, order)[0]

    put(0, 0.0, 0)
    b[row] = pts[0]
    row += 1
    put(q - 1, 1.0, 0)
    b[row] = pts[-1]
    row += 1
    for mu in range(1, k):
        put(0, 0.0, mu)
        b[row] = bd["start"][mu - 1]
        row += 1
        put(q - 1, 1.0, mu)
        b[row] = bd["end"][mu - 1]
        row += 1
    for l in range(q - 1):
        for mu in range(0, 2 * k - 1):
            put(l + 1, 0.0, mu)
            put(l, 1.0, mu, -1.0)
            row += 1
        put(l + 1, 0.0, 2 * k - 1)
        put(l, 1.0, 2 * k - 1, -1.0)
        coef = (-1.0) ** k / sigma**2
        put(l, 1.0, 0, coef)
        b[row] = coef * pts[l + 1]
        row += 1
    try:
        coeffs = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"reference system is singular: {exc}", float(np.linalg.cond(A))) from exc
    resid = float(np.max(np.abs(A @ coeffs - b)))
    scale = float(max(np.max(np.abs(A)) * np.max(np.abs(coeffs)), np.max(np.abs(b)), 1e-300))
    s = np.linspace(0.0, 1.0, N + 1)
    vals = _basis_values(roots, s, 0)
    segs = [np.real(vals @ coeffs[l * m:(l + 1) * m]) for l in range(q)]
    return segs, resid, scale


def euclidean_stationary_solve(points, k, lam, sigma, N_dense=256, boundary_data=None,
                               richardson=True, return_residual=False, method="fd"):
    """Stationary network in flat space by one direct solve.

    ``boundary_data`` defaults to :func:`default_boundary_data`.  ``method`` is
    ``"fd"`` (ghost-node finite differences) or ``"basis"`` (exact kernel
    expansion sampled on the ``N_dense`` grid).  Raises
    :class:`~ksplines.errors.SingularSystem` if the system cannot be factored.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ManifoldError("need data points of shape (q+1, n) with q >= 2")
    if not (lam > 0 and sigma > 0):
        raise ValueError("lam and sigma must be positive")
    if N_dense < 8:
        raise ValueError("N_dense too small")
    bd = default_boundary_data(pts, k) if boundary_data is None else {
        key: np.asarray(boundary_data[key], dtype=float) for key in ("start", "end")
    }
    if method not in ("fd", "basis"):
        raise ValueError(f"unknown method {method!r}")
    if method == "basis":
        segs, resid, scale = _solve_basis(pts, k, lam, sigma, N_dense, bd)
    else:
        segs, resid, scale = _solve_grid(pts, k, lam, sigma, N_dense, bd)
    if richardson and method == "fd":
        fine, r2, s2 = _solve_grid(pts, k, lam, sigma, 2 * N_dense, bd)
        segs = [(4.0 * f[::2] - c) / 3.0 for f, c in zip(fine, segs)]
        resid = max(resid / scale, r2 / s2)
        scale = 1.0
    q = pts.shape[0] - 1
    s = np.linspace(0.0, 1.0, N_dense + 1)[:, None]
    chi = [pts[l + 1] + s * (segs[l][-1] - pts[l + 1]) for l in range(q - 1)]
    state = NetworkState(segs, chi, pts, 0.0, k, bd)
    if return_residual:
        return OracleSolution(state, resid, scale)
    return state


def oracle_vs_flow(points, k, lam, sigma, flow_params, N_dense=None, richardson=True, method="fd"):
    """Run the flow to convergence and measure its distance to the reference solution.

    The reference uses the flow's own clamped boundary data.  The gap is the
    maximum nodal distance over all spline nodes, relative to the diameter of
    the data set.
    """
    from .flow import initialize_network, run_to_convergence

    params = flow_params.replace(k=k, lam=lam, sigma=sigma)
    M = Euclidean(np.asarray(points).shape[1])
    init = initialize_network(M, points, params)
    final, trace = run_to_convergence(M, init, params)
    N = params.N
    if N_dense is None:
        N_dense = N * max(1, int(np.ceil(256 / N)))
    if N_dense % N:
        raise ValueError("N_dense must be a multiple of the flow grid size")
    ref = euclidean_stationary_solve(points, k, lam, sigma, N_dense, init.boundary_data, richardson,
                                     method=method)
    stride = N_dense // N
    gap = max(float(np.max(np.linalg.norm(g - r[::stride], axis=1))) for g, r in zip(final.gamma, ref.gamma))
    pts = np.asarray(points, dtype=float)
    diam = float(np.max(np.linalg.norm(pts[:, None] - pts[None], axis=-1)))
    return {
        "linf_abs": gap,
        "linf_rel": gap / diam,
        "scale": diam,
        "N": N,
        "N_dense": N_dense,
        "flow_steps": trace.steps,
        "flow_time": trace[-1].t,
        "Z1": trace[-1].Z1,
        "flow_state": final,
        "oracle_state": ref,
    }

