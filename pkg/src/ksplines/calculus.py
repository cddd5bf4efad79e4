"""Finite-difference calculus on sampled curves.

A sampled curve is an array of shape ``(N + 1, n)`` holding the nodes of one
segment on a uniform grid over a parameter interval of unit length, so the
spacing is ``h = 1/N``.  Every derivative stencil is second-order accurate:
centred where it fits, shifted one-sided windows of ``order + 2`` nodes near
the segment ends.

Covariant derivatives are built with the extrinsic recursion

    D^i gamma_x = d^(i+1) gamma + W_i,     W_0 = -(d gamma)^normal,
    W_i  = P(d^(i+1) gamma + d W_(i-1)) - d^(i+1) gamma,

where ``P`` is the tangent projection at each node.  On flat space every
``W_i`` vanishes identically, so the covariant chain and the Euler-Lagrange
operator coincide exactly with the plain stencil expressions.

The correction terms ``W_i`` are differentiated once per layer, and nested
one-sided differences amplify their discretization error near the segment
ends by one power of ``h`` per level.  They are therefore evaluated with
stencils of accuracy ``max_order + 1`` (rounded up to even), which keeps the
top layer second-order accurate up to the end nodes.  The leading terms use
the second-order stencils.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import StencilTooWide

__all__ = [
    "fd_weights",
    "fd_matrix",
    "fd_derivative",
    "fd_row",
    "covariant_chain",
    "euler_lagrange",
    "tension_field",
    "interior_rows",
]


def fd_weights(offsets, order):
    """Weights of the ``order``-th derivative at 0 on integer ``offsets`` (unit spacing).

    Fornberg's recursion; exact up to rounding for the small stencils used here.
    """
    z = np.asarray(offsets, dtype=float)
    npts = len(z)
    if order >= npts:
        raise StencilTooWide(f"{npts} points cannot resolve derivative order {order}")
    c = np.zeros((npts, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = z[0]
    for i in range(1, npts):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = z[i]
        for j in range(i):
            c3 = z[i] - z[j]
            c2 *= c3
            if j == i - 1:
                for m in range(mn, 0, -1):
                    c[i, m] = c1 * (m * c[i - 1, m - 1] - c5 * c[i - 1, m]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for m in range(mn, 0, -1):
                c[j, m] = (c4 * c[j, m] - m * c[j, m - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def _window(i, npts, order, accuracy=2):
    """First node and width of the stencil used at node ``i``."""
    half = (order + 1) // 2 + accuracy // 2 - 1
    if i - half >= 0 and i + half <= npts - 1:
        return i - half, 2 * half + 1
    width = order + accuracy
    start = min(max(i - width // 2, 0), npts - width)
    return start, width


@lru_cache(maxsize=None)
def _unit_matrix(npts, order, accuracy=2):
    if order == 0:
        return sp.identity(npts, format="csr")
    if npts < order + accuracy:
        raise StencilTooWide(
            f"derivative of order {order} needs at least {order + accuracy} nodes, got {npts}"
        )
    rows, cols, vals = [], [], []
    for i in range(npts):
        start, width = _window(i, npts, order, accuracy)
        w = fd_weights(np.arange(start, start + width) - i, order)
        rows.extend([i] * width)
        cols.extend(range(start, start + width))
        vals.extend(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(npts, npts))


def fd_matrix(npts, order, accuracy=2):
    """Sparse ``(npts, npts)`` matrix of the ``order``-th derivative with ``h = 1/(npts-1)``."""
    return _unit_matrix(npts, order, accuracy) * float(npts - 1) ** order


def fd_row(npts, order, node):
    """Stencil of the ``order``-th derivative at ``node`` as (columns, weights)."""
    row = fd_matrix(npts, order).getrow(node)
    return row.indices.copy(), row.data.copy()


def fd_derivative(nodes, order):
    """Discrete ``d^order`` of sampled values along the first axis (spacing ``1/N``)."""
    nodes = np.asarray(nodes, dtype=float)
    return fd_matrix(nodes.shape[0], order) @ nodes


def interior_rows(npts, order):
    """Node indices where the centred stencil of ``order`` fits entirely."""
    half = (order + 1) // 2
    return np.arange(half, npts - half)


def _correction_accuracy(npts, max_order):
    acc = max_order + 1 + (max_order + 1) % 2
    while acc > 2 and npts < max_order + 1 + acc:
        acc -= 2
    return max(acc, 2)


def covariant_chain(M, nodes, max_order):
    """List of layers ``[D^0 gamma_x, ..., D^max_order gamma_x]`` at every node."""
    nodes = np.asarray(nodes, dtype=float)
    npts = nodes.shape[0]
    fd_matrix(npts, max_order + 1)  # width check on the leading stencils
    acc = _correction_accuracy(npts, max_order)
    d1 = fd_matrix(npts, 1, acc)
    raw = d1 @ nodes
    w = M.tangent_project(nodes, raw) - raw
    layers = [M.tangent_project(nodes, fd_derivative(nodes, 1))]
    for i in range(1, max_order + 1):
        dw = d1 @ w
        layers.append(M.tangent_project(nodes, fd_derivative(nodes, i + 1) + dw))
        if i < max_order:
            raw = fd_matrix(npts, i + 1, acc) @ nodes
            w = M.tangent_project(nodes, raw + dw) - raw
    return layers


def euler_lagrange(M, nodes, k, lam, layers=None):
    """Nodewise Euler-Lagrange operator of the order-k energy with tension weight ``lam``.

    ``(-1)^(k+1) D^(2k-1) g_x + sum_{mu=2..k} (-1)^(mu+k+1) R(D^(2k-mu-1) g_x, D^(mu-2) g_x) g_x
    + lam D g_x``.  Pass a precomputed covariant chain (``max_order >= 2k-1``) via ``layers``.
    """
    if k < 2:
        raise ValueError("the spline order k must be at least 2")
    nodes = np.asarray(nodes, dtype=float)
    if layers is None:
        layers = covariant_chain(M, nodes, 2 * k - 1)
    out = (-1.0) ** (k + 1) * layers[2 * k - 1] + lam * layers[1]
    gx = layers[0]
    for mu in range(2, k + 1):
        sign = (-1.0) ** (mu + k + 1)
        out = out + sign * M.curvature(nodes, layers[2 * k - mu - 1], layers[mu - 2], gx)
    return out


def tension_field(M, nodes):
    """Tangential part of the discrete second derivative (harmonic-map tension)."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.shape[0] < 5:
        raise StencilTooWide("tension field needs at least 5 nodes")
    return M.tangent_project(nodes, fd_derivative(nodes, 2))
