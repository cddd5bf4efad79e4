"""Numerical certificate for the boundary complementing conditions.

For a spectral parameter ``p`` with ``Re p >= 0`` the leading symbol of the
order-2k equation has the 2k roots ``xi_mu = d_p exp(i mu pi / k)`` with
``d_p = |p|^(1/2k) exp(i (theta_p - pi) / 2k)``; the first k of them lie in
the upper half plane.  Nontriviality of the boundary symbols reduces to the
nonvanishing of three determinants built from these roots:

* ``C``: Vandermonde matrix in ``i xi_r`` (rows r = 1..k, powers 0..k-1);
* ``D``: Vandermonde matrix in ``xi_r**2``;
* ``E``: rows ``(1, xi_r, xi_r**3, ..., xi_r**(2k-1))`` closed by
  ``(-1, 0, ..., 0, zeta_1 / sigma**2)``.

Each determinant is computed directly (LU with partial pivoting) and from
its closed form, and the two are compared.  ``det E`` factors as
``prod(xi) * det D * H`` where ``H`` has three equivalent expressions, all
of which are evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import ceil, sqrt

import numpy as np

from .errors import FormulaMismatch, InvalidP

__all__ = [
    "RootSet",
    "ComplementaryReport",
    "build_roots",
    "sine_products",
    "k_factors",
    "vandermonde_checks",
    "det_E_and_H",
    "sample_p",
    "complementary_sweep",
]

MISMATCH_TOL = 1e-8
SMALL_H = 1e-12


@dataclass
class RootSet:
    k: int
    p: complex
    theta: float
    d_p: complex
    xi: np.ndarray
    zeta: np.ndarray

    @property
    def upper(self):
        """Roots ``xi_1..xi_k`` used in the boundary matrices."""
        return self.xi[: self.k]

    def count_upper(self):
        return int(np.sum(self.xi.imag > 0))

    def count_right(self):
        return int(np.sum(self.xi.real > 0))


@dataclass
class ComplementaryReport:
    k: int
    p: complex
    sigma: float
    detC: complex
    detD: complex
    detE: complex
    H: complex
    formula_detC: complex
    formula_detD: complex
    formula_detE: complex
    rel_err_C: float
    rel_err_D: float
    rel_err_E: float
    H_direct: complex = 0j
    H_sum: complex = 0j
    H_factored: complex = 0j
    rel_err_H: float = 0.0
    phase_identity_err: float = 0.0
    nonvanishing_C: bool = True
    nonvanishing_D: bool = True
    nonvanishing_E: bool = True
    small_H: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def rel_err(self):
        return max(self.rel_err_C, self.rel_err_D, self.rel_err_E, self.rel_err_H)

    @property
    def nonvanishing(self):
        return self.nonvanishing_C and self.nonvanishing_D and self.nonvanishing_E

    def as_dict(self):
        def c(z):
            return [float(np.real(z)), float(np.imag(z))]

        return {
            "k": self.k, "p": c(self.p), "sigma": self.sigma,
            "detC": c(self.detC), "detD": c(self.detD), "detE": c(self.detE), "H": c(self.H),
            "rel_err_C": self.rel_err_C, "rel_err_D": self.rel_err_D,
            "rel_err_E": self.rel_err_E, "rel_err_H": self.rel_err_H,
            "phase_identity_err": self.phase_identity_err,
            "nonvanishing_C": self.nonvanishing_C, "nonvanishing_D": self.nonvanishing_D,
            "nonvanishing_E": self.nonvanishing_E, "small_H": self.small_H,
        }


def _rel(a, b):
    return float(abs(a - b) / max(abs(a), abs(b), 1e-300))


def build_roots(k, p):
    """Symbol roots for order ``k`` (>= 2) and spectral parameter ``p``."""
    if int(k) != k or k < 2:
        raise ValueError("k must be an integer >= 2")
    k = int(k)
    p = complex(p)
    if p == 0 or not np.isfinite(p):
        raise InvalidP("p must be finite and nonzero")
    if p.real < 0:
        raise InvalidP(f"p must satisfy Re p >= 0, got {p}")
    theta = float(np.angle(p))
    d_p = abs(p) ** (1.0 / (2 * k)) * np.exp(1j * (theta - np.pi) / (2 * k))
    mu = np.arange(1, 2 * k + 1)
    xi = d_p * np.exp(1j * mu * np.pi / k)
    zeta = (d_p * np.exp(1j * np.arange(1, 3) * np.pi / k)) ** k
    return RootSet(k, p, theta, complex(d_p), xi, zeta)


def sine_products(k):
    """Positive constants ``1 / prod_{nu != mu} sin(|mu - nu| pi / k)``, mu = 1..k."""
    out = np.empty(k)
    for mu in range(1, k + 1):
        prod = 1.0
        for nu in range(1, k + 1):
            if nu != mu:
                prod *= np.sin(abs(mu - nu) * np.pi / k)
        out[mu - 1] = 1.0 / prod
    return out


def k_factors(k):
    """Phase factors ``K_mu`` by their defining product and by the closed form."""
    mu = np.arange(1, k + 1)
    direct = np.empty(k, dtype=complex)
    for m in mu:
        others = [nu for nu in mu if nu != m]
        direct[m - 1] = np.exp(-1j * m * np.pi / k) * np.prod(np.exp(-1j * (np.array(others) + m) * np.pi / k))
    closed = (-1j) ** (k + 1) * (-1.0) ** mu * np.exp(1j * mu * np.pi / k)
    return direct, closed


def _vandermonde_product(nodes):
    out = 1.0 + 0j
    for a, b in combinations(range(len(nodes)), 2):
        out *= nodes[b] - nodes[a]
    return out


def vandermonde_checks(roots):
    """Direct and product-formula determinants of C and D."""
    k = roots.k
    xs = roots.upper
    C = np.vander(1j * xs, k, increasing=True)
    D = np.vander(xs**2, k, increasing=True)
    detC = complex(np.linalg.det(C))
    detD = complex(np.linalg.det(D))
    fC = complex(_vandermonde_product(1j * xs))
    fD = complex(_vandermonde_product(xs**2))
    scale_c = np.prod(np.max(np.abs(C), axis=1))
    scale_d = np.prod(np.max(np.abs(D), axis=1))
    return {
        "detC": detC, "detD": detD, "formula_detC": fC, "formula_detD": fD,
        "rel_err_C": _rel(detC, fC), "rel_err_D": _rel(detD, fD),
        "nonvanishing_C": bool(abs(detC) > 1e-13 * scale_c),
        "nonvanishing_D": bool(abs(detD) > 1e-13 * scale_d),
    }


def _e_matrix(roots, sigma):
    k = roots.k
    xs = roots.upper
    E = np.zeros((k + 1, k + 1), dtype=complex)
    E[:k, 0] = 1.0
    for j in range(1, k + 1):
        E[:k, j] = xs ** (2 * j - 1)
    E[k, 0] = -1.0
    E[k, k] = roots.zeta[0] / sigma**2
    return E


def det_E_and_H(roots, sigma, raise_on_mismatch=True):
    """Full report for one ``(k, p, sigma)``; raises :class:`FormulaMismatch` on disagreement."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    k = roots.k
    xs = roots.upper
    d_p = roots.d_p
    z1 = roots.zeta[0]
    rep = vandermonde_checks(roots)
    E = _e_matrix(roots, sigma)
    detE = complex(np.linalg.det(E))
    prod_xi = complex(np.prod(xs))

    cm = sine_products(k)
    mu = np.arange(1, k + 1)
    factor = z1 / (2 ** (k - 1) * sigma**2 * d_p ** (2 * k - 1))
    H = complex((-1.0) ** (k + 1) * (factor * np.sum(cm * np.exp(1j * mu * np.pi / k)) + 1.0))
    formula_detE = prod_xi * rep["formula_detD"] * H

    # the sum before the sine-product simplification
    terms = []
    for m in range(k):
        left = np.prod([xs[m] ** 2 - xs[v] ** 2 for v in range(m)]) if m else 1.0
        right = np.prod([xs[v] ** 2 - xs[m] ** 2 for v in range(m + 1, k)]) if m < k - 1 else 1.0
        terms.append((-1.0) ** m / xs[m] / (left * right))
    H_sum = complex((-1.0) ** (k + 3) + z1 / sigma**2 * np.sum(terms))

    a_mu = (-1.0) ** (mu - 1) / (d_p * (2j * d_p**2) ** (k - 1))
    _, k_closed = k_factors(k)
    H_factored = complex((-1.0) ** (k + 3) + z1 / sigma**2 * np.sum(a_mu * cm * k_closed))

    H_direct = detE / (prod_xi * rep["detD"]) if abs(prod_xi * rep["detD"]) > 0 else complex("nan")
    rel_h = max(_rel(H, H_sum), _rel(H, H_factored), _rel(H, H_direct))

    absp = abs(roots.p)
    theta = roots.theta
    phase = 1j * absp ** (1.0 / (2 * k) - 0.5) / (2 ** (k - 1) * sigma**2) * np.exp(
        1j * (theta / 2 - (2 * k - 1) * (theta - np.pi) / (2 * k))
    )
    phase_err = _rel(factor, phase)

    scale_e = np.prod(np.max(np.abs(E), axis=1))
    report = ComplementaryReport(
        k=k, p=roots.p, sigma=float(sigma),
        detC=rep["detC"], detD=rep["detD"], detE=detE, H=H,
        formula_detC=rep["formula_detC"], formula_detD=rep["formula_detD"], formula_detE=formula_detE,
        rel_err_C=rep["rel_err_C"], rel_err_D=rep["rel_err_D"], rel_err_E=_rel(detE, formula_detE),
        H_direct=H_direct, H_sum=H_sum, H_factored=H_factored, rel_err_H=rel_h,
        phase_identity_err=phase_err,
        nonvanishing_C=rep["nonvanishing_C"], nonvanishing_D=rep["nonvanishing_D"],
        nonvanishing_E=bool(abs(detE) > 1e-13 * scale_e),
        small_H=bool(abs(H) < SMALL_H),
    )
    if raise_on_mismatch and max(report.rel_err_E, report.rel_err_H) > MISMATCH_TOL:
        raise FormulaMismatch(
            f"closed form disagrees with direct determinant for k={k}, p={roots.p}, sigma={sigma}: "
            f"rel_err_E={report.rel_err_E:.3e}, rel_err_H={report.rel_err_H:.3e}"
        )
    return report


def sample_p(n, rmin=1e-3, rmax=1e3):
    """Deterministic log-radial grid of ``n`` admissible spectral parameters."""
    n_theta = max(1, int(round(sqrt(n / 2))))
    n_r = int(ceil(n / n_theta))
    radii = np.geomspace(rmin, rmax, n_r)
    angles = np.linspace(-np.pi / 2, np.pi / 2, n_theta)
    pts = [r * np.exp(1j * a) for r in radii for a in angles]
    return np.array(pts[:n])


def complementary_sweep(ks=(2, 3, 4), sigmas=(0.1, 1.0, 10.0), n_samples=50, raise_on_mismatch=False):
    """Reports over the product of orders, weights and sampled parameters."""
    out = []
    for k in ks:
        for sigma in sigmas:
            for p in sample_p(n_samples):
                out.append(det_E_and_H(build_roots(k, p), sigma, raise_on_mismatch))
    return out
