import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksplines.complementary import (
    build_roots,
    complementary_sweep,
    det_E_and_H,
    k_factors,
    sample_p,
    sine_products,
    vandermonde_checks,
)
from ksplines.errors import FormulaMismatch, InvalidP

RNG = np.random.default_rng(11)


def random_p(n):
    r = np.exp(RNG.uniform(np.log(1e-3), np.log(1e3), n))
    a = RNG.uniform(-np.pi / 2, np.pi / 2, n)
    return r * np.exp(1j * a)


def test_roots_k2_p1():
    roots = build_roots(2, 1.0)
    assert np.isclose(roots.d_p, np.exp(-1j * np.pi / 4))
    expected = np.exp(-1j * np.pi / 4) * np.exp(1j * np.arange(1, 5) * np.pi / 2)
    assert np.allclose(roots.xi, expected)
    right = np.flatnonzero(roots.xi.real > 1e-12) + 1
    assert list(right) == [1, 4]
    assert roots.count_upper() == 2


def test_theta_on_imaginary_axis():
    assert build_roots(3, 2j).theta == np.pi / 2


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_root_product(k):
    for p in random_p(5):
        roots = build_roots(k, p)
        assert np.isclose(np.prod(roots.xi), roots.d_p ** (2 * k) * np.exp(1j * np.pi * (2 * k + 1)), rtol=1e-12)
        assert np.isclose(np.prod(roots.xi), p, rtol=1e-12)
        # roots solve xi^(2k) = -p, and the first k lie in the closed upper half plane
        assert np.allclose(roots.xi ** (2 * k), -p, rtol=1e-10)
        assert np.all(roots.upper.imag >= -1e-14)


@pytest.mark.parametrize("p", [0, -1.0, -0.5 + 2j, np.inf])
def test_invalid_p(p):
    with pytest.raises(InvalidP):
        build_roots(2, p)


def test_invalid_k():
    with pytest.raises(ValueError):
        build_roots(1, 1.0)


def test_det_c_k2_p1():
    roots = build_roots(2, 1.0)
    rep = vandermonde_checks(roots)
    xi = roots.xi
    assert np.isclose(rep["detC"], 1j * (xi[1] - xi[0]), rtol=1e-12)
    assert rep["rel_err_C"] <= 1e-12


@pytest.mark.parametrize("p", random_p(5))
def test_det_d_k3(p):
    assert vandermonde_checks(build_roots(3, p))["rel_err_D"] <= 1e-10


@pytest.mark.parametrize("k", [2, 3, 4])
def test_det_c_d_nonzero_on_random_sweep(k):
    for p in random_p(100):
        rep = vandermonde_checks(build_roots(k, p))
        assert rep["nonvanishing_C"] and rep["nonvanishing_D"]
        assert abs(rep["detC"]) > 0 and abs(rep["detD"]) > 0


def test_det_e_k2_sigma1_p1():
    rep = det_E_and_H(build_roots(2, 1.0), 1.0)
    assert rep.rel_err_E <= 1e-10
    assert rep.nonvanishing_E


@pytest.mark.parametrize("k", range(2, 7))
def test_sine_products_positive(k):
    assert np.all(sine_products(k) > 0)


@pytest.mark.parametrize("k", range(2, 7))
def test_k_factor_identity(k):
    direct, closed = k_factors(k)
    assert np.allclose(direct, closed, rtol=1e-12, atol=1e-14)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 5), st.floats(-3, 3), st.floats(-np.pi / 2, np.pi / 2), st.sampled_from([0.1, 1.0, 10.0]))
def test_h_expressions_agree(k, logr, angle, sigma):
    p = 10.0**logr * np.exp(1j * angle)
    rep = det_E_and_H(build_roots(k, p), sigma)
    assert rep.rel_err_H <= 1e-8
    assert rep.phase_identity_err <= 1e-10
    assert rep.rel_err <= 1e-8


def test_mismatch_surfaces(monkeypatch):
    from ksplines import complementary as cm

    monkeypatch.setattr(cm, "sine_products", lambda k: 2 * np.ones(k))
    with pytest.raises(FormulaMismatch):
        cm.det_E_and_H(build_roots(3, 1.0 + 1j), 1.0)
    rep = cm.det_E_and_H(build_roots(3, 1.0 + 1j), 1.0, raise_on_mismatch=False)
    assert rep.rel_err_E > 1e-8


def test_sample_grid():
    p = sample_p(50)
    assert len(p) == 50 and len(set(p)) == 50
    assert np.all(p.real >= -1e-12)
    assert np.isclose(np.abs(p).min(), 1e-3) and np.isclose(np.abs(p).max(), 1e3)


def test_sweep_report_fields_and_runtime():
    t0 = time.perf_counter()
    reports = complementary_sweep((2, 3, 4), (0.1, 1.0, 10.0), 50)
    assert time.perf_counter() - t0 <= 5.0
    assert len(reports) == 450
    assert all(r.nonvanishing and not r.small_H for r in reports)
    d = reports[0].as_dict()
    assert {"detC", "detD", "detE", "H", "rel_err_E", "nonvanishing_E"} <= set(d)
