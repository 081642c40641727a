from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fsairy import basis
from fsairy.airy import AI0, AIP0, AiryInterpolant, airy_zero, zeros_and_derivs
from fsairy.errors import DomainError, NearBoundaryError
from fsairy.kernels import kernel_stationary
from fsairy.quadrature import semiinfinite_rule


def _rule(n_per_panel=40):
    return semiinfinite_rule(0.0, n_per_panel=n_per_panel)


def test_phi_wall_value_and_domain():
    assert basis.phi(1, 0.0) == 0.0
    assert np.all(basis.phi_matrix(20, np.array([0.0])) == 0.0)
    with pytest.raises(DomainError):
        basis.phi(1, -1e-3)
    with pytest.raises(DomainError):
        basis.phi(0, 1.0)


def test_phi_definition():
    w, d = airy_zero(3)
    from scipy.special import airy

    assert basis.phi(3, 1.7) == pytest.approx(airy(1.7 - w)[0] / abs(d), rel=1e-14)
    assert basis.phi_prime(3, 1.7) == pytest.approx(airy(1.7 - w)[1] / abs(d), rel=1e-14)


@pytest.mark.parametrize("npp", [40, 80])
def test_normalization_and_orthogonality(npp):
    r = _rule(npp)
    p = basis.phi_matrix(2, r.nodes)
    assert abs(np.dot(r.weights, p[0] ** 2) - 1.0) < 1e-8
    assert abs(np.dot(r.weights, p[0] * p[1])) < 1e-8


def test_gram_matrix_k30():
    r = _rule(80)
    p = basis.phi_matrix(30, r.nodes)
    gram = (p * r.weights) @ p.T
    assert np.max(np.abs(gram - np.eye(30))) <= 1e-7


def test_eigenrelation():
    h = 1e-4
    x = np.linspace(0.1, 10, 100)
    omega = zeros_and_derivs(10)[0]
    for k in range(1, 11):
        f = lambda t: basis.phi(k, t)
        d2 = (f(x + h) - 2 * f(x) + f(x - h)) / h**2
        res = -0.5 * d2 + 0.5 * x * f(x) - 0.5 * omega[k - 1] * f(x)
        assert np.max(np.abs(res)) <= 1e-6, k


def test_drift_single():
    w1 = airy_zero(1)[0]
    assert basis.drift_single(w1) == pytest.approx(AIP0 / AI0, rel=1e-13)
    assert basis.drift_single(w1) == pytest.approx(-0.729011, abs=1e-6)
    assert basis.drift_single(0.01) > 50
    h = 1e-5
    fd = (math.log(basis.phi(1, 1 + h)) - math.log(basis.phi(1, 1 - h))) / (2 * h)
    assert abs(fd - basis.drift_single(1.0)) < 1e-8
    # a(x) ~ -sqrt(x - omega_1) for large x
    assert basis.drift_single(100.0) == pytest.approx(-math.sqrt(100 - w1), rel=1e-3)
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            basis.drift_single(bad)


def test_stationary_density():
    assert basis.stationary_density_single(0.0) == 0.0
    r = _rule()
    rho = basis.stationary_density_single(r.nodes)
    assert np.all(rho >= 0)
    assert abs(np.dot(r.weights, rho) - 1.0) < 1e-8
    assert np.allclose(rho, basis.phi_matrix(1, r.nodes)[0] ** 2, rtol=0, atol=0)


def test_ordered_configuration():
    cfg = basis.OrderedConfiguration([0.5, 1.0, 3.0])
    assert cfg.m_count == 3
    for bad in ([], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [1.0, math.nan]):
        with pytest.raises(DomainError):
            basis.OrderedConfiguration(bad)


def test_ground_state_small_cases():
    assert basis.ground_state_m([1.0]) == pytest.approx(basis.phi(1, 1.0), rel=1e-14)
    assert basis.ground_state_m([1.5, 1.5]) == 0.0
    assert basis.ground_state_m([0.0, 1.5]) == 0.0
    p = lambda k, x: basis.phi(k, x)
    explicit = p(1, 1) * p(2, 2) - p(1, 2) * p(2, 1)
    assert basis.ground_state_m(basis.OrderedConfiguration([1, 2])) == pytest.approx(explicit, rel=1e-13)
    with pytest.raises(DomainError):
        basis.ground_state_m([2.0, 1.0])


def test_ground_state_positive_in_chamber(rng):
    for m in range(1, 7):
        x = np.sort(rng.uniform(0.05, 12.0, size=m))
        assert basis.ground_state_m(x) > 0


def test_drift_dyson_reduces_to_single():
    assert basis.drift_dyson([1.3])[0] == pytest.approx(basis.drift_single(1.3), rel=1e-13)


def _fd_log_omega(x, h=1e-6):
    out = []
    for k in range(len(x)):
        e = np.zeros(len(x))
        e[k] = h
        out.append((basis.log_ground_state_m(x + e)[1] - basis.log_ground_state_m(x - e)[1]) / (2 * h))
    return np.array(out)


def test_drift_dyson_m2_example():
    d = basis.drift_dyson(basis.OrderedConfiguration([1.0, 2.0]))
    assert np.all(np.isfinite(d))
    assert np.allclose(d, _fd_log_omega(np.array([1.0, 2.0])), atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_drift_dyson_finite_differences(m, seed):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.uniform(0.3, 8.0, size=m))
    if m > 1 and np.min(np.diff(x)) < 0.2:
        x = 0.3 + 0.6 * np.arange(m) + rng.uniform(0, 0.1, size=m)
    assert np.allclose(basis.drift_dyson(x), _fd_log_omega(x), atol=1e-6)


def test_drift_dyson_near_boundary():
    with pytest.raises(NearBoundaryError):
        basis.drift_dyson([1.0, 1.0 + 1e-9], threshold=1e-3)
    with pytest.raises(DomainError):
        basis.drift_dyson([2.0, 1.0])


def test_drift_batch_matches_pointwise(rng):
    x = np.sort(rng.uniform(0.2, 9.0, size=(50, 4)), axis=1)
    d, logabs = basis.drift_dyson_batch(x)
    for row, dr, la in zip(x, d, logabs):
        assert np.allclose(dr, basis.drift_dyson(row), rtol=1e-10, atol=1e-10)
        assert la == pytest.approx(basis.log_ground_state_m(row)[1], rel=1e-12)
    di, _ = basis.drift_dyson_batch(x, AiryInterpolant(-zeros_and_derivs(4)[0][-1] - 1, 30))
    assert np.max(np.abs(di - d)) < 1e-7
    bad = np.array([[1.0, 0.5], [-1.0, 2.0], [1.0, 2.0]])
    db, lb = basis.drift_dyson_batch(bad)
    assert np.all(np.isnan(db[:2])) and np.all(np.isinf(lb[:2]))
    assert np.all(np.isfinite(db[2]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_andreief_projection_identity(m, seed):
    rng = np.random.default_rng(seed)
    # well-separated points: det(K) squares the conditioning of the Slater matrix
    x = 0.2 + np.cumsum(rng.uniform(0.5, 2.0, size=m))
    k = kernel_stationary(m, x[:, None], x[None, :])
    omega2 = basis.ground_state_m(x) ** 2
    assert np.linalg.det(k) == pytest.approx(omega2, rel=1e-8, abs=1e-300)
