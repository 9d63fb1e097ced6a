import numpy as np
import pytest

from btdpp import fock, quadrature
from btdpp.fock import FockParams


def test_ground_state_at_origin():
    p = FockParams(N=4.0, K=4)
    logm, phase = fock.log_basis(p, 0, np.array([0.0 + 0.0j]))
    assert abs(logm[0] - np.log(2.0)) <= 1e-14
    assert phase[0] == 0.0


def test_excited_states_vanish_at_origin():
    p = FockParams(N=7.0, K=8)
    logm, phase = fock.log_basis(p, 3, np.array([0.0 + 0.0j]))
    assert logm[0] == -np.inf
    assert phase[0] == 0.0


def test_first_state_direct_value():
    p = FockParams(N=1.0, K=4)
    logm, phase = fock.log_basis(p, 1, np.array([1.0 + 0.0j]))
    assert abs(np.exp(logm[0]) - np.exp(-0.5)) <= 1e-14
    assert abs(phase[0]) <= 1e-14


def test_kernel_on_diagonal():
    p = FockParams(N=37.0, K=10)
    z = np.array([0.3 + 0.4j])
    assert abs(fock.bergman_kernel(p, z, z)[0] - 37.0) <= 1e-10


def test_kernel_direct_value():
    p = FockParams(N=1.0, K=4)
    val = fock.bergman_kernel(p, np.array([0.0j]), np.array([1.0 + 0.0j]))
    assert abs(val[0] - np.exp(-0.5)) <= 1e-14


def test_kernel_magnitude_identity(rng):
    p = FockParams(N=25.0, K=10)
    z = rng.normal(size=6) + 1j * rng.normal(size=6)
    x = rng.normal(size=6) + 1j * rng.normal(size=6)
    mag = np.abs(fock.bergman_kernel(p, z, x))
    ref = p.N * np.exp(-p.N * np.abs(z - x) ** 2 / 2)
    assert np.max(np.abs(mag - ref) / ref) <= 1e-12


def test_truncation_tail_small_when_doubled():
    p = FockParams(N=50.0, K=100)
    assert fock.truncation_tail(p, 1.0) <= 1e-9


def test_truncation_tail_order_one_at_median():
    p = FockParams(N=50.0, K=50)
    assert fock.truncation_tail(p, 1.0) > 0.1


def test_truncation_tail_zero_action():
    p = FockParams(N=50.0, K=100)
    assert fock.truncation_tail(p, 0.0) == 0.0


def test_gram_orthonormality():
    K = 40
    quad = quadrature.plane_quadrature(16.0, K)
    G = quadrature.fock_matrix(quad, lambda z: np.ones_like(z, dtype=float))
    assert np.max(np.abs(G - np.eye(K))) <= 1e-10


def test_reproducing_property(rng):
    p = FockParams(N=16.0, K=80)
    z = 0.8 * (rng.random(5) + 1j * rng.random(5))
    x = 0.8 * (rng.random(5) + 1j * rng.random(5))
    B_z = fock.basis_matrix(p, z)
    B_x = fock.basis_matrix(p, x)
    lhs = B_z @ B_x.conj().T
    rhs = fock.bergman_kernel(p, z[:, None], x[None, :])
    tail = fock.truncation_tail(p, 1.0)
    assert np.max(np.abs(lhs - rhs)) <= max(tail * p.N, 1e-10)


def test_magnetic_translation_preserves_norm(rng):
    p = FockParams(N=9.0, K=60)
    coeffs = np.zeros(p.K, dtype=complex)
    coeffs[:12] = rng.normal(size=12) + 1j * rng.normal(size=12)
    norm2 = float(np.sum(np.abs(coeffs) ** 2))
    quad = quadrature.plane_quadrature(p.N, p.K)
    vals = fock.magnetic_translate(p, coeffs, 0.25 - 0.15j, quad.grid())
    moved = quad.plane_average(np.abs(vals) ** 2)
    assert abs(moved - norm2) <= 1e-10 * norm2


def test_params_validation():
    with pytest.raises(ValueError):
        FockParams(N=0.0, K=4)
    with pytest.raises(ValueError):
        FockParams(N=4.0, K=0)
