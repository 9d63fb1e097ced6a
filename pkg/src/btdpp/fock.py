"""Truncated holomorphic (Fock-Bargmann) basis at bandwidth N.

phi_k(z) = z^k e^{-N|z|^2/2} sqrt(N^{k+1}/k!),  k = 0 .. K-1,

orthonormal in L^2(C, d^2z/pi).  All magnitude arithmetic is done in the log
domain; |phi_k| never exceeds sqrt(N), so exponentiation is always safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln

from . import potential as potential_mod


@dataclass(frozen=True)
class FockParams:
    N: float
    K: int

    def __post_init__(self):
        if self.N <= 0 or self.K < 1:
            raise ValueError("need N > 0 and K >= 1")

    @property
    def eps(self):
        """Microscopic length 1/sqrt(N)."""
        return 1.0 / np.sqrt(self.N)


def choose_truncation(V, mu, delta, N, c_trunc=2.0):
    """Basis size covering the droplet at level mu + delta with safety margin.

    K = max(ceil(c_trunc * N * I), N * I + 10 sqrt(N * I) + 20) where I is the
    action of the level mu + delta; the tail beyond K then carries relative
    spectral weight far below any tolerance used downstream.
    """
    I = potential_mod.action_of_level(V, mu + delta)
    nI = N * I
    K = int(np.ceil(max(c_trunc * nI, nI + 10.0 * np.sqrt(nI) + 20.0)))
    return FockParams(N=float(N), K=K)


def log_basis(p, k, z):
    """(log|phi_k(z)|, arg phi_k(z)) for index array k and complex array z.

    Broadcasts k against z; log|phi_0(0)| = log sqrt(N) and the z = 0 column
    for k >= 1 is -inf as it should be.
    """
    k = np.asarray(k)
    z = np.asarray(z, dtype=complex)
    az = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        logaz = np.where(az > 0, np.log(np.where(az > 0, az, 1.0)), -np.inf)
        logmag = (k * logaz - 0.5 * p.N * az**2
                  + 0.5 * ((k + 1) * np.log(p.N) - gammaln(k + 1.0)))
        logmag = np.where((az == 0) & (k == 0), 0.5 * np.log(p.N), logmag)
        logmag = np.where((az == 0) & (k > 0), -np.inf, logmag)
    phase = k * np.angle(z)
    return logmag, phase


def basis_matrix(p, z):
    """Phi[i, k] = phi_k(z_i), shape (len(z), K)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    k = np.arange(p.K)
    logmag, phase = log_basis(p, k[None, :], z[:, None])
    with np.errstate(under="ignore"):
        return np.exp(logmag + 1j * phase)


def bergman_kernel(p, z, x):
    """Reproducing kernel P_N(z, x) = N exp(N(z conj(x) - |z|^2/2 - |x|^2/2)).

    Full-space (untruncated) kernel; |P_N(z, x)| = N e^{-N|z-x|^2/2}.
    """
    z = np.asarray(z, dtype=complex)
    x = np.asarray(x, dtype=complex)
    expo = p.N * (z * np.conj(x) - 0.5 * np.abs(z) ** 2 - 0.5 * np.abs(x) ** 2)
    return p.N * np.exp(expo)


def truncation_tail(p, I):
    """Relative spectral weight of basis indices >= K on a droplet of
    gamma-measure I: the exact Poisson tail P[Poisson(N I) >= K].

    Monotone decreasing in K, zero at I = 0, O(1) at K = N I.
    """
    lam = p.N * I
    if lam < 0:
        raise ValueError("negative droplet measure")
    if lam == 0.0:
        return 0.0
    # P[Poisson(lam) >= K] = P[Gamma(K) <= lam]
    return float(gammainc(p.K, lam))


def magnetic_translate(p, coeffs, x, z):
    """Values at z of the magnetic translation by x of u = sum c_k phi_k:

        u_x(z) = u(z - x) exp(N (z conj(x) - conj(z) x) / 2).

    The exponent is purely imaginary, so |u_x(z)| = |u(z - x)| pointwise and
    the L^2(gamma) norm is preserved; the half-factor keeps u_x holomorphic
    times the Gaussian, i.e. inside the same space.
    """
    z = np.asarray(z, dtype=complex)
    u_shift = basis_matrix(p, (z - x).ravel()) @ np.asarray(coeffs)
    phase = 0.5 * p.N * (z.ravel() * np.conj(x) - np.conj(z.ravel()) * x)
    return (u_shift * np.exp(phase)).reshape(z.shape)
