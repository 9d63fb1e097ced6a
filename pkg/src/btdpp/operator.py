"""Assembly and diagonalization of the compressed multiplication operator.

H = (projection onto the truncated holomorphic basis) V (projection), built
entrywise by the polar product rule, then diagonalized to produce the spectral
projector at Fermi level mu and its integral kernel.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import fock, quadrature

_MAGIC = b"BTDPP-SPECTRAL-1\n"


@dataclass
class OperatorMatrix:
    params: fock.FockParams
    matrix: np.ndarray
    potential_spec: dict
    n_r: int
    n_theta: int

    @property
    def norm(self):
        return float(np.linalg.norm(self.matrix, 2))


def assemble_hamiltonian(p, V, quad=None):
    """Matrix <phi_j | V phi_k>, j, k < K.

    Exact to rounding when V is a polynomial whose angular degree stays below
    n_theta - K and whose radial degree is within the Gauss rule; for smooth
    non-polynomial V the error is spectrally small.
    """
    if quad is None:
        quad = quadrature.plane_quadrature(p.N, p.K)
    if quad.K != p.K or quad.N != p.N:
        raise ValueError("quadrature was built for different (N, K)")
    H = quadrature.fock_matrix(quad, V.eval)
    return OperatorMatrix(params=p, matrix=H, potential_spec=V.to_spec(),
                          n_r=quad.n_r, n_theta=quad.n_theta)


def radial_eigenvalues(p, V, n_max):
    """Exact spectrum for a radial potential: the operator is diagonal with

        lambda_n = (1/n!) int_0^inf t^n e^{-t} v(t/N) dt,  v the profile.

    Evaluated per n by the stable shifted Gauss window of
    ``quadrature.gamma_average``.
    """
    v = V.profile
    N = p.N
    return np.array([quadrature.gamma_average(n, lambda t: v(t / N))
                     for n in range(n_max + 1)])


@dataclass
class SpectralData:
    """Eigendecomposition of the compressed operator plus Fermi bookkeeping."""

    params: fock.FockParams
    mu: float
    delta: float
    eigenvalues: np.ndarray
    vectors: np.ndarray  # columns are eigenvectors in the phi basis
    potential_spec: dict
    n_r: int
    n_theta: int
    n_mu: int = field(init=False)
    near_degenerate: np.ndarray = field(init=False)

    def __post_init__(self):
        tie = 1e-12 * (1.0 + abs(self.mu))
        self.n_mu = int(np.sum(self.eigenvalues <= self.mu + tie))
        lam = self.eigenvalues
        win = np.nonzero((lam > self.mu - self.delta)
                         & (lam <= self.mu + self.delta))[0]
        flags = []
        if win.size > 1:
            gaps = np.diff(lam[win])
            floor = 1e-3 / self.params.N
            flags = list(win[:-1][gaps < floor])
        self.near_degenerate = np.asarray(flags, dtype=int)

    @property
    def occupied(self):
        return self.vectors[:, : self.n_mu]

    def window_indices(self):
        lam = self.eigenvalues
        return np.nonzero((lam > self.mu - self.delta)
                          & (lam <= self.mu + self.delta))[0]


def diagonalize(op, mu, delta):
    """Full Hermitian eigendecomposition of an assembled operator."""
    lam, U = scipy.linalg.eigh(op.matrix)
    return SpectralData(params=op.params, mu=float(mu), delta=float(delta),
                        eigenvalues=lam, vectors=U,
                        potential_spec=op.potential_spec,
                        n_r=op.n_r, n_theta=op.n_theta)


def spectral_projector(V, mu, delta, N, c_trunc=2.0, quad=None):
    """Convenience pipeline: truncation choice, assembly, diagonalization."""
    p = fock.choose_truncation(V, mu, delta, N, c_trunc=c_trunc)
    op = assemble_hamiltonian(p, V, quad=quad)
    return diagonalize(op, mu, delta)


class KernelField:
    """Integral kernel Pi(x, z) = sum_{occupied} u_k(x) conj(u_k(z))."""

    def __init__(self, sd):
        self.sd = sd

    def amplitudes(self, z):
        """(len(z), n_mu) matrix of occupied eigenfunction values."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        Phi = fock.basis_matrix(self.sd.params, z)
        return Phi @ self.sd.occupied

    def kernel(self, x, z):
        """Pi(x_i, z_j) as a (len(x), len(z)) matrix."""
        return self.amplitudes(x) @ self.amplitudes(z).conj().T

    def density(self, z):
        """Pi(z, z) >= 0 (one-point intensity against d(gamma))."""
        A = self.amplitudes(z)
        return np.einsum("ik,ik->i", A, A.conj()).real


def decay_diagnostics(kf, bulk_points, forbidden_points):
    """Normalized density extremes: sup Pi/N outside, sup (1 - Pi/N) inside."""
    N = kf.sd.params.N
    out = {}
    fp = np.atleast_1d(np.asarray(forbidden_points, dtype=complex))
    bp = np.atleast_1d(np.asarray(bulk_points, dtype=complex))
    out["sup_forbidden"] = float(np.max(kf.density(fp))) / N
    out["sup_bulk_gap"] = float(np.max(1.0 - kf.density(bp) / N))
    return out


def probe_rings(V, mu, delta, n_angles=16):
    """(bulk, forbidden) probe sets on level curves V = mu -+ delta."""
    from . import potential as pot

    th = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
    bulk, forb = [], []
    for lam, acc in ((mu - delta, bulk), (mu + delta, forb)):
        for e in th:
            rot = _RotatedPotential(V, e)
            acc.append(e * pot.level_seed(rot, lam))
    return np.array(bulk), np.array(forb)


class _RotatedPotential:
    """View of V along a rotated frame, enough for level_seed."""

    def __init__(self, V, e):
        self.V, self.e = V, e

    def eval(self, z):
        return self.V.eval(self.e * np.asarray(z))

    def grad(self, z):
        g = self.V.grad(self.e * np.asarray(z))
        return np.conj(self.e) * g  # chain rule for a rigid rotation


def universality_check(kf, x0, window=2.0, n_grid=17):
    """Sup-norm distance of the rescaled kernel to its microscopic limit.

    Rescaling z = x0 + w eps with eps = 1/sqrt(N); the limit is the infinite
    bandwidth-1 kernel conjugated by the pure gauge phase attached to x0.
    Requires x0 to sit well inside the droplet at the window's scale.
    """
    sd = kf.sd
    N = sd.params.N
    eps = sd.params.eps
    s = np.linspace(-window, window, n_grid)
    w = (s[:, None] + 1j * s[None, :]).ravel()
    pts = x0 + w * eps
    A = kf.amplitudes(pts)
    resc = (A @ A.conj().T) * eps**2
    gauge = np.exp(1j * N * eps * np.imag(w * np.conj(x0)))
    limit = np.exp(w[:, None] * np.conj(w)[None, :]
                   - 0.5 * np.abs(w[:, None]) ** 2
                   - 0.5 * np.abs(w)[None, :] ** 2)
    limit = gauge[:, None] * np.conj(gauge)[None, :] * limit
    return float(np.max(np.abs(resc - limit)))


# ---------------------------------------------------------------------------
# binary cache
# ---------------------------------------------------------------------------

def spectral_cache_key(potential_spec, N, K, n_r, n_theta):
    blob = json.dumps({"potential": potential_spec, "N": N, "K": K,
                       "n_r": n_r, "n_theta": n_theta},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def save_spectral(sd, path):
    """Flat binary dump: magic, JSON header line, little-endian f8 payload.

    Complex eigenvectors are stored as interleaved (re, im) float64 pairs;
    reload is bit-exact.
    """
    lam = np.ascontiguousarray(sd.eigenvalues, dtype="<f8")
    vec = np.ascontiguousarray(sd.vectors, dtype="<c16")
    header = {
        "key": spectral_cache_key(sd.potential_spec, sd.params.N, sd.params.K,
                                  sd.n_r, sd.n_theta),
        "potential": sd.potential_spec,
        "N": sd.params.N, "K": sd.params.K,
        "mu": sd.mu, "delta": sd.delta,
        "n_r": sd.n_r, "n_theta": sd.n_theta,
        "shapes": {"eigenvalues": list(lam.shape), "vectors": list(vec.shape)},
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(lam.tobytes())
        fh.write(vec.tobytes())


def load_spectral(path):
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path}: not a spectral cache file")
        header = json.loads(fh.readline().decode())
        n_lam = int(np.prod(header["shapes"]["eigenvalues"]))
        k2 = header["shapes"]["vectors"]
        lam = np.frombuffer(fh.read(8 * n_lam), dtype="<f8").copy()
        vec = np.frombuffer(fh.read(16 * k2[0] * k2[1]),
                            dtype="<c16").reshape(k2).copy()
    p = fock.FockParams(N=header["N"], K=int(header["K"]))
    return SpectralData(params=p, mu=header["mu"], delta=header["delta"],
                        eigenvalues=lam, vectors=vec,
                        potential_spec=header["potential"],
                        n_r=header["n_r"], n_theta=header["n_theta"])
