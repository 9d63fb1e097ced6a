"""Monte Carlo side: exact sampling of the projection point process and
empirical estimates of linear-statistic laws.

Sampling follows the sequential conditional-intensity scheme for projection
kernels: draw a point from the current residual intensity by rejection
against a uniform disk proposal, project the sampled direction out, repeat.
The count is deterministic (= number of occupied states), so a sample is a
fixed-size cloud.

Reproducibility: each sample index gets its own counter-based stream
(Philox keyed by (seed, index)), so clouds are bit-identical per
(seed, config, spectral data) regardless of evaluation order.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import fock, quadrature
from ._backend import hkpv_scan

_BATCH = 128


@dataclass(frozen=True)
class SamplerConfig:
    seed: int
    n_samples: int = 1
    proposal_radius: float = 0.0   # 0 -> auto from the spectral data
    max_rejections: int = 50000

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ValueError("seed must fit in 64 bits")
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")


@dataclass(frozen=True)
class PointConfiguration:
    points: np.ndarray            # (n_mu,) complex
    provenance: tuple             # (seed, sample index)


def min_proposal_radius(sd):
    """Smallest legal proposal radius: a circle enclosing {V <= mu + delta}
    with margin."""
    from . import potential as pot

    V = pot.parse_potential(sd.potential_spec)
    return quadrature.bounding_radius(V, sd.mu + sd.delta)


def _tail_radius(N, lam, nats=40.0):
    """Radius beyond which every occupied state carries < e^-nats mass.

    Chernoff bound for the radial law of a degree-N*lam basis state:
    -log P(|z|^2 > x) ≈ N (x - lam - lam log(x/lam)).
    """
    lam = max(lam, 1e-6)
    x = lam + nats / N + 1.0
    for _ in range(60):
        g = N * (x - lam - lam * np.log(x / lam)) - nats
        dg = N * (1.0 - lam / x)
        step = g / dg
        x -= step
        if abs(step) < 1e-12 * x:
            break
    return float(np.sqrt(x))


def resolve_radius(sd, cfg):
    r_min = min_proposal_radius(sd)
    if cfg.proposal_radius > 0:
        R = cfg.proposal_radius
        if R < r_min:
            raise ValueError(
                f"proposal radius {R} does not cover the droplet "
                f"(need >= {r_min})")
        return R
    # auto: also cover the sub-exponential tails of the occupied states
    return max(r_min, _tail_radius(sd.params.N, sd.mu + sd.delta))


def _make_amplitude_map(params, occ, R):
    """Fast evaluator z -> (psi_i(z))_i for the occupied states.

    Uses the first-column Gaussian plus a cumulative product along the
    degree recurrence phi_{k+1} = z sqrt(N/(k+1)) phi_k; falls back to the
    log-domain basis when the Gaussian prefactor would underflow.
    """
    N, K = params.N, params.K
    if 0.5 * N * R * R > 600.0:
        return lambda z: fock.basis_matrix(params, z) @ occ
    c = np.sqrt(N / np.arange(1.0, K))

    def amp(z):
        phi0 = np.sqrt(N) * np.exp(-0.5 * N * np.abs(z) ** 2)
        steps = z[:, None] * c[None, :]
        cp = np.cumprod(steps, axis=1)
        Phi = np.empty((z.size, K), dtype=complex)
        Phi[:, 0] = phi0
        Phi[:, 1:] = phi0[:, None] * cp
        return Phi @ occ

    return amp


def sample_dpp(sd, cfg, sample_index=0):
    """One point cloud of the determinantal process with kernel Pi.

    Envelope: the occupied density never exceeds N per unit gamma-measure,
    so uniform-disk proposals with acceptance resid/N are exact.
    """
    n = sd.n_mu
    if n < 1:
        raise ValueError("empty occupied space")
    R = resolve_radius(sd, cfg)
    N = sd.params.N
    occ = np.ascontiguousarray(sd.vectors[:, :n])
    amp = _make_amplitude_map(sd.params, occ, R)
    rng = np.random.Generator(
        np.random.Philox(key=[int(cfg.seed), int(sample_index)]))

    pts = np.empty(n, dtype=complex)
    gram = np.zeros((0, n), dtype=complex)
    for i in range(n):
        budget = cfg.max_rejections
        spent = 0
        z_new = None
        # size batches to the expected acceptance (n-i)/(N R^2) so early
        # points do not burn a full batch of basis evaluations
        batch = int(np.clip(4.0 * N * R * R / (n - i), 8, _BATCH * 2))
        while z_new is None:
            m = min(batch, budget)
            if m <= 0:
                raise RuntimeError(
                    f"rejection budget exhausted at point {i + 1}/{n}: "
                    f"{spent} proposals, acceptance rate "
                    f"{i / max(spent, 1):.2e}; increase max_rejections or "
                    f"shrink the proposal radius")
            draws = rng.random((m, 3))
            z = R * np.sqrt(draws[:, 0]) * np.exp(2j * np.pi * draws[:, 1])
            psi = np.ascontiguousarray(amp(z))
            hit = hkpv_scan(psi, gram, np.ascontiguousarray(draws[:, 2]),
                            float(N))
            budget -= m
            spent += m
            if hit >= 0:
                z_new = z[hit]
                v = psi[hit]
        # project the sampled direction out of the residual kernel; rows of
        # gram hold conjugated unit directions so that (gram @ psi) is the
        # vector of inner products the scan subtracts
        if gram.shape[0]:
            v = v - (gram @ v) @ np.conj(gram)
        nv = np.linalg.norm(v)
        if nv < 1e-13:
            raise RuntimeError("degenerate direction update in sampler")
        gram = np.vstack([gram, np.conj(v)[None, :] / nv])
        pts[i] = z_new
    return PointConfiguration(points=pts,
                              provenance=(int(cfg.seed), int(sample_index)))


def draw_samples(sd, cfg, start_index=0):
    """cfg.n_samples independent clouds, streams keyed by sample index."""
    return [sample_dpp(sd, cfg, start_index + j)
            for j in range(cfg.n_samples)]


# ---------------------------------------------------------------------------
# empirical estimates
# ---------------------------------------------------------------------------

def _batch_se(values, n_batches=32):
    values = np.asarray(values, dtype=float)
    n = values.size // n_batches * n_batches
    chunks = values[:n].reshape(n_batches, -1)
    means = chunks.mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def empirical_statistics(samples, f, n_batches=32):
    """Monte-Carlo law of the linear statistic X(f) = sum over points.

    Returns a dict of (estimate, batch-means standard error) pairs for the
    mean, variance, standardized third and fourth moments, and the centred
    exponential moments at +-1.
    """
    if len(samples) < 1000:
        raise ValueError("need at least 1e3 samples for stable batch means")
    X = np.array([float(np.sum(f.eval(s.points)).real) for s in samples])
    mean = float(X.mean())
    c = X - mean
    var = float(c.var(ddof=1))
    s = np.sqrt(var)
    # a degenerate statistic (counting function) has s = 0; the
    # standardized moments are then reported as nan without warnings
    with np.errstate(invalid="ignore", divide="ignore"):
        m3 = float(np.mean(c ** 3) / s ** 3)
        m4 = float(np.mean(c ** 4) / s ** 4)
        z3 = c ** 3 / s ** 3
        z4 = c ** 4 / s ** 4
    mgf_p = float(np.mean(np.exp(c)))
    mgf_m = float(np.mean(np.exp(-c)))
    n = X.size // n_batches * n_batches
    chunks = c[:n].reshape(n_batches, -1)
    return {
        "n_samples": len(samples),
        "mean": (mean, _batch_se(X, n_batches)),
        "variance": (var, float(chunks.var(axis=1, ddof=1).std(ddof=1)
                                / np.sqrt(n_batches))),
        "skewness": (m3, _batch_se(z3, n_batches)),
        "kurtosis": (m4, _batch_se(z4, n_batches)),
        "mgf_plus": (mgf_p, _batch_se(np.exp(c), n_batches)),
        "mgf_minus": (mgf_m, _batch_se(np.exp(-c), n_batches)),
    }


def radial_intensity_check(sd, samples, n_bins=8, r_max=None):
    """Binned one-point function against the exact kernel diagonal.

    Returns per-bin (observed mean count, expected, SE); expectation by
    radial quadrature of the occupied density.
    """
    from scipy.integrate import quad

    if r_max is None:
        r_max = float(max(np.abs(s.points).max() for s in samples)) * 1.0001
    edges = np.linspace(0.0, r_max, n_bins + 1)
    counts = np.array([np.histogram(np.abs(s.points), bins=edges)[0]
                       for s in samples], dtype=float)
    obs = counts.mean(axis=0)
    se = counts.std(axis=0, ddof=1) / np.sqrt(len(samples))
    occ = sd.vectors[:, :sd.n_mu]

    def dens(r):
        # angular average of the occupied density, times the radial weight
        th = np.exp(2j * np.pi * np.arange(64) / 64)
        amp = fock.basis_matrix(sd.params, r * th) @ occ
        return float(np.mean(np.sum(np.abs(amp) ** 2, axis=1))) * 2.0 * r

    exp_counts = np.array([quad(dens, a, b, limit=80)[0]
                           for a, b in zip(edges[:-1], edges[1:])])
    return {"edges": edges, "observed": obs, "expected": exp_counts,
            "se": se}
