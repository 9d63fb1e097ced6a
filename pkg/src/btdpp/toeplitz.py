"""Edge-window analysis: Toeplitz structure of the tilt matrix, the Szego
functional, the strong Szego oracle, replacement bounds, and the
semiclassical trace correction.

All matrices live on the spectral window {mu - delta < lambda <= mu + delta};
states are gauged by the sign of the eigenfunction at its real turning
point, which is what aligns the matrix elements with the flow-Fourier
symbol.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import fock, flow, quadrature, statistic


# ---------------------------------------------------------------------------
# window construction
# ---------------------------------------------------------------------------

@dataclass
class ActionSymbol:
    """Flow-Fourier modes of a function, tabulated against the action."""

    actions: np.ndarray
    table: np.ndarray  # (n_levels, n_samples) FFT rows
    levels: np.ndarray
    periods: np.ndarray

    @property
    def n_samples(self):
        return self.table.shape[1]

    def a_hat(self, m, action):
        """Cubic interpolation of the m-th mode in the action variable,
        clamped to the end levels outside the tabulated range."""
        from scipy.interpolate import CubicSpline

        col = self.table[:, m % self.n_samples]
        spl = CubicSpline(self.actions, col)
        action = np.clip(np.asarray(action, dtype=float),
                         self.actions[0], self.actions[-1])
        return spl(action)


def edge_symbol(V, f, mu, delta, n_levels=17, n_samples=512):
    """Modes of e^f - 1 along the level curves across the window, indexed by
    the action I(level)."""
    fam = flow.symbol_family(V, lambda z: np.expm1(f.eval(z)),
                             mu, delta, n_levels=n_levels,
                             n_samples=n_samples)
    actions = np.array([quadrature.droplet_integral(V, lam)
                        for lam in fam.levels])
    return ActionSymbol(actions=actions, table=fam.table,
                        levels=fam.levels, periods=fam.periods)


@dataclass
class EdgeWindow:
    indices: np.ndarray          # global eigenstate indices in the window
    fermi_index: int             # number of occupied states
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    pi: np.ndarray = field(init=False)  # diag of the occupied projection

    def __post_init__(self):
        self.pi = (self.indices < self.fermi_index)

    @property
    def size(self):
        return self.indices.size


def _gauge_phases(sd, V, idx):
    """Phase per window column making the eigenfunction positive at its
    turning point on the positive real axis.

    At the turning point the eigenfunction sits on its Airy shoulder, well
    off any oscillation node, so the value there is a stable phase anchor;
    a short inward ladder is only a fallback for a freak near-zero.
    """
    from . import potential as pot

    lam = sd.eigenvalues[idx]
    seeds = np.array([pot.level_seed(V, l) for l in lam])
    anchor = (fock.basis_matrix(sd.params, seeds) *
              sd.vectors[:, idx].T).sum(axis=1)
    scale = np.abs(sd.vectors[:, idx]).max(axis=0)
    phases = np.angle(anchor)
    weak = np.abs(anchor) < 1e-8 * scale
    if np.any(weak):
        steps = 1.0 - np.linspace(0.0, 1.0, 9) * sd.params.eps / 4.0
        for c in np.nonzero(weak)[0]:
            vals = (fock.basis_matrix(sd.params, seeds[c] * steps)
                    @ sd.vectors[:, idx[c]])
            phases[c] = np.angle(vals[np.argmax(np.abs(vals))])
    return np.exp(-1j * phases)


def verify_edge_support(V, f, mu, delta, n_probe=200):
    """Sampled check that f vanishes outside {|V - mu| < delta/2}."""
    from . import potential as pot

    r_out = pot.level_seed(V, mu + 4 * delta) * 1.6
    r = np.linspace(1e-3, r_out, n_probe)
    th = np.exp(2j * np.pi * np.arange(n_probe) / n_probe)
    z = np.outer(r, th).ravel()
    band = np.abs(np.real(V.eval(z)) - mu)
    outside = (band >= delta / 2) & (band <= 4 * delta)
    worst = float(np.max(np.abs(f.eval(z[outside]))))
    if worst > 1e-10:
        raise ValueError(
            f"test function leaks outside the half-window: sup {worst:.2e}")


def build_edge_matrices(sd, V, f, symbol, n_r=None, n_theta=None,
                        check_support=True):
    """Window matrices A (exact tilt), B (frozen Toeplitz), Q (scaled
    residual against the action-sliding Toeplitz profile).

    check_support=False admits functions that are not edge-localized; the
    interior Toeplitz comparison still applies mid-window.
    """
    if check_support:
        verify_edge_support(V, f, sd.mu, sd.delta)
    idx = sd.window_indices()
    if idx.size == 0:
        raise ValueError("delta window contains no eigenvalues")
    gauge = _gauge_phases(sd, V, idx)
    g = lambda z: np.expm1(f.eval(z))
    A_raw = statistic.matrix_element_table(sd, g, idx, n_r, n_theta)
    A = (gauge[:, None].conj() * A_raw) * gauge[None, :]
    A = 0.5 * (A + A.conj().T)

    w = idx.size
    offsets = np.arange(-(w - 1), w)
    I_mu = float(quadrature.droplet_integral(V, sd.mu))
    b_vals = np.array([symbol.a_hat(m, I_mu) for m in offsets])
    B = np.empty((w, w), dtype=complex)
    jj, kk = np.meshgrid(np.arange(w), np.arange(w), indexing="ij")
    B[:] = b_vals[(jj - kk) + (w - 1)]

    mean_action = (idx[jj] + idx[kk]) / (2.0 * sd.params.N)
    prof = np.empty_like(B)
    for m in offsets:
        mask = (jj - kk) == m
        prof[mask] = symbol.a_hat(m, mean_action[mask])
    Q = sd.params.N * (A - prof)
    return EdgeWindow(indices=idx, fermi_index=sd.n_mu, A=A, B=B, Q=Q)


# ---------------------------------------------------------------------------
# structure diagnostics
# ---------------------------------------------------------------------------

def toeplitz_defect(ew, kappa=2, mid_fraction=None):
    """C_est = max |Q_jk| (1+|j-k|)^(kappa+1) over the window.

    mid_fraction restricts both indices to the central fraction of the
    window, where the sliding-symbol comparison is an interior estimate.
    """
    w = ew.size
    jj, kk = np.meshgrid(np.arange(w), np.arange(w), indexing="ij")
    weight = (1.0 + np.abs(jj - kk)) ** (kappa + 1)
    prof = np.abs(ew.Q) * weight
    if mid_fraction is not None:
        lo = int(round(w * (1.0 - mid_fraction) / 2.0))
        hi = w - lo
        sel = prof[lo:hi, lo:hi]
    else:
        sel = prof
    return {"C_est": float(sel.max()), "profile": prof}


def _trace_norm(M):
    return float(np.sum(np.linalg.svd(M, compute_uv=False)))


def edge_conditions_check(ew):
    """The five window-operator scalars whose size controls the replacement
    step: expected orders (1, 1, 1/N, 1/N, 1/N)."""
    A, B = ew.A, ew.B
    p = ew.pi
    q = ~p
    AB = A @ B - B @ A
    D = A - B
    pBq = B[np.ix_(p, q)]
    pDq = D[np.ix_(p, q)]
    t1 = _trace_norm(B[np.ix_(p, q)] @ D[q, :])
    t2 = _trace_norm(D[:, p] @ B[np.ix_(p, q)])
    return {
        "norm_A": float(np.linalg.norm(A, 2)),
        "trace_pBq": _trace_norm(pBq),
        "norm_comm": float(np.linalg.norm(AB, 2)),
        "trace_pDq": _trace_norm(pDq),
        "trace_mixed": max(t1, t2),
    }


# ---------------------------------------------------------------------------
# Szego functional and oracle
# ---------------------------------------------------------------------------

def gamma_functional(M, pi):
    """tr[log(1 + pi M pi) - pi log(1 + M) pi] on the range of pi.

    Nonnegative for Hermitian M > -1: restriction then log majorizes log
    then restriction (concavity).
    """
    M = np.asarray(M)
    pi = np.asarray(pi, dtype=bool)
    Mpp = M[np.ix_(pi, pi)]
    lam_p = scipy.linalg.eigvalsh(Mpp) if pi.any() else np.array([])
    lam = scipy.linalg.eigvalsh(M)
    if lam.size and lam[0] <= -1.0 or lam_p.size and lam_p[0] <= -1.0:
        raise ValueError("1 + M not positive definite on the window")
    first = float(np.sum(np.log1p(lam_p)))
    w, U = scipy.linalg.eigh(M)
    # tr pi log(1+M) pi via the occupied rows of the eigenvector matrix
    occ_weight = np.sum(np.abs(U[pi, :]) ** 2, axis=0)
    second = float(np.dot(occ_weight, np.log1p(w)))
    return first - second


@dataclass
class ToeplitzSymbol:
    """Fourier data of a circle symbol m(theta) plus its positivity flag."""

    m_hat: np.ndarray   # two-sided, index n in [-n_max, n_max] at n % size
    n_max: int
    positive: bool
    min_value: float

    def coefficient(self, n):
        return self.m_hat[n % self.m_hat.size]


def _synth_circle(f_hat, n_grid):
    f_hat = np.asarray(f_hat, dtype=complex)
    th = 2.0 * np.pi * np.arange(n_grid) / n_grid
    vals = np.full(n_grid, f_hat[0].real, dtype=float)
    for m in range(1, f_hat.size):
        vals += 2.0 * (f_hat[m] * np.exp(1j * m * th)).real
    return vals


def toeplitz_symbol(f_hat, n_max, n_grid=8192, shift=-1.0):
    """Symbol e^f + shift from the one-sided Fourier data of a real f.

    shift=-1 gives the tilt symbol e^f - 1; shift=0 the determinant symbol.
    """
    sym = np.exp(_synth_circle(f_hat, n_grid)) + shift
    if np.max(np.abs(sym.imag)) > 1e-12:
        raise ValueError("symbol not real on the grid")
    modes = np.fft.fft(sym) / n_grid
    mn = float(np.min(sym.real))
    return ToeplitzSymbol(m_hat=modes, n_max=n_max,
                          positive=mn > (0.0 if shift == 0.0 else -1.0),
                          min_value=mn)


def toeplitz_matrix(symbol, n):
    col = np.array([symbol.coefficient(m) for m in range(n)])
    row = np.conj(col)
    return scipy.linalg.toeplitz(col, row)


def szego_asymptotics(f_hat, n, n_grid=8192):
    """(logdet, n*f_hat0, szego_constant) for the n-th Toeplitz determinant
    of e^f, f given by its cosine-side Fourier coefficients f_hat[m], m>=0.

    The symbol is synthesized on a fine grid, exponentiated, and checked
    positive; the constant logdet - n*f_hat0 converges to sum k |f_hat_k|^2.
    """
    f_hat = np.asarray(f_hat, dtype=complex)
    sym = toeplitz_symbol(f_hat, n_max=n, n_grid=n_grid, shift=0.0)
    if not sym.positive:
        raise ValueError("symbol e^f not positive on the grid")
    T = toeplitz_matrix(sym, n)
    L = scipy.linalg.cholesky(T, lower=True)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L).real)))
    first_order = n * float(f_hat[0].real)
    return logdet, first_order, logdet - first_order


# ---------------------------------------------------------------------------
# replacement principle
# ---------------------------------------------------------------------------

def u_map(X, pi, t):
    """U_t(X) = e^{it pi X pi} - pi e^{itX} pi, as a matrix on the window."""
    n = X.shape[0]
    pi = np.asarray(pi, dtype=bool)
    out = np.zeros((n, n), dtype=complex)
    Xpp = X[np.ix_(pi, pi)]
    wp, Up = scipy.linalg.eigh(Xpp)
    block = (Up * np.exp(1j * t * wp)) @ Up.conj().T
    w, U = scipy.linalg.eigh(X)
    full = (U * np.exp(1j * t * w)) @ U.conj().T
    out[np.ix_(pi, pi)] = block - full[np.ix_(pi, pi)]
    q = ~pi
    out[np.ix_(q, q)] = np.eye(int(q.sum()))
    return out


def replacement_bound_check(A, B, pi, ts, eps, C):
    """Trace-norm distance of the two unitary-compression maps against the
    measured-constant envelope eps |t| (1 + |t| + C t^2)."""
    rows = []
    ok = True
    for t in ts:
        diff = u_map(A, pi, t) - u_map(B, pi, t)
        lhs = _trace_norm(diff)
        rhs = eps * abs(t) * (1.0 + abs(t) + C * t * t)
        rows.append({"t": float(t), "lhs": lhs, "rhs": rhs})
        ok = ok and (lhs <= rhs)
    return {"holds": ok, "rows": rows, "eps": eps, "C": C}


def measured_constants(conds):
    """(eps, C) from an edge_conditions_check report: eps the worst 1/N-order
    scalar, C the worst order-one scalar."""
    eps = max(conds["norm_comm"], conds["trace_pDq"], conds["trace_mixed"])
    C = max(conds["norm_A"], conds["trace_pBq"])
    return eps, C


# ---------------------------------------------------------------------------
# trace correction and edge CLT assembly
# ---------------------------------------------------------------------------

class PlateauLog:
    """log(1+x) flattened outside twice the operating range.

    Equal to log1p on [lo, hi] (the range of e^f - 1), eased to zero with
    quintic smoothstep over a one-width margin on each side; eigenvalues
    beyond the eased region are a domain violation.
    """

    def __init__(self, lo, hi):
        span = max(hi - lo, 1e-12)
        self.lo, self.hi = lo, hi
        self.m = span  # margin width on each side
        if lo - 2 * self.m <= -1.0:
            # keep log1p's singularity out of the eased region
            self.m = min(self.m, (lo + 1.0) / 2.0 * 0.999)

    def domain(self):
        return self.lo - 2 * self.m, self.hi + 2 * self.m

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        up = statistic.smoothstep((x - (self.lo - 2 * self.m)) / self.m)
        down = 1.0 - statistic.smoothstep((x - (self.hi + self.m)) / self.m)
        xc = np.clip(x, self.lo - 2 * self.m * 0.999, self.hi + 2 * self.m)
        return np.log1p(xc) * up * down


def plateau_for(f, probe):
    vals = np.expm1(np.asarray(f.eval(probe), dtype=float))
    return PlateauLog(float(vals.min()), float(vals.max()))


def semiclassical_trace_term(sd, f, ew, vartheta=None, n_r=None,
                             n_theta=None):
    """tr Pi [vartheta(A) - vartheta(e^f - 1)] Pi.

    vartheta(A) spectrally on the window; the scalar branch through the
    occupied table.  vartheta defaults to the plateau-capped log(1+x), which
    agrees with log1p on the whole operating range, so the scalar branch
    reduces to f pointwise.
    """
    if vartheta is None:
        th = np.linspace(0, 2 * np.pi, 512)
        probe = np.concatenate([r * np.exp(1j * th)
                                for r in np.linspace(0.05, 2.2, 41)])
        vartheta = plateau_for(f, probe)
    lam, U = scipy.linalg.eigh(ew.A)
    lo, hi = vartheta.domain()
    if lam[0] < lo or lam[-1] > hi:
        raise ValueError("window spectrum escapes the vartheta plateau")
    occ_weight = np.sum(np.abs(U[ew.pi, :]) ** 2, axis=0)
    spectral = float(np.dot(occ_weight, vartheta(lam)))
    g = lambda z: vartheta(np.expm1(f.eval(z)))
    scalar = float(np.trace(statistic.occupied_table(sd, g, n_r,
                                                     n_theta)).real)
    return spectral - scalar


def edge_clt(sd, V, f, symbol=None, curve=None, n_r=None, n_theta=None,
             tol_assembly=1e-6, enforce=True):
    """Edge decomposition of the log-Laplace functional.

    Returns the Szego part, its predicted half-boundary limit, the trace
    correction, the predicted half-bulk limit, the assembled total and the
    defect against the exact functional.  The assembly identity
    gamma + trace_term = upsilon holds up to window-leakage terms; once
    N >= 64 a defect above tol_assembly signals an inconsistent window and
    raises.
    """
    if symbol is None:
        symbol = edge_symbol(V, f, sd.mu, sd.delta)
    if curve is None:
        curve = flow.integrate_flow(V, level=sd.mu)
    ew = build_edge_matrices(sd, V, f, symbol, n_r, n_theta)
    gamma = gamma_functional(ew.A, ew.pi)
    trace_term = semiclassical_trace_term(sd, f, ew, n_r=n_r, n_theta=n_theta)
    ups = statistic.laplace_functional(sd, f, n_r, n_theta)
    s1 = statistic.sigma1_boundary(curve, f)
    s2 = statistic.sigma2_bulk(V, sd.mu, f)
    defect = abs(gamma + trace_term - ups)
    if enforce and sd.params.N >= 64 and defect > tol_assembly:
        raise RuntimeError(
            f"edge assembly identity violated: defect {defect:.3e}")
    return {
        "gamma": gamma,
        "half_sigma1": 0.5 * s1,
        "trace_term": trace_term,
        "half_sigma2": 0.5 * s2,
        "upsilon": ups,
        "assembly_defect": defect,
        "window": ew,
    }
