"""Linear statistics of the spectral-projector point process.

Exact finite-size mean / variance / log-Laplace functionals on the range of
the projector, the predicted boundary and bulk variance limits, and the
operator-bound diagnostics that control the Gaussian approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import flow, quadrature
from .quadrature import InsufficientQuadratureError

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# scalar fields and test-function atoms
# ---------------------------------------------------------------------------

def smooth_bump(u):
    """C^infty bump exp(1 - 1/(1-u^2)) on (-1, 1), zero outside."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    return out


def smooth_bump_prime(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    d = 1.0 - ui * ui
    out[inside] = np.exp(1.0 - 1.0 / d) * (-2.0 * ui / (d * d))
    return out


def smoothstep(x):
    """Quintic smoothstep: 0 below 0, 1 above 1, C^2 join."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return x**3 * (10.0 - 15.0 * x + 6.0 * x * x)


def smoothstep_prime(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    out = np.zeros_like(x)
    xi = x[inside]
    out[inside] = 30.0 * xi * xi * (1.0 - xi) ** 2
    return out


class ScalarField:
    """Real function of z with an exact complex-form gradient g_x + i g_y."""

    growth_degree = 0

    def eval(self, z):  # pragma: no cover - interface
        raise NotImplementedError

    def grad(self, z):  # pragma: no cover - interface
        raise NotImplementedError

    def support_disk(self):
        """(center, radius) containing the support, or None if global."""
        return None

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            return ProductField(self, other)
        return ScaledField(float(other), self)

    __rmul__ = __mul__

    def __add__(self, other):
        return SumField([self, other])


class ProductField(ScalarField):
    def __init__(self, a, b):
        self.a, self.b = a, b
        self.growth_degree = a.growth_degree + b.growth_degree

    def eval(self, z):
        return self.a.eval(z) * self.b.eval(z)

    def grad(self, z):
        return self.a.grad(z) * self.b.eval(z) + self.a.eval(z) * self.b.grad(z)

    def support_disk(self):
        for part in (self.a, self.b):
            d = part.support_disk()
            if d is not None:
                return d
        return None


class ScaledField(ScalarField):
    def __init__(self, c, a):
        self.c, self.a = c, a
        self.growth_degree = a.growth_degree

    def eval(self, z):
        return self.c * self.a.eval(z)

    def grad(self, z):
        return self.c * self.a.grad(z)

    def support_disk(self):
        return self.a.support_disk()


class SumField(ScalarField):
    def __init__(self, parts):
        self.parts = list(parts)
        self.growth_degree = max(p.growth_degree for p in self.parts)

    def eval(self, z):
        return sum(p.eval(z) for p in self.parts)

    def grad(self, z):
        return sum(p.grad(z) for p in self.parts)

    def support_disk(self):
        disks = [p.support_disk() for p in self.parts]
        if any(d is None for d in disks):
            return None
        return _enclosing_disk(disks)


def _enclosing_disk(disks):
    centers = np.array([d[0] for d in disks], dtype=complex)
    c = centers.mean()
    r = max(abs(ci - c) + ri for ci, ri in disks)
    return c, float(r)


class Atom(ScalarField):
    name = None

    def to_spec(self):
        return {"atom": self.name}


class ReZ(Atom):
    name = "ReZ"
    growth_degree = 1

    def eval(self, z):
        return np.real(z)

    def grad(self, z):
        return np.ones_like(np.asarray(z, dtype=complex))


class ImZ(Atom):
    name = "ImZ"
    growth_degree = 1

    def eval(self, z):
        return np.imag(z)

    def grad(self, z):
        return 1j * np.ones_like(np.asarray(z, dtype=complex))


class ReZ2(Atom):
    # quadratic growth exceeds the linear envelope of the CLT hypotheses;
    # retained for operator-level checks only
    name = "ReZ2"
    growth_degree = 2

    def eval(self, z):
        return np.real(np.asarray(z) ** 2)

    def grad(self, z):
        return 2.0 * np.conj(np.asarray(z, dtype=complex))


class ImZ2(Atom):
    name = "ImZ2"
    growth_degree = 2

    def eval(self, z):
        return np.imag(np.asarray(z) ** 2)

    def grad(self, z):
        return 2j * np.conj(np.asarray(z, dtype=complex))


class Const(Atom):
    name = "Const"

    def eval(self, z):
        return np.ones(np.shape(z), dtype=float)

    def grad(self, z):
        return np.zeros(np.shape(z), dtype=complex)


class GaussBump(Atom):
    """exp(-|z - center|^2 / (2 width^2)); effective support 5 widths."""

    name = "GaussBump"

    def __init__(self, center, width):
        self.center = complex(center)
        self.width = float(width)

    def eval(self, z):
        d = np.asarray(z, dtype=complex) - self.center
        return np.exp(-np.abs(d) ** 2 / (2.0 * self.width**2))

    def grad(self, z):
        d = np.asarray(z, dtype=complex) - self.center
        return -self.eval(z) * d / self.width**2

    def support_disk(self):
        return self.center, 5.0 * self.width

    def to_spec(self):
        return {"atom": self.name,
                "center": [self.center.real, self.center.imag],
                "width": self.width}


class RadialBump(Atom):
    """smooth_bump((|z| - r_c)/s): compactly supported annular profile."""

    name = "RadialBump"

    def __init__(self, r_c, s):
        self.r_c = float(r_c)
        self.s = float(s)

    def eval(self, z):
        r = np.abs(np.asarray(z, dtype=complex))
        return smooth_bump((r - self.r_c) / self.s)

    def grad(self, z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        out = np.zeros_like(z)
        nz = r > 1e-300
        u = (r[nz] - self.r_c) / self.s
        out[nz] = smooth_bump_prime(u) / self.s * z[nz] / r[nz]
        return out

    def support_disk(self):
        return 0j, self.r_c + self.s

    def to_spec(self):
        return {"atom": self.name, "r_c": self.r_c, "s": self.s}


class AngularWindow(Atom):
    """cos(m arg z) localized to the band {|V - mu| < w} of the potential.

    The angular harmonic rides a smooth_bump profile in the value of V, so
    the support hugs a level band of any potential, radial or not.
    """

    name = "AngularWindow"

    def __init__(self, potential, mu, w, m):
        self.potential = potential
        self.mu = float(mu)
        self.w = float(w)
        self.m = int(m)
        self._disk = None

    def _window(self, z):
        u = (np.real(self.potential.eval(z)) - self.mu) / self.w
        return smooth_bump(u)

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        return np.cos(self.m * np.angle(z)) * self._window(z)

    def grad(self, z):
        z = np.asarray(z, dtype=complex)
        th = np.angle(z)
        u = (np.real(self.potential.eval(z)) - self.mu) / self.w
        win = smooth_bump(u)
        dwin = smooth_bump_prime(u) / self.w * self.potential.grad(z)
        out = np.cos(self.m * th) * dwin
        if self.m != 0:
            # grad of arg z is i z / |z|^2; the window vanishes near 0
            r2 = np.abs(z) ** 2
            safe = r2 > 1e-300
            ang = np.zeros_like(z)
            ang[safe] = 1j * z[safe] / r2[safe]
            out = out - self.m * np.sin(self.m * th) * win * ang
        return out

    def support_disk(self):
        if self._disk is None:
            r = quadrature.bounding_radius(self.potential, self.mu + self.w)
            self._disk = (0j, float(r))
        return self._disk

    def to_spec(self):
        return {"atom": self.name, "potential": self.potential.to_spec(),
                "mu": self.mu, "w": self.w, "m": self.m}


class TestFunction(ScalarField):
    """Finite linear combination sum_i c_i * atom_i."""

    def __init__(self, terms):
        self.terms = [(float(c), a) for c, a in terms]
        self.growth_degree = max((a.growth_degree for _, a in self.terms),
                                 default=0)

    def eval(self, z):
        out = None
        for c, a in self.terms:
            v = c * a.eval(z)
            out = v if out is None else out + v
        if out is None:
            return np.zeros(np.shape(z), dtype=float)
        return out

    def grad(self, z):
        out = None
        for c, a in self.terms:
            v = c * a.grad(z)
            out = v if out is None else out + v
        if out is None:
            return np.zeros(np.shape(z), dtype=complex)
        return out

    def support_disk(self):
        disks = []
        for _, a in self.terms:
            d = a.support_disk()
            if d is None:
                return None
            disks.append(d)
        if not disks:
            return 0j, 0.0
        return _enclosing_disk(disks)

    def to_spec(self):
        return {"terms": [dict(coeff=c, **a.to_spec())
                          for c, a in self.terms]}


_ATOM_BUILDERS = {
    "ReZ": lambda d, pot: ReZ(),
    "ImZ": lambda d, pot: ImZ(),
    "ReZ2": lambda d, pot: ReZ2(),
    "ImZ2": lambda d, pot: ImZ2(),
    "Const": lambda d, pot: Const(),
    "GaussBump": lambda d, pot: GaussBump(complex(d["center"][0],
                                                 d["center"][1]), d["width"]),
    "RadialBump": lambda d, pot: RadialBump(d["r_c"], d["s"]),
    "AngularWindow": lambda d, pot: AngularWindow(
        pot(d["potential"]) if "potential" in d else None,
        d["mu"], d["w"], d["m"]),
}


def test_function_from_spec(spec):
    from .potential import parse_potential

    terms = []
    for term in spec["terms"]:
        atom = _ATOM_BUILDERS[term["atom"]](term, parse_potential)
        terms.append((term["coeff"], atom))
    return TestFunction(terms)


def tf(*pairs):
    return TestFunction(list(pairs))


# ---------------------------------------------------------------------------
# exact finite-size functionals
# ---------------------------------------------------------------------------

_QUAD_CACHE = {}


def _quad_for(sd, n_r=None, n_theta=None):
    key = (sd.params.N, sd.params.K, n_r or sd.n_r, n_theta or sd.n_theta)
    q = _QUAD_CACHE.get(key)
    if q is None:
        q = quadrature.plane_quadrature(sd.params.N, sd.params.K,
                                        n_r=key[2], n_theta=key[3])
        if len(_QUAD_CACHE) > 16:
            _QUAD_CACHE.clear()
        _QUAD_CACHE[key] = q
    return q


def matrix_element_table(sd, g, subset=None, n_r=None, n_theta=None):
    """M_{jk} = <u_j | g u_k> on a subset of eigenstates.

    Same product rule as operator assembly: radial Gauss nodes times the
    angular FFT, contracted through the eigenvector coefficients.
    """
    q = _quad_for(sd, n_r, n_theta)
    F = quadrature.fock_matrix(q, g)
    U = sd.vectors if subset is None else sd.vectors[:, subset]
    return U.conj().T @ F @ U


def occupied_table(sd, g, n_r=None, n_theta=None):
    return matrix_element_table(sd, g, np.arange(sd.n_mu), n_r, n_theta)


def mean_linear_statistic(sd, f, n_r=None, n_theta=None):
    """E X(f) = tr(Pi f Pi) over the occupied states."""
    M = occupied_table(sd, f.eval, n_r, n_theta)
    return float(np.trace(M).real)


def variance_linear_statistic(sd, f, n_r=None, n_theta=None):
    """Var X(f) = tr(Pi f^2 Pi) - |Pi f Pi|_HS^2  (= -1/2 tr [f,Pi]^2)."""
    M = occupied_table(sd, f.eval, n_r, n_theta)
    M2 = occupied_table(sd, lambda z: f.eval(z) ** 2, n_r, n_theta)
    return float(np.trace(M2).real - np.sum(np.abs(M) ** 2))


def laplace_functional(sd, f, n_r=None, n_theta=None):
    """Upsilon(f) = log det(Pi e^f Pi on the range) - tr(Pi f Pi).

    The Gram matrix of the occupied states under the tilted weight e^f is
    positive definite in exact arithmetic; a non-positive spectrum therefore
    signals quadrature/truncation failure, not a property of f.

    Evaluated in the cancellation-free split

        Upsilon = sum_i [log1p(d_i) - d_i] + tr<e^f - 1 - f>,

    d_i the eigenvalues of the occupied block of e^f - 1: both pieces live
    on the O(f^2) scale, so small tilts keep full relative accuracy (the
    second-difference variance oracle needs this at step 1e-3).
    """
    D = occupied_table(sd, lambda z: np.expm1(f.eval(z)), n_r, n_theta)
    d = scipy.linalg.eigvalsh(D)
    if d[0] <= -1.0:
        raise InsufficientQuadratureError(
            "tilted Gram matrix not positive definite: "
            "quadrature/truncation failure")
    curvature = float(np.sum(np.log1p(d) - d))
    h = lambda z: np.expm1(f.eval(z)) - f.eval(z)
    linear_gap = float(np.trace(occupied_table(sd, h, n_r, n_theta)).real)
    return curvature + linear_gap


def upsilon_second_derivative(sd, f, step=1e-3, richardson=True,
                              n_r=None, n_theta=None):
    """d^2/dl^2 Upsilon(l f) at 0 by central differences (Upsilon(0)=0)."""

    def second(h):
        up = laplace_functional(sd, ScaledField(h, f), n_r, n_theta)
        dn = laplace_functional(sd, ScaledField(-h, f), n_r, n_theta)
        return (up + dn) / h**2

    d = second(step)
    if not richardson:
        return d
    return (4.0 * second(step / 2.0) - d) / 3.0


# ---------------------------------------------------------------------------
# predicted limits
# ---------------------------------------------------------------------------

def sigma1_boundary(curve, f, tail=1e-10):
    """Sum_{k>=1} k |f_hat_k|^2 along the closed orbit, truncated when the
    remaining (computable) tail drops below ``tail``."""
    coeffs = flow.fourier_along_flow(f.eval, curve)
    n = coeffs.size
    ks = np.arange(1, n // 2)
    terms = ks * np.abs(coeffs[1:n // 2]) ** 2
    if terms.size == 0:
        return 0.0
    remaining = np.cumsum(terms[::-1])[::-1]
    keep = remaining > tail
    k_max = int(ks[keep][-1]) if keep.any() else 0
    return float(np.sum(terms[:k_max]))


def sigma2_bulk(V, mu, field):
    """(1/2) int_{V <= mu} |grad field|^2 d(gamma) by droplet quadrature."""
    h = lambda z: np.abs(field.grad(z)) ** 2
    return 0.5 * quadrature.droplet_integral(V, mu, h=h)


def predicted_variance(curve, f, V):
    """(sigma1, sigma2): boundary and bulk variance functionals at the
    curve's level."""
    return sigma1_boundary(curve, f), sigma2_bulk(V, curve.level, f)


@dataclass
class VarianceReport:
    mean: float
    variance_exact: float
    upsilon: float
    sigma1: float
    sigma2: float
    sigma_total: float
    N: float
    n_occupied: int


def variance_report(sd, V, f, curve=None):
    if curve is None:
        curve = flow.integrate_flow(V, level=sd.mu)
    s1, s2 = predicted_variance(curve, f, V)
    return VarianceReport(mean=mean_linear_statistic(sd, f),
                          variance_exact=variance_linear_statistic(sd, f),
                          upsilon=laplace_functional(sd, f),
                          sigma1=s1, sigma2=s2, sigma_total=s1 + s2,
                          N=sd.params.N, n_occupied=sd.n_mu)


def clt_sweep(V, mu, delta, f, Ns, c_trunc=2.0, curve=None):
    """Upsilon(f) against half the predicted total variance, over a size
    sweep; the defect column is the convergence diagnostic."""
    from . import operator

    if curve is None:
        curve = flow.integrate_flow(V, level=mu)
    s1, s2 = predicted_variance(curve, f, V)
    half_sigma = 0.5 * (s1 + s2)
    rows = []
    for N in Ns:
        sd = operator.spectral_projector(V, mu, delta, N, c_trunc=c_trunc)
        ups = laplace_functional(sd, f)
        rows.append({"N": N, "upsilon": ups, "half_sigma": half_sigma,
                     "defect": abs(ups - half_sigma)})
    return rows


# ---------------------------------------------------------------------------
# operator-bound diagnostics
# ---------------------------------------------------------------------------

def decorrelation_defect(sd, V, f1, f2, delta, n_r=None, n_theta=None):
    """|Upsilon(f1+f2) - Upsilon(f1) - Upsilon(f2)| for separated supports.

    Preconditions checked: the support disks are at distance >= delta and
    supp f1 lies in {V <= mu - 2 delta}.
    """
    d1, d2 = f1.support_disk(), f2.support_disk()
    if d1 is None or d2 is None:
        raise ValueError("decorrelation needs compactly supported factors")
    gap = abs(d1[0] - d2[0]) - d1[1] - d2[1]
    if gap < delta:
        raise ValueError(f"support separation {gap:.4f} < delta={delta}")
    th = np.exp(1j * np.linspace(0, TWO_PI, 64, endpoint=False))
    probes = np.concatenate([
        (d1[0] + rho * d1[1] * th) for rho in (1.0, 0.7, 0.35, 0.0)])
    if np.max(np.real(V.eval(probes))) > sd.mu - 2.0 * delta:
        raise ValueError("supp f1 not inside {V <= mu - 2 delta}")
    u12 = laplace_functional(sd, SumField([f1, f2]), n_r, n_theta)
    u1 = laplace_functional(sd, f1, n_r, n_theta)
    u2 = laplace_functional(sd, f2, n_r, n_theta)
    return abs(u12 - u1 - u2)


def gauss_bound_check(sd, f, lambdas, n_r=None, n_theta=None):
    """Gaussian-approximation bound |Upsilon(l f) - l^2 Sigma / 2| against
    eta Sigma (1 + eta Sigma), eta the worst off-range leakage of the tilted
    projector over the grid.

    The leakage norm |(1-Pi) e^{lf} Pi (1+Pi(e^{lf}-1)Pi)^{-1}| is taken in
    the full function space: for u in the range, |(1-Pi) e^{lf} u|^2 =
    <u|e^{2lf}u> - |Pi e^{lf} u|^2, so the norm is the top eigenvalue of the
    pencil (M[e^{2lf}] - M[e^{lf}]^2, M[e^{lf}]^2) over occupied Gram tables.
    Multiplication by e^{lf} leaves the holomorphic sector, so a complement
    restricted to unoccupied basis states would miss nearly all of it.
    """
    sigma = variance_linear_statistic(sd, f, n_r, n_theta)
    tr_f = mean_linear_statistic(sd, f, n_r, n_theta)
    etas, ups = [], []
    for lam in lambdas:
        G = occupied_table(sd, lambda z: np.exp(lam * f.eval(z)),
                           n_r, n_theta)
        G2 = occupied_table(sd, lambda z: np.exp(2.0 * lam * f.eval(z)),
                            n_r, n_theta)
        W = G2 - G @ G
        if lam != 0.0:
            top = scipy.linalg.eigh(W, G @ G, eigvals_only=True,
                                    subset_by_index=[sd.n_mu - 1,
                                                     sd.n_mu - 1])[0]
            etas.append(float(np.sqrt(max(top, 0.0))))
        else:
            etas.append(0.0)
        L = scipy.linalg.cholesky(G, lower=True)
        ups.append(2.0 * float(np.sum(np.log(np.diag(L).real)))
                   - lam * tr_f)
    eta = float(np.max(etas))
    bound = eta * sigma * (1.0 + eta * sigma)
    lhs = np.abs(np.asarray(ups)
                 - 0.5 * np.asarray(lambdas) ** 2 * sigma)
    return {"max_violation": float(np.max(lhs - bound)),
            "eta": eta, "Sigma": sigma,
            "lhs": lhs, "bound": bound,
            "lambdas": np.asarray(lambdas, dtype=float),
            "upsilon": np.asarray(ups)}


def commutator_hs_check(p, f, eta_scale=1.0, **quad_kw):
    """|[P_N, f(./eta)]|_HS^2 via the Gaussian-displacement average."""
    eps_tilde = p.eps / eta_scale
    return quadrature.gauss_displacement_hs(f, eps_tilde, **quad_kw)


# ---------------------------------------------------------------------------
# cutoff algebra for the variance split
# ---------------------------------------------------------------------------

class _PotentialCutoff(ScalarField):
    """1 - smoothstep(u(V)) profiles used by the decorrelation splitting."""

    def __init__(self, V, mu, delta, kind):
        self.V, self.mu, self.delta, self.kind = V, float(mu), float(delta), kind

    def _u(self, v):
        if self.kind == "bulk":
            return (v - (self.mu - self.delta)) / (self.delta / 2.0)
        return (np.abs(v - self.mu) - 2.0 * self.delta) / self.delta

    def eval(self, z):
        v = np.real(self.V.eval(z))
        return 1.0 - smoothstep(self._u(v))

    def grad(self, z):
        v = np.real(self.V.eval(z))
        dv = self.V.grad(z)
        if self.kind == "bulk":
            du = dv / (self.delta / 2.0)
        else:
            du = np.sign(v - self.mu) * dv / self.delta
        return -smoothstep_prime(self._u(v)) * du


def deco_cutoffs(V, mu, delta):
    """(chi1, chi2, chi3): band cutoff around the Fermi level, bulk cutoff,
    and their overlap chi1 + chi2 - 1."""
    chi1 = _PotentialCutoff(V, mu, delta, "band")
    chi2 = _PotentialCutoff(V, mu, delta, "bulk")
    chi3 = SumField([chi1, chi2, ScaledField(-1.0, Const())])
    return chi1, chi2, chi3


def variance_additivity_check(curve, V, f, delta):
    """|Sigma2(f) - Sigma2(f chi1) - Sigma2(f chi2) + Sigma2(f chi3)|.

    An algebraic identity when the two cutoff gradients have disjoint
    supports inside the droplet, so the result is pure quadrature noise.
    """
    mu = curve.level
    chi1, chi2, chi3 = deco_cutoffs(V, mu, delta)
    s_f = sigma2_bulk(V, mu, f)
    s_1 = sigma2_bulk(V, mu, ProductField(f, chi1))
    s_2 = sigma2_bulk(V, mu, ProductField(f, chi2))
    s_3 = sigma2_bulk(V, mu, ProductField(f, chi3))
    return abs(s_f - s_1 - s_2 + s_3)
