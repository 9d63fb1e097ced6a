"""Confining potentials on the plane and their sublevel-set geometry.

Potentials form a small closed algebra (radial profiles, an anisotropic
quadratic family, bivariate polynomials) so exact gradients are always
available; no numerical differentiation happens anywhere downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quadrature


class Potential:
    """Interface: eval / grad (as V_x + i V_y) / hamiltonian_field / to_spec."""

    def eval(self, z):
        raise NotImplementedError

    def grad(self, z):
        raise NotImplementedError

    def hamiltonian_field(self, z):
        """Symplectic gradient (-V_y, V_x) as a complex number i * grad."""
        return 1j * self.grad(z)

    def to_spec(self):
        raise NotImplementedError


@dataclass(frozen=True)
class RadialPotential(Potential):
    """V(z) = v(|z|^2) with profile v(s) = sum c_p s^p, c_p >= 0."""

    coeffs: tuple  # ((power, coeff), ...)

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("empty radial profile")
        for p, c in self.coeffs:
            if p < 0 or (p > 0 and c < 0):
                raise ValueError("radial profile must be monotone on [0, inf)")
        if not any(p >= 1 and c > 0 for p, c in self.coeffs):
            raise ValueError("radial profile must be non-constant")

    def profile(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for p, c in self.coeffs:
            out = out + c * s**p
        return out

    def profile_prime(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for p, c in self.coeffs:
            if p >= 1:
                out = out + c * p * s ** (p - 1)
        return out

    def eval(self, z):
        z = np.asarray(z)
        return self.profile(np.abs(z) ** 2)

    def grad(self, z):
        z = np.asarray(z)
        return 2.0 * self.profile_prime(np.abs(z) ** 2) * z

    def to_spec(self):
        return {"family": "radial", "profile": [[int(p), float(c)]
                                                for p, c in self.coeffs]}


@dataclass(frozen=True)
class AnisotropicQuadratic(Potential):
    """V(z) = |z|^2 + t Re(z^2) = (1+t) x^2 + (1-t) y^2, |t| < 1."""

    t: float

    def __post_init__(self):
        if not abs(self.t) < 1.0:
            raise ValueError("anisotropy must satisfy |t| < 1")

    def eval(self, z):
        z = np.asarray(z)
        return np.abs(z) ** 2 + self.t * np.real(z * z)

    def grad(self, z):
        z = np.asarray(z)
        return 2.0 * (1.0 + self.t) * z.real + 2j * (1.0 - self.t) * z.imag

    def to_spec(self):
        return {"family": "anisotropic_quadratic", "t": float(self.t)}


@dataclass(frozen=True)
class PolynomialXY(Potential):
    """V(x, y) = sum over terms c * x^i y^j."""

    terms: tuple  # ((i, j, c), ...)

    def eval(self, z):
        z = np.asarray(z)
        x, y = z.real, z.imag
        out = np.zeros_like(x, dtype=float)
        for i, j, c in self.terms:
            out = out + c * x**i * y**j
        return out

    def grad(self, z):
        z = np.asarray(z)
        x, y = z.real, z.imag
        gx = np.zeros_like(x, dtype=float)
        gy = np.zeros_like(x, dtype=float)
        for i, j, c in self.terms:
            if i >= 1:
                gx += c * i * x ** (i - 1) * y**j
            if j >= 1:
                gy += c * j * x**i * y ** (j - 1)
        return gx + 1j * gy

    def rotated(self, angle):
        """Potential composed with rotation by -angle (V'(z) = V(e^{-ia} z))."""
        ca, sa = np.cos(angle), np.sin(angle)
        from collections import defaultdict
        from math import comb

        acc = defaultdict(float)
        for i, j, c in self.terms:
            # substitute x -> ca x + sa y, y -> -sa x + ca y
            for a in range(i + 1):
                for b in range(j + 1):
                    coeff = (c * comb(i, a) * comb(j, b)
                             * ca**a * sa ** (i - a)
                             * (-sa) ** (j - b) * ca**b)
                    acc[(a + (j - b), (i - a) + b)] += coeff
    # (x-power from x-branch of first factor + x-branch of second, etc.)
        terms = tuple((i, j, c) for (i, j), c in sorted(acc.items())
                      if abs(c) > 1e-15)
        return PolynomialXY(terms)

    def to_spec(self):
        return {"family": "polynomial_xy",
                "terms": [[int(i), int(j), float(c)] for i, j, c in self.terms]}


def ginibre():
    """V(z) = |z|^2; the droplet at level mu is the disk of gamma-measure mu."""
    return RadialPotential(((1, 1.0),))


def parse_potential(spec):
    fam = spec.get("family")
    if fam == "radial":
        return RadialPotential(tuple((int(p), float(c))
                                     for p, c in spec["profile"]))
    if fam == "anisotropic_quadratic":
        return AnisotropicQuadratic(float(spec["t"]))
    if fam == "polynomial_xy":
        return PolynomialXY(tuple((int(i), int(j), float(c))
                                  for i, j, c in spec["terms"]))
    raise ValueError(f"unknown potential family {fam!r}")


# ---------------------------------------------------------------------------
# sublevel-set geometry
# ---------------------------------------------------------------------------

def droplet_area(V, mu, rel_tol=1e-7, r_max=None):
    """gamma-measure of {V < mu} (area / pi)."""
    return quadrature.droplet_integral(V, mu, h=None, rel_tol=rel_tol,
                                       r_max=r_max)


def action_of_level(V, lam, rel_tol=1e-7, r_max=None):
    """Action I_lam = gamma({V < lam}); 0 when the sublevel set is empty."""
    try:
        r_max = r_max if r_max is not None else quadrature.bounding_radius(V, lam)
    except ValueError:
        raise
    probe = np.linspace(0.0, r_max, 2048)
    if not np.any(V.eval(probe + 0j) < lam):
        # cheap emptiness proxy on the axis; confirm on a coarse grid
        th = np.exp(1j * np.linspace(0, 2 * np.pi, 64, endpoint=False))
        if not np.any(V.eval(np.outer(probe, th)) < lam):
            return 0.0
    return quadrature.droplet_integral(V, lam, h=None, rel_tol=rel_tol,
                                       r_max=r_max)


def level_seed(V, mu, r_max=None, tol_scale=1e-12):
    """Point x > 0 on the positive real axis with V(x) = mu.

    Bisection bracket from a dense scan, polished by Newton steps using the
    exact gradient, to |V(x) - mu| <= tol_scale * (1 + |mu|).
    """
    if r_max is None:
        r_max = quadrature.bounding_radius(V, mu)
    xs = np.linspace(0.0, r_max, 4097)
    vals = V.eval(xs + 0j) - mu
    sign = vals < 0
    flips = np.nonzero(sign[:-1] != sign[1:])[0]
    if flips.size == 0:
        raise ValueError(f"level curve V = {mu} does not cross the positive "
                         "real axis")
    i = flips[0]
    lo, hi = xs[i], xs[i + 1]
    flo = vals[i]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = float(V.eval(mid + 0j)) - mu
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < 1e-14 * max(1.0, hi):
            break
    x = 0.5 * (lo + hi)
    tol = tol_scale * (1.0 + abs(mu))
    for _ in range(50):
        fx = float(V.eval(x + 0j)) - mu
        if abs(fx) <= tol:
            return float(x)
        dv = float(np.real(V.grad(x + 0j)))
        if dv == 0.0:
            break
        x -= fx / dv
    fx = float(V.eval(x + 0j)) - mu
    if abs(fx) > tol:
        raise ArithmeticError(f"level seed refinement stalled at residual {fx}")
    return float(x)
