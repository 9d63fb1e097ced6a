"""Hamiltonian flow on level curves of the potential.

The flow dz/dt = i grad V traces each compact level curve counterclockwise;
its period and the Fourier modes of observables along it feed the
boundary-operator constructions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .quadrature import droplet_integral


@dataclass
class OrbitData:
    level: float
    period: float
    times: np.ndarray
    samples: np.ndarray  # z at uniform times over one period
    closure: float       # |z(T) - z(0)|
    energy_drift: float  # max |V(z(t)) - level|


def action_derivative(V, level, h=None):
    """dI/d(level) of the normalized sublevel measure, central difference."""
    if h is None:
        h = 1e-4 * (1.0 + abs(level))
    return (droplet_integral(V, level + h) - droplet_integral(V, level - h)) / (2 * h)


def integrate_flow(V, level=None, z0=None, n_samples=512, reverse=False,
                   rtol=1e-12, atol=1e-12):
    """One closed orbit of dz/dt = +-i grad V, resampled at uniform times.

    The period is located as the first positive-direction return to the
    Poincare section through z0 normal to the initial velocity, then polished
    by secant iteration on the section coordinate of the dense solution.
    """
    from . import potential as pot

    if z0 is None:
        if level is None:
            raise ValueError("need a level or an explicit seed")
        z0 = pot.level_seed(V, level)
    z0 = complex(z0)
    if level is None:
        level = float(np.real(V.eval(z0)))

    sign = -1.0 if reverse else 1.0

    def rhs(t, y):
        xi = sign * 1j * V.grad(y[0] + 1j * y[1])
        return [xi.real, xi.imag]

    xi0 = sign * 1j * V.grad(z0)
    speed0 = abs(xi0)
    if speed0 == 0:
        raise ValueError("seed is a critical point; no closed orbit")

    def section(t, y):
        # signed arclength-like coordinate along the initial velocity
        dz = (y[0] + 1j * y[1]) - z0
        return (np.conj(xi0) * dz).real

    section.direction = 1.0

    T_est = np.pi * action_derivative(V, level)
    if not np.isfinite(T_est) or T_est <= 0:
        T_est = 2 * np.pi * (abs(z0) + 1.0) / speed0

    horizon = 3.0 * T_est
    for _ in range(3):
        sol = solve_ivp(rhs, (0.0, horizon), [z0.real, z0.imag],
                        method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True, events=section)
        ts = sol.t_events[0]
        ts = ts[ts > 0.1 * T_est]
        if ts.size:
            break
        horizon *= 4.0
        T_est *= 2.0
    else:
        raise RuntimeError("flow did not return to the section")
    T = float(ts[0])

    # secant polish on the dense interpolant
    t0, t1 = T - 1e-6 * T, T
    g0 = section(t0, sol.sol(t0))
    g1 = section(t1, sol.sol(t1))
    for _ in range(8):
        if g1 == g0:
            break
        t2 = t1 - g1 * (t1 - t0) / (g1 - g0)
        t0, g0, t1, g1 = t1, g1, t2, section(t2, sol.sol(t2))
        if abs(t1 - t0) < 1e-15 * T:
            break
    T = float(t1)

    times = np.linspace(0.0, T, n_samples, endpoint=False)
    yy = sol.sol(times)
    samples = yy[0] + 1j * yy[1]
    z_end = complex(*sol.sol(T))
    closure = abs(z_end - z0)
    drift = float(np.max(np.abs(np.real(V.eval(samples)) - level)))
    return OrbitData(level=float(level), period=T, times=times,
                     samples=samples, closure=closure, energy_drift=drift)


def fourier_along_flow(func, orbit):
    """All Fourier coefficients of func along the orbit (index = mode mod n).

    c_m = (1/T) int_0^T func(z(t)) e^{-2 pi i m t / T} dt, by the exact
    trapezoid/FFT rule on the uniform time samples.
    """
    vals = np.asarray(func(orbit.samples), dtype=complex)
    return np.fft.fft(vals) / vals.size


def mode(coeffs, m):
    return coeffs[m % coeffs.size]


class SymbolFamily:
    """Fourier data of an observable over a one-parameter family of orbits.

    Rows of ``table`` are FFT coefficient vectors per level; ``a_hat(m, lam)``
    interpolates mode m linearly in the level, clamping to the end levels
    outside the grid.
    """

    def __init__(self, levels, table, periods, orbits):
        self.levels = np.asarray(levels, dtype=float)
        self.table = np.asarray(table)
        self.periods = np.asarray(periods, dtype=float)
        self.orbits = orbits

    @property
    def n_samples(self):
        return self.table.shape[1]

    def a_hat(self, m, lam):
        col = self.table[:, m % self.n_samples]
        lam = np.asarray(lam, dtype=float)
        re = np.interp(lam, self.levels, col.real)
        im = np.interp(lam, self.levels, col.imag)
        return re + 1j * im

    def mode_lipschitz(self, max_mode=8):
        """Max slope of any retained mode between adjacent levels."""
        dl = np.diff(self.levels)
        ms = np.r_[np.arange(0, max_mode + 1), np.arange(-max_mode, 0)]
        sl = np.abs(np.diff(self.table[:, ms], axis=0)) / dl[:, None]
        return float(np.max(sl))

    def period_defect(self, V):
        """Worst mismatch between orbit periods and pi * dI/d(level)."""
        pred = np.array([np.pi * action_derivative(V, lam)
                         for lam in self.levels])
        return float(np.max(np.abs(self.periods - pred)))


def symbol_family(V, func, mu, delta, n_levels=9, n_samples=512,
                  reverse=False):
    levels = np.linspace(mu - delta, mu + delta, n_levels)
    orbits, rows, periods = [], [], []
    for lam in levels:
        orb = integrate_flow(V, level=lam, n_samples=n_samples,
                             reverse=reverse)
        orbits.append(orb)
        rows.append(fourier_along_flow(func, orb))
        periods.append(orb.period)
    return SymbolFamily(levels, np.array(rows), periods, orbits)
