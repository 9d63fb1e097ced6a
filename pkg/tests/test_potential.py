import numpy as np
import pytest

from btdpp import potential, quadrature
from btdpp.potential import action_of_level, level_seed, parse_potential


def test_unit_disk_area(ginibre):
    assert abs(quadrature.droplet_integral(ginibre, 1.0) - 1.0) <= 1e-4


def test_ellipse_area(ellipse05):
    # area pi*mu/sqrt(1-t^2) for V = |z|^2 + t Re(z^2)
    exact = 1.0 / np.sqrt(1.0 - 0.25)
    assert abs(quadrature.droplet_integral(ellipse05, 1.0) - exact) <= 1e-3


def test_disk_radius_two(ginibre):
    assert abs(quadrature.droplet_integral(ginibre, 4.0) - 4.0) <= 1e-3


def test_action_inside_disk(ginibre):
    assert abs(action_of_level(ginibre, 0.7) - 0.7) <= 1e-4


def test_action_ellipse(ellipse05):
    assert abs(action_of_level(ellipse05, 1.0) - 1.1547) <= 1e-3


def test_action_at_minimum(ginibre):
    assert action_of_level(ginibre, 0.0) == 0.0


def test_action_monotone(ellipse03):
    levels = np.linspace(0.2, 1.4, 9)
    acts = [action_of_level(ellipse03, lam) for lam in levels]
    assert all(b >= a for a, b in zip(acts, acts[1:]))


def test_level_seed_unit_circle(ginibre):
    z0 = level_seed(ginibre, 1.0)
    assert abs(z0 - 1.0) <= 1e-12


def test_level_seed_ellipse(ellipse05):
    z0 = level_seed(ellipse05, 1.0)
    assert abs(z0 - 1.0 / np.sqrt(1.5)) <= 1e-10


def test_level_seed_empty_level(ginibre):
    with pytest.raises(ValueError):
        level_seed(ginibre, -0.5)


def test_gradient_consistency(ellipse03):
    # exact gradients vs central differences at a handful of generic points
    pts = np.array([0.3 + 0.7j, -1.1 + 0.2j, 0.05 - 0.9j, 1.3 + 1.3j])
    h = 1e-6
    gx = (ellipse03.eval(pts + h) - ellipse03.eval(pts - h)) / (2 * h)
    gy = (ellipse03.eval(pts + 1j * h) - ellipse03.eval(pts - 1j * h)) / (2 * h)
    g = ellipse03.grad(pts)
    scale = np.abs(g) + 1.0
    assert np.max(np.abs(g.real - gx) / scale) <= 1e-6
    assert np.max(np.abs(g.imag - gy) / scale) <= 1e-6


def test_hamiltonian_field_orthogonal(ellipse05):
    pts = np.array([0.4 + 0.1j, -0.3 + 0.8j, 1.0 - 0.2j])
    g = ellipse05.grad(pts)
    p = ellipse05.hamiltonian_field(pts)
    # real dot product of (gx, gy) with (-gy, gx)
    dots = g.real * p.real + g.imag * p.imag
    assert np.max(np.abs(dots)) <= 1e-12 * np.max(np.abs(g)) ** 2


def test_polynomial_rotation_invariance():
    # x^2 y^2 term rotated by 30 degrees: droplet measure is preserved
    V = parse_potential({"family": "polynomial_xy",
                         "terms": [[2, 0, 1.0], [0, 2, 1.0], [2, 2, 0.5]]})
    c, s = np.cos(np.pi / 6), np.sin(np.pi / 6)

    class Rotated:
        def eval(self, z):
            z = np.asarray(z, dtype=complex)
            w = (c * z.real - s * z.imag) + 1j * (s * z.real + c * z.imag)
            return V.eval(w)

        def grad(self, z):
            e = np.exp(1j * np.pi / 6)
            return np.conj(e) * V.grad(e * np.asarray(z, dtype=complex))

    a0 = quadrature.droplet_integral(V, 0.8)
    a1 = quadrature.droplet_integral(Rotated(), 0.8)
    assert abs(a0 - a1) <= 1e-6


def test_radial_profile_must_increase():
    with pytest.raises(ValueError):
        parse_potential({"family": "radial", "profile": [[1, -1.0]]})


def test_nonregular_boundary_flagged(ginibre):
    # perp_grad does not vanish anywhere on the sampled level curve
    th = np.exp(2j * np.pi * np.arange(32) / 32)
    p = ginibre.hamiltonian_field(th)
    assert np.min(np.abs(p)) > 0.1
