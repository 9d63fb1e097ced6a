import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from btdpp import fock, statistic, toeplitz
from btdpp.statistic import GaussBump, ImZ, ImZ2, RadialBump, ReZ, ReZ2, tf

FINITE = dict(allow_nan=False, allow_infinity=False)

points = st.complex_numbers(max_magnitude=2.5, **FINITE)


def atoms():
    bump_center = st.complex_numbers(max_magnitude=1.0, **FINITE)
    return st.one_of(
        st.builds(ReZ), st.builds(ImZ), st.builds(ReZ2), st.builds(ImZ2),
        st.builds(GaussBump, bump_center,
                  st.floats(0.08, 0.5, **FINITE)),
        st.builds(RadialBump, st.floats(0.3, 1.2, **FINITE),
                  st.floats(0.08, 0.4, **FINITE)),
    )


@settings(max_examples=120, deadline=None)
@given(atoms(), points)
def test_atom_gradient_matches_finite_differences(atom, z):
    h = 1e-6
    zs = np.array([z + h, z - h, z + 1j * h, z - 1j * h])
    fp, fm, gp, gm = (float(v) for v in atom.eval(zs))
    fd = (fp - fm) / (2 * h) + 1j * (gp - gm) / (2 * h)
    g = complex(atom.grad(np.array([z]))[0])
    assert abs(fd - g) <= 2e-5 * (1.0 + abs(g))


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.5, 2.0, **FINITE), st.floats(0.05, 1.5, **FINITE),
       st.data())
def test_plateau_log_exact_on_core(lo, span, data):
    hi = lo + span
    pl = toeplitz.PlateauLog(lo, hi)
    x = data.draw(st.floats(lo, hi, **FINITE))
    assert pl(np.array([x]))[0] == np.log1p(x)
    d_lo, d_hi = pl.domain()
    assert pl(np.array([d_hi + 1.0]))[0] == 0.0
    assert pl(np.array([d_lo - 0.5]))[0] == 0.0


@settings(max_examples=60, deadline=None)
@given(st.floats(2.0, 40.0, **FINITE), points)
def test_occupied_envelope(N, z):
    # the truncated coherent-state sum never exceeds the Bergman diagonal N
    K = int(3 * N) + 8
    p = fock.FockParams(N, K)
    amp = fock.basis_matrix(p, np.array([z]))
    total = float(np.sum(np.abs(amp) ** 2))
    assert total <= N * (1.0 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 30.0, **FINITE),
       st.floats(0.0, 1.5, **FINITE), st.floats(0.1, 2.0, **FINITE))
def test_truncation_tail_monotone(N, I1, dI):
    # the spectral weight beyond index K grows with the droplet measure and
    # shrinks with the truncation order
    K = int(2 * N) + 6
    p = fock.FockParams(N, K)
    t1 = fock.truncation_tail(p, I1)
    t2 = fock.truncation_tail(p, I1 + dI)
    assert t2 + 1e-15 >= t1
    deeper = fock.truncation_tail(fock.FockParams(N, K + 8), I1 + dI)
    assert deeper <= t2 + 1e-15


@settings(max_examples=25, deadline=None)
@given(st.floats(-3.0, 3.0, **FINITE))
def test_variance_quadratic_in_amplitude(sd_gin16, alpha):
    base = statistic.variance_linear_statistic(sd_gin16, tf((1.0, ReZ())))
    scaled = statistic.variance_linear_statistic(sd_gin16,
                                                 tf((alpha, ReZ())))
    assert abs(scaled - alpha * alpha * base) <= 1e-10 * (1.0 + base)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 9), st.integers(0, 2 ** 32 - 1), st.data())
def test_gamma_functional_nonnegative(n, seed, data):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, n)) + 1j * r.normal(size=(n, n))
    H = 0.5 * (X + X.conj().T)
    nrm = np.linalg.norm(H, 2)
    M = 0.8 * H / max(nrm, 1e-9)
    k = data.draw(st.integers(1, n - 1))
    pi = np.zeros(n, dtype=bool)
    pi[:k] = True
    assert toeplitz.gamma_functional(M, pi) >= -1e-10


@settings(max_examples=50, deadline=None)
@given(atoms(), st.floats(-2.0, 2.0, **FINITE),
       st.floats(-2.0, 2.0, **FINITE))
def test_tf_roundtrip_through_spec(atom, c1, c2):
    f = tf((c1, atom), (c2, ReZ()))
    g = statistic.test_function_from_spec(f.to_spec())
    zs = np.array([0.1 + 0.2j, -0.7 + 0.05j, 1.1 - 0.6j])
    assert np.allclose(f.eval(zs), g.eval(zs), rtol=0, atol=1e-14)
    assert np.allclose(f.grad(zs), g.grad(zs), rtol=0, atol=1e-14)
