"""Timing comparison of the compiled and NumPy inner-loop kernels.

Run:  python3 benchmarks/bench_core.py [--repeats 7]

Times band_contract (operator assembly inner loop) and hkpv_scan (sampler
rejection scan) on representative shapes, printing the median over repeats
for each backend and the speedup.
"""

import argparse
import statistics
import time

import numpy as np

from btdpp import _core_py

try:
    from btdpp import _core
except ImportError:
    _core = None


def _timeit(fn, args, repeats):
    fn(*args)  # warm up
    ts = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        ts.append(time.perf_counter() - t0)
    return statistics.median(ts)


def band_inputs(rng, K, n_r):
    basis_t = rng.normal(size=(K, n_r))
    modes = (rng.normal(size=(n_r, 2 * K - 1))
             + 1j * rng.normal(size=(n_r, 2 * K - 1)))
    for m in range(1, K):
        modes[:, K - 1 - m] = np.conj(modes[:, K - 1 + m])
    modes[:, K - 1] = modes[:, K - 1].real
    return np.ascontiguousarray(basis_t), np.ascontiguousarray(modes)


def scan_inputs(rng, B, M, r):
    psi = rng.normal(size=(B, M)) + 1j * rng.normal(size=(B, M))
    g = rng.normal(size=(r, M)) + 1j * rng.normal(size=(r, M))
    if r:
        q, _ = np.linalg.qr(g.conj().T)
        g = q.conj().T
    # an envelope too high to accept keeps the scan length deterministic
    us = np.full(B, 0.9999)
    return (np.ascontiguousarray(psi), np.ascontiguousarray(g), us,
            float(4 * M))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    cases = []
    for K, n_r in ((48, 120), (96, 220), (192, 420)):
        cases.append((f"band_contract K={K} n_r={n_r}",
                      "band_contract", band_inputs(rng, K, n_r)))
    for B, M, r in ((256, 32, 0), (256, 64, 16), (512, 128, 48)):
        cases.append((f"hkpv_scan B={B} M={M} rank={r}",
                      "hkpv_scan", scan_inputs(rng, B, M, r)))

    header = f"{'case':38s} {'numpy':>10s} {'cython':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for label, fname, inputs in cases:
        t_py = _timeit(getattr(_core_py, fname), inputs, args.repeats)
        if _core is None:
            print(f"{label:38s} {t_py * 1e3:9.3f}ms {'n/a':>10s} {'':>8s}")
            continue
        t_cy = _timeit(getattr(_core, fname), inputs, args.repeats)
        print(f"{label:38s} {t_py * 1e3:9.3f}ms {t_cy * 1e3:9.3f}ms "
              f"{t_py / t_cy:7.2f}x")
    if _core is None:
        print("compiled backend unavailable; showing NumPy only")


if __name__ == "__main__":
    main()
