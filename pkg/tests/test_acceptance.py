"""One test per acceptance criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured numbers
(run pytest with ``-s`` or read the captured output on failure) and asserts
the criterion's verdict.
"""

import pytest

from btdpp import acceptance


def _check(index):
    r = acceptance.run_criterion(index)
    print(f"{'PASS' if r['passed'] else 'FAIL'} {r['name']}: {r['details']}")
    assert r["passed"], f"criterion {index} {r['name']}: {r['details']}"


def test_criterion_01_exact_radial_spectrum():
    _check(1)


def test_criterion_02_weyl_droplet_count():
    _check(2)


def test_criterion_03_forbidden_region_decay():
    _check(3)


def test_criterion_04_bulk_universality():
    _check(4)


def test_criterion_05_variance_limit():
    _check(5)


def test_criterion_06_szego_constant():
    _check(6)


def test_criterion_07_toeplitz_structure():
    _check(7)


def test_criterion_08_gaussian_tail_bound():
    _check(8)


def test_criterion_09_support_decorrelation():
    _check(9)


def test_criterion_10_functional_identities():
    _check(10)


def test_criterion_11_sampler_moments():
    _check(11)
