# Compiled inner-loop kernels.  Semantics mirror btdpp._core_py exactly;
# see that module for documentation.

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


def band_contract(double[:, ::1] basis_t, complex[:, ::1] modes):
    cdef Py_ssize_t K = basis_t.shape[0]
    cdef Py_ssize_t n_r = basis_t.shape[1]
    cdef Py_ssize_t m, j, r
    cdef double complex acc, w
    cdef double b
    H_arr = np.zeros((K, K), dtype=np.complex128)
    cdef complex[:, ::1] H = H_arr
    for m in range(K):
        for j in range(K - m):
            acc = 0
            for r in range(n_r):
                acc = acc + basis_t[j, r] * basis_t[j + m, r] * modes[r, K - 1 - m]
            H[j, j + m] = acc
            if m:
                H[j + m, j] = acc.conjugate()
    return H_arr


def hkpv_scan(complex[:, ::1] psi, complex[:, ::1] gram_rows, double[::1] us,
              double envelope):
    cdef Py_ssize_t B = psi.shape[0]
    cdef Py_ssize_t M = psi.shape[1]
    cdef Py_ssize_t R = gram_rows.shape[0]
    cdef Py_ssize_t b, k, i
    cdef double resid, re, im
    cdef double complex c
    for b in range(B):
        resid = 0
        for k in range(M):
            c = psi[b, k]
            resid += c.real * c.real + c.imag * c.imag
        for i in range(R):
            c = 0
            for k in range(M):
                c = c + gram_rows[i, k] * psi[b, k]
            resid -= c.real * c.real + c.imag * c.imag
        if us[b] * envelope < resid:
            return b
    return -1
