"""Pure-NumPy implementations of the two inner-loop kernels.

Interchangeable with the compiled module ``btdpp._core``; selection happens in
``btdpp._backend``.  Keep signatures and semantics in sync with ``_core.pyx``.
"""

import numpy as np

BACKEND_NAME = "numpy"


def band_contract(basis_t, modes):
    """Contract radial basis against weighted angular modes.

    Parameters
    ----------
    basis_t : (K, n_r) float array
        ``basis_t[k, r]`` is the scaled radial basis value B_k(t_r).
    modes : (n_r, 2K-1) complex array
        ``modes[r, m + K - 1]`` holds ``w_r * ghat_m(r)`` for offsets
        m = -(K-1) .. K-1 of a real symbol g (so ghat_{-m} = conj(ghat_m)).

    Returns
    -------
    (K, K) complex Hermitian matrix with entries
    ``H[j, k] = sum_r basis_t[j, r] * basis_t[k, r] * modes[r, K-1-(k-j)]``.
    """
    K = basis_t.shape[0]
    H = np.zeros((K, K), dtype=np.complex128)
    for m in range(K):
        # upper diagonal k = j + m; symbol offset j - k = -m
        col = np.ascontiguousarray(modes[:, K - 1 - m])
        diag = (basis_t[: K - m] * basis_t[m:]) @ col
        idx = np.arange(K - m)
        H[idx, idx + m] = diag
        if m:
            H[idx + m, idx] = np.conj(diag)
    return H


def hkpv_scan(psi, gram_rows, us, envelope):
    """Scan a proposal batch, return index of first acceptance (or -1).

    psi : (B, M) complex -- occupied-state amplitude vectors of the proposals.
    gram_rows : (r, M) complex -- orthonormal directions already consumed.
    us : (B,) float -- acceptance uniforms.
    envelope : float -- rejection envelope (max of the conditional intensity).

    A proposal b is accepted when ``us[b] * envelope < resid_b`` with
    ``resid_b = |psi_b|^2 - |gram_rows @ psi_b|^2``.
    """
    n1 = np.einsum("bk,bk->b", psi.real, psi.real) + np.einsum(
        "bk,bk->b", psi.imag, psi.imag
    )
    if gram_rows.shape[0]:
        proj = gram_rows @ psi.T  # (r, B)
        n1 = n1 - np.einsum("rb,rb->b", proj.real, proj.real) - np.einsum(
            "rb,rb->b", proj.imag, proj.imag
        )
    hits = np.nonzero(us * envelope < n1)[0]
    return int(hits[0]) if hits.size else -1
