"""Pure-numpy Pauli-string kernels (fallback for the compiled ``_kernels``).

A Pauli string acts on a basis index as ``P|i> = phase * (-1)**popcount(i & signmask) |i ^ flip>``.
"""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _indices(dim):
    idx = np.arange(dim, dtype=np.int64)
    idx.setflags(write=False)
    return idx


def _signs(dim, mask):
    idx = _indices(dim)
    return 1.0 - 2.0 * (np.bitwise_count(idx & mask) & 1)


def apply_groups(flips, diags, psi):
    batch, dim = psi.shape
    idx = _indices(dim)
    out = np.zeros((batch, dim), dtype=np.complex128)
    for f, d in zip(flips, diags):
        # idx ^ f is an involution, so gathering equals scattering
        out += (d * psi)[:, idx ^ f]
    return out


def pauli_rotate(psi, flip, signmask, phase, a, c):
    dim = psi.shape[1]
    moved = (_signs(dim, signmask) * psi)[:, _indices(dim) ^ flip]
    psi *= a[:, None]
    psi += (c * phase)[:, None] * moved
    return psi


def pauli_expect(lam, phi, flip, signmask, phase):
    dim = phi.shape[1]
    moved = (_signs(dim, signmask) * phi)[:, _indices(dim) ^ flip]
    return phase * np.einsum("bi,bi->b", lam.conj(), moved)
