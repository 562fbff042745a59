"""Independent oracles shared by the test modules.

Nothing here goes through the package's bit-mask machinery: Pauli operators
are Kronecker products of explicit 2x2 matrices and fermions are built from
explicit Jordan-Wigner-free Fock-space matrices.
"""
from functools import reduce

import numpy as np
import pytest

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0 + 0j, -1.0]),
}


def kron_word(word):
    """Dense matrix of a Pauli word, site 0 as the leftmost Kronecker factor."""
    return reduce(np.kron, [PAULI[c] for c in word])


def kron_sum(n, terms):
    out = np.zeros((2**n, 2**n), dtype=complex)
    for coeff, word in terms:
        out += coeff * kron_word(word)
    return out


def heisenberg_dense(n, jx=1.0, jy=1.0, jz=1.0, hz=0.0, periodic=True):
    """Chain Hamiltonian written directly from spin matrices."""
    sx, sy, sz = PAULI["X"], PAULI["Y"], PAULI["Z"]

    def site_op(op, i):
        mats = [np.eye(2)] * n
        mats = list(mats)
        mats[i] = op
        return reduce(np.kron, mats)

    h = np.zeros((2**n, 2**n), dtype=complex)
    pairs = [(i, i + 1) for i in range(n - 1)] + ([(n - 1, 0)] if periodic else [])
    for i, j in pairs:
        for op, c in ((sx, jx), (sy, jy), (sz, jz)):
            h += 0.25 * c * site_op(op, i) @ site_op(op, j)
    for i in range(n):
        h += hz * site_op(sz, i)
    return h


def fock_annihilators(n_modes):
    """Fermionic annihilators on the occupation basis, sign from modes before ``j``.

    Basis index bit for mode ``j`` is ``n_modes - 1 - j`` (mode 0 leftmost),
    built by explicit enumeration over occupation tuples.
    """
    dim = 2**n_modes
    ops = []
    for j in range(n_modes):
        c = np.zeros((dim, dim))
        for state in range(dim):
            occ = [(state >> (n_modes - 1 - k)) & 1 for k in range(n_modes)]
            if occ[j]:
                sign = (-1) ** sum(occ[:j])
                new = list(occ)
                new[j] = 0
                target = int("".join(map(str, new)), 2)
                c[target, state] = sign
        ops.append(c)
    return ops


def hubbard_fock(lx, ly, t, u, ordering="spin_major"):
    n_sites = lx * ly
    modes = 2 * n_sites
    c = fock_annihilators(modes)

    def mode(site, spin):
        return site + spin * n_sites if ordering == "spin_major" else 2 * site + spin

    h = np.zeros((2**modes, 2**modes))
    for y in range(ly):
        for x in range(lx):
            s = y * lx + x
            nbrs = ([s + 1] if x + 1 < lx else []) + ([s + lx] if y + 1 < ly else [])
            for r in nbrs:
                for spin in (0, 1):
                    a, b = mode(s, spin), mode(r, spin)
                    h -= t * (c[a].T @ c[b] + c[b].T @ c[a])
    eye = np.eye(2**modes)
    for s in range(n_sites):
        nu = c[mode(s, 0)].T @ c[mode(s, 0)]
        nd = c[mode(s, 1)].T @ c[mode(s, 1)]
        h += u * (nu - 0.5 * eye) @ (nd - 0.5 * eye)
    return h


def naive_mps_state(cores, periodic):
    """Amplitude-by-amplitude matrix-product contraction over all bitstrings."""
    n = len(cores)
    out = np.zeros(2**n, dtype=complex)
    for idx in range(2**n):
        bits = [(idx >> (n - 1 - k)) & 1 for k in range(n)]
        mat = cores[0][:, bits[0], :]
        for k in range(1, n):
            mat = mat @ cores[k][:, bits[k], :]
        out[idx] = np.trace(mat) if periodic else mat[0, 0]
    return out


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


def random_spd(rng, n, shift=0.5):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T + shift * np.eye(n)


def random_states(rng, count, dim):
    return rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
