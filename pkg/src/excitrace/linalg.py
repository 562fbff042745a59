"""Small dense Hermitian linear algebra for the Ns x Ns subspace problem.

Everything goes through a Cholesky factor of the overlap matrix; the inverse
of S is never formed.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, solve_triangular

from .errors import DimensionMismatch, NotPositiveDefinite


@dataclass(frozen=True)
class CholeskyFactor:
    lower: np.ndarray
    jitter: float = 0.0

    @property
    def dim(self):
        return self.lower.shape[0]

    def solve(self, rhs):
        """Solve ``S X = rhs`` with ``S = L L^dag``."""
        y = solve_triangular(self.lower, rhs, lower=True, check_finite=False)
        return solve_triangular(self.lower, y, lower=True, trans="C", check_finite=False)


@dataclass(frozen=True)
class RitzSolution:
    energies: np.ndarray
    coeffs: np.ndarray
    condition_s: float
    jitter: float = 0.0


def as_hermitian(a):
    """Complex copy of ``a`` with the lower triangle mirrored from the upper one."""
    a = np.array(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    upper = np.triu(a, 1)
    out = upper + upper.conj().T
    out[np.diag_indices_from(out)] = a.diagonal().real
    return out


def cholesky(s, jitter=0.0):
    """Lower Cholesky factor of a Hermitian positive definite matrix.

    With ``jitter > 0`` a failed factorization is retried once on
    ``S + jitter * Tr(S)/n * I`` and a ``RuntimeWarning`` is issued.
    """
    s = np.asarray(s, dtype=np.complex128)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {s.shape}")
    try:
        return CholeskyFactor(_potrf(s))
    except NotPositiveDefinite:
        if jitter <= 0:
            raise
    shift = jitter * np.trace(s).real / s.shape[0]
    warnings.warn(f"overlap not positive definite; retrying with diagonal jitter {shift:.3e}",
                  RuntimeWarning, stacklevel=2)
    return CholeskyFactor(_potrf(s + shift * np.eye(s.shape[0])), jitter=float(shift))


def _potrf(s):
    if not np.all(np.isfinite(s)):
        raise NotPositiveDefinite(0, "matrix has non-finite entries")
    lower, info = lapack.zpotrf(s, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefinite(info - 1)
    if info < 0:
        raise ValueError(f"zpotrf argument {-info} invalid")
    return lower


def gevp(h, s, jitter=0.0):
    """Solve ``H c = E S c`` by Cholesky reduction to ``L^-1 H L^-dag v = E v``.

    Energies ascend; equal eigenvalues keep the eigensolver's order. Columns of
    ``coeffs`` are S-orthonormal.
    """
    h = np.asarray(h, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    if h.shape != s.shape:
        raise DimensionMismatch(f"H {h.shape} and S {s.shape} differ")
    factor = cholesky(s, jitter=jitter)
    lower = factor.lower
    tmp = solve_triangular(lower, h, lower=True, check_finite=False)
    reduced = solve_triangular(lower, tmp.conj().T, lower=True, check_finite=False)
    reduced = 0.5 * (reduced + reduced.conj().T)
    energies, vecs = np.linalg.eigh(reduced)
    order = np.argsort(energies, kind="stable")
    energies, vecs = energies[order], vecs[:, order]
    coeffs = solve_triangular(lower, vecs, lower=True, trans="C", check_finite=False)
    return RitzSolution(energies, coeffs, condition_number(s), factor.jitter)


def trace_inv_product(s, h, jitter=0.0, factor=None):
    """``Tr(S^-1 H)`` via Cholesky solves."""
    s = np.asarray(s, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    if h.shape != s.shape:
        raise DimensionMismatch(f"H {h.shape} and S {s.shape} differ")
    if factor is None:
        factor = cholesky(s, jitter=jitter)
    value = np.trace(factor.solve(h))
    scale = max(1.0, abs(value.real))
    assert abs(value.imag) <= 1e-10 * scale, f"Tr(S^-1 H) has imaginary part {value.imag:.3e}"
    return float(value.real)


def condition_number(s):
    """Ratio of extreme eigenvalues of a Hermitian PSD matrix; ``inf`` if singular."""
    w = np.linalg.eigvalsh(np.asarray(s, dtype=np.complex128))
    if w[0] <= 0:
        return float("inf")
    return float(w[-1] / w[0])
