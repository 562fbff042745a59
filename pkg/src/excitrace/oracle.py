"""Ground truth and diagnostics: exact spectra, Morse levels, variances, Ritz audits, error fits."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .errors import DimensionMismatch, LengthMismatch, NotBound, TooFewPoints, TooLarge
from .hamiltonian import KINETIC_CONSTANT, GridOperator

MAX_DENSE_DIM = 1 << 14


@dataclass
class ExactSpectrum:
    energies: np.ndarray
    source: str
    dim: int


@dataclass
class RitzAudit:
    margins: np.ndarray
    violations: list
    tol: float

    @property
    def ok(self):
        return not self.violations


def exact_spectrum(h, k, max_dim=MAX_DENSE_DIM):
    """Lowest ``k`` eigenvalues by direct (non-iterative) diagonalization."""
    if h.dim > max_dim:
        raise TooLarge(f"dimension {h.dim} exceeds the dense limit {max_dim}")
    k = min(int(k), h.dim)
    if isinstance(h, GridOperator):
        return ExactSpectrum(grid_levels(h, k), "grid_tridiagonal", h.dim)
    w = np.linalg.eigvalsh(h.to_dense())
    return ExactSpectrum(np.sort(w)[:k], "dense_ed", h.dim)


def grid_levels(grid, k, refine=True):
    """Lowest ``k`` eigenvalues of a grid operator via its tridiagonal structure.

    Bisection gives the starting values; each is then polished by shifted
    inverse iteration with the Rayleigh quotient evaluated in difference form,
    ``T sum (psi_{i+1} - psi_i)^2 + sum V psi^2``, which avoids cancelling the
    large diagonal ``2T`` against the off-diagonals.
    """
    diag = grid.main_diagonal
    off = grid.off_diagonal
    w = eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1), eigvals_only=True)
    if not refine:
        return w
    return np.array([_inverse_iteration(grid, e) for e in w])


def _inverse_iteration(grid, shift, iters=4):
    n = grid.dim
    t = grid.kinetic_coeff
    ab = np.zeros((3, n))
    ab[0, 1:] = -t
    ab[1] = grid.main_diagonal - shift
    ab[2, :-1] = -t
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        v = solve_banded((1, 1), ab, v, check_finite=False)
        v /= np.linalg.norm(v)
    kinetic = t * (np.sum(np.diff(v) ** 2) + v[0] ** 2 + v[-1] ** 2)
    return float(kinetic + np.sum(grid.potential * v * v))


def morse_omega(de, am, mu):
    """Harmonic frequency ``a hbar sqrt(2 De / mu)`` in cm^-1."""
    return 2.0 * am * math.sqrt(de * KINETIC_CONSTANT / mu)


def morse_bound_count(de, am, mu):
    """Highest bound vibrational quantum number ``floor(2 De / omega - 1/2)``."""
    return math.floor(2.0 * de / morse_omega(de, am, mu) - 0.5)


def morse_analytic(n, de, am, mu):
    """Morse level ``omega (n + 1/2) - (omega (n + 1/2))^2 / (4 De)`` in cm^-1."""
    if n < 0 or n > morse_bound_count(de, am, mu):
        raise NotBound(f"level {n} is not bound (highest is {morse_bound_count(de, am, mu)})")
    x = morse_omega(de, am, mu) * (n + 0.5)
    return x - x * x / (4.0 * de)


def energy_variance(h, psi):
    """``(<H^2> - <H>^2, relative variance)`` for the normalized ``psi``."""
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != (h.dim,):
        raise DimensionMismatch(f"state has shape {psi.shape}, operator dimension is {h.dim}")
    psi = psi / np.linalg.norm(psi)
    h_psi = h.apply(psi)
    mean = float(np.vdot(psi, h_psi).real)
    # ||(H - <H>) psi||^2 equals <H^2> - <H>^2 but cannot cancel below zero
    resid = h_psi - mean * psi
    var = float(np.vdot(resid, resid).real)
    rel = var / (mean * mean) if mean != 0 else math.inf
    return var, rel


def ritz_audit(ritz, exact, tol=1e-10):
    """Margins ``E_a - E_a^exact``; margins below ``-tol`` break the Ritz bound."""
    ritz = np.asarray(ritz, dtype=float)
    ref = np.asarray(exact.energies if isinstance(exact, ExactSpectrum) else exact, dtype=float)
    if len(ritz) > len(ref):
        raise LengthMismatch(f"{len(ritz)} Ritz values but only {len(ref)} exact levels")
    margins = ritz - ref[: len(ritz)]
    bad = [int(i) for i in np.nonzero(margins < -tol)[0]]
    return RitzAudit(margins, bad, tol)


def relative_errors(ritz, exact):
    ritz = np.asarray(ritz, dtype=float)
    ref = np.asarray(exact, dtype=float)[: len(ritz)]
    return np.abs(ritz - ref) / np.abs(ref)


def error_scaling_fit(rel_errors):
    """Least-squares line through ``(k, rel_errors[k-1])`` for ``k = 1..n``: ``(slope, intercept, r2)``."""
    y = np.asarray(rel_errors, dtype=float)
    if y.size < 3:
        raise TooFewPoints(f"need at least 3 points, got {y.size}")
    k = np.arange(1, y.size + 1, dtype=float)
    kc = k - k.mean()
    slope = float(kc @ (y - y.mean()) / (kc @ kc))
    intercept = float(y.mean() - slope * k.mean())
    resid = y - (slope * k + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2
