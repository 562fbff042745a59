"""Subspace matrices, the trace loss Tr(S^-1 H), its gradient, and the Ritz post-process."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionMismatch, IllConditionedOverlap, InvalidBasisString

COND_LIMIT = 1e12


@dataclass
class SubspaceMatrices:
    ns: int
    S: np.ndarray
    H: np.ndarray
    cond_s: float
    h_states: np.ndarray | None = field(default=None, repr=False)


@dataclass
class AssembledEigenstates:
    energies: np.ndarray
    states: np.ndarray
    coeffs: np.ndarray
    cond_s: float


def _as_batch(states):
    batch = np.asarray(states, dtype=np.complex128)
    if batch.ndim != 2 or batch.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty list of equal-length states, got shape {batch.shape}")
    return batch


def assemble(states, h):
    """Overlap and Hamiltonian matrices ``S_ij = <psi_i|psi_j>``, ``H_ij = <psi_i|H|psi_j>``."""
    psi = _as_batch(states)
    if psi.shape[1] != h.dim:
        raise DimensionMismatch(f"states have dimension {psi.shape[1]}, operator expects {h.dim}")
    h_psi = np.atleast_2d(h.apply(psi))
    bra = psi.conj()
    s = linalg.as_hermitian(bra @ psi.T)
    hm = linalg.as_hermitian(bra @ h_psi.T)
    return SubspaceMatrices(psi.shape[0], s, hm, linalg.condition_number(s), h_psi)


def loss(m, jitter=0.0):
    return linalg.trace_inv_product(m.S, m.H, jitter=jitter)


def state_cotangents(m, states, h=None, factor=None):
    """Rows ``chi_i = sum_j (S^-1)_ji H|psi_j> - (S^-1 H S^-1)_ji |psi_j>``.

    With these, ``dL = sum_i 2 Re <d psi_i | chi_i>``.
    """
    psi = _as_batch(states)
    h_psi = m.h_states if m.h_states is not None else np.atleast_2d(h.apply(psi))
    if factor is None:
        factor = linalg.cholesky(m.S)
    # (S^-1)^T = conj(S^-1) for Hermitian S
    first = factor.solve(h_psi.conj()).conj()
    s_inv_h = factor.solve(m.H)
    b = factor.solve(s_inv_h.conj().T)
    return first - b.conj() @ psi


def ritz_postprocess(m, states, jitter=0.0):
    """Solve ``H c = E S c`` and build ``|Psi_a> = sum_i c_ia |psi_i>`` (rows of ``states``)."""
    psi = _as_batch(states)
    sol = linalg.gevp(m.H, m.S, jitter=jitter)
    assembled = sol.coeffs.T @ psi
    return AssembledEigenstates(sol.energies, assembled, sol.coeffs, sol.condition_s)


def subspace_vqe_loss(circuit, phi, inputs, h):
    """Uniformly weighted sum of ``<s_k|V^dag H V|s_k>`` over the input basis strings."""
    from .ansatz import SharedCircuit

    if len(set(inputs)) != len(inputs):
        raise InvalidBasisString("baseline inputs must be distinct basis strings")
    states = SharedCircuit(circuit, inputs).states(phi)
    return float(np.einsum("bi,bi->", states.conj(), h.apply(states)).real)


class TraceLossObjective:
    """``x -> (L, dL/dx, info)`` for ``ns`` independent states of one family.

    ``x`` concatenates the ``ns`` per-state parameter vectors.
    """

    def __init__(self, family, ns, h, cond_limit=COND_LIMIT, jitter=0.0):
        if family.dim != h.dim:
            raise DimensionMismatch(f"ansatz dimension {family.dim} != Hamiltonian dimension {h.dim}")
        self.family = family
        self.ns = int(ns)
        self.h = h
        self.cond_limit = cond_limit
        self.jitter = jitter
        self.n_params = self.ns * family.n_params

    def split(self, x):
        return np.asarray(x, dtype=np.float64).reshape(self.ns, self.family.n_params)

    def states(self, x):
        return self.family.forward_many(self.split(x))[0]

    def matrices(self, x):
        return assemble(self.states(x), self.h)

    def __call__(self, x):
        rows = self.split(x)
        psi, ctx = self.family.forward_many(rows)
        m = assemble(psi, self.h)
        factor = linalg.cholesky(m.S, jitter=self.jitter)
        value = linalg.trace_inv_product(m.S, m.H, factor=factor)
        cot = state_cotangents(m, psi, factor=factor)
        grad = self.family.backward_many(ctx, cot).reshape(-1)
        return value, grad, {"cond_S": m.cond_s, "S": m.S, "H": m.H}

    def check_condition(self, info, step=None):
        if info.get("cond_S", 1.0) > self.cond_limit:
            raise IllConditionedOverlap(info["cond_S"], self.cond_limit, step)


class BaselineObjective:
    """Subspace-VQE loss and gradient over the shared circuit angles."""

    def __init__(self, shared, h):
        if shared.dim != h.dim:
            raise DimensionMismatch(f"circuit dimension {shared.dim} != Hamiltonian dimension {h.dim}")
        self.shared = shared
        self.h = h
        self.n_params = shared.n_params

    def __call__(self, phi):
        psi, ctx = self.shared.forward(phi)
        h_psi = self.h.apply(psi)
        value = float(np.einsum("bi,bi->", psi.conj(), h_psi).real)
        # d<psi|H|psi> = 2 Re <d psi | H psi>
        grad = self.shared.backward(ctx, h_psi)
        s = linalg.as_hermitian(psi.conj() @ psi.T)
        return value, grad, {"cond_S": linalg.condition_number(s)}

    def states(self, phi):
        return self.shared.states(phi)

    def matrices(self, phi):
        return assemble(self.states(phi), self.h)

    def check_condition(self, info, step=None):
        pass
