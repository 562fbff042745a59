"""Parameterized state families with dense-state and vector-Jacobian-product contracts.

Every family maps a real parameter vector to a dense complex state and pulls
a state-space cotangent ``c`` back to parameter space as
``g[k] = 2 Re <c | d psi / d theta_k>``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidBasisString, InvalidSize, ShapeMismatch
from .hamiltonian import word_masks

ROTATION_CONVENTION = "R_a(t) = exp(-i t/2 a); entanglers exp(+i t P P)"
GATE_ORDER = "per block: Ry, Rz, Rx layers over qubits 0..N-1, then (ZZ, XX, YY) on pairs j=0..N-2"


@dataclass
class ParamVector:
    values: np.ndarray
    family_id: str
    state_index: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("parameter vector has non-finite entries")


@dataclass
class MpsTensors:
    """Rank-3 cores ``(left, phys, right)``; periodic chains close with a trace."""

    cores: list
    boundary: str = "periodic"

    @property
    def n_sites(self):
        return len(self.cores)

    def __post_init__(self):
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        for k, core in enumerate(self.cores):
            if core.ndim != 3:
                raise ShapeMismatch(f"core {k} has rank {core.ndim}, expected 3")
            nxt = self.cores[(k + 1) % len(self.cores)]
            if k + 1 < len(self.cores) or self.boundary == "periodic":
                if core.shape[2] != nxt.shape[0]:
                    raise ShapeMismatch(f"bond mismatch between cores {k} and {(k + 1) % len(self.cores)}")
        if self.boundary == "open" and (self.cores[0].shape[0] != 1 or self.cores[-1].shape[2] != 1):
            raise ShapeMismatch("open MPS needs unit outer bonds")


class AnsatzFamily:
    """Base class. Subclasses implement ``forward`` and ``backward``."""

    family_id = "base"
    n_params = 0
    dim = 0

    def check(self, params):
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.n_params,):
            raise ShapeMismatch(f"{self.family_id} expects {self.n_params} parameters, got {params.shape}")
        return params

    def _check_cotangent(self, cotangent):
        cotangent = np.asarray(cotangent, dtype=np.complex128)
        if cotangent.shape != (self.dim,):
            raise ShapeMismatch(f"cotangent has shape {cotangent.shape}, state dimension is {self.dim}")
        return cotangent

    def forward(self, params):
        raise NotImplementedError

    def backward(self, ctx, cotangent):
        raise NotImplementedError

    def state(self, params):
        return self.forward(params)[0]

    def vjp(self, params, cotangent):
        _, ctx = self.forward(params)
        return self.backward(ctx, cotangent)

    def forward_many(self, rows):
        """Build one state per parameter row; returns ``(states, ctx)``."""
        out = [self.forward(p) for p in rows]
        return np.array([s for s, _ in out]), [c for _, c in out]

    def backward_many(self, ctx, cotangents):
        return np.array([self.backward(c, cot) for c, cot in zip(ctx, cotangents)])

    def metadata(self):
        return {"family": self.family_id, "n_params": self.n_params, "dim": self.dim}


class DenseTable(AnsatzFamily):
    """Every amplitude is free: ``params = [Re psi, Im psi]``."""

    family_id = "dense"

    def __init__(self, dim):
        if dim < 1:
            raise InvalidSize(f"dimension must be positive, got {dim}")
        self.dim = int(dim)
        self.n_params = 2 * self.dim

    def forward(self, params):
        params = self.check(params)
        return params[: self.dim] + 1j * params[self.dim:], None

    def backward(self, ctx, cotangent):
        c = self._check_cotangent(cotangent)
        return 2.0 * np.concatenate([c.real, c.imag])


class MPS(AnsatzFamily):
    """Matrix product state with open or periodic boundary.

    Cores are real by default; with ``complex_cores=True`` the parameter vector
    holds all real parts followed by all imaginary parts.
    ``bond_dims`` (length ``n_sites + 1``) overrides the uniform bond dimension.
    """

    def __init__(self, n_sites, bond_dim, boundary="periodic", complex_cores=False,
                 bond_dims=None, family_id=None):
        if n_sites < 2:
            raise InvalidSize(f"MPS needs at least 2 sites, got {n_sites}")
        if boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {boundary!r}")
        self.n_sites = int(n_sites)
        self.bond_dim = int(bond_dim)
        self.boundary = boundary
        self.complex_cores = bool(complex_cores)
        if bond_dims is None:
            outer = self.bond_dim if boundary == "periodic" else 1
            bond_dims = [outer] + [self.bond_dim] * (n_sites - 1) + [outer]
        if len(bond_dims) != n_sites + 1 or bond_dims[0] != bond_dims[-1]:
            raise ShapeMismatch(f"bad bond dimensions {bond_dims}")
        self.bond_dims = [int(b) for b in bond_dims]
        self.shapes = [(self.bond_dims[k], 2, self.bond_dims[k + 1]) for k in range(n_sites)]
        self.sizes = [int(np.prod(s)) for s in self.shapes]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.n_real = int(self.offsets[-1])
        self.n_params = self.n_real * (2 if self.complex_cores else 1)
        self.dim = 1 << n_sites
        self.split = n_sites // 2
        self.family_id = family_id or f"mps_{boundary}"

    def metadata(self):
        return {**super().metadata(), "n_sites": self.n_sites, "bond_dim": self.bond_dim,
                "bond_dims": self.bond_dims, "boundary": self.boundary,
                "complex_cores": self.complex_cores}

    def cores(self, params):
        params = self.check(params)
        flat = params[: self.n_real]
        if self.complex_cores:
            flat = flat + 1j * params[self.n_real:]
        return [flat[self.offsets[k]:self.offsets[k + 1]].reshape(self.shapes[k])
                for k in range(self.n_sites)]

    def tensors(self, params):
        return MpsTensors(self.cores(params), self.boundary)

    def forward(self, params):
        cores = self.cores(params)
        n, m = self.n_sites, self.split
        left = [cores[0].transpose(1, 0, 2)]
        for k in range(1, m):
            left.append(_merge_left(left[-1], cores[k]))
        right = [cores[n - 1].transpose(1, 0, 2)]
        for k in range(n - 2, m - 1, -1):
            right.append(_merge_right(cores[k], right[-1]))
        e, f = left[-1], right[-1]
        p, a, b = e.shape
        q = f.shape[0]
        e2 = e.reshape(p, a * b)
        ft2 = f.transpose(0, 2, 1).reshape(q, a * b)
        psi = (e2 @ ft2.T).reshape(-1).astype(np.complex128)
        return psi, (cores, left, right)

    def backward(self, ctx, cotangent):
        c = self._check_cotangent(cotangent)
        cores, left, right = ctx
        n, m = self.n_sites, self.split
        # with real cores only the real part of the seed reaches Re(dA)
        seed = c.conj() if self.complex_cores else np.ascontiguousarray(c.real)
        e, f = left[-1], right[-1]
        p, a, b = e.shape
        q = f.shape[0]
        seed = seed.reshape(p, q)
        de = (seed @ f.transpose(0, 2, 1).reshape(q, a * b)).reshape(p, a, b)
        dft = (seed.T @ e.reshape(p, a * b)).reshape(q, a, b)
        df = dft.transpose(0, 2, 1)

        grads = [None] * n
        for k in range(m - 1, 0, -1):
            de, grads[k] = _merge_left_vjp(left[k - 1], cores[k], de)
        grads[0] = de.transpose(1, 0, 2)
        for k in range(m, n - 1):
            # right[j] covers sites n-1-j .. n-1
            j = n - 1 - k
            df, grads[k] = _merge_right_vjp(cores[k], right[j - 1], df)
        grads[n - 1] = df.transpose(1, 0, 2)

        flat = np.concatenate([g.reshape(-1) for g in grads])
        if self.complex_cores:
            return np.concatenate([2.0 * flat.real, -2.0 * flat.imag])
        return 2.0 * np.real(flat)


def _merge_left(e, core):
    p, a, b = e.shape
    _, s, c = core.shape
    out = (e.reshape(p * a, b) @ core.reshape(b, s * c)).reshape(p, a, s, c)
    return out.transpose(0, 2, 1, 3).reshape(p * s, a, c)


def _merge_left_vjp(e, core, dout):
    p, a, b = e.shape
    _, s, c = core.shape
    d = dout.reshape(p, s, a, c).transpose(0, 2, 1, 3).reshape(p * a, s * c)
    de = (d @ core.reshape(b, s * c).T).reshape(p, a, b)
    dcore = (e.reshape(p * a, b).T @ d).reshape(b, s, c)
    return de, dcore


def _merge_right(core, f):
    b, s, c = core.shape
    q, _, d = f.shape
    at = core.transpose(1, 0, 2).reshape(s * b, c)
    fr = f.transpose(1, 0, 2).reshape(c, q * d)
    out = (at @ fr).reshape(s, b, q, d)
    return out.transpose(0, 2, 1, 3).reshape(s * q, b, d)


def _merge_right_vjp(core, f, dout):
    b, s, c = core.shape
    q, _, d = f.shape
    at = core.transpose(1, 0, 2).reshape(s * b, c)
    fr = f.transpose(1, 0, 2).reshape(c, q * d)
    dd = dout.reshape(s, q, b, d).transpose(0, 2, 1, 3).reshape(s * b, q * d)
    dcore = (dd @ fr.T).reshape(s, b, c).transpose(1, 0, 2)
    df = (at.T @ dd).reshape(c, q, d).transpose(1, 0, 2)
    return df, dcore


def quantics_tt(n_bits, max_rank, complex_cores=False):
    """Open MPS over grid bits with ranks capped at ``min(max_rank, 2**k, 2**(n-k))``."""
    bonds = [min(max_rank, 2 ** k, 2 ** (n_bits - k)) for k in range(n_bits + 1)]
    return MPS(n_bits, max_rank, boundary="open", complex_cores=complex_cores,
               bond_dims=bonds, family_id="quantics_tt")


def mps_pair_overlap(a, b):
    """``<a|b>`` by transfer-matrix contraction, without forming dense states."""
    if a.n_sites != b.n_sites or a.boundary != b.boundary:
        raise ShapeMismatch("MPS pair must share size and boundary")
    if a.boundary == "open":
        env = np.ones((1, 1), dtype=complex)
        for ca, cb in zip(a.cores, b.cores):
            if ca.shape[1] != cb.shape[1]:
                raise ShapeMismatch("physical dimensions differ")
            env = np.einsum("xy,xsu,ysv->uv", env, ca.conj(), cb, optimize=True)
        return complex(env[0, 0])
    transfer = None
    for ca, cb in zip(a.cores, b.cores):
        if ca.shape[1] != cb.shape[1]:
            raise ShapeMismatch("physical dimensions differ")
        t = sum(np.kron(ca[:, s, :].conj(), cb[:, s, :]) for s in range(ca.shape[1]))
        transfer = t if transfer is None else transfer @ t
    return complex(np.trace(transfer))


@dataclass
class _Gate:
    flip: int
    sign: int
    phase: complex
    beta: float
    label: str


class CircuitAnsatz(AnsatzFamily):
    """Hardware-efficient circuit of Pauli rotations applied to a basis input.

    Each gate is ``exp(i beta theta P)``: ``beta = -1/2`` for single-qubit
    rotations and ``beta = 1`` for the ZZ/XX/YY entanglers.
    """

    family_id = "circuit"

    def __init__(self, n_qubits, depth, input_state=None):
        if n_qubits < 1 or depth < 1:
            raise InvalidSize(f"circuit needs n_qubits >= 1 and depth >= 1, got {n_qubits}, {depth}")
        self.n_qubits = int(n_qubits)
        self.depth = int(depth)
        self.dim = 1 << self.n_qubits
        self.input_state = input_state or "0" * self.n_qubits
        self.input_index = basis_state_index(self.input_state, self.n_qubits)
        self.gates = []
        n = self.n_qubits
        for _ in range(self.depth):
            for label in "YZX":
                for q in range(n):
                    self.gates.append(self._gate({q: label}, -0.5, f"R{label.lower()}{q}"))
            for j in range(n - 1):
                for label in "ZXY":
                    self.gates.append(self._gate({j: label, j + 1: label}, 1.0, f"{label * 2}{j}"))
        self.n_params = len(self.gates)

    def _gate(self, ops, beta, label):
        word = "".join(ops.get(q, "I") for q in range(self.n_qubits))
        flip, sign, phase = word_masks(word)
        return _Gate(flip, sign, phase, beta, label)

    def metadata(self):
        return {**super().metadata(), "n_qubits": self.n_qubits, "depth": self.depth,
                "input_state": self.input_state, "rotation_convention": ROTATION_CONVENTION,
                "gate_order": GATE_ORDER}

    def _rows(self, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        if rows.shape[1] != self.n_params:
            raise ShapeMismatch(f"circuit expects {self.n_params} parameters, got {rows.shape[1]}")
        return rows

    def run(self, rows, inputs):
        """Apply the circuit with per-row angles to per-row basis inputs."""
        rows = self._rows(rows)
        psi = np.zeros((rows.shape[0], self.dim), dtype=np.complex128)
        psi[np.arange(rows.shape[0]), inputs] = 1.0
        for k, g in enumerate(self.gates):
            angle = g.beta * rows[:, k]
            kernels.pauli_rotate(psi, g.flip, g.sign, g.phase,
                                 np.cos(angle).astype(complex), 1j * np.sin(angle))
        return psi

    def forward_many(self, rows):
        rows = self._rows(rows)
        psi = self.run(rows, np.full(rows.shape[0], self.input_index))
        return psi, (rows, psi.copy())

    def backward_many(self, ctx, cotangents):
        rows, final = ctx
        phi = final.copy()
        lam = np.ascontiguousarray(cotangents, dtype=np.complex128).copy()
        if lam.shape != phi.shape:
            raise ShapeMismatch(f"cotangents {lam.shape} do not match states {phi.shape}")
        grads = np.empty_like(rows)
        for k in range(self.n_params - 1, -1, -1):
            g = self.gates[k]
            val = kernels.pauli_expect(lam, phi, g.flip, g.sign, g.phase)
            grads[:, k] = -2.0 * g.beta * val.imag
            angle = g.beta * rows[:, k]
            cos = np.cos(angle).astype(complex)
            nsin = -1j * np.sin(angle)
            kernels.pauli_rotate(phi, g.flip, g.sign, g.phase, cos, nsin)
            kernels.pauli_rotate(lam, g.flip, g.sign, g.phase, cos, nsin)
        return grads

    def forward(self, params):
        params = self.check(params)
        psi, ctx = self.forward_many(params[None, :])
        return psi[0], ctx

    def backward(self, ctx, cotangent):
        c = self._check_cotangent(cotangent)
        return self.backward_many(ctx, c[None, :])[0]


class SharedCircuit:
    """One circuit ``V(phi)`` applied to several orthonormal basis inputs (subspace-VQE baseline)."""

    family_id = "shared_circuit"

    def __init__(self, circuit, inputs):
        self.circuit = circuit
        self.inputs = list(inputs)
        self.input_indices = np.array([basis_state_index(s, circuit.n_qubits) for s in self.inputs])
        if len(set(self.input_indices.tolist())) != len(self.inputs):
            raise InvalidBasisString("input basis strings must be distinct")
        self.n_params = circuit.n_params
        self.dim = circuit.dim
        self.ns = len(self.inputs)

    def metadata(self):
        return {**self.circuit.metadata(), "family": self.family_id, "inputs": self.inputs}

    def forward(self, phi):
        phi = self.circuit.check(phi)
        rows = np.broadcast_to(phi, (self.ns, self.n_params))
        psi = self.circuit.run(rows, self.input_indices)
        return psi, (np.array(rows), psi.copy())

    def states(self, phi):
        return self.forward(phi)[0]

    def backward(self, ctx, cotangents):
        return self.circuit.backward_many(ctx, cotangents).sum(axis=0)

    def vjp(self, phi, cotangents):
        _, ctx = self.forward(phi)
        return self.backward(ctx, cotangents)


def shared_circuit_states(circuit, phi, inputs):
    """States ``V(phi)|s_k>`` for each basis string in ``inputs``."""
    return list(SharedCircuit(circuit, inputs).states(phi))


def basis_state_index(bits, n):
    if len(bits) != n or set(bits) - {"0", "1"}:
        raise InvalidBasisString(f"{bits!r} is not a {n}-bit basis string")
    return int(bits, 2)


def _seed_sequence(rng_seed, state_index):
    entropy = list(rng_seed) if isinstance(rng_seed, (tuple, list)) else [int(rng_seed)]
    return np.random.SeedSequence(entropy=entropy, spawn_key=(int(state_index),))


def init_params(family, sigma, rng_seed, state_index=0):
    """Gaussian ``N(0, sigma^2)`` parameters from a subseed of ``(rng_seed, state_index)``."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    rng = np.random.default_rng(_seed_sequence(rng_seed, state_index))
    return ParamVector(sigma * rng.standard_normal(family.n_params), family.family_id, state_index)


def init_pool(family, ns, sigma, rng_seed):
    return np.concatenate([init_params(family, sigma, rng_seed, i).values for i in range(ns)])
