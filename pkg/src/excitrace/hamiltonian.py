"""Hamiltonians as Pauli sums and as discretized 1D grid operators.

Bit convention used throughout: site (qubit, grid bit) 0 is the most
significant bit of the amplitude index.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from . import kernels
from .errors import DimensionMismatch, InvalidGrid, InvalidSize, ModeOutOfRange

PAULI_LABELS = "IXYZ"

_PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# single-site products: (a, b) -> (phase, a*b)
_PAULI_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}

# CODATA 2018 (hbar, h, c exact in SI since 2019)
HBAR = 1.054571817e-34
PLANCK = 6.62607015e-34
SPEED_OF_LIGHT = 299792458.0
ATOMIC_MASS_UNIT = 1.66053906660e-27

#: hbar^2 / (2 amu) in cm^-1 * Angstrom^2 (divide by the reduced mass in amu)
KINETIC_CONSTANT = HBAR**2 / (2.0 * ATOMIC_MASS_UNIT) / (PLANCK * SPEED_OF_LIGHT * 100.0) / 1e-20

MORSE_OH = {"de": 42301.0, "am": 2.1440, "re": 0.9696, "mu": 0.9527}


def word_masks(word):
    """Return ``(flip, signmask, phase)`` encoding the action of a Pauli word.

    ``P|i> = phase * (-1)**popcount(i & signmask) |i ^ flip>``.
    """
    n = len(word)
    flip = sign = 0
    n_y = 0
    for site, op in enumerate(word):
        bit = 1 << (n - 1 - site)
        if op in "XY":
            flip |= bit
        if op in "YZ":
            sign |= bit
        if op == "Y":
            n_y += 1
    return flip, sign, 1j**n_y


class PauliSum:
    """Weighted sum of Pauli words on ``n_sites`` qubits.

    Terms are merged by word and kept sorted, so two equal operators compare
    equal term by term. Coefficients below ``1e-14`` in magnitude are dropped.
    """

    def __init__(self, n_sites, terms=()):
        if n_sites < 1:
            raise InvalidSize(f"n_sites must be positive, got {n_sites}")
        self.n_sites = int(n_sites)
        merged = {}
        for coeff, word in terms:
            word = word.upper()
            if len(word) != self.n_sites or set(word) - set(PAULI_LABELS):
                raise InvalidSize(f"bad Pauli word {word!r} for {self.n_sites} sites")
            merged[word] = merged.get(word, 0.0) + complex(coeff)
        self.terms = [(c, w) for w, c in sorted(merged.items()) if abs(c) > 1e-14]
        self._compiled = None

    @property
    def dim(self):
        return 1 << self.n_sites

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __repr__(self):
        return f"PauliSum(n_sites={self.n_sites}, n_terms={len(self.terms)})"

    @classmethod
    def identity(cls, n_sites, coeff=1.0):
        return cls(n_sites, [(coeff, "I" * n_sites)])

    @classmethod
    def single(cls, n_sites, ops, coeff=1.0):
        """Build one term from a ``{site: label}`` mapping."""
        word = ["I"] * n_sites
        for site, label in ops.items():
            word[site] = label
        return cls(n_sites, [(coeff, "".join(word))])

    def __add__(self, other):
        if isinstance(other, PauliSum):
            if other.n_sites != self.n_sites:
                raise DimensionMismatch("cannot add Pauli sums on different sizes")
            return PauliSum(self.n_sites, self.terms + other.terms)
        return self + PauliSum.identity(self.n_sites, other)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        return PauliSum(self.n_sites, [(scalar * c, w) for c, w in self.terms])

    __rmul__ = __mul__

    def __matmul__(self, other):
        if other.n_sites != self.n_sites:
            raise DimensionMismatch("cannot multiply Pauli sums on different sizes")
        out = []
        for ca, wa in self.terms:
            for cb, wb in other.terms:
                phase = 1
                word = []
                for a, b in zip(wa, wb):
                    p, c = _PAULI_PRODUCT[a, b]
                    phase *= p
                    word.append(c)
                out.append((ca * cb * phase, "".join(word)))
        return PauliSum(self.n_sites, out)

    def adjoint(self):
        return PauliSum(self.n_sites, [(c.conjugate(), w) for c, w in self.terms])

    def is_close(self, other, atol=1e-12):
        if self.n_sites != other.n_sites:
            return False
        a = dict((w, c) for c, w in self.terms)
        b = dict((w, c) for c, w in other.terms)
        return all(abs(a.get(w, 0) - b.get(w, 0)) <= atol for w in set(a) | set(b))

    def compiled(self):
        """Group terms by flip mask: ``(flips, diags)`` with ``H|i> = sum_g diags[g, i] |i ^ flips[g]>``."""
        if self._compiled is None:
            idx = np.arange(self.dim, dtype=np.int64)
            groups = {}
            for coeff, word in self.terms:
                flip, sign, phase = word_masks(word)
                signs = 1.0 - 2.0 * (np.bitwise_count(idx & sign) & 1)
                diag = groups.setdefault(flip, np.zeros(self.dim, dtype=np.complex128))
                diag += (coeff * phase) * signs
            flips = np.array(sorted(groups), dtype=np.int64)
            diags = np.zeros((len(flips), self.dim), dtype=np.complex128)
            for row, f in enumerate(flips):
                diags[row] = groups[f]
            self._compiled = (flips, diags)
        return self._compiled

    def apply(self, psi):
        psi = np.asarray(psi)
        single = psi.ndim == 1
        batch = np.ascontiguousarray(np.atleast_2d(psi), dtype=np.complex128)
        if batch.shape[1] != self.dim:
            raise DimensionMismatch(f"state has dimension {batch.shape[1]}, operator expects {self.dim}")
        flips, diags = self.compiled()
        out = kernels.apply_groups(flips, diags, batch)
        return out[0] if single else out

    def to_dense(self):
        """Dense matrix by Kronecker products (independent of the bit kernels)."""
        mat = np.zeros((self.dim, self.dim), dtype=complex)
        for coeff, word in self.terms:
            mat += coeff * reduce(np.kron, [_PAULI_MATRICES[op] for op in word])
        return mat

    def diagonal(self):
        """Diagonal in the computational basis (only Z/I words contribute)."""
        flips, diags = self.compiled()
        hit = np.nonzero(flips == 0)[0]
        return diags[hit[0]].copy() if len(hit) else np.zeros(self.dim, dtype=complex)

    def to_text(self):
        return "".join(f"{c.real!r} {c.imag!r}  {w}\n" for c, w in self.terms)

    @classmethod
    def from_text(cls, text):
        terms = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            re_, im_, word = line.split()
            terms.append((complex(float(re_), float(im_)), word))
        if not terms:
            raise InvalidSize("no Pauli terms found")
        return cls(len(terms[0][1]), terms)


@dataclass
class GridOperator:
    """1D Schrodinger operator on a uniform grid of ``2**n_bits`` points.

    ``(H psi)_k = (V_k + 2 T) psi_k - T (psi_{k-1} + psi_{k+1})`` with ``T = kinetic_coeff``
    and zero (Dirichlet) values outside the grid. Energies are in cm^-1.
    """

    n_bits: int
    x_min: float
    x_max: float
    potential: np.ndarray
    kinetic_coeff: float
    params: dict = field(default_factory=dict)

    @property
    def dim(self):
        return 1 << self.n_bits

    @property
    def spacing(self):
        return (self.x_max - self.x_min) / self.dim

    @property
    def grid(self):
        return self.x_min + self.spacing * np.arange(self.dim)

    @property
    def main_diagonal(self):
        return self.potential + 2.0 * self.kinetic_coeff

    @property
    def off_diagonal(self):
        return np.full(self.dim - 1, -self.kinetic_coeff)

    def apply(self, psi):
        psi = np.asarray(psi)
        if psi.shape[-1] != self.dim:
            raise DimensionMismatch(f"state has dimension {psi.shape[-1]}, operator expects {self.dim}")
        out = self.main_diagonal * psi
        out[..., 1:] -= self.kinetic_coeff * psi[..., :-1]
        out[..., :-1] -= self.kinetic_coeff * psi[..., 1:]
        return out

    def to_dense(self):
        t = self.kinetic_coeff
        return np.diag(self.main_diagonal) - t * np.eye(self.dim, k=1) - t * np.eye(self.dim, k=-1)

    def metadata(self):
        return {
            "n_bits": self.n_bits,
            "x_min": self.x_min,
            "x_max": self.x_max,
            "spacing": self.spacing,
            "kinetic_coeff": self.kinetic_coeff,
            "kinetic_constant": KINETIC_CONSTANT,
            **self.params,
        }


def build_heisenberg(n, jx=1.0, jy=1.0, jz=1.0, hz=0.0, periodic=True):
    """XYZ chain ``sum_i 1/4 (Jx XX + Jy YY + Jz ZZ) + hz Z_i``.

    The quarter multiplies the exchange terms only.
    """
    if n < 2:
        raise InvalidSize(f"Heisenberg chain needs n >= 2, got {n}")
    bonds = [(i, i + 1) for i in range(n - 1)]
    if periodic:
        bonds.append((n - 1, 0))
    terms = []
    for i, j in bonds:
        for label, coupling in (("X", jx), ("Y", jy), ("Z", jz)):
            if coupling:
                word = ["I"] * n
                word[i] = word[j] = label
                terms.append((0.25 * coupling, "".join(word)))
    if hz:
        for i in range(n):
            word = ["I"] * n
            word[i] = "Z"
            terms.append((hz, "".join(word)))
    return PauliSum(n, terms)


def _ladder(mode, dagger, n_modes):
    # c_j = Z_0 .. Z_{j-1} (X_j + i Y_j) / 2
    sign = -1j if dagger else 1j
    tail = {k: "Z" for k in range(mode)}
    return (PauliSum.single(n_modes, {**tail, mode: "X"}, 0.5)
            + PauliSum.single(n_modes, {**tail, mode: "Y"}, 0.5 * sign))


def jordan_wigner(ops, n_modes, coeff=1.0):
    """Map a fermionic monomial to qubits.

    ``ops`` is a sequence of ``(mode, dagger)`` pairs read left to right, e.g.
    ``[(0, True), (1, False)]`` for ``c_0^dag c_1``.
    """
    out = PauliSum.identity(n_modes, coeff)
    for mode, dagger in ops:
        if not 0 <= mode < n_modes:
            raise ModeOutOfRange(f"mode {mode} outside 0..{n_modes - 1}")
        out = out @ _ladder(mode, dagger, n_modes)
    return out


def hubbard_mode(site, spin, n_sites, ordering="spin_major"):
    if ordering == "spin_major":
        return site + spin * n_sites
    if ordering == "site_major":
        return 2 * site + spin
    raise ValueError(f"unknown mode ordering {ordering!r}")


def hubbard_bonds(lx, ly):
    """Open-boundary nearest-neighbour bonds; site index is ``y * lx + x``."""
    bonds = []
    for y in range(ly):
        for x in range(lx):
            s = y * lx + x
            if x + 1 < lx:
                bonds.append((s, s + 1))
            if y + 1 < ly:
                bonds.append((s, s + lx))
    return bonds


def build_hubbard(lx, ly, t=1.0, u=4.0, ordering="spin_major"):
    """Particle-hole symmetric Hubbard model on an open ``lx x ly`` lattice."""
    if lx < 1 or ly < 1:
        raise InvalidSize(f"lattice must be at least 1x1, got {lx}x{ly}")
    n_sites = lx * ly
    n_modes = 2 * n_sites
    h = PauliSum(n_modes)
    for i, j in hubbard_bonds(lx, ly):
        for spin in (0, 1):
            a = hubbard_mode(i, spin, n_sites, ordering)
            b = hubbard_mode(j, spin, n_sites, ordering)
            h = h + jordan_wigner([(a, True), (b, False)], n_modes, -t)
            h = h + jordan_wigner([(b, True), (a, False)], n_modes, -t)
    half = PauliSum.identity(n_modes, 0.5)
    for s in range(n_sites):
        up = hubbard_mode(s, 0, n_sites, ordering)
        dn = hubbard_mode(s, 1, n_sites, ordering)
        n_up = jordan_wigner([(up, True), (up, False)], n_modes)
        n_dn = jordan_wigner([(dn, True), (dn, False)], n_modes)
        h = h + u * ((n_up - half) @ (n_dn - half))
    return h


def morse_potential(x, de, am, re):
    return de * (1.0 - np.exp(-am * (x - re))) ** 2


def build_morse_grid(nd, x_min=0.0, x_max=10.0, de=MORSE_OH["de"], am=MORSE_OH["am"],
                     re=MORSE_OH["re"], mu=MORSE_OH["mu"]):
    """Morse oscillator on ``2**nd`` points of ``[x_min, x_max)`` (Angstrom, cm^-1, amu)."""
    if nd < 4:
        raise InvalidGrid(f"need at least 4 bits, got {nd}")
    if not x_max > x_min:
        raise InvalidGrid(f"empty interval [{x_min}, {x_max}]")
    if min(de, am, mu) <= 0:
        raise InvalidGrid("Morse parameters de, am, mu must be positive")
    dx = (x_max - x_min) / (1 << nd)
    x = x_min + dx * np.arange(1 << nd)
    return GridOperator(
        n_bits=nd,
        x_min=float(x_min),
        x_max=float(x_max),
        potential=morse_potential(x, de, am, re),
        kinetic_coeff=KINETIC_CONSTANT / (mu * dx * dx),
        params={"de": de, "am": am, "re": re, "mu": mu},
    )


def apply(h, psi):
    """Return ``h |psi>`` for a PauliSum or GridOperator (1D state or row batch)."""
    return h.apply(psi)


def matrix_element(h, bra, ket):
    bra = np.asarray(bra)
    ket = np.asarray(ket)
    if bra.shape != ket.shape:
        raise DimensionMismatch(f"bra {bra.shape} and ket {ket.shape} differ")
    return complex(np.vdot(bra, h.apply(ket)))


def dense_matrix(h):
    return h.to_dense()


def n_qubits_for(h):
    if isinstance(h, PauliSum):
        return h.n_sites
    return h.n_bits


def basis_index(bits):
    """Amplitude index of a basis string such as ``"0110"`` (site 0 = leftmost = MSB)."""
    return int(bits, 2)

