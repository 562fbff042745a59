import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from excitrace import hamiltonian as ham
from excitrace.errors import DimensionMismatch, InvalidGrid, InvalidSize, ModeOutOfRange
from excitrace.hamiltonian import PauliSum

from conftest import fock_annihilators, heisenberg_dense, hubbard_fock, kron_sum, kron_word

words = st.text(alphabet="IXYZ", min_size=4, max_size=4)


def test_heisenberg_single_zz_term():
    h = ham.build_heisenberg(2, jx=0, jy=0, jz=1, periodic=False)
    assert list(h) == [(0.25, "ZZ")]


def test_two_spin_singlet_triplet():
    w = np.linalg.eigvalsh(ham.build_heisenberg(2, periodic=False).to_dense())
    assert np.allclose(w, [-0.75, 0.25, 0.25, 0.25], atol=1e-12)


def test_four_site_ring_ground_energy():
    w = np.linalg.eigvalsh(ham.build_heisenberg(4).to_dense())
    assert w[0] == pytest.approx(-2.0, abs=1e-12)


@pytest.mark.parametrize("periodic", [True, False])
def test_heisenberg_matches_spin_matrix_oracle(periodic):
    args = (5, 1.0, 0.95, 0.8, 0.015, periodic)
    h = ham.build_heisenberg(*args)
    assert np.allclose(h.to_dense(), heisenberg_dense(*args), atol=1e-14)


def test_heisenberg_field_has_no_quarter():
    h = ham.build_heisenberg(3, jx=0, jy=0, jz=0, hz=0.5, periodic=False)
    assert sorted(h) == [(0.5, "IIZ"), (0.5, "IZI"), (0.5, "ZII")]


def test_heisenberg_rejects_single_site():
    with pytest.raises(InvalidSize):
        ham.build_heisenberg(1)


def test_number_operator():
    n0 = ham.jordan_wigner([(0, True), (0, False)], 2)
    assert n0.is_close(PauliSum(2, [(0.5, "II"), (-0.5, "ZI")]))


def test_hopping_pair():
    hop = ham.jordan_wigner([(0, True), (1, False)], 2) + ham.jordan_wigner([(1, True), (0, False)], 2)
    assert hop.is_close(PauliSum(2, [(0.5, "XX"), (0.5, "YY")]))
    c = fock_annihilators(2)
    assert np.allclose(hop.to_dense(), c[0].T @ c[1] + c[1].T @ c[0])


@pytest.mark.parametrize("modes", [4, 6])
def test_jordan_wigner_anticommutators(modes):
    ann = [ham.jordan_wigner([(j, False)], modes).to_dense() for j in range(modes)]
    eye = np.eye(2**modes)
    for i in range(modes):
        for j in range(modes):
            acomm = ann[i] @ ann[j].conj().T + ann[j].conj().T @ ann[i]
            assert np.allclose(acomm, eye if i == j else 0, atol=1e-12)
            assert np.allclose(ann[i] @ ann[j] + ann[j] @ ann[i], 0, atol=1e-12)


def test_jordan_wigner_matches_fock_oracle():
    c = fock_annihilators(4)
    for j in range(4):
        assert np.allclose(ham.jordan_wigner([(j, False)], 4).to_dense(), c[j])


def test_jordan_wigner_mode_out_of_range():
    with pytest.raises(ModeOutOfRange):
        ham.jordan_wigner([(3, True)], 3)


def test_hubbard_single_site():
    h = ham.build_hubbard(1, 1, t=0.7, u=4.0)
    assert list(h) == [(1.0, "ZZ")]


@pytest.mark.parametrize("lx,ly,u", [(2, 1, 4.0), (2, 1, 0.0), (2, 2, 4.0)])
@pytest.mark.parametrize("ordering", ["spin_major", "site_major"])
def test_hubbard_matches_fermionic_oracle(lx, ly, u, ordering):
    h = ham.build_hubbard(lx, ly, 1.0, u, ordering)
    ref = hubbard_fock(lx, ly, 1.0, u, ordering)
    assert np.allclose(h.to_dense(), ref, atol=1e-12)


def test_hubbard_orderings_share_spectrum():
    for lx, ly in ((2, 1), (2, 2)):
        a = np.linalg.eigvalsh(ham.build_hubbard(lx, ly, ordering="spin_major").to_dense())
        b = np.linalg.eigvalsh(ham.build_hubbard(lx, ly, ordering="site_major").to_dense())
        assert np.max(np.abs(a - b)) < 1e-10


def test_free_hubbard_dimer_symmetric_spectrum():
    w = np.linalg.eigvalsh(ham.build_hubbard(2, 1, t=1.0, u=0.0).to_dense())
    assert np.allclose(w, -w[::-1], atol=1e-12)


def test_hubbard_ground_energy_two_paths():
    e_qubit = np.linalg.eigvalsh(ham.build_hubbard(2, 1, 1.0, 4.0).to_dense())[0]
    e_fock = np.linalg.eigvalsh(hubbard_fock(2, 1, 1.0, 4.0))[0]
    assert e_qubit == pytest.approx(e_fock, abs=1e-12)


@pytest.mark.parametrize("builder", [
    lambda: ham.build_heisenberg(6, 1, 0.95, 0.8, 0.015),
    lambda: ham.build_hubbard(2, 2),
    lambda: ham.build_hubbard(3, 1, 1.3, 2.0, "site_major"),
])
def test_builders_are_hermitian(builder):
    d = builder().to_dense()
    assert np.allclose(d, d.conj().T, atol=1e-14)


def test_apply_identity_and_z():
    psi = np.arange(8) + 1j
    assert np.allclose(PauliSum.identity(3).apply(psi), psi)
    e = np.zeros(8)
    e[ham.basis_index("100")] = 1
    assert np.allclose(PauliSum(3, [(1.0, "ZII")]).apply(e), -e)


@settings(max_examples=25, deadline=None)
@given(terms=st.lists(st.tuples(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
                                words), min_size=1, max_size=8),
       seed=st.integers(0, 2**32 - 1))
def test_apply_matches_kron_oracle(terms, seed):
    h = PauliSum(4, terms)
    psi = np.random.default_rng(seed).standard_normal((3, 16)) + 0j
    ref = kron_sum(4, list(h)) @ psi.T
    assert np.allclose(h.apply(psi), ref.T, atol=1e-12)
    assert np.allclose(h.to_dense(), kron_sum(4, terms), atol=1e-12)


def test_apply_random_six_site(rng):
    word_list = ["".join(rng.choice(list("IXYZ"), 6)) for _ in range(20)]
    terms = [(complex(rng.standard_normal(), rng.standard_normal()), w) for w in word_list]
    h = PauliSum(6, terms)
    psi = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    assert np.allclose(h.apply(psi), kron_sum(6, terms) @ psi, atol=1e-12)


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        PauliSum(2, [(1.0, "ZZ")]).apply(np.ones(8))


def test_pauli_algebra():
    x = PauliSum(1, [(1.0, "X")])
    y = PauliSum(1, [(1.0, "Y")])
    z = PauliSum(1, [(1.0, "Z")])
    assert (x @ y).is_close(z * 1j)
    assert (x @ x).is_close(PauliSum.identity(1))
    assert (x - x).terms == []
    for a in ("XY", "ZI", "YY"):
        for b in ("IZ", "XX", "YZ"):
            prod = PauliSum(2, [(1.0, a)]) @ PauliSum(2, [(1.0, b)])
            assert np.allclose(prod.to_dense(), kron_word(a) @ kron_word(b))


def test_text_round_trip(rng):
    h = ham.build_hubbard(2, 1, t=1.0, u=4.0) + PauliSum(4, [(0.3 - 0.2j, "XYZI")])
    back = PauliSum.from_text(h.to_text())
    assert back.is_close(h, atol=0)
    assert "ZIZI" in h.to_text() or "IIZZ" in h.to_text()


def test_matrix_element(rng):
    h = ham.build_heisenberg(6, 1, 0.9, 0.8, 0.1)
    w, v = np.linalg.eigh(h.to_dense())
    assert ham.matrix_element(h, v[:, 3], v[:, 3]) == pytest.approx(w[3], abs=1e-12)
    e0, e1 = np.eye(4)[0], np.eye(4)[1]
    assert ham.matrix_element(PauliSum.identity(2), e0, e1) == 0
    a = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    b = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    assert np.conj(ham.matrix_element(h, b, a)) == pytest.approx(ham.matrix_element(h, a, b), abs=1e-12)
    with pytest.raises(DimensionMismatch):
        ham.matrix_element(h, a, a[:32])


def test_morse_grid_potential():
    g = ham.build_morse_grid(10)
    p = g.params
    assert ham.morse_potential(p["re"], p["de"], p["am"], p["re"]) == 0.0
    beyond = g.grid > p["re"]
    v = g.potential[beyond]
    assert np.all(np.diff(v) > 0) and np.all(v < p["de"])
    assert v[-1] == pytest.approx(p["de"], rel=1e-6)
    assert np.all(g.potential >= 0)


def test_morse_grid_layout():
    g = ham.build_morse_grid(6, 0.0, 8.0)
    assert g.dim == 64
    assert g.spacing == pytest.approx(0.125)
    assert g.grid[0] == 0.0 and g.grid[-1] == pytest.approx(8.0 - 0.125)
    assert g.kinetic_coeff == pytest.approx(ham.KINETIC_CONSTANT / (g.params["mu"] * 0.125**2))


def test_kinetic_constant_value():
    # hbar^2 / (2 amu) in cm^-1 A^2
    assert ham.KINETIC_CONSTANT == pytest.approx(16.8576, abs=1e-4)


def test_grid_operator_symmetric_and_gershgorin(rng):
    g = ham.build_morse_grid(8)
    d = g.to_dense()
    assert np.array_equal(d, d.T)
    assert np.count_nonzero(np.triu(d, 2)) == 0
    psi = rng.standard_normal((5, g.dim))
    assert np.allclose(g.apply(psi), psi @ d.T)
    for v in psi:
        rq = v @ d @ v / (v @ v)
        assert rq >= g.potential.min() - 2 * g.kinetic_coeff


@pytest.mark.parametrize("kwargs", [dict(nd=3), dict(nd=6, x_min=2.0, x_max=1.0), dict(nd=6, mu=-1.0)])
def test_morse_grid_rejects_bad_input(kwargs):
    with pytest.raises(InvalidGrid):
        ham.build_morse_grid(**kwargs)
