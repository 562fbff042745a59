import numpy as np
import pytest

from excitrace import hamiltonian as ham
from excitrace import oracle
from excitrace.errors import DimensionMismatch, LengthMismatch, NotBound, TooFewPoints, TooLarge
from excitrace.linalg import gevp

from conftest import heisenberg_dense, random_states

OH = ham.MORSE_OH


def test_exact_spectrum_simple_cases():
    z = ham.PauliSum(1, [(1.0, "Z")])
    assert np.allclose(oracle.exact_spectrum(z, 2).energies, [-1, 1])
    two = oracle.exact_spectrum(ham.build_heisenberg(2, periodic=False), 4)
    assert two.source == "dense_ed" and two.dim == 4
    assert np.allclose(two.energies, [-0.75, 0.25, 0.25, 0.25], atol=1e-12)


def test_exact_spectrum_matches_independent_matrix():
    spec = oracle.exact_spectrum(ham.build_heisenberg(10), 8)
    ref = np.linalg.eigvalsh(heisenberg_dense(10))[:8]
    assert np.allclose(spec.energies, ref, atol=1e-10)
    assert np.all(np.diff(spec.energies) >= 0)


def test_exact_spectrum_guard():
    with pytest.raises(TooLarge):
        oracle.exact_spectrum(ham.build_heisenberg(8), 2, max_dim=128)


def test_grid_levels_agree_with_dense():
    g = ham.build_morse_grid(9)
    dense = np.linalg.eigvalsh(g.to_dense())[:10]
    spec = oracle.exact_spectrum(g, 10)
    assert spec.source == "grid_tridiagonal"
    assert np.max(np.abs(spec.energies - dense) / dense) < 1e-12
    assert np.allclose(oracle.grid_levels(g, 10, refine=False), dense, rtol=1e-10)


def test_morse_dissociation_identity():
    # pick a_M so that omega (n + 1/2) = 2 De exactly for n = 5
    n, de, mu = 5, OH["de"], OH["mu"]
    am = 2 * de / ((n + 0.5) * oracle.morse_omega(de, 1.0, mu))
    assert oracle.morse_analytic(n, de, am, mu) == pytest.approx(de, rel=1e-12)


def test_morse_analytic_formula_and_bounds():
    w = oracle.morse_omega(OH["de"], OH["am"], OH["mu"])
    assert w == pytest.approx(3709.8, abs=0.1)
    e0 = oracle.morse_analytic(0, OH["de"], OH["am"], OH["mu"])
    assert e0 == pytest.approx(w / 2 - w * w / 16 / OH["de"])
    top = oracle.morse_bound_count(OH["de"], OH["am"], OH["mu"])
    assert top == 22
    oracle.morse_analytic(top, OH["de"], OH["am"], OH["mu"])
    with pytest.raises(NotBound):
        oracle.morse_analytic(top + 1, OH["de"], OH["am"], OH["mu"])
    with pytest.raises(NotBound):
        oracle.morse_analytic(-1, OH["de"], OH["am"], OH["mu"])


def _gap(nd, n=0):
    g = ham.build_morse_grid(nd)
    e_grid = oracle.grid_levels(g, n + 1)[n]
    e_ana = oracle.morse_analytic(n, OH["de"], OH["am"], OH["mu"])
    return (e_grid - e_ana) / e_ana


def test_morse_desk_scale_gap_is_second_order():
    # the gap shrinks by ~4 per added bit, as a 3-point stencil should
    gaps = np.array([[abs(_gap(nd, n)) for n in range(8)] for nd in (10, 11, 12)])
    ratios = gaps[:-1] / gaps[1:]
    assert np.all((ratios > 3.5) & (ratios < 4.5))
    assert np.max(gaps[-1]) < 2e-4
    # cross-check against a dense eigensolve at 12 bits
    g = ham.build_morse_grid(12)
    dense = np.linalg.eigvalsh(g.to_dense())[:8]
    assert np.allclose(oracle.grid_levels(g, 8), dense, rtol=1e-11)


def test_energy_variance_cases(rng):
    h = ham.build_heisenberg(6, 1, 0.8, 0.6, 0.1)
    w, v = np.linalg.eigh(h.to_dense())
    var, rel = oracle.energy_variance(h, v[:, 2])
    assert abs(var) < 1e-10
    mix = (v[:, 0] + v[:, 7]) / np.sqrt(2)
    assert oracle.energy_variance(h, mix)[0] == pytest.approx((w[0] - w[7]) ** 2 / 4, abs=1e-12)
    psi = random_states(rng, 1, 64)[0]
    d = h.to_dense()
    u = psi / np.linalg.norm(psi)
    ref = np.vdot(u, d @ d @ u).real - np.vdot(u, d @ u).real ** 2
    var, rel = oracle.energy_variance(h, psi)
    assert var == pytest.approx(ref, rel=1e-10)
    assert rel == pytest.approx(ref / np.vdot(u, d @ u).real ** 2)
    assert oracle.energy_variance(h, (3 - 2j) * psi)[0] == pytest.approx(var, rel=1e-12)
    with pytest.raises(DimensionMismatch):
        oracle.energy_variance(h, psi[:32])


def test_ritz_audit_cases():
    exact = oracle.ExactSpectrum(np.array([-1.0, 0.0, 2.0]), "dense_ed", 8)
    ok = oracle.ritz_audit([-1.0, 0.0, 2.0], exact)
    assert ok.ok and np.all(ok.margins == 0)
    bad = oracle.ritz_audit([-1.0, -0.5], exact)
    assert not bad.ok and bad.violations == [1]
    with pytest.raises(LengthMismatch):
        oracle.ritz_audit([0, 0, 0, 0], exact)


def test_ritz_audit_random_subspaces():
    rng = np.random.default_rng(5)
    for _ in range(100):
        h = ham.PauliSum(6, [(rng.standard_normal(), "".join(rng.choice(list("IXYZ"), 6)))
                             for _ in range(12)])
        h = h + h.adjoint()
        ns = int(rng.integers(1, 9))
        psi = random_states(rng, ns, 64)
        ritz = gevp(psi.conj() @ h.apply(psi).T, psi.conj() @ psi.T).energies
        report = oracle.ritz_audit(ritz, oracle.exact_spectrum(h, ns), tol=1e-10)
        assert report.ok, report.margins


def test_relative_errors():
    assert np.allclose(oracle.relative_errors([1.1, -1.9], [1.0, -2.0, 5.0]), [0.1, 0.05])


def test_error_scaling_fit():
    k = np.arange(1, 9)
    slope, intercept, r2 = oracle.error_scaling_fit(1.64e-11 * k + 2.56e-10)
    assert slope == pytest.approx(1.64e-11, rel=1e-9)
    assert intercept == pytest.approx(2.56e-10, rel=1e-9)
    assert r2 == pytest.approx(1.0)
    assert oracle.error_scaling_fit([3.0, 3.0, 3.0])[0] == 0
    with pytest.raises(TooFewPoints):
        oracle.error_scaling_fit([1, 2])


def test_hermitian_random_spectrum_sorted(rng):
    h = ham.PauliSum(3, [(0.3, "XYZ"), (0.3, "ZYX"), (1.0, "ZII")])
    spec = oracle.exact_spectrum(h, 8)
    assert np.allclose(spec.energies, np.linalg.eigvalsh(h.to_dense()))
