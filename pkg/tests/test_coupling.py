import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from cqed.coupling import (MultilevelAtom, RabiSystem, bloch_siegert_numeric, bloch_siegert_shift,
                           bogoliubov_dressed, chi_exact, dispersive_params_sw, dispersive_tls,
                           jc_diagonal_form, jc_diagonalizing_unitary, jc_ground_energy, jc_hamiltonian,
                           jc_spectrum, kerr_params, multilevel_dispersive, rabi_hamiltonian,
                           schrieffer_wolff_order2, dressed_energies)
from cqed.errors import CQEDWarning, DegeneracyError, ResonanceError, StraddlingRegimeError
from cqed.hilbert import HilbertSpace, Operator, embed, ladder_operators

TP = 2 * np.pi


def ej_for(omega_q, EC):
    return (omega_q + EC) ** 2 / (8 * EC)


def test_uncoupled_spectrum_is_sum_of_bare():
    s = RabiSystem(4, 5, TP * 7, TP * 6, TP * 0.3, 0.0, rwa=False)
    w = np.sort(np.linalg.eigvalsh(rabi_hamiltonian(s).matrix))
    j, n = np.meshgrid(np.arange(4), np.arange(5), indexing="ij")
    bare = TP * 6 * j - 0.5 * TP * 0.3 * j * (j - 1) + TP * 7 * n
    assert np.allclose(w, np.sort(bare.ravel()))


def test_resonant_vacuum_rabi_splitting():
    g = TP * 0.1
    s = RabiSystem(2, 6, TP * 6, TP * 6, 0.0, g)
    E = dressed_energies(rabi_hamiltonian(s), (2, 6))
    w = np.sort([E[0, 1], E[1, 0]])
    assert w[1] - w[0] == pytest.approx(2 * g, rel=1e-12)


def test_bloch_siegert_small_coupling():
    wq, wr = TP * 6, TP * 7
    for ratio in (0.005, 0.01, 0.02):
        g = ratio * wq
        assert bloch_siegert_numeric(wr, wq, g) == pytest.approx(bloch_siegert_shift(wr, wq, g), rel=0.05)


def test_jc_spectrum_formula_cases():
    lo, hi, _ = jc_spectrum(1, 0.0, 2.0, omega_r=10.0)
    assert (lo, hi) == (pytest.approx(8.0), pytest.approx(12.0))
    lo, hi, _ = jc_spectrum(4, 0.0, 2.0)
    assert hi - lo == pytest.approx(2 * 2.0 * np.sqrt(4))


@pytest.mark.parametrize("Delta", [-0.7, 0.0, 0.4, 2.0])
def test_jc_spectrum_matches_diagonalization(Delta):
    wr, g, D = TP * 5, TP * 0.1, 12
    wq = wr + TP * Delta
    w = np.linalg.eigvalsh(jc_hamiltonian(D, wr, wq, g).matrix) + wr / 2
    ref = [jc_ground_energy(wr, wq)]
    for n in range(1, 11):
        lo, hi, _ = jc_spectrum(n, wq - wr, g, omega_r=wr)
        ref += [lo, hi]
    ref = np.sort(ref)
    # every predicted level appears in the truncated spectrum
    for e in ref:
        assert np.min(np.abs(w - e)) <= 1e-10 * abs(e) + 1e-9


def test_jc_branches_never_cross():
    D = np.linspace(-5, 5, 201)
    for n in (1, 2, 5):
        lo, hi, _ = jc_spectrum(n, D, 0.1)
        assert np.all(hi - lo > 0)


def test_jc_unitary_identity_and_unitarity():
    s0 = RabiSystem(2, 8, TP * 5, TP * 5.5, 0.0, 0.0)
    assert np.allclose(jc_diagonalizing_unitary(s0).matrix, np.eye(16))
    s = RabiSystem(2, 8, TP * 5, TP * 5.5, 0.0, TP * 0.2)
    U = jc_diagonalizing_unitary(s).matrix
    assert np.max(np.abs(U @ U.conj().T - np.eye(16))) < 1e-10


@pytest.mark.parametrize("wq", [5.5, 4.3, 5.0])
def test_jc_unitary_diagonalizes(wq):
    D = 10
    s = RabiSystem(2, D, TP * 5, TP * wq, 0.0, TP * 0.15)
    U = jc_diagonalizing_unitary(s).matrix
    H = jc_hamiltonian(D, s.omega_r, s.omega_q, s.g).matrix
    Hd = U.conj().T @ H @ U
    scale = np.max(np.abs(H))
    assert np.max(np.abs(Hd - np.diag(np.diag(Hd)))) < 1e-9 * scale
    F = jc_diagonal_form(s).matrix
    keep = np.ones(2 * D, bool)
    keep[2 * D - 1] = False  # |e, D-1> has no partner inside the truncation
    assert np.max(np.abs(np.diag(Hd)[keep] - np.diag(F)[keep])) < 1e-10 * scale


def test_dispersive_limits():
    g, D = TP * 0.1, TP * 1.0
    # EC -> infinity at negative detuning (positive detuning would straddle)
    big = dispersive_params_sw(1e6, 1e4 * D, g, -D)
    assert big.chi == pytest.approx(-g**2 / D, rel=1e-3)
    small = dispersive_params_sw(1e6, 1e-9, g, D)
    assert abs(small.chi) < 1e-9 * g**2 / D
    p = dispersive_params_sw(ej_for(TP * 6, TP * 0.3), TP * 0.3, g, D)
    assert p.chi / TP == pytest.approx(-4.2857e-3, rel=1e-4)
    assert p.n_crit[0] == pytest.approx((D / (2 * g)) ** 2)
    assert p.chi_j[0] == pytest.approx(-g**2 / D)
    assert p.Lambda_j[0] == 0.0


def test_dispersive_example_vs_exact():
    EC, g, D = TP * 0.3, TP * 0.1, TP * 1.0
    p = dispersive_params_sw(ej_for(TP * 6, EC), EC, g, D)
    s = RabiSystem(6, 8, p.omega_r, p.omega_q, EC, g)
    assert chi_exact(s) == pytest.approx(p.chi, rel=0.07)


@given(st.sampled_from([0.01, 0.02, 0.035, 0.05]), st.floats(1.3, 12.0), st.booleans())
@settings(max_examples=20, deadline=None)
def test_sw_chi_within_five_percent(lam, ratio, negative):
    EC = TP * 0.25
    D = -ratio * EC if negative else ratio * EC
    g = lam * abs(D)
    # second-order theory also needs the e-f transition far from the resonator
    assume(g / abs(D - EC) <= 0.15)
    wq = TP * 6
    p = dispersive_params_sw(ej_for(wq, EC), EC, g, D)
    s = RabiSystem(6, 6, wq - D, wq, EC, g)
    assert chi_exact(s) == pytest.approx(p.chi, rel=0.05)


def test_dressed_frequencies_sw():
    EC, g, D = TP * 0.3, TP * 0.05, TP * 1.2
    p = dispersive_params_sw(ej_for(TP * 6, EC), EC, g, D)
    s = RabiSystem(6, 6, p.omega_r, p.omega_q, EC, g)
    E = dressed_energies(rabi_hamiltonian(s), (6, 6))
    # compare the shifts, which are second order in g
    # resonator frequency with the qubit in g is omega_r' - chi
    assert E[0, 1] - E[0, 0] - p.omega_r == pytest.approx(p.omega_r_dressed - p.chi - p.omega_r, rel=0.05)
    assert E[1, 0] - E[0, 0] - p.omega_q == pytest.approx(p.omega_q_dressed - p.omega_q, rel=0.05)


def test_straddling_error():
    with pytest.raises(StraddlingRegimeError):
        dispersive_params_sw(100.0, 1.0, 0.01, 0.5)
    with pytest.raises(StraddlingRegimeError):
        kerr_params(100.0, 1.0, 0.01, 0.5)


def test_bogoliubov():
    assert bogoliubov_dressed(5.0, 6.0, 0.0)[:2] == (pytest.approx(5.0), pytest.approx(6.0))
    wr, wq, _ = bogoliubov_dressed(5.0, 5.0, 0.1)
    assert (wr, wq) == (pytest.approx(4.9), pytest.approx(5.1))
    for wq0 in (4.0, 6.5):
        wr, wq, _ = bogoliubov_dressed(5.0, wq0, 0.3)
        M = np.array([[5.0, 0.3], [0.3, wq0]])
        ev = np.linalg.eigvalsh(M)
        assert sorted([wr, wq]) == pytest.approx(list(ev), abs=1e-12)
        assert wr + wq == pytest.approx(5.0 + wq0, abs=1e-12)
        assert abs(wr - 5.0) < abs(wq - 5.0)


def test_kerr_params():
    Ka, Kb, chi_ab = kerr_params(100.0, 1.0, 0.0, 5.0)
    assert Ka == 0 and chi_ab == 0 and Kb == -1.0
    EC, g, D = 0.3, 0.1, 1.0
    Ka, Kb, chi_ab = kerr_params(100.0, EC, g, D)
    assert chi_ab == pytest.approx(2 * dispersive_params_sw(100.0, EC, g, D).chi)
    assert Ka < 0 and Kb < 0 and chi_ab < 0


def test_multilevel_reduces_to_sw():
    EC, g, D = TP * 0.3, TP * 0.08, TP * 1.1
    p = dispersive_params_sw(ej_for(TP * 6, EC), EC, g, D, n_levels=4)
    atom = MultilevelAtom.transmon_ladder(p.omega_q, EC, g, 5)
    Lam, chi = multilevel_dispersive(atom, p.omega_r)
    assert np.allclose(Lam[:4], p.Lambda_j, rtol=1e-10, atol=1e-14)
    assert np.allclose(chi[:4], p.chi_j, rtol=1e-10, atol=1e-14)
    zero = MultilevelAtom(atom.level_energies, np.zeros((5, 5)))
    L0, c0 = multilevel_dispersive(zero, p.omega_r)
    assert np.all(L0 == 0) and np.all(c0 == 0)
    tls = MultilevelAtom([0.0, 6.0], [[0, 0.1], [0, 0]])
    assert multilevel_dispersive(tls, 5.0)[1][0] == pytest.approx(-0.01 / 1.0)


def test_multilevel_resonance_error():
    atom = MultilevelAtom([0.0, 5.0], [[0, 0.1], [0, 0]])
    with pytest.raises(ResonanceError, match=r"\(0, 1\)"):
        multilevel_dispersive(atom, 5.0)


def test_multilevel_hermitian_coupling_matches_exact_shift():
    # full coupling (a + a^dag) sum g_ij |i><j| with Hermitian g; compare with diagonalization
    w = np.array([0.0, 5.0, 9.7])
    gm = 0.01 * np.array([[0, 1, 0.2], [1, 0, 1.4], [0.2, 1.4, 0]])
    wr = 7.0
    Lam, chi = multilevel_dispersive(MultilevelAtom(w, gm), wr)
    D = 6
    sp = HilbertSpace((3, D))
    a = embed(ladder_operators(D)[0], 1, sp).matrix
    A = np.kron(gm, np.eye(D))
    H = np.kron(np.diag(w), np.eye(D)) + wr * a.conj().T @ a + A @ (a + a.conj().T)
    E = dressed_energies(H, (3, D))
    for j in range(3):
        assert E[j, 0] - w[j] == pytest.approx(Lam[j], rel=2e-3, abs=1e-7)
        shift = (E[j, 1] - E[j, 0]) - wr
        assert shift == pytest.approx(chi[j], rel=2e-2, abs=1e-7)


# ---------------------------------------------------------------------------
# generic Schrieffer-Wolff


def rayleigh_schroedinger_second_order(E0, V):
    """Independent textbook implementation: nondegenerate second-order energies."""
    out = []
    n = len(E0)
    for i in range(n):
        e = E0[i] + V[i, i].real
        for m in range(n):
            if m != i:
                e += abs(V[i, m]) ** 2 / (E0[i] - E0[m])
        out.append(e)
    return np.array(out)


@pytest.mark.parametrize("seed", range(5))
def test_sw_matches_rayleigh_schroedinger(seed):
    rng = np.random.default_rng(seed)
    E0 = np.sort(rng.uniform(0, 10, 6)) + np.arange(6)
    V = 0.01 * (rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
    V = V + V.conj().T
    H0 = np.diag(E0)
    P = [np.diag(np.eye(6)[k]) for k in range(6)]
    res = schrieffer_wolff_order2((E0, np.eye(6)), V, P)
    ref = rayleigh_schroedinger_second_order(E0, V)
    assert np.allclose(np.diag(res.H_eff).real, ref, atol=1e-8)
    # block diagonal output
    off = res.H_eff - np.diag(np.diag(res.H_eff))
    assert np.max(np.abs(off)) < 1e-10


def test_sw_rotated_basis_and_energy_shift_invariance():
    rng = np.random.default_rng(7)
    E0 = np.array([0.0, 0.1, 3.0, 3.2, 7.0, 7.05])
    Q, _ = np.linalg.qr(rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
    V = 0.02 * (rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
    V = V + V.conj().T
    Vb = Q @ V @ Q.conj().T
    P = [Q @ np.diag(m) @ Q.conj().T for m in ([1, 1, 0, 0, 0, 0], [0, 0, 1, 1, 0, 0], [0, 0, 0, 0, 1, 1])]
    r1 = schrieffer_wolff_order2((E0, Q), Vb, P)
    r2 = schrieffer_wolff_order2((E0 + 123.4, Q), Vb, P)
    assert np.max(np.abs(r1.H_eff + 123.4 * np.eye(6) - r2.H_eff)) < 1e-10
    # block diagonal in the declared subspaces
    Ht = Q.conj().T @ r1.H_eff @ Q
    for i in range(6):
        for j in range(6):
            if i // 2 != j // 2:
                assert abs(Ht[i, j]) < 1e-10
    # eigenvalues close to exact up to third order
    exact = np.linalg.eigvalsh(np.diag(E0) + V)
    assert np.allclose(np.linalg.eigvalsh(Ht), exact, atol=5e-4)


def test_sw_zero_coupling_and_jc_dispersive_shift():
    E0 = np.array([0.0, 1.0, 5.0])
    P = [np.diag([1.0, 1, 0]), np.diag([0, 0, 1.0])]
    r = schrieffer_wolff_order2((E0, np.eye(3)), np.zeros((3, 3)), P)
    assert np.allclose(r.S, 0) and np.allclose(r.H_eff, np.diag(E0))

    wr, wq, g, D = 5.0, 6.0, 0.05, 8
    H = jc_hamiltonian(D, wr, wq, 0.0).matrix
    V = jc_hamiltonian(D, wr, wq, g).matrix - H
    E0 = np.real(np.diag(H))
    Pg = np.kron(np.diag([1.0, 0]), np.eye(D))
    Pe = np.kron(np.diag([0, 1.0]), np.eye(D))
    r = schrieffer_wolff_order2((E0, np.eye(2 * D)), V, [Pg, Pe])
    h = np.real(np.diag(r.H_eff)).reshape(2, D)
    chi = 0.5 * ((h[1, 1] - h[1, 0]) - (h[0, 1] - h[0, 0]))
    assert chi == pytest.approx(dispersive_tls(g, wq - wr), rel=1e-10)


def test_sw_degeneracy_and_warning():
    P = [np.diag([1.0, 0]), np.diag([0, 1.0])]
    with pytest.raises(DegeneracyError):
        schrieffer_wolff_order2((np.array([1.0, 1.0]), np.eye(2)), np.array([[0, 0.1], [0.1, 0]]), P)
    with pytest.warns(CQEDWarning):
        schrieffer_wolff_order2((np.array([0.0, 1.0]), np.eye(2)), np.array([[0, 0.6], [0.6, 0]]), P)
