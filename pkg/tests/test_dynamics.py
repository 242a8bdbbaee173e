import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cqed.dynamics import (LindbladModel, dispersive_rates, dissipator, dephasing_simulation, evolve,
                           find_peaks_cubic, fwhm, lineshape_fwhm, measurement_dephasing_closed_form,
                           measurement_dephasing_rate, measurement_dephasing_steady, purcell_decay_simulation,
                           qubit_lineshape, steady_state, thermal_cavity_terms, transmission_sweep,
                           two_tone_ac_stark, jc_drive_frame_model)
from cqed.errors import CQEDError, CQEDWarning, DegeneracyError, ResonanceError, WeakDriveError
from cqed.hilbert import HilbertSpace, Operator, destroy, fock_state, number_operator

MHz = 2 * np.pi  # angular frequency in rad/us


def cavity(dim):
    a = destroy(dim)
    return a, number_operator(dim)


# -- dissipator ---------------------------------------------------------------

def test_dissipator_fock_one():
    a, _ = cavity(3)
    out = dissipator(a, fock_state(3, 1))
    assert np.allclose(out, np.diag([1, -1, 0]))


def test_dissipator_vacuum_is_fixed():
    a, _ = cavity(3)
    assert np.allclose(dissipator(a, fock_state(3, 0)), 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_dissipator_traceless(seed):
    rng = np.random.default_rng(seed)
    O = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = X @ X.conj().T
    rho /= np.trace(rho)
    assert abs(np.trace(dissipator(O, rho))) < 1e-12


def test_dissipator_shape_mismatch():
    with pytest.raises(CQEDError):
        dissipator(np.eye(2), np.eye(3) / 3)


def test_negative_rate_rejected():
    a, n = cavity(3)
    with pytest.raises(CQEDError):
        LindbladModel(n, [(-1.0, a)])


# -- evolve --------------------------------------------------------------------

def test_damped_cavity_decay():
    a, n = cavity(8)
    kappa = 0.3
    psi = fock_state(8, 3)
    t = np.linspace(0, 10, 51)
    res = evolve(LindbladModel(n, [(kappa, a)]), psi, t, e_ops={"n": n})
    assert np.allclose(res.expect["n"].real, 3 * np.exp(-kappa * t), rtol=1e-6, atol=0)
    for r in res.states:
        assert abs(np.trace(r) - 1) < 1e-7


def test_time_dependent_drive_matches_constant():
    a, n = cavity(10)
    kappa, eps = 1.0, 0.4
    t = np.linspace(0, 6, 31)
    const = LindbladModel(n * 0.5 + eps * (a + a.dag()), [(kappa, a)])
    driven = LindbladModel(n * 0.5, [(kappa, a)], drives=[(a + a.dag(), lambda s: eps)])
    r1 = evolve(const, fock_state(10, 0), t, e_ops={"a": a})
    r2 = evolve(driven, fock_state(10, 0), t, e_ops={"a": a})
    assert np.allclose(r1.expect["a"], r2.expect["a"], atol=1e-7)


def test_thermal_steady_population():
    a, n = cavity(25)
    nbar = 0.7
    model = LindbladModel(n, thermal_cavity_terms(a, 1.0, nbar))
    rho = steady_state(model).density_matrix
    assert abs(np.trace(rho @ n.matrix).real - nbar) < 1e-6
    p = np.diag(rho).real
    be = nbar**np.arange(25) / (1 + nbar) ** np.arange(1, 26)
    assert np.allclose(p[:10], be[:10], atol=1e-8)


def test_vacuum_rabi_oscillation_at_2g():
    kappa, g1, g = 0.1 * MHz, 0.1 * MHz, 100 * MHz
    model, a, sm = jc_drive_frame_model(0.0, 0.0, g, kappa, g1, 0.0, 0.0, 3)
    psi = np.zeros(6, complex)
    psi[3] = 1.0
    t = np.linspace(0, 0.05, 2001)
    pe = evolve(model, psi, t, e_ops={"pe": sm.dag() @ sm}).expect["pe"].real
    spec = np.abs(np.fft.rfft(pe - pe.mean()))
    freqs = np.fft.rfftfreq(t.size, t[1] - t[0]) * 2 * np.pi
    # Pe = cos^2(g t) oscillates at angular frequency 2g
    assert abs(freqs[np.argmax(spec)] - 2 * g) < 2 * np.pi / t[-1]
    peaks = pe[np.r_[False, (pe[1:-1] > pe[:-2]) & (pe[1:-1] > pe[2:]), False]]
    assert peaks[-1] < peaks[0] - 1e-3


def test_leakage_warning_reported():
    a, n = cavity(3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CQEDWarning)
        res = evolve(LindbladModel(n, []), fock_state(3, 2), [0, 1.0])
    assert any(w.kind == "leakage" for w in res.warnings)


# -- steady state ---------------------------------------------------------------

def test_steady_vacuum():
    a, n = cavity(5)
    rho = steady_state(LindbladModel(n, [(1.0, a)])).density_matrix
    assert abs(rho[0, 0] - 1) < 1e-10


@pytest.mark.parametrize("method", ["dense", "sparse"])
def test_driven_cavity_steady_field(method):
    a, n = cavity(20)
    kappa, eps, dr = 1.0, 0.3, 0.7
    model = LindbladModel(dr * n + eps * (a + a.dag()), [(kappa, a)])
    rho = steady_state(model, method=method).density_matrix
    from cqed.dynamics import liouvillian
    assert np.linalg.norm(liouvillian(model) @ rho.reshape(-1)) < 1e-10
    assert abs(np.trace(rho @ a.matrix) - (-eps / (dr - 1j * kappa / 2))) < 1e-8


def test_steady_degenerate_raises():
    a, n = cavity(3)
    with pytest.raises(DegeneracyError):
        steady_state(LindbladModel(n, []), method="dense")


# -- rates -----------------------------------------------------------------------

def test_rates_zero_coupling():
    r = dispersive_rates(0.0, 1.0, 0.1, 0.01, 0.02)
    assert r.gamma_Purcell == r.kappa_inverse_Purcell == r.gamma_Delta == 0


def test_rates_values_and_invariants():
    kappa = 1 * MHz
    r = dispersive_rates(0.1, 1.0, kappa, 0.02, 0.03)
    assert np.isclose(r.gamma_Purcell / MHz, 0.01)
    assert np.isclose(r.kappa_inverse_Purcell, 0.01 * 0.02)
    assert np.isclose(r.gamma_Delta, 2 * 0.01 * 0.03)
    assert r.T2 <= 2 * r.T1
    with pytest.raises(ResonanceError):
        dispersive_rates(0.1, 0.0, kappa, 0.0, 0.0)
    with pytest.warns(CQEDWarning):
        dispersive_rates(0.5, 1.0, kappa, 0.0, 0.0)


def test_interpolated_purcell_limit():
    r = dispersive_rates(0.5, 50.0, 1.0, 0.0, 0.0)
    assert abs(r.gamma_Purcell_interpolated / r.gamma_Purcell - 1) < 1e-3


def test_purcell_fit():
    kappa = 1 * MHz
    rate, _, _ = purcell_decay_simulation(0.1 * 50 * kappa, 50 * kappa, kappa)
    assert abs(rate / (0.01 * kappa) - 1) < 0.1


# -- spectroscopy ----------------------------------------------------------------

def test_uncoupled_transmission_lorentzian():
    kappa = 1.0
    w = np.linspace(-5, 5, 2001)
    s = transmission_sweep({"omega_r": 0.0, "omega_q": 30.0, "g": 0.0}, w, {"kappa": kappa, "gamma1": 0.1}, 0.01)
    assert abs(fwhm(w, s.power) - kappa) < 1e-2
    assert abs(w[np.argmax(s.power)]) < 1e-2


def test_weak_drive_enforced():
    with pytest.raises(WeakDriveError):
        transmission_sweep({"omega_r": 0, "omega_q": 0, "g": 1}, [0.0], {"kappa": 1.0, "gamma1": 0}, 1.0)


def test_analytic_matches_master():
    w = np.linspace(-3, 3, 41)
    sysd = {"omega_r": 0.0, "omega_q": 0.5, "g": 1.0}
    rates = {"kappa": 0.8, "gamma1": 0.3, "gamma_phi": 0.1}
    a = transmission_sweep(sysd, w, rates, 0.005)
    m = transmission_sweep(sysd, w, rates, 0.005, mode="master")
    assert np.max(np.abs(a.power - m.power)) < 1e-3 * a.power.max()


def test_eit_dip_width():
    kappa, g = 10 * MHz, 1 * MHz
    w = np.linspace(-2, 2, 801) * MHz
    sysd = {"omega_r": 0.0, "omega_q": 0.0, "g": g}
    s = transmission_sweep(sysd, w, {"kappa": kappa, "gamma1": 0.0}, 0.01 * MHz)
    bg = transmission_sweep(dict(sysd, g=0.0), w, {"kappa": kappa, "gamma1": 0.0}, 0.01 * MHz)
    assert abs(fwhm(w, 1 - s.power / bg.power) / (4 * g**2 / kappa) - 1) < 0.1


def test_strong_coupling_doublet():
    kappa, g = 0.1 * MHz, 100 * MHz
    w = np.concatenate([np.linspace(-g - 0.5 * MHz, -g + 0.5 * MHz, 101),
                        np.linspace(g - 0.5 * MHz, g + 0.5 * MHz, 101)])
    s = transmission_sweep({"omega_r": 0.0, "omega_q": 0.0, "g": g}, w,
                           {"kappa": kappa, "gamma1": 0.1 * MHz}, 0.001 * MHz)
    pos, _ = find_peaks_cubic(w, s.power, 0.1)
    assert pos.size == 2
    assert np.all(np.abs(np.abs(pos) - g) < kappa / 10)


def test_lineshape_formula_vs_master():
    d = np.linspace(-5, 5, 81) * MHz
    args = (1 * MHz, 0.1 * MHz, 0.1 * MHz)
    assert np.max(np.abs(qubit_lineshape(*args, d) - qubit_lineshape(*args, d, mode="master"))) < 1e-3


def test_lineshape_limits():
    g1, gphi = 0.2, 0.1
    g2 = g1 / 2 + gphi
    assert np.isclose(lineshape_fwhm(1e-6, g1, gphi), 2 * g2)
    d = np.linspace(-2, 2, 4001)
    assert abs(fwhm(d, qubit_lineshape(0.3, g1, gphi, d)) - lineshape_fwhm(0.3, g1, gphi)) < 2e-3
    assert abs(qubit_lineshape(1e4, g1, gphi, [0.0])[0] - 0.5) < 1e-6


def test_ac_stark_empty_cavity_lamb_shift():
    chi = 0.1
    d = np.linspace(-0.2, 0.4, 61)
    p = two_tone_ac_stark(chi, 0.1, 0.1, 0.0, 0.0, 0.02, d, resonator_dim=3)
    pos, _ = find_peaks_cubic(d, p)
    assert pos.size == 1 and abs(pos[0] - chi) < 1e-3


def test_ac_stark_weak_dispersive_shift():
    chi, kappa, eps = 0.01, 0.1, 0.09
    nbar = eps**2 / (chi**2 + kappa**2 / 4)
    d = np.linspace(0.0, 0.2, 61)
    p = two_tone_ac_stark(chi, kappa, 0.01, eps, 0.0, 0.005, d)
    pos, _ = find_peaks_cubic(d, p)
    assert abs((pos[0] - chi) / (2 * chi * nbar) - 1) < 0.1


def test_dephasing_rate_formulas():
    assert measurement_dephasing_rate(1 + 1j, 2 - 1j, 0.0) == 0
    chi, kappa, nbar = 0.001, 1.0, 2.0
    eq = measurement_dephasing_closed_form(chi, kappa, 0.0, nbar, nbar)
    assert abs(eq / (8 * chi**2 * nbar / kappa) - 1) < 0.05
    # steady pointer states: the three expressions coincide
    chi, kappa, eps, dr = 0.4, 1.0, 0.3, 0.2
    ag = -eps / ((dr - chi) - 1j * kappa / 2)
    ae = -eps / ((dr + chi) - 1j * kappa / 2)
    s = measurement_dephasing_steady(ag, ae, kappa)
    assert np.isclose(measurement_dephasing_rate(ag, ae, chi), s)
    assert np.isclose(measurement_dephasing_closed_form(chi, kappa, dr, abs(ag) ** 2, abs(ae) ** 2), s)


def test_dephasing_simulation():
    chi, kappa = 0.5, 1.0
    eps = np.sqrt(chi**2 + kappa**2 / 4)  # one photon per pointer state
    rate, _, _ = dephasing_simulation(chi, kappa, eps)
    assert abs(rate / measurement_dephasing_closed_form(chi, kappa, 0.0, 1.0, 1.0) - 1) < 0.1
