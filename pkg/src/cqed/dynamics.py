"""Lindblad dynamics, steady states, dissipative rates and spectroscopy simulations.

Density matrices are vectorized row-major, vec(A rho B) = (A kron B^T) vec(rho).
Time-independent models are propagated with exact exponentials of the
Liouvillian; models with drive callbacks use an adaptive Runge-Kutta solver.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg, sparse
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply, splu

from .errors import (CQEDError, CQEDWarning, DegeneracyError, ResonanceError, StiffnessError,
                     WarningRecord, WeakDriveError)
from .hilbert import (HilbertSpace, LEAKAGE_THRESHOLD, Operator, QuantumState, embed, ladder_operators,
                      ptrace)

DENSE_STEADY_MAX = 400


@dataclass
class LindbladModel:
    """H plus rate-weighted collapse operators; drives add coeff(t) * op to H."""
    hamiltonian: Operator
    collapse_terms: list = field(default_factory=list)
    drives: list = field(default_factory=list)

    def __post_init__(self):
        sp = self.hamiltonian.space
        for rate, op in self.collapse_terms:
            if rate < 0:
                raise CQEDError(f"collapse rate must be non-negative, got {rate}")
            if op.space != sp:
                raise CQEDError("collapse operator acts on a different space")
        for op, coeff in self.drives:
            if op.space != sp:
                raise CQEDError("drive operator acts on a different space")
            if not callable(coeff):
                raise CQEDError("drive coefficient must be callable")

    @property
    def space(self) -> HilbertSpace:
        return self.hamiltonian.space

    @property
    def time_dependent(self) -> bool:
        return len(self.drives) > 0


@dataclass
class DissipationRates:
    kappa: float
    gamma: float
    gamma_phi: float
    n_bar_kappa: float
    n_bar_gamma: float
    gamma_Purcell: float
    kappa_inverse_Purcell: float
    gamma_Delta: float
    gamma_Purcell_interpolated: float
    gamma1: float
    gamma2: float
    T1: float
    T2: float
    warnings: list = field(default_factory=list)


@dataclass
class EvolutionResult:
    times: np.ndarray
    states: list | None
    expect: dict
    warnings: list = field(default_factory=list)

    def final_state(self) -> np.ndarray:
        return self.states[-1]


# ----------------------------------------------------------------------------
# superoperators

def _mat(op):
    return op.matrix if isinstance(op, Operator) else np.asarray(op)


def dissipator(op: Operator | np.ndarray, rho: QuantumState | np.ndarray) -> np.ndarray:
    """D[O]rho = O rho O^dag - {O^dag O, rho}/2."""
    if isinstance(op, Operator) and isinstance(rho, QuantumState) and op.space.dim != rho.space.dim:
        raise CQEDError("operator and state spaces differ")
    O = _mat(op)
    r = rho.dm() if isinstance(rho, QuantumState) else np.asarray(rho)
    if O.shape != r.shape:
        raise CQEDError(f"shape mismatch {O.shape} vs {r.shape}")
    OdO = O.conj().T @ O
    return O @ r @ O.conj().T - 0.5 * (OdO @ r + r @ OdO)


def _spre_post(A, B, d):
    """Sparse superoperator for rho -> A rho B."""
    A = sparse.csr_matrix(A) if A is not None else sparse.identity(d, format="csr")
    B = sparse.csr_matrix(B) if B is not None else sparse.identity(d, format="csr")
    return sparse.kron(A, B.T, format="csr")


def hamiltonian_superop(H) -> sparse.csr_matrix:
    H = _mat(H)
    d = H.shape[0]
    return -1j * (_spre_post(H, None, d) - _spre_post(None, H, d))


def dissipator_superop(L) -> sparse.csr_matrix:
    L = _mat(L)
    d = L.shape[0]
    LdL = L.conj().T @ L
    return _spre_post(L, L.conj().T, d) - 0.5 * _spre_post(LdL, None, d) - 0.5 * _spre_post(None, LdL, d)


def liouvillian(model: LindbladModel, dense: bool = False):
    Lv = hamiltonian_superop(model.hamiltonian)
    for rate, op in model.collapse_terms:
        if rate > 0:
            Lv = Lv + rate * dissipator_superop(op)
    Lv = Lv.tocsr()
    return Lv.toarray() if dense else Lv


def _vec(rho):
    return np.asarray(rho, dtype=complex).reshape(-1)


def _unvec(v, d):
    return v.reshape(d, d)


# ----------------------------------------------------------------------------
# model helpers

def thermal_cavity_terms(a: Operator, kappa: float, n_bar: float = 0.0) -> list:
    terms = [(kappa * (n_bar + 1.0), a)]
    if n_bar > 0:
        terms.append((kappa * n_bar, a.dag()))
    return terms


def transmon_terms(b: Operator, gamma: float, gamma_phi: float = 0.0, n_bar: float = 0.0) -> list:
    """gamma (n+1) D[b] + gamma n D[b^dag] + 2 gamma_phi D[b^dag b]."""
    terms = [(gamma * (n_bar + 1.0), b)]
    if n_bar > 0:
        terms.append((gamma * n_bar, b.dag()))
    if gamma_phi > 0:
        terms.append((2.0 * gamma_phi, b.dag() @ b))
    return terms


# ----------------------------------------------------------------------------
# time evolution

def _check_states(states, dims, threshold, every=1):
    out = []
    tr_err = 0.0
    neg = 0.0
    herm = 0.0
    for k in range(0, len(states), every):
        r = states[k]
        tr_err = max(tr_err, abs(np.trace(r).real - 1.0))
        herm = max(herm, np.max(np.abs(r - r.conj().T)))
        if r.shape[0] <= 64:
            neg = min(neg, np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min())
    if tr_err > 1e-7:
        out.append(WarningRecord("trace", f"trace drifted by {tr_err:.2e}", tr_err))
    if herm > 1e-7:
        out.append(WarningRecord("hermiticity", f"density matrix lost Hermiticity by {herm:.2e}", herm))
    if neg < -1e-7:
        out.append(WarningRecord("positivity", f"eigenvalue {neg:.2e} below zero", neg))
    worst = {}
    for k in range(0, len(states), every):
        for i, d in enumerate(dims):
            if d < 3 or len(dims) == 0:
                continue
            red = ptrace(states[k], dims, [i]) if len(dims) > 1 else states[k]
            p = float(np.real(red[-1, -1]))
            worst[i] = max(worst.get(i, 0.0), p)
    for i, p in worst.items():
        if p > threshold:
            out.append(WarningRecord("leakage", f"subsystem {i} top-level population reached {p:.3e}", p))
    return out


def evolve(model: LindbladModel, rho0, times: Sequence[float], e_ops: dict | None = None,
           store_states: bool = True, rtol: float = 1e-8, atol: float = 1e-10,
           leakage_threshold: float = LEAKAGE_THRESHOLD, max_step: float | None = None) -> EvolutionResult:
    """Integrate the master equation over ``times`` (first entry is the initial time)."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) < 0):
        raise CQEDError("times must be a non-decreasing 1D grid")
    if isinstance(rho0, QuantumState):
        r0 = rho0.dm()
    else:
        r0 = np.asarray(rho0, dtype=complex)
        if r0.ndim == 1:
            r0 = np.outer(r0, r0.conj())
    d = model.space.dim
    if r0.shape != (d, d):
        raise CQEDError(f"initial state shape {r0.shape} does not match model dimension {d}")
    e_ops = e_ops or {}
    e_mats = {k: _mat(v) for k, v in e_ops.items()}

    L0 = liouvillian(model)
    v0 = _vec(r0)
    N = d * d

    if not model.time_dependent:
        vs = [v0]
        dts = np.diff(times)
        uniform = dts.size > 0 and np.allclose(dts, dts[0], rtol=1e-12, atol=0)
        if N <= 1600 and dts.size:
            Ld = L0.toarray()
            if uniform:
                P = linalg.expm(Ld * dts[0])
                for _ in dts:
                    vs.append(P @ vs[-1])
            else:
                for dt in dts:
                    vs.append(linalg.expm(Ld * dt) @ vs[-1])
        elif dts.size:
            if uniform:
                out = expm_multiply(L0.tocsc(), v0, start=times[0], stop=times[-1], num=times.size, endpoint=True)
                vs = list(out)
            else:
                for dt in dts:
                    vs.append(expm_multiply(L0.tocsc() * dt, vs[-1]))
        V = np.array(vs)
    else:
        sd = []
        for op, coeff in model.drives:
            sd.append((hamiltonian_superop(op), coeff))

        def rhs(t, v):
            out = L0 @ v
            for S, c in sd:
                out = out + c(t) * (S @ v)
            return out

        kw = {}
        if max_step is not None:
            kw["max_step"] = max_step
        if times.size == 1:
            V = v0[None, :]
        else:
            sol = solve_ivp(rhs, (times[0], times[-1]), v0, method="DOP853", t_eval=times,
                            rtol=rtol, atol=atol, **kw)
            if not sol.success:
                raise StiffnessError(
                    f"integrator failed ({sol.message}); reduce truncation dims or use a smaller time step")
            V = sol.y.T

    states = [_unvec(v, d) for v in V]
    expect = {k: np.array([np.trace(r @ m) for r in states]) for k, m in e_mats.items()}
    every = max(1, len(states) // 50)
    warns = _check_states(states, model.space.subsystem_dims, leakage_threshold, every)
    for w in warns:
        warnings.warn(w.message, CQEDWarning, stacklevel=2)
    return EvolutionResult(times, states if store_states else None, expect, warns)


def steady_state(model: LindbladModel, method: str = "auto", tol: float = 1e-10) -> QuantumState:
    """Null space of the Liouvillian, normalized to unit trace."""
    if model.time_dependent:
        raise CQEDError("steady state needs a time-independent model")
    d = model.space.dim
    N = d * d
    L = liouvillian(model)
    if method == "auto":
        method = "dense" if N <= DENSE_STEADY_MAX else "sparse"
    if method == "dense":
        Ld = L.toarray()
        _, s, vh = linalg.svd(Ld)
        scale = max(s[0], 1e-300)
        null = np.sum(s < 1e-9 * scale)
        if null > 1:
            raise DegeneracyError(f"Liouvillian has a {null}-dimensional null space; steady state not unique")
        v = vh[-1].conj()
    else:
        # replace one row by the trace condition
        tr = sparse.csr_matrix(np.eye(d).reshape(1, -1).astype(complex))
        A = sparse.vstack([tr, L[1:, :]]).tocsc()
        b = np.zeros(N, dtype=complex)
        b[0] = 1.0
        try:
            v = splu(A).solve(b)
        except RuntimeError as exc:
            raise DegeneracyError(f"Liouvillian is singular beyond its trace direction: {exc}") from exc
    rho = _unvec(v, d)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    res = np.linalg.norm(L @ _vec(rho))
    if res > 1e-6 * max(1.0, abs(L).max()):
        warnings.warn(f"steady state residual {res:.2e}", CQEDWarning, stacklevel=2)
    return QuantumState(model.space, density_matrix=rho, validate=False)


def fit_exponential_rate(t, y) -> float:
    """Least-squares fit of y = A exp(-r t); returns r."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    m = y > 0
    p = np.polyfit(t[m], np.log(y[m]), 1)
    return -p[0]


# ----------------------------------------------------------------------------
# rates

def dispersive_rates(g: float, Delta: float, kappa: float, gamma: float, gamma_phi: float,
                     n_bar_kappa: float = 0.0, n_bar_gamma: float = 0.0) -> DissipationRates:
    """Purcell, inverse-Purcell and dressed-dephasing rates of the dispersive master equation."""
    if Delta == 0:
        raise ResonanceError("Delta = 0: resonant regime, dispersive rates undefined")
    lam2 = (g / Delta) ** 2
    warns = []
    if lam2 > 0.1:
        msg = f"(g/Delta)^2 = {lam2:.3f} > 0.1, dispersive rates unreliable"
        warnings.warn(msg, CQEDWarning, stacklevel=2)
        warns.append(WarningRecord("validity", msg, lam2))
    g_p = lam2 * kappa
    k_g = lam2 * gamma
    g_d = 2.0 * lam2 * gamma_phi
    interp = kappa * g**2 / ((kappa / 2) ** 2 + Delta**2)
    gamma1 = gamma * (2 * n_bar_gamma + 1) + g_p
    gamma2 = gamma1 / 2 + gamma_phi
    return DissipationRates(
        kappa=kappa, gamma=gamma, gamma_phi=gamma_phi,
        n_bar_kappa=n_bar_kappa, n_bar_gamma=n_bar_gamma,
        gamma_Purcell=g_p, kappa_inverse_Purcell=k_g, gamma_Delta=g_d,
        gamma_Purcell_interpolated=interp,
        gamma1=gamma1, gamma2=gamma2,
        T1=1.0 / gamma1 if gamma1 > 0 else np.inf,
        T2=1.0 / gamma2 if gamma2 > 0 else np.inf,
        warnings=warns,
    )


def purcell_decay_simulation(g: float, Delta: float, kappa: float, t_max: float | None = None,
                             n_t: int = 400, resonator_dim: int = 3):
    """Decay rate of the qubit-like dressed state from a two-level JC master equation.

    Returns (fitted rate, times, P_e). Pe is the excited-qubit population
    starting from |e, 0>, fitted after the fast initial hybridization.
    """
    sp = HilbertSpace((2, resonator_dim))
    sm = embed(Operator(HilbertSpace((2,)), np.array([[0, 1], [0, 0]])), 0, sp)
    a = embed(ladder_operators(resonator_dim)[0], 1, sp)
    # frame rotating at omega_r: only the detuning matters
    H = Delta * (sm.dag() @ sm) + g * (a.dag() @ sm + a @ sm.dag())
    H = Operator(sp, H.matrix, True)
    model = LindbladModel(H, [(kappa, a)])
    rate_guess = kappa * (g / Delta) ** 2
    if t_max is None:
        t_max = 3.0 / rate_guess
    t = np.linspace(0, t_max, n_t)
    psi = np.zeros(sp.dim, complex)
    psi[resonator_dim] = 1.0  # |e, 0>
    res = evolve(model, psi, t, e_ops={"Pe": sm.dag() @ sm}, store_states=False)
    pe = res.expect["Pe"].real
    m = t > 10.0 / kappa
    return fit_exponential_rate(t[m], pe[m]), t, pe


# ----------------------------------------------------------------------------
# spectroscopy

@dataclass
class Spectrum:
    drive_freqs: np.ndarray
    power: np.ndarray
    phase: np.ndarray
    field: np.ndarray


def transmission_analytic(drive_freqs, omega_r: float, omega_q: float, g: float, kappa: float,
                          gamma2: float, epsilon: float, V_IF: float = 2.0) -> Spectrum:
    """Weak-drive transmission from the truncated three-level steady state."""
    wd = np.asarray(drive_freqs, dtype=float)
    dr = omega_r - wd
    dq = omega_q - wd
    num = dq - 1j * gamma2
    if g == 0:
        a = -epsilon / (dr - 1j * kappa / 2)
    else:
        a = -epsilon * num / (num * (dr - 1j * kappa / 2) - g**2)
    amp = 0.5 * V_IF * a
    return Spectrum(wd, np.abs(amp) ** 2, np.angle(amp), a)


def jc_drive_frame_model(delta_r: float, delta_q: float, g: float, kappa: float, gamma1: float,
                         gamma_phi: float, epsilon: float, resonator_dim: int, n_bar_kappa: float = 0.0):
    """Two-level JC with a resonator drive, in the frame of the drive."""
    sp = HilbertSpace((2, resonator_dim))
    sm = embed(Operator(HilbertSpace((2,)), np.array([[0, 1], [0, 0]])), 0, sp)
    a = embed(ladder_operators(resonator_dim)[0], 1, sp)
    H = (delta_r * (a.dag() @ a) + delta_q * (sm.dag() @ sm) + g * (a.dag() @ sm + a @ sm.dag())
         + epsilon * (a + a.dag()))
    H = Operator(sp, 0.5 * (H.matrix + H.matrix.conj().T), True)
    terms = thermal_cavity_terms(a, kappa, n_bar_kappa)
    if gamma1 > 0:
        terms.append((gamma1, sm))
    if gamma_phi > 0:
        terms.append((2 * gamma_phi, sm.dag() @ sm))
    return LindbladModel(H, terms), a, sm


def transmission_sweep(sys, drive_freq_grid, rates: DissipationRates | dict, weak_drive_amp: float,
                       mode: str = "analytic", resonator_dim: int | None = None, V_IF: float = 2.0,
                       check_weak: bool = True) -> Spectrum:
    """Transmitted power and phase versus drive frequency.

    ``sys`` supplies omega_r, omega_q, g (a RabiSystem or a mapping). ``rates``
    supplies kappa, gamma1 (or gamma), gamma_phi and optionally n_bar_kappa.
    mode 'analytic' uses the weak-drive closed form; 'master' solves the
    two-level JC master equation in the drive frame and reports |<a>|^2.
    """
    get = (lambda k, default=None: getattr(sys, k, default)) if not isinstance(sys, dict) else sys.get
    wr, wq, g = get("omega_r"), get("omega_q"), get("g")
    if isinstance(rates, dict):
        rget = rates.get
    else:
        rget = lambda k, default=None: getattr(rates, k, default)  # noqa: E731
    kappa = rget("kappa")
    gamma1 = rget("gamma1", None)
    if gamma1 is None:
        gamma1 = rget("gamma", 0.0)
    gphi = rget("gamma_phi", 0.0) or 0.0
    nbar = rget("n_bar_kappa", 0.0) or 0.0
    gamma2 = gamma1 / 2 + gphi
    eps = weak_drive_amp
    if check_weak and kappa > 0 and 4 * eps**2 / kappa**2 > 0.1:
        raise WeakDriveError(f"drive {eps:.3g} too strong for kappa {kappa:.3g}: bare-cavity photon number "
                             f"{4 * eps**2 / kappa**2:.3g} exceeds 0.1")
    wd = np.asarray(drive_freq_grid, dtype=float)
    if mode == "analytic":
        return transmission_analytic(wd, wr, wq, g, kappa, gamma2, eps, V_IF)
    if mode != "master":
        raise CQEDError(f"unknown mode {mode!r}")
    if resonator_dim is None:
        resonator_dim = 4 if nbar == 0 else int(np.ceil(nbar + 6 * np.sqrt(nbar) + 5))
    field_vals = np.empty(wd.size, complex)
    for k, w in enumerate(wd):
        model, a, _ = jc_drive_frame_model(wr - w, wq - w, g, kappa, gamma1, gphi, eps, resonator_dim, nbar)
        rho = steady_state(model, method="sparse").density_matrix
        field_vals[k] = np.trace(rho @ a.matrix)
    return Spectrum(wd, np.abs(field_vals) ** 2, np.angle(field_vals), field_vals)


def find_peaks_cubic(x, y, min_rel_height: float = 0.0):
    """Local maxima of y(x) refined on a cubic interpolant; returns (positions, heights)."""
    from scipy.interpolate import CubicSpline
    from scipy.signal import find_peaks

    x = np.asarray(x, float)
    y = np.asarray(y, float)
    idx, _ = find_peaks(y, height=min_rel_height * y.max())
    cs = CubicSpline(x, y)
    dcs = cs.derivative()
    pos, hts = [], []
    for i in idx:
        lo, hi = x[max(i - 1, 0)], x[min(i + 1, x.size - 1)]
        roots = [r for r in dcs.roots(extrapolate=False) if lo <= r <= hi]
        if roots:
            r = max(roots, key=lambda z: cs(z))
        else:
            r = x[i]
        pos.append(float(r))
        hts.append(float(cs(r)))
    return np.array(pos), np.array(hts)


def fwhm(x, y, center=None) -> float:
    """Full width at half maximum of a single peak (linear interpolation at the crossings)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    i0 = int(np.argmax(y)) if center is None else int(np.argmin(np.abs(x - center)))
    half = 0.5 * y[i0]
    i = i0
    while i > 0 and y[i] > half:
        i -= 1
    j = i0
    while j < y.size - 1 and y[j] > half:
        j += 1
    if y[i] > half or y[j] > half:
        raise CQEDError("peak not resolved inside the grid")
    xl = np.interp(half, [y[i], y[i + 1]], [x[i], x[i + 1]])
    xr = np.interp(half, [y[j], y[j - 1]], [x[j], x[j - 1]])
    return float(xr - xl)


def qubit_lineshape(OmegaR: float, gamma1: float, gamma_phi: float, detuning_grid,
                    mode: str = "formula") -> np.ndarray:
    """Steady excited population of a driven, damped two-level system."""
    dq = np.asarray(detuning_grid, dtype=float)
    gamma2 = gamma1 / 2 + gamma_phi
    if mode == "formula":
        return 0.5 * OmegaR**2 / (gamma1 * gamma2 + dq**2 * gamma1 / gamma2 + OmegaR**2)
    if mode != "master":
        raise CQEDError(f"unknown mode {mode!r}")
    sp = HilbertSpace((2,))
    sz = Operator(sp, np.diag([-1.0, 1.0]), True)
    sx = Operator(sp, np.array([[0, 1], [1, 0]]), True)
    sm = Operator(sp, np.array([[0, 1], [0, 0]]))
    out = np.empty(dq.size)
    for k, d in enumerate(dq):
        H = 0.5 * d * sz + 0.5 * OmegaR * sx
        model = LindbladModel(H, [(gamma1, sm), (0.5 * gamma_phi, sz)])
        out[k] = steady_state(model, method="dense").density_matrix[1, 1].real
    return out


def lineshape_fwhm(OmegaR: float, gamma1: float, gamma_phi: float) -> float:
    """2 sqrt(1/T2^2 + OmegaR^2 T1/T2)."""
    T1 = 1.0 / gamma1
    T2 = 1.0 / (gamma1 / 2 + gamma_phi)
    return 2.0 * np.sqrt(1.0 / T2**2 + OmegaR**2 * T1 / T2)


def ac_stark_resonator_dim(n_bar: float) -> int:
    return int(np.ceil(n_bar + 6.0 * np.sqrt(n_bar) + 10))


def two_tone_model(chi: float, kappa: float, gamma1: float, gamma_phi: float, epsilon: float,
                   delta_r: float, Omega: float, delta_s: float, resonator_dim: int):
    """Dispersive qubit-resonator with a measurement tone and a spectroscopy tone.

    Frame: resonator at the measurement frequency, qubit at the spectroscopy
    frequency omega_q + delta_s. The qubit term is (chi - delta_s)/2 sz so an
    empty cavity gives a line at the Lamb-shifted omega_q + chi.
    """
    sp = HilbertSpace((2, resonator_dim))
    sz = embed(Operator(HilbertSpace((2,)), np.diag([-1.0, 1.0])), 0, sp)
    sx = embed(Operator(HilbertSpace((2,)), np.array([[0, 1], [1, 0]])), 0, sp)
    sm = embed(Operator(HilbertSpace((2,)), np.array([[0, 1], [0, 0]])), 0, sp)
    a = embed(ladder_operators(resonator_dim)[0], 1, sp)
    n = a.dag() @ a
    H = (delta_r * n + chi * (sz @ n) + 0.5 * (chi - delta_s) * sz + epsilon * (a + a.dag())
         + 0.5 * Omega * sx)
    H = Operator(sp, 0.5 * (H.matrix + H.matrix.conj().T), True)
    terms = [(kappa, a), (gamma1, sm)]
    if gamma_phi > 0:
        terms.append((0.5 * gamma_phi, sz))
    return LindbladModel(H, terms), sm


def two_tone_ac_stark(chi: float, kappa: float, gamma1: float, epsilon: float, delta_r: float,
                      Omega: float, spec_detunings, gamma_phi: float = 0.0,
                      resonator_dim: int | None = None) -> np.ndarray:
    """Steady P_e versus spectroscopy detuning delta_s = omega_s - omega_q."""
    ds = np.asarray(spec_detunings, dtype=float)
    if resonator_dim is None:
        nbar = max(abs(epsilon) ** 2 / ((delta_r + s * chi) ** 2 + kappa**2 / 4) for s in (-1, 1))
        resonator_dim = ac_stark_resonator_dim(nbar)
    out = np.empty(ds.size)
    for k, d in enumerate(ds):
        model, sm = two_tone_model(chi, kappa, gamma1, gamma_phi, epsilon, delta_r, Omega, d, resonator_dim)
        rho = steady_state(model, method="sparse").density_matrix
        out[k] = np.real(np.trace(rho @ (sm.dag() @ sm).matrix))
    return out


def measurement_dephasing_rate(alpha_g, alpha_e, chi: float) -> np.ndarray:
    """gamma_m(t) = 2 chi Im[alpha_g alpha_e^*]."""
    return 2.0 * chi * np.imag(np.asarray(alpha_g) * np.conj(np.asarray(alpha_e)))


def measurement_dephasing_steady(alpha_g: complex, alpha_e: complex, kappa: float) -> float:
    """kappa |alpha_e - alpha_g|^2 / 2."""
    return 0.5 * kappa * abs(alpha_e - alpha_g) ** 2


def measurement_dephasing_closed_form(chi: float, kappa: float, delta_r: float, n_g: float, n_e: float) -> float:
    """kappa chi^2 (n_g + n_e) / (delta_r^2 + chi^2 + (kappa/2)^2)."""
    return kappa * chi**2 * (n_g + n_e) / (delta_r**2 + chi**2 + (kappa / 2) ** 2)


def dephasing_simulation(chi: float, kappa: float, epsilon: float, delta_r: float = 0.0,
                         t_max: float | None = None, n_t: int = 300, resonator_dim: int | None = None):
    """Coherence decay of a dispersively measured qubit; returns (fitted rate, t, |rho_ge|).

    The cavity starts in vacuum and the fit uses the late-time window where
    the pointer states have reached steady state.
    """
    ng = epsilon**2 / ((delta_r - chi) ** 2 + kappa**2 / 4)
    ne = epsilon**2 / ((delta_r + chi) ** 2 + kappa**2 / 4)
    if resonator_dim is None:
        resonator_dim = ac_stark_resonator_dim(max(ng, ne))
    sp = HilbertSpace((2, resonator_dim))
    sz = embed(Operator(HilbertSpace((2,)), np.diag([-1.0, 1.0])), 0, sp)
    a = embed(ladder_operators(resonator_dim)[0], 1, sp)
    n = a.dag() @ a
    H = delta_r * n + chi * (sz @ n) + epsilon * (a + a.dag())
    H = Operator(sp, 0.5 * (H.matrix + H.matrix.conj().T), True)
    model = LindbladModel(H, [(kappa, a)])
    gm = measurement_dephasing_closed_form(chi, kappa, delta_r, ng, ne)
    if t_max is None:
        t_max = 12.0 / kappa + 3.0 / gm
    t = np.linspace(0, t_max, n_t)
    plus = np.zeros(sp.dim, complex)
    plus[0] = plus[resonator_dim] = 1 / np.sqrt(2)
    # qubit coherence operator |g><e| traced over the cavity
    ge = embed(Operator(HilbertSpace((2,)), np.array([[0, 0], [1, 0]])), 0, sp)
    res = evolve(model, plus, t, e_ops={"coh": ge}, store_states=False)
    c = np.abs(res.expect["coh"])
    m = t > 12.0 / kappa
    return fit_exponential_rate(t[m], c[m]), t, c
