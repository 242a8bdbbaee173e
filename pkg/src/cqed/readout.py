"""Dispersive readout: pointer states, SNR, fidelity, amplifier chains and heterodyne records.

Quadratures follow X = (a + a^dag)/2, P = -i(a - a^dag)/2, so the vacuum
variance is 1/4 and <X> = Re(alpha). Output records are normalized to a
temporal mode of unit norm: a chain of efficiency eta adds noise so that each
integrated quadrature has variance 1/(4 eta).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp, trapezoid
from scipy.special import erfc

from .errors import CQEDError


@dataclass
class PointerTrajectory:
    times: np.ndarray
    alpha_g: np.ndarray
    alpha_e: np.ndarray
    epsilon: np.ndarray
    delta_r: float
    chi: float
    kappa: float

    @property
    def separation(self) -> np.ndarray:
        return self.alpha_e - self.alpha_g

    def with_decay(self, gamma1: float) -> "PointerTrajectory":
        """Mix the e-pointer toward the g-pointer as exp(-gamma1 t).

        Only the mean response is modified; this is an approximation to
        qubit relaxation during the readout window.
        """
        p = np.exp(-gamma1 * (self.times - self.times[0]))
        ae = p * self.alpha_e + (1 - p) * self.alpha_g
        return PointerTrajectory(self.times, self.alpha_g, ae, self.epsilon, self.delta_r, self.chi, self.kappa)


@dataclass
class ChainStage:
    gain: float
    noise: float
    eta: float = 1.0

    def __post_init__(self):
        if self.gain < 1:
            raise CQEDError(f"stage gain must be >= 1, got {self.gain}")
        if self.noise < 0:
            raise CQEDError(f"added noise number must be >= 0, got {self.noise}")
        if not 0 < self.eta <= 1:
            raise CQEDError(f"transmissivity must be in (0, 1], got {self.eta}")


@dataclass
class MeasurementChain:
    stages: list
    omega_IF: float = 0.0
    phi_LO: float = 0.0
    V_IF: float = 1.0

    @property
    def total_gain(self) -> float:
        return float(np.prod([s.eta * s.gain for s in self.stages]))


@dataclass
class ChainNoise:
    N_T: float
    N_T_large_gain: float
    eta: float
    added_noise_A: float
    eta_bar: float
    total_gain: float


@dataclass
class HeterodyneRecords:
    """Per-shot integrated quadratures for the two prepared qubit states."""
    I_g: np.ndarray
    Q_g: np.ndarray
    I_e: np.ndarray
    Q_e: np.ndarray
    weight_norms: tuple
    eta: float
    seed: int | None = None

    def combined(self, state: str) -> np.ndarray:
        wx, wp = self.weight_norms
        I, Q = (self.I_g, self.Q_g) if state == "g" else (self.I_e, self.Q_e)
        n = np.hypot(wx, wp)
        return (wx * I + wp * Q) / n

    def histograms(self, bins: int = 100):
        mg, me = self.combined("g"), self.combined("e")
        edges = np.linspace(min(mg.min(), me.min()), max(mg.max(), me.max()), bins + 1)
        hg, _ = np.histogram(mg, edges)
        he, _ = np.histogram(me, edges)
        return edges, hg, he

    def write_csv(self, path: str | Path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["shot", "state", "I", "Q"])
            for state, I, Q in (("g", self.I_g, self.Q_g), ("e", self.I_e, self.Q_e)):
                for k in range(I.size):
                    w.writerow([k, state, repr(float(I[k])), repr(float(Q[k]))])

    def write_histogram_csv(self, path: str | Path, bins: int = 100):
        edges, hg, he = self.histograms(bins)
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left", "bin_right", "count_g", "count_e"])
            for k in range(hg.size):
                w.writerow([repr(float(edges[k])), repr(float(edges[k + 1])), int(hg[k]), int(he[k])])


@dataclass
class ReadoutResult:
    snr: float
    fidelity: float
    beta_m: float
    gamma_m: float
    histograms: tuple | None = None
    gaussian_assumed: bool = True
    notes: list = field(default_factory=list)


# ----------------------------------------------------------------------------
# pointer states

def steady_pointer(epsilon: float, delta_r: float, chi: float, kappa: float):
    """(alpha_g, alpha_e) = -eps / ((delta_r -/+ chi) - i kappa/2)."""
    ag = -epsilon / ((delta_r - chi) - 1j * kappa / 2)
    ae = -epsilon / ((delta_r + chi) - 1j * kappa / 2)
    return ag, ae


def pointer_evolution(epsilon, delta_r: float, chi: float, kappa: float, grid: Sequence[float],
                      alpha0: tuple = (0j, 0j)) -> PointerTrajectory:
    """Integrate d(alpha)/dt = -i eps - [i(delta_r +/- chi) + kappa/2] alpha for both qubit states.

    ``epsilon`` is a constant, an array sampled on ``grid`` (linearly
    interpolated) or a callable of time.
    """
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise CQEDError("time grid must be a non-empty 1D array")
    out = []
    if np.isscalar(epsilon):
        eps_t = np.full(t.size, float(epsilon))
        for s, a0 in zip((-1, 1), alpha0):
            lam = 1j * (delta_r + s * chi) + kappa / 2
            a_ss = -1j * epsilon / lam if lam != 0 else 0.0
            if lam == 0:
                out.append(a0 - 1j * epsilon * (t - t[0]))
            else:
                out.append(a_ss + (a0 - a_ss) * np.exp(-lam * (t - t[0])))
    else:
        if callable(epsilon):
            eps_f = epsilon
            eps_t = np.array([epsilon(x) for x in t], dtype=float)
        else:
            eps_t = np.asarray(epsilon, dtype=float)
            if eps_t.shape != t.shape:
                raise CQEDError("sampled drive must match the time grid")
            eps_f = lambda x: np.interp(x, t, eps_t)  # noqa: E731
        for s, a0 in zip((-1, 1), alpha0):
            lam = 1j * (delta_r + s * chi) + kappa / 2

            def rhs(x, y, lam=lam):
                a = y[0] + 1j * y[1]
                d = -1j * eps_f(x) - lam * a
                return [d.real, d.imag]

            if t.size == 1:
                out.append(np.array([complex(a0)]))
                continue
            dt = np.min(np.diff(t)) if t.size > 1 else None
            sol = solve_ivp(rhs, (t[0], t[-1]), [complex(a0).real, complex(a0).imag], t_eval=t,
                            method="DOP853", rtol=1e-10, atol=1e-12, max_step=max(dt, 1e-12) * 4)
            if not sol.success:
                raise CQEDError(f"pointer integration failed: {sol.message}")
            out.append(sol.y[0] + 1j * sol.y[1])
    return PointerTrajectory(t, out[0], out[1], eps_t, delta_r, chi, kappa)


def steady_amplitude_phase(epsilon: float, delta_r: float, chi: float, kappa: float):
    """(A_g, A_e, phi_g, phi_e) with A = 2 eps / sqrt((kappa/2)^2 + (delta_r +/- chi)^2)."""
    dg, de = delta_r - chi, delta_r + chi
    A = lambda d: 2 * epsilon / np.sqrt((kappa / 2) ** 2 + d**2)  # noqa: E731
    phi = lambda d: np.arctan(d / (kappa / 2))  # noqa: E731
    return A(dg), A(de), phi(dg), phi(de)


# ----------------------------------------------------------------------------
# SNR, fidelity, efficiency

def default_weights(traj: PointerTrajectory):
    d = traj.separation
    return np.abs(d.real), np.abs(d.imag)


def snr(traj: PointerTrajectory, kappa: float | None = None, eta: float = 1.0, tau_m: float | None = None,
        wX=None, wP=None) -> float:
    """Signal-to-noise ratio of the weighted, integrated heterodyne signal.

    The record of each quadrature is sqrt(kappa) <X(t)> dt plus white noise of
    spectral density 1/(4 eta). Weights default to |<X>_e - <X>_g| and
    |<P>_e - <P>_g|; callables of time are accepted.
    """
    kappa = traj.kappa if kappa is None else kappa
    t = traj.times
    if tau_m is None:
        tau_m = t[-1] - t[0]
    if tau_m <= 0:
        raise CQEDError(f"integration time must be positive, got {tau_m}")
    if not 0 < eta <= 1:
        raise CQEDError(f"efficiency must be in (0, 1], got {eta}")
    m = t <= t[0] + tau_m * (1 + 1e-12)
    tt = t[m]
    d = traj.separation[m]
    dwX, dwP = default_weights(traj)
    wx = _weight(wX, tt, dwX[m])
    wp = _weight(wP, tt, dwP[m])
    signal = np.sqrt(kappa) * trapezoid(wx * d.real + wp * d.imag, tt)
    noise_var = 2 * trapezoid(wx**2 + wp**2, tt) / (4 * eta)
    if noise_var == 0:
        return 0.0
    return float(abs(signal) / np.sqrt(noise_var))


def _weight(w, t, default):
    if w is None:
        return default
    if callable(w):
        return np.array([w(x) for x in t], dtype=float)
    w = np.asarray(w, dtype=float)
    if w.shape == ():
        return np.full(t.size, float(w))
    return w[: t.size]


def snr_long_time(epsilon: float, chi: float, kappa: float, tau_m: float) -> float:
    """(2 eps/kappa) sqrt(2 kappa tau_m) |sin 2 phi| at delta_r = 0, up to the chain scale."""
    phi = np.arctan(2 * chi / kappa)
    return float(2 * epsilon / kappa * np.sqrt(2 * kappa * tau_m) * abs(np.sin(2 * phi)))


def beta_m(traj: PointerTrajectory, tau_m: float | None = None) -> float:
    """2 chi int_0^tau Im[alpha_g alpha_e^*] dt."""
    t = traj.times
    if tau_m is None:
        tau_m = t[-1] - t[0]
    m = t <= t[0] + tau_m * (1 + 1e-12)
    return float(2 * traj.chi * trapezoid(np.imag(traj.alpha_g[m] * np.conj(traj.alpha_e[m])), t[m]))


def measurement_fidelity(snr_value: float) -> float:
    """F_m = 1 - erfc(SNR/2), valid for Gaussian marginals."""
    return float(1.0 - erfc(snr_value / 2.0))


def histogram_fidelity(samples_g, samples_e) -> float:
    """1 - [P(e|g) + P(g|e)] at the best single threshold on the empirical distributions."""
    g = np.sort(np.asarray(samples_g, float))
    e = np.sort(np.asarray(samples_e, float))
    if g.size == 0 or e.size == 0:
        raise CQEDError("empty sample set")
    flip = np.mean(e) < np.mean(g)
    if flip:
        g, e = np.sort(-g), np.sort(-e)
    thr = np.concatenate([g, e])
    # P(e|g): g samples above threshold; P(g|e): e samples at or below threshold
    p_eg = 1.0 - np.searchsorted(g, thr, side="right") / g.size
    p_ge = np.searchsorted(e, thr, side="right") / e.size
    return float(1.0 - np.min(p_eg + p_ge))


def efficiency_from_snr(snr_value: float, traj: PointerTrajectory, chi: float | None = None,
                        tau_m: float | None = None) -> float:
    """eta = SNR^2 / (4 beta_m)."""
    if chi is not None and chi != traj.chi:
        traj = PointerTrajectory(traj.times, traj.alpha_g, traj.alpha_e, traj.epsilon, traj.delta_r, chi, traj.kappa)
    b = beta_m(traj, tau_m)
    if abs(b) < 1e-300:
        raise CQEDError("beta_m = 0: efficiency undefined (no measurement-induced dephasing)")
    return float(snr_value**2 / (4 * b))


# ----------------------------------------------------------------------------
# amplifier chain

def chain_noise(chain: MeasurementChain | Sequence[ChainStage]) -> ChainNoise:
    """Total added noise number N_T, efficiency and added noise of an amplifier chain.

    Exact: (G_T - 1)(N_T + 1) = sum_i (G_i - 1)(N_i + 1) prod_{j>i} eta_j G_j,
    where each stage is a beam splitter eta_i followed by an amplifier G_i.
    The large-gain form is (1/eta_1)[1 + N_1 + N_2/(eta_2 G_1) + ...] - 1.
    """
    stages = chain.stages if isinstance(chain, MeasurementChain) else list(chain)
    if not stages:
        raise CQEDError("chain has no stages")
    GT = float(np.prod([s.eta * s.gain for s in stages]))
    if GT <= 1:
        raise CQEDError(f"total gain {GT:.3g} must exceed 1 for the added-noise number to be defined")
    acc = 0.0
    for i, s in enumerate(stages):
        downstream = np.prod([x.eta * x.gain for x in stages[i + 1:]]) if i + 1 < len(stages) else 1.0
        acc += (s.gain - 1) * (s.noise + 1) * downstream
    NT = acc / (GT - 1) - 1
    approx = 1 + stages[0].noise
    ref = 1.0
    for i in range(1, len(stages)):
        ref *= stages[i].eta * stages[i - 1].gain
        approx += stages[i].noise / ref
    approx = approx / stages[0].eta - 1
    A = (GT - 1) / GT * (NT + 0.5)
    return ChainNoise(N_T=float(NT), N_T_large_gain=float(approx), eta=1.0 / (NT + 1.0),
                      added_noise_A=float(A), eta_bar=1.0 / (2 * A + 1), total_gain=GT)


def amplifier_added_noise(gain: float, noise: float) -> float:
    """A = ((G - 1)/G)(N + 1/2)."""
    return (gain - 1) / gain * (noise + 0.5)


# ----------------------------------------------------------------------------
# heterodyne

def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def if_traces(traj: PointerTrajectory, chain: MeasurementChain, state: str = "g"):
    """Noiseless IF voltages V_I, V_Q: the pointer quadratures rotated by omega_IF t + phi_LO."""
    a = traj.alpha_g if state == "g" else traj.alpha_e
    X, P = a.real, a.imag
    th = chain.omega_IF * traj.times + chain.phi_LO
    VI = chain.V_IF * (np.cos(th) * X - np.sin(th) * P)
    VQ = chain.V_IF * (np.sin(th) * X + np.cos(th) * P)
    return VI, VQ


def demodulate(VI, VQ, times, omega_IF: float, phi_LO: float = 0.0, V_IF: float = 1.0):
    th = omega_IF * np.asarray(times) + phi_LO
    X = (np.cos(th) * VI + np.sin(th) * VQ) / V_IF
    P = (-np.sin(th) * VI + np.cos(th) * VQ) / V_IF
    return X, P


def _chain_eta(chain) -> float:
    if isinstance(chain, MeasurementChain):
        return chain_noise(chain).eta_bar
    eta = float(chain)
    if not 0 < eta <= 1:
        raise CQEDError(f"efficiency must be in (0, 1], got {eta}")
    return eta


def synthesize_heterodyne_records(traj: PointerTrajectory, chain, n_shots: int, seed: int | None = None,
                                  tau_m: float | None = None, wX=None, wP=None) -> HeterodyneRecords:
    """Per-shot weighted integrals of the two quadrature records.

    ``chain`` is a MeasurementChain (its eta_bar is used) or an efficiency.
    Each quadrature is projected on its own unit-norm weight mode, so its
    noise variance is 1/(4 eta) and the mean is sqrt(kappa) times the
    weighted pointer quadrature.
    """
    if n_shots <= 0:
        raise CQEDError("n_shots must be positive")
    eta = _chain_eta(chain)
    t = traj.times
    tau_m = (t[-1] - t[0]) if tau_m is None else tau_m
    if tau_m <= 0:
        raise CQEDError("integration time must be positive")
    m = t <= t[0] + tau_m * (1 + 1e-12)
    tt = t[m]
    dwX, dwP = default_weights(traj)
    wx = _weight(wX, tt, dwX[m])
    wp = _weight(wP, tt, dwP[m])
    nx = np.sqrt(trapezoid(wx**2, tt))
    npp = np.sqrt(trapezoid(wp**2, tt))
    box = np.ones_like(tt) / np.sqrt(max(tt[-1] - tt[0], 1e-300))
    fx = wx / nx if nx > 0 else box
    fp = wp / npp if npp > 0 else box
    sk = np.sqrt(traj.kappa)
    rng = np.random.default_rng(seed)
    sd = np.sqrt(1.0 / (4 * eta))
    out = {}
    for state, a in (("g", traj.alpha_g[m]), ("e", traj.alpha_e[m])):
        mx = sk * trapezoid(fx * a.real, tt)
        mp = sk * trapezoid(fp * a.imag, tt)
        out[state] = (mx + sd * rng.standard_normal(n_shots), mp + sd * rng.standard_normal(n_shots))
    return HeterodyneRecords(out["g"][0], out["g"][1], out["e"][0], out["e"][1], (float(nx), float(npp)), eta, seed)


def readout(traj: PointerTrajectory, chain=1.0, n_shots: int = 0, seed: int | None = None,
            tau_m: float | None = None, bins: int = 100) -> ReadoutResult:
    """SNR, fidelity and dephasing summary, with histograms when shots are requested."""
    eta = _chain_eta(chain)
    s = snr(traj, eta=eta, tau_m=tau_m)
    b = beta_m(traj, tau_m)
    ag, ae = traj.alpha_g[-1], traj.alpha_e[-1]
    gm = float(2 * traj.chi * np.imag(ag * np.conj(ae)))
    fm = measurement_fidelity(s)
    hist = None
    notes = ["fidelity assumes Gaussian marginals"]
    if n_shots > 0:
        rec = synthesize_heterodyne_records(traj, eta, n_shots, seed, tau_m)
        hist = rec.histograms(bins)
        notes.append(f"histogram fidelity {histogram_fidelity(rec.combined('g'), rec.combined('e')):.6f}")
    return ReadoutResult(snr=s, fidelity=fm, beta_m=b, gamma_m=gm, histograms=hist, notes=notes)
