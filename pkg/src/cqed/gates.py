"""Single- and two-qubit gate models with process extraction.

Everything here uses hbar = 1 and angular frequencies in a single consistent
unit (rad/s, rad/ns, ...). The exception is the charge-basis helpers that take
TransmonParams (EJ, EC in Hz) and return rad/s.

Computational basis ordering for two qubits is |q1 q2> = 00, 01, 10, 11.
Pauli Z is taken as |1><1| - |0><0| so that H = (w/2) Z has |1> on top.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import linalg, special
from scipy.integrate import solve_ivp
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .coupling import assign_dressed_labels
from .devices import TransmonParams, transmon_eigensystem
from .errors import CQEDError, CQEDWarning, LeakageError, ResonanceError, StiffnessError

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "Z": np.array([[-1, 0], [0, 1]], dtype=complex),
}


def _ladder(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)


def _duffing(omega: float, EC: float, d: int) -> np.ndarray:
    n = np.arange(d, dtype=float)
    return np.diag(omega * n - 0.5 * EC * n * (n - 1)).astype(complex)


# ----------------------------------------------------------------------------
# process metrics

@dataclass
class GateResult:
    unitary: np.ndarray
    leakage: float
    fidelity: float
    target: np.ndarray | None = None
    phases: dict | None = None
    duration: float | None = None
    propagator: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def cplx(m):
            m = np.asarray(m)
            return {"re": m.real.tolist(), "im": m.imag.tolist()}
        out = {"leakage": float(self.leakage), "fidelity": float(self.fidelity),
               "unitary": cplx(self.unitary), "duration": self.duration}
        if self.target is not None:
            out["target"] = cplx(self.target)
        if self.phases is not None:
            out["phases"] = {k: float(v) for k, v in self.phases.items()}
        out["extra"] = {k: (float(v) if np.isscalar(v) and not isinstance(v, str) else v)
                        for k, v in self.extra.items()}
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def average_gate_fidelity(U, target) -> float:
    """(Tr(M M^dag) + |Tr M|^2) / (d(d+1)) with M = target^dag U.

    For a unitary U this is the usual (d + |Tr|^2)/(d(d+1)); the Tr(M M^dag)
    form also handles a leaky projected block. Insensitive to global phase.
    """
    U = np.asarray(U, dtype=complex)
    V = np.asarray(target, dtype=complex)
    d = U.shape[0]
    M = V.conj().T @ U
    return float((np.trace(M @ M.conj().T).real + abs(np.trace(M)) ** 2) / (d * (d + 1)))


def leakage_of(U_proj) -> float:
    """Average population leaving the computational block, 1 - ||U_proj||_F^2 / d."""
    U = np.asarray(U_proj)
    return float(max(0.0, 1.0 - np.sum(np.abs(U) ** 2) / U.shape[0]))


def project(U_full: np.ndarray, indices: Sequence[int]) -> np.ndarray:
    idx = np.asarray(indices)
    return U_full[np.ix_(idx, idx)]


def _propagate(H0: np.ndarray, drive: Callable | None, t_final: float, rtol=1e-10, atol=1e-12) -> np.ndarray:
    """Unitary propagator of H0 + drive(t) from 0 to t_final."""
    d = H0.shape[0]
    if drive is None:
        return linalg.expm(-1j * H0 * t_final)

    def rhs(t, y):
        U = y.reshape(d, d)
        return (-1j * (H0 + drive(t)) @ U).ravel()

    sol = solve_ivp(rhs, (0.0, t_final), np.eye(d, dtype=complex).ravel(), method="DOP853",
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise StiffnessError(f"propagator integration failed: {sol.message}")
    return sol.y[:, -1].reshape(d, d)


def pauli_decompose(H4: np.ndarray) -> dict:
    """Coefficients c_PQ with H = sum c_PQ P (x) Q for a 4x4 operator."""
    out = {}
    for p, P in PAULI.items():
        for q, Q in PAULI.items():
            out[p + q] = float(np.trace(H4 @ np.kron(P, Q)).real / 4)
    return out


# ----------------------------------------------------------------------------
# single-qubit drives

_TRUNC = np.exp(-2.0)  # Gaussian value at +-2 sigma


@dataclass
class DriveEnvelope:
    """Drive eps(t) on a transmon in the frame of the carrier.

    shape: "square", "gaussian", "gaussian-DRAG" or "custom".
    Gaussians span +-2 sigma (duration = 4 sigma) with the edge offset removed
    so the envelope starts and ends at zero; ``amplitude`` is the peak.
    The DRAG quadrature is drag * d/dt(in-phase) / EC.
    """
    shape: str = "square"
    amplitude: float = 0.0
    duration: float = 0.0
    carrier: float = 0.0
    phase: float = 0.0
    drag: float = 0.0
    EC: float | None = None
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.shape not in ("square", "gaussian", "gaussian-DRAG", "custom"):
            raise CQEDError(f"unknown envelope shape {self.shape!r}")
        if self.duration <= 0:
            raise CQEDError(f"duration must be positive, got {self.duration}")
        if self.shape == "custom" and (self.samples is None or len(self.samples) < 2):
            raise CQEDError("custom envelope needs at least two samples")
        if self.shape == "gaussian-DRAG" and self.drag != 0 and not self.EC:
            raise CQEDError("DRAG envelope needs EC")

    @property
    def sigma(self) -> float:
        return self.duration / 4.0

    def in_phase(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= 0) & (t <= self.duration)
        if self.shape == "square":
            v = np.full(t.shape, self.amplitude)
        elif self.shape == "custom":
            s = np.asarray(self.samples)
            grid = np.linspace(0, self.duration, s.size)
            v = np.interp(t, grid, s.real)
        else:
            g = np.exp(-((t - self.duration / 2) ** 2) / (2 * self.sigma**2))
            v = self.amplitude * (g - _TRUNC) / (1 - _TRUNC)
        return np.where(inside, v, 0.0)

    def in_phase_derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.shape not in ("gaussian", "gaussian-DRAG"):
            return np.zeros(t.shape)
        inside = (t >= 0) & (t <= self.duration)
        x = t - self.duration / 2
        g = np.exp(-(x**2) / (2 * self.sigma**2))
        return np.where(inside, -self.amplitude * x / self.sigma**2 * g / (1 - _TRUNC), 0.0)

    def quadrature(self, t):
        t = np.asarray(t, dtype=float)
        if self.shape == "custom":
            s = np.asarray(self.samples)
            grid = np.linspace(0, self.duration, s.size)
            inside = (t >= 0) & (t <= self.duration)
            return np.where(inside, np.interp(t, grid, np.imag(s)), 0.0)
        if self.shape != "gaussian-DRAG" or self.drag == 0:
            return np.zeros(t.shape)
        return self.drag * self.in_phase_derivative(t) / self.EC

    def complex_envelope(self, t):
        return self.in_phase(t) + 1j * self.quadrature(t)

    def area(self, n: int = 4001) -> float:
        """Integral of the in-phase envelope; the rotation angle is twice this."""
        if self.shape == "square":
            return self.amplitude * self.duration
        t = np.linspace(0, self.duration, n)
        return float(np.trapezoid(self.in_phase(t), t))

    def bandwidth(self) -> float:
        if self.shape in ("gaussian", "gaussian-DRAG"):
            return 1.0 / self.sigma
        return 2 * np.pi / self.duration


def gaussian_envelope(theta: float, duration: float, phase: float = 0.0) -> DriveEnvelope:
    """Truncated Gaussian with rotation angle theta (= 2 * area)."""
    unit = DriveEnvelope("gaussian", 1.0, duration)
    return replace(unit, amplitude=theta / (2 * unit.area()), phase=phase)


def drag_envelope(theta: float, duration: float, EC: float, coefficient: float = 1.0,
                  phase: float = 0.0) -> DriveEnvelope:
    """Gaussian plus a derivative quadrature scaled by coefficient / EC."""
    if duration <= 0:
        raise CQEDError("sigma must be positive")
    g = gaussian_envelope(theta, duration, phase)
    return replace(g, shape="gaussian-DRAG", drag=coefficient, EC=EC)


def virtual_z(envelopes: Sequence[DriveEnvelope], theta: float) -> list:
    """Z(theta) as frame bookkeeping: shift the phase of every later pulse."""
    return [replace(e, phase=e.phase - theta) for e in envelopes]


def rotation_target(theta: float, phi: float) -> np.ndarray:
    """exp(-i theta/2 (e^{-i phi} s+ + e^{i phi} s-)) with s+ = |1><0|."""
    sp = np.array([[0, 0], [1, 0]], dtype=complex)
    G = np.exp(-1j * phi) * sp + np.exp(1j * phi) * sp.conj().T
    return linalg.expm(-0.5j * theta * G)


def z_rotation(theta: float) -> np.ndarray:
    return linalg.expm(-0.5j * theta * PAULI["Z"])


def single_qubit_gate(envelope: DriveEnvelope, transmon_dim: int = 3, EC: float | None = None,
                      delta_q: float = 0.0, target: np.ndarray | None = None,
                      gamma1: float = 0.0, gamma_phi: float = 0.0) -> GateResult:
    """Drive a Duffing transmon in the carrier frame and extract the qubit block.

    H = delta_q n - (EC/2) n(n-1) + eps(t) e^{-i phi} b^dag + h.c. The default
    target is the two-level rotation by 2 * area about the axis set by phi.
    With gamma1 or gamma_phi the process is propagated as a superoperator and
    the fidelity is the average fidelity of the leaky channel.
    """
    d = int(transmon_dim)
    if d < 2:
        raise CQEDError("transmon_dim must be at least 2")
    if d > 2 and EC is None:
        raise CQEDError("EC is required for a multilevel transmon")
    ec = 0.0 if EC is None else float(EC)
    # leakage becomes visible (> ~1e-4) once the spectral width reaches ~EC/4
    if d > 2 and envelope.bandwidth() > 0.25 * ec:
        warnings.warn(f"pulse bandwidth {envelope.bandwidth():.3g} is not small against EC {ec:.3g}; "
                      "expect leakage",
                      CQEDWarning, stacklevel=2)
    b = _ladder(d)
    H0 = _duffing(delta_q, ec, d)
    ph = np.exp(-1j * envelope.phase)

    if envelope.shape == "square":
        H0 = H0 + envelope.amplitude * (ph * b.conj().T + np.conj(ph) * b)
        drive = None
    else:
        bd = b.conj().T

        def drive(t):
            e = complex(envelope.complex_envelope(t)) * ph
            return e * bd + np.conj(e) * b

    if target is None:
        target = rotation_target(2 * envelope.area(), envelope.phase)

    if gamma1 == 0 and gamma_phi == 0:
        U = _propagate(H0, drive, envelope.duration)
        Up = U[:2, :2]
        return GateResult(Up, leakage_of(Up), average_gate_fidelity(Up, target), target,
                          duration=envelope.duration, propagator=U)

    # dissipative channel on vec(rho) with row-major vec
    n = b.conj().T @ b
    I = np.eye(d)

    def ham(H):
        return -1j * (np.kron(H, I) - np.kron(I, H.T))

    L0 = ham(H0)
    for rate, c in ((gamma1, b), (2 * gamma_phi, n)):
        if rate:
            cdc = c.conj().T @ c
            L0 = L0 + rate * (np.kron(c, c.conj()) - 0.5 * np.kron(cdc, I) - 0.5 * np.kron(I, cdc.T))
    if drive is None:
        S = linalg.expm(L0 * envelope.duration)
    else:
        Lb, Lbd = ham(b), ham(b.conj().T)

        def rhs(t, y):
            e = complex(envelope.complex_envelope(t)) * ph
            return ((L0 + e * Lbd + np.conj(e) * Lb) @ y.reshape(d * d, d * d)).ravel()

        sol = solve_ivp(rhs, (0, envelope.duration), np.eye(d * d, dtype=complex).ravel(),
                        method="DOP853", rtol=1e-9, atol=1e-11)
        if not sol.success:
            raise StiffnessError(sol.message)
        S = sol.y[:, -1].reshape(d * d, d * d)
    # entanglement fidelity of the channel restricted to the qubit block
    Fe, kept = 0.0, 0.0
    for i in range(2):
        for j in range(2):
            rin = np.zeros((d, d), complex)
            rin[i, j] = 1
            rout = (S @ rin.ravel()).reshape(d, d)[:2, :2]
            Fe += (target[:, i].conj() @ rout @ target[:, j]).real
            if i == j:
                kept += np.trace(rout).real
    Fe /= 4
    leak = 1 - kept / 2
    U = _propagate(H0, drive, envelope.duration)
    return GateResult(U[:2, :2], float(leak), float((2 * Fe + 1 - leak) / 3), target,
                      duration=envelope.duration, propagator=U, extra={"open_system": True})


def ac_stark_z(OmegaR: float, delta_q: float, EC: float, duration: float) -> float:
    """Z phase from an off-resonant drive: -(EC/2)(OmegaR/delta_q)^2 * duration.

    The sign is that of the qubit frequency shift (the drive lowers it).
    """
    if delta_q == 0:
        raise ResonanceError("ac-Stark Z rotation needs a detuned drive")
    r = OmegaR / delta_q
    if abs(r) > 0.3:
        warnings.warn(f"OmegaR/delta_q = {r:.2f} is not small; second-order shift is inaccurate",
                      CQEDWarning, stacklevel=2)
    return float(-0.5 * EC * r**2 * duration)


# ----------------------------------------------------------------------------
# two-qubit systems

@dataclass
class TwoQubitSystem:
    """Two Duffing transmons, coupled directly (J) or through a resonator (g1, g2, omega_r)."""
    omega1: float
    omega2: float
    EC1: float
    EC2: float
    J: float = 0.0
    levels: int = 3
    g1: float | None = None
    g2: float | None = None
    omega_r: float | None = None
    resonator_dim: int = 0
    frame: float = 0.0

    def __post_init__(self):
        if self.levels < 2:
            raise CQEDError("levels must be at least 2")
        if np.iscomplexobj(self.J):
            raise CQEDError("J must be real")
        if self.mediated and self.resonator_dim < 2:
            raise CQEDError("resonator-mediated coupling needs resonator_dim >= 2")

    @property
    def mediated(self) -> bool:
        return self.omega_r is not None

    @property
    def Delta12(self) -> float:
        return self.omega1 - self.omega2

    @property
    def dims(self) -> tuple:
        if self.mediated:
            return (self.levels, self.levels, self.resonator_dim)
        return (self.levels, self.levels)

    def operators(self):
        dims = self.dims
        ops = []
        for k in range(len(dims)):
            mats = [np.eye(x, dtype=complex) for x in dims]
            mats[k] = _ladder(dims[k])
            m = mats[0]
            for x in mats[1:]:
                m = np.kron(m, x)
            ops.append(m)
        return ops

    def hamiltonian(self, omega1: float | None = None) -> np.ndarray:
        w1 = self.omega1 if omega1 is None else omega1
        ops = self.operators()
        b1, b2 = ops[0], ops[1]
        n1, n2 = b1.conj().T @ b1, b2.conj().T @ b2
        H = (w1 - self.frame) * n1 - 0.5 * self.EC1 * (n1 @ n1 - n1)
        H = H + (self.omega2 - self.frame) * n2 - 0.5 * self.EC2 * (n2 @ n2 - n2)
        H = H + self.J * (b1.conj().T @ b2 + b1 @ b2.conj().T)
        if self.mediated:
            a = ops[2]
            H = H + (self.omega_r - self.frame) * (a.conj().T @ a)
            H = H + self.g1 * (a.conj().T @ b1 + a @ b1.conj().T)
            H = H + self.g2 * (a.conj().T @ b2 + a @ b2.conj().T)
        return 0.5 * (H + H.conj().T)

    def index(self, *levels) -> int:
        levels = tuple(levels) + (0,) * (len(self.dims) - len(levels))
        return int(np.ravel_multi_index(levels, self.dims))

    def computational_indices(self) -> list:
        return [self.index(i, j) for i in (0, 1) for j in (0, 1)]


def exchange_J(EC1: float, EC2: float, ECc: float, EJ1: float, EJ2: float) -> float:
    """hbar J = (2 EC1 EC2 / ECc) (EJ1/2EC1 * EJ2/2EC2)^{1/4}; same units as the inputs."""
    if ECc <= 0:
        raise CQEDError("ECc must be positive")
    if np.isinf(ECc):
        return 0.0
    return float(2 * EC1 * EC2 / ECc * ((EJ1 / (2 * EC1)) * (EJ2 / (2 * EC2))) ** 0.25)


def _exchange_unitary(J: float, t: float) -> np.ndarray:
    s = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
    H = J * (np.kron(s.conj().T, s) + np.kron(s, s.conj().T))
    return linalg.expm(-1j * H * t)


def iswap_target(power: float = 1.0) -> np.ndarray:
    """iSWAP^power as generated by +J exchange: off-diagonal -i sin(power pi/2)."""
    c, s = np.cos(power * np.pi / 2), np.sin(power * np.pi / 2)
    return np.array([[1, 0, 0, 0], [0, c, -1j * s, 0], [0, -1j * s, c, 0], [0, 0, 0, 1]], dtype=complex)


SQRT_ISWAP = iswap_target(0.5)
ISWAP = iswap_target(1.0)
CZ = np.diag([1, 1, 1, -1]).astype(complex)


def iswap_gate(J: float, t: float | None = None) -> GateResult:
    """Resonant two-level exchange J(s+ s- + h.c.) for time t (default pi/4J)."""
    if J == 0:
        raise CQEDError("J must be nonzero for an exchange gate")
    if t is None:
        t = np.pi / (4 * abs(J))
    U = _exchange_unitary(J, t)
    tgt = iswap_target(4 * J * t / np.pi * 0.5)
    return GateResult(U, leakage_of(U), average_gate_fidelity(U, SQRT_ISWAP), SQRT_ISWAP, duration=t,
                      extra={"J": J, "power_of_iswap": 2 * J * t / np.pi,
                             "fidelity_to_generated": average_gate_fidelity(U, tgt)})


def offstate_zz(J: float, Delta12: float, EC1: float | None = None, EC2: float | None = None) -> dict:
    """Residual interaction of detuned exchange-coupled qubits.

    Returns the second-order estimate J^2/Delta12 (which for two-level qubits
    is the dressed frequency shift +-J^2/Delta12), and the exact conditional
    rate zeta = E11 + E00 - E01 - E10 from diagonalization. zeta vanishes for
    two-level qubits and is set by the third levels for transmons.
    """
    if Delta12 == 0:
        raise ResonanceError("off-state analysis needs detuned qubits")
    levels = 2 if EC1 is None else 3
    sys = TwoQubitSystem(Delta12, 0.0, EC1 or 0.0, EC2 or 0.0, J, levels)
    E = _dressed_grid(sys.hamiltonian(), sys.dims)
    return {"zz_estimate": J**2 / Delta12,
            "shift_q1": float(E[1, 0] - E[0, 0] - Delta12),
            "shift_q2": float(E[0, 1] - E[0, 0]),
            "conditional_rate": float(E[1, 1] + E[0, 0] - E[0, 1] - E[1, 0])}


def _dressed_grid(H, dims):
    w, v = linalg.eigh(H)
    lab = assign_dressed_labels(v, w)
    return w[lab].reshape(dims)


def mediated_J(g1: float, g2: float, Delta1: float, Delta2: float) -> float:
    """J = (g1 g2 / 2)(1/Delta1 + 1/Delta2)."""
    if Delta1 == 0 or Delta2 == 0:
        raise ResonanceError("qubit resonant with the bus; mediated J is undefined")
    return float(0.5 * g1 * g2 * (1 / Delta1 + 1 / Delta2))


def charge_basis_bus_hamiltonian(q1: TransmonParams, q2: TransmonParams, omega_r: float, g1: float,
                                 g2: float, n_levels: int = 5, resonator_dim: int = 5,
                                 ncut: int = 20) -> tuple:
    """Two charge-basis transmons on a common resonator, excitation-conserving coupling.

    Transmon levels and charge matrix elements come from exact diagonalization;
    g_i multiplies n_i / <0|n_i|1> restricted to its lowering (upper) and
    raising (lower) triangles. Returns (H in rad/s, dims = (n_levels, n_levels, resonator_dim)).
    """
    mats = []
    for q in (q1, q2):
        e, nmat = transmon_eigensystem(q, n_levels, ncut)
        low = np.triu(nmat, 1) / nmat[0, 1]
        mats.append((np.diag(e), low))
    d, r = n_levels, resonator_dim
    Iq, Ir = np.eye(d), np.eye(r)
    a = _ladder(r)
    H = np.kron(np.kron(mats[0][0], Iq), Ir) + np.kron(np.kron(Iq, mats[1][0]), Ir)
    H = H + omega_r * np.kron(np.kron(Iq, Iq), a.conj().T @ a)
    for g, low, first in ((g1, mats[0][1], True), (g2, mats[1][1], False)):
        B = np.kron(np.kron(low, Iq), Ir) if first else np.kron(np.kron(Iq, low), Ir)
        A = np.kron(np.kron(Iq, Iq), a)
        H = H + g * (A.conj().T @ B + A @ B.conj().T)
    return 0.5 * (H + H.conj().T), (d, d, r)


def anticrossing(builder: Callable[[float], tuple], label_a: tuple, label_b: tuple,
                 bounds: tuple, xatol: float = 1e-9) -> tuple:
    """Minimum splitting between two dressed levels over a scalar control.

    builder(x) returns (H, dims). Dressed levels are followed by maximum
    overlap with their bare labels. Returns (x_min, gap).
    """
    def gap(x):
        H, dims = builder(x)
        w, v = linalg.eigh(H)
        lab = assign_dressed_labels(v, w)
        ia = lab[np.ravel_multi_index(label_a, dims)]
        ib = lab[np.ravel_multi_index(label_b, dims)]
        return abs(w[ia] - w[ib])

    xs = np.linspace(bounds[0], bounds[1], 41)
    vals = [gap(x) for x in xs]
    k = int(np.argmin(vals))
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, xs.size - 1)]
    res = minimize_scalar(gap, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    return float(res.x), float(res.fun)


# ----------------------------------------------------------------------------
# 11-02 controlled phase

def _phase_table(Uc: np.ndarray) -> dict:
    ph = np.angle(np.diag(Uc))
    ph = ph - ph[0]
    p01, p10, p11 = ph[1], ph[2], ph[3]
    cond = np.angle(np.exp(1j * (p11 - p01 - p10)))
    return {"phi01": float(p01), "phi10": float(p10), "phi11": float(p11), "conditional": float(cond)}


def factor_single_qubit_phases(Uc: np.ndarray) -> np.ndarray:
    """Remove phi01, phi10 (and the global phase of |00>) with local Z rotations."""
    ph = np.angle(np.diag(Uc))
    g = ph[0]
    corr = np.diag(np.exp(-1j * np.array([g, ph[1], ph[2], ph[1] + ph[2] - g])))
    return corr @ Uc


def zeta_exact(system: TwoQubitSystem, omega1: float | None = None) -> float:
    """zeta = E01 + E10 - E11 - E00 of the dressed spectrum."""
    E = _dressed_grid(system.hamiltonian(omega1), system.dims)
    E = E.reshape(system.dims)
    if system.mediated:
        E = E[..., 0]
    return float(E[0, 1] + E[1, 0] - E[1, 1] - E[0, 0])


def _gap_11_02(system: TwoQubitSystem, omega1: float) -> float:
    H = system.hamiltonian(omega1)
    w, v = linalg.eigh(H)
    lab = assign_dressed_labels(v, w)
    a, b = lab[system.index(1, 1)], lab[system.index(0, 2)]
    return abs(w[a] - w[b])


def cz_11_02(system: TwoQubitSystem, protocol: str = "sudden", omega1_path: Callable | None = None,
             duration: float | None = None, leakage_threshold: float = 1e-3) -> GateResult:
    """11-02 controlled phase.

    sudden: qubit 1 jumps to the 11-02 resonance omega1 = omega2 - EC2 and
    dwells for 2 pi / gap, where gap is the 11-02 splitting there.
    adiabatic: qubit 1 follows omega1_path(t) for ``duration``; the measured
    conditional phase is returned along with the integral of zeta(t).
    Single-qubit phases are factored out before comparing with diag(1,1,1,-1)
    (sudden) or diag(1,1,1,e^{i phi}) (adiabatic, phi = integral of zeta).
    """
    if system.levels < 3:
        raise CQEDError("the 11-02 gate needs three transmon levels")
    comp = system.computational_indices()
    extra = {}
    if protocol == "sudden":
        w_int = system.omega2 - system.EC2
        res = minimize_scalar(lambda w: _gap_11_02(system, w),
                              bounds=(w_int - 4 * abs(system.J) - 1e-12, w_int + 4 * abs(system.J) + 1e-12),
                              method="bounded", options={"xatol": 1e-12 * max(1.0, abs(w_int))})
        w_int, gap = float(res.x), float(res.fun)
        if gap <= 0:
            raise CQEDError("11-02 splitting vanishes; no conditional phase")
        t = 2 * np.pi / gap
        U = linalg.expm(-1j * system.hamiltonian(w_int) * t)
        target = CZ
        extra.update({"omega1_interaction": w_int, "gap": gap, "zeta_interaction": zeta_exact(system, w_int)})
    elif protocol == "adiabatic":
        if omega1_path is None or duration is None:
            raise CQEDError("adiabatic protocol needs omega1_path and duration")
        base = system.hamiltonian(0.0)
        n1 = system.operators()[0]
        n1 = n1.conj().T @ n1
        # hamiltonian(0.0) already carries -frame * n1
        U = _propagate(base, lambda t: omega1_path(t) * n1, duration, rtol=1e-9, atol=1e-11)
        ts = np.linspace(0, duration, 801)
        zs = np.array([zeta_exact(system, omega1_path(x)) for x in ts])
        phi = float(np.trapezoid(zs, ts))
        target = np.diag([1, 1, 1, np.exp(1j * phi)])
        t = duration
        extra["zeta_integral"] = phi
    else:
        raise CQEDError(f"unknown protocol {protocol!r}")
    Uc = project(U, comp)
    leak = leakage_of(Uc)
    phases = _phase_table(Uc)
    F = average_gate_fidelity(factor_single_qubit_phases(Uc), target)
    if protocol == "adiabatic" and leak > leakage_threshold:
        raise LeakageError(f"diabatic leakage {leak:.3e} exceeds {leakage_threshold:.1e}")
    extra["leakage_02"] = float(abs(U[system.index(0, 2), system.index(1, 1)]) ** 2)
    return GateResult(Uc, leak, F, target, phases, t, U, extra)


# ----------------------------------------------------------------------------
# all-microwave gates

@dataclass
class CrossResonanceCoefficients:
    chi12: float
    J_prime: float
    XI: float
    IX: float
    ZX: float
    ZZ: float
    ZX_two_level: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def cross_resonance_effective(Delta12: float, J: float, EC1: float, EC2: float,
                              epsilon: float) -> CrossResonanceCoefficients:
    """Second-order CR Hamiltonian coefficients for two transmons.

    H' = ... + (chi12/2) Z1Z2 + eps (X1 - J' X2 - (EC1/Delta12) J' Z1X2).
    Coefficients are reported per Pauli product, so ZZ = chi12/2.
    """
    if Delta12 == 0:
        raise ResonanceError("CR needs detuned qubits")
    for pole in (Delta12 - EC1, Delta12 + EC2):
        if abs(pole) < 10 * abs(J):
            raise ResonanceError(f"Delta12 within 10 J of a transmon level pole ({pole:.3g})")
    if abs(J / Delta12) > 0.1:
        warnings.warn(f"J/Delta12 = {J / Delta12:.2f} is not small", CQEDWarning, stacklevel=2)
    chi12 = J**2 / (Delta12 + EC2) - J**2 / (Delta12 - EC1)
    Jp = J / (Delta12 - EC1)
    return CrossResonanceCoefficients(chi12, Jp, epsilon, -epsilon * Jp, -epsilon * EC1 * Jp / Delta12,
                                      0.5 * chi12, epsilon * J / Delta12)


def effective_hamiltonian(H: np.ndarray, H_ref: np.ndarray, dims: Sequence[int],
                          block: Sequence[tuple]) -> np.ndarray:
    """Block-diagonal generator of H on the dressed states of H_ref labelled ``block``.

    The eigenvectors of H with the largest weight on the reference block are
    rotated back onto it by the closest unitary (polar part of the overlap).
    Reference vectors are phase-fixed so their overlap with the bare state is
    real and positive. Returns the k x k effective Hamiltonian.
    """
    wr, vr = linalg.eigh(H_ref)
    lab = assign_dressed_labels(vr, wr)
    idx = [int(np.ravel_multi_index(b, dims)) for b in block]
    D = vr[:, lab[idx]]
    for k, i in enumerate(idx):
        D[:, k] *= np.exp(-1j * np.angle(D[i, k]))
    w, v = linalg.eigh(H)
    ov = np.abs(D.conj().T @ v) ** 2
    rows, cols = linear_sum_assignment(-ov)
    sel = cols[np.argsort(rows)]
    M = D.conj().T @ v[:, sel]
    Wp, _ = linalg.polar(M)
    return Wp @ np.diag(w[sel]) @ Wp.conj().T


def cross_resonance_simulated(Delta12: float, J: float, EC1: float, EC2: float, epsilon: float,
                              levels: int = 3) -> dict:
    """Pauli rates of the driven two-transmon Hamiltonian in the drive frame.

    The drive sits at the dressed frequency of qubit 2 (qubit 1 in |0>); the
    rates are the Pauli coefficients of the block generator on the dressed
    computational states.
    """
    sys = TwoQubitSystem(Delta12, 0.0, EC1, EC2, J, levels)
    H0 = sys.hamiltonian()
    E = _dressed_grid(H0, sys.dims)
    wd = E[0, 1] - E[0, 0]
    n1 = sys.operators()[0]
    n2 = sys.operators()[1]
    Hf = H0 - wd * (n1.conj().T @ n1 + n2.conj().T @ n2)
    b1 = sys.operators()[0]
    Hd = Hf + epsilon * (b1 + b1.conj().T)
    Heff = effective_hamiltonian(Hd, Hf, sys.dims, [(0, 0), (0, 1), (1, 0), (1, 1)])
    return pauli_decompose(Heff)


def rip_zz_rate(chi1: float, chi2: float, alpha, delta_r: float, times=None, kappa: float | None = None):
    """ZZ rate -2 chi1 chi2 |alpha(t)|^2 / delta_r and its accumulated phase.

    Returns (rate, phase); phase is the running integral when ``times`` is
    given, otherwise None.
    """
    if delta_r == 0:
        raise ResonanceError("RIP gate needs a detuned resonator drive")
    if kappa is not None and abs(delta_r) < 10 * kappa:
        warnings.warn(f"delta_r = {delta_r:.3g} is not far from the cavity (kappa = {kappa:.3g})",
                      CQEDWarning, stacklevel=2)
    rate = -2 * chi1 * chi2 * np.abs(np.asarray(alpha)) ** 2 / delta_r
    if times is None:
        return rate, None
    t = np.asarray(times, dtype=float)
    from scipy.integrate import cumulative_trapezoid
    return rate, cumulative_trapezoid(rate, t, initial=0.0)


def rip_field(epsilon: Callable, delta_r: float, times) -> np.ndarray:
    """alpha(t) from d alpha/dt = -i delta_r alpha - i eps(t), alpha(0) = 0."""
    t = np.asarray(times, dtype=float)
    sol = solve_ivp(lambda s, y: [-1j * delta_r * y[0] - 1j * epsilon(s)], (t[0], t[-1]), [0j],
                    t_eval=t, method="DOP853", rtol=1e-10, atol=1e-12)
    return sol.y[0]


# ----------------------------------------------------------------------------
# parametric modulation

@dataclass
class SidebandCoupling:
    n: int
    coupling: float
    detuning: float
    resonant: bool


def parametric_sideband(J: float, epsilon_mod: float, omega_mod: float, Delta12: float,
                        n: int | None = None, tol: float = 1e-9) -> SidebandCoupling:
    """n-th FM sideband of qubit 1 modulated as omega1 + eps sin(omega_m t).

    The effective exchange is J * J_n(eps / omega_m); the sideband is resonant
    when n omega_m = Delta12.
    """
    if omega_mod <= 0:
        raise CQEDError("modulation frequency must be positive")
    if n is None:
        n = int(round(Delta12 / omega_mod))
    det = Delta12 - n * omega_mod
    return SidebandCoupling(n, float(J * special.jv(n, epsilon_mod / omega_mod)), float(det),
                            bool(abs(det) <= tol * max(abs(Delta12), omega_mod)))


def parametric_exchange_simulation(J: float, epsilon_mod: float, omega_mod: float, Delta12: float,
                                   times, rotating_wave: bool = True, omega2: float | None = None):
    """P(qubit 1 excited) starting from |10> under a modulated qubit frequency.

    H = (Delta12 + eps sin(omega_m t)) n1 + J (s1+ s2- + h.c.) in the frame of
    qubit 2. With rotating_wave=False the full J X1 X2 coupling is kept, which
    requires omega2 (the frame frequency) to place the counter-rotating terms.
    """
    t = np.asarray(times, dtype=float)
    s = np.array([[0, 1], [0, 0]], dtype=complex)
    I = np.eye(2)
    s1, s2 = np.kron(s, I), np.kron(I, s)
    n1 = s1.conj().T @ s1
    n2 = s2.conj().T @ s2
    if rotating_wave:
        Hc = J * (s1.conj().T @ s2 + s1 @ s2.conj().T)
        H = lambda x: (Delta12 + epsilon_mod * np.sin(omega_mod * x)) * n1 + Hc
    else:
        if omega2 is None:
            raise CQEDError("omega2 is required without the rotating-wave approximation")
        X1, X2 = s1 + s1.conj().T, s2 + s2.conj().T
        Hc = J * X1 @ X2
        H = lambda x: (omega2 + Delta12 + epsilon_mod * np.sin(omega_mod * x)) * n1 + omega2 * n2 + Hc
    psi0 = np.zeros(4, complex)
    psi0[2] = 1
    sol = solve_ivp(lambda x, y: -1j * H(x) @ y, (t[0], t[-1]), psi0, t_eval=t, method="DOP853",
                    rtol=1e-9, atol=1e-11)
    if not sol.success:
        raise StiffnessError(sol.message)
    return np.abs(sol.y[2]) ** 2 + np.abs(sol.y[3]) ** 2


def dominant_frequency(t, y, pad: int = 16) -> float:
    """Angular frequency of the strongest nonzero FFT component, refined by a parabola."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float) - np.mean(y)
    n = y.size * pad
    dt = t[1] - t[0]
    spec = np.abs(np.fft.rfft(y * np.hanning(y.size), n))
    f = np.fft.rfftfreq(n, dt)
    k = int(np.argmax(spec[1:])) + 1
    if 0 < k < spec.size - 1:
        a, b, c = spec[k - 1], spec[k], spec[k + 1]
        shift = 0.5 * (a - c) / (a - 2 * b + c)
    else:
        shift = 0.0
    return float(2 * np.pi * (f[k] + shift * (f[1] - f[0])))
