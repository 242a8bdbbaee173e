"""Isolated circuit elements: transmon, flux tuning, resonator modes, zero-point scales.

TransmonParams stores EJ and EC as E/h in Hz. Hamiltonians built from it are
returned in angular units (rad/s, hbar = 1). Functions that take plain
energies elsewhere in the package expect angular frequencies E/hbar.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np
from scipy import constants, linalg

from .errors import ConvergenceError, DimensionError, CQEDError
from .hilbert import HilbertSpace, Operator, ladder_operators

TWO_PI = 2.0 * np.pi
HBAR = constants.hbar
R_K = constants.h / constants.e**2
Z_VAC = np.sqrt(constants.mu_0 / constants.epsilon_0)


@dataclass(frozen=True)
class TransmonParams:
    EJ: float
    EC: float
    ng: float = 0.0
    EJ_sum: float | None = None
    d_asym: float = 0.0
    flux: float = 0.0

    def __post_init__(self):
        if self.EC <= 0:
            raise CQEDError(f"EC must be positive, got {self.EC}")
        if self.EJ_sum is None and self.EJ < 0:
            raise CQEDError(f"EJ must be non-negative, got {self.EJ}")
        if not 0.0 <= self.d_asym <= 1.0:
            raise CQEDError(f"d_asym must lie in [0, 1], got {self.d_asym}")

    @property
    def EJ_eff(self) -> float:
        """Josephson energy in Hz, flux tuned when a SQUID sum is given."""
        if self.EJ_sum is None:
            return self.EJ
        return abs(float(flux_tuned_EJ(self.flux, self.EJ_sum, self.d_asym)))

    @property
    def omega_q(self) -> float:
        """Duffing-model qubit frequency sqrt(8 EJ EC) - EC, in rad/s."""
        return TWO_PI * (np.sqrt(8.0 * self.EJ_eff * self.EC) - self.EC)

    @property
    def ratio(self) -> float:
        return self.EJ_eff / self.EC


@dataclass(frozen=True)
class ResonatorParams:
    omega_r: float
    kappa: float = 0.0
    Z_r: float = 50.0
    L: float | None = None
    C: float | None = None
    l0: float | None = None
    c0: float | None = None
    length: float | None = None

    def __post_init__(self):
        if self.omega_r <= 0:
            raise CQEDError("omega_r must be positive")
        if self.L is not None and self.C is not None:
            w = 1.0 / np.sqrt(self.L * self.C)
            z = np.sqrt(self.L / self.C)
            if abs(w - self.omega_r) > 1e-9 * w or abs(z - self.Z_r) > 1e-9 * z:
                raise CQEDError("omega_r and Z_r inconsistent with L and C")

    @classmethod
    def from_lc(cls, L: float, C: float, kappa: float = 0.0) -> "ResonatorParams":
        return cls(1.0 / np.sqrt(L * C), kappa, np.sqrt(L / C), L=L, C=C)


@dataclass(frozen=True)
class ZeroPointScales:
    phi_zpf: float
    q_zpf: float
    dV0: float
    omega_r: float = field(default=float("nan"))
    Z_r: float = field(default=float("nan"))


@dataclass(frozen=True)
class BBQMode:
    omega_m: float
    participation_p: float
    phi_m: float

    def __post_init__(self):
        if not 0.0 <= self.participation_p <= 1.0:
            raise CQEDError(f"participation must lie in [0, 1], got {self.participation_p}")

    @classmethod
    def from_phase(cls, omega_m: float, phi_m: float, EJ: float) -> "BBQMode":
        """EJ as an angular frequency EJ/hbar."""
        return cls(omega_m, 2.0 * EJ / omega_m * phi_m**2, phi_m)


# ----------------------------------------------------------------------------
# transmon

def _charge_matrix(EJ: float, EC: float, ng: float, ncut: int) -> np.ndarray:
    n = np.arange(-ncut, ncut + 1, dtype=float)
    H = np.diag(4.0 * EC * (n - ng) ** 2)
    off = -0.5 * EJ * np.ones(2 * ncut)
    H += np.diag(off, 1) + np.diag(off, -1)
    return TWO_PI * H


def _lowest(H: np.ndarray, k: int) -> np.ndarray:
    k = min(k, H.shape[0])
    return linalg.eigh(H, eigvals_only=True, subset_by_index=[0, k - 1])


def transmon_charge_hamiltonian(params: TransmonParams, ncut: int = 20, check: bool = True) -> Operator:
    """Charge-basis Hamiltonian 4EC(n - ng)^2 - EJ cos(phi), n in [-ncut, ncut]."""
    if ncut < 5:
        raise DimensionError(f"ncut must be at least 5, got {ncut}")
    EJ = params.EJ_eff
    H = _charge_matrix(EJ, params.EC, params.ng, ncut)
    if check:
        e1 = _lowest(H, 4)
        e2 = _lowest(_charge_matrix(EJ, params.EC, params.ng, 2 * ncut), 4)
        scale = np.maximum(np.abs(e2), TWO_PI * params.EC)
        err = np.max(np.abs(e1 - e2) / scale)
        if err > 1e-8:
            raise ConvergenceError(
                f"charge basis not converged at ncut={ncut} (relative change {err:.2e} on doubling)")
    return Operator(HilbertSpace((2 * ncut + 1,)), H, True)


def transmon_levels(params: TransmonParams, n_levels: int = 4, ncut: int = 20) -> np.ndarray:
    """Lowest eigenenergies in rad/s, shifted so the ground state is zero."""
    H = transmon_charge_hamiltonian(params, ncut).matrix
    e = _lowest(H, n_levels)
    return e - e[0]


def transmon_eigensystem(params: TransmonParams, n_levels: int = 5, ncut: int = 20):
    """Energies (rad/s, ground at zero) and the charge operator n in the eigenbasis."""
    H = transmon_charge_hamiltonian(params, ncut).matrix
    w, v = linalg.eigh(H, subset_by_index=[0, n_levels - 1])
    nop = np.diag(np.arange(-ncut, ncut + 1, dtype=float))
    # real symmetric problem: flip signs so that <j-1|n|j> > 0
    for j in range(1, n_levels):
        if v[:, j - 1] @ nop @ v[:, j] < 0:
            v[:, j] *= -1
    n_eig = v.T @ nop @ v
    return w - w[0], n_eig


def charge_dispersion(params: TransmonParams, n_ng: int = 41, ncut: int = 20) -> float:
    """Peak-to-peak variation of omega_01 over ng in [0, 1], rad/s."""
    vals = []
    for ng in np.linspace(0.0, 1.0, n_ng):
        p = TransmonParams(params.EJ_eff, params.EC, ng)
        e = transmon_levels(p, 2, ncut)
        vals.append(e[1])
    vals = np.asarray(vals)
    return float(vals.max() - vals.min())


def transmon_duffing_hamiltonian(params: TransmonParams, dim: int) -> Operator:
    """omega_q b^dag b - (EC/2) b^dag b^dag b b in rad/s."""
    if dim < 3:
        raise DimensionError(f"Duffing model needs dim >= 3, got {dim}")
    n = np.arange(dim, dtype=float)
    ec = TWO_PI * params.EC
    H = np.diag(params.omega_q * n - 0.5 * ec * n * (n - 1))
    return Operator(HilbertSpace((dim,)), H, True)


def flux_tuned_EJ(flux, EJ_sum, d_asym):
    """Effective Josephson energy of an asymmetric SQUID, flux in units of Phi0.

    Evaluated as sign(cos)·EJsum·sqrt(cos^2 + d^2 sin^2), which equals
    EJsum·cos·sqrt(1 + d^2 tan^2) without the tan singularity.
    """
    x = np.pi * np.asarray(flux, dtype=float)
    c, s = np.cos(x), np.sin(x)
    out = np.copysign(1.0, c) * EJ_sum * np.sqrt(c**2 + d_asym**2 * s**2)
    return out if out.ndim else float(out)


# ----------------------------------------------------------------------------
# resonators

def rectangular_cavity_modes(a: float, b: float, d: float, n_modes: int = 5, c: float = constants.c):
    """Lowest TE/TM modes of a rectangular box as (omega, (m, n, l)) sorted by frequency."""
    if min(a, b, d) <= 0:
        raise CQEDError("cavity dimensions must be positive")
    top = n_modes + 3
    modes = {}
    for m, n, l in product(range(top), repeat=3):
        # TE needs (m, n) not both zero and l >= 1; TM needs m, n >= 1
        te = (m > 0 or n > 0) and l > 0
        tm = m > 0 and n > 0
        if not (te or tm):
            continue
        w = c * np.sqrt((m * np.pi / a) ** 2 + (n * np.pi / b) ** 2 + (l * np.pi / d) ** 2)
        modes[(m, n, l)] = w
    ordered = sorted(modes.items(), key=lambda kv: (kv[1], kv[0]))
    return [(w, idx) for idx, w in ordered[:n_modes]]


def resonator_mode_frequencies(kind: str, geometry: Sequence[float], n_modes: int = 5) -> list:
    """Angular mode frequencies.

    kind: 'half-wave' or 'quarter-wave' with geometry (v0, length), or
    'rectangular-3D' with geometry (a, b, d).
    """
    geometry = [float(x) for x in geometry]
    if any(x <= 0 for x in geometry):
        raise CQEDError(f"geometry values must be positive, got {geometry}")
    m = np.arange(n_modes)
    if kind in ("half-wave", "lambda/2"):
        v0, length = geometry
        return list(TWO_PI * (m + 1) * v0 / (2 * length))
    if kind in ("quarter-wave", "lambda/4"):
        v0, length = geometry
        return list(TWO_PI * (2 * m + 1) * v0 / (4 * length))
    if kind in ("rectangular-3D", "3d", "box"):
        a, b, d = geometry
        return [w for w, _ in rectangular_cavity_modes(a, b, d, n_modes)]
    raise CQEDError(f"unknown resonator kind {kind!r}")


def thermal_occupation(freq, T):
    """Bose occupation at frequency ``freq`` (Hz) and temperature ``T`` (K)."""
    freq = np.asarray(freq, dtype=float)
    if np.any(freq <= 0) or np.any(np.asarray(T) < 0):
        raise CQEDError("need freq > 0 and T >= 0")
    if np.all(np.asarray(T) == 0):
        out = np.zeros_like(freq)
    else:
        with np.errstate(divide="ignore", over="ignore"):
            x = constants.h * freq / (constants.k * np.asarray(T, dtype=float))
            out = np.where(np.isfinite(x), 1.0 / np.expm1(x), 0.0)
    return out if out.ndim else float(out)


def lc_zero_point(L: float, C: float) -> ZeroPointScales:
    if L <= 0 or C <= 0:
        raise CQEDError("L and C must be positive")
    Z = np.sqrt(L / C)
    w = 1.0 / np.sqrt(L * C)
    return ZeroPointScales(
        phi_zpf=np.sqrt(HBAR * Z / 2.0),
        q_zpf=np.sqrt(HBAR / (2.0 * Z)),
        dV0=np.sqrt(HBAR * w / (2.0 * C)),
        omega_r=w,
        Z_r=Z,
    )


def coupling_g(omega_r, Cg_over_Csigma, EJ, EC, Z_r):
    """Transmon-resonator coupling in the units of omega_r. Only EJ/EC enters."""
    return omega_r * Cg_over_Csigma * (EJ / (2.0 * EC)) ** 0.25 * np.sqrt(np.pi * Z_r / R_K)


def coupling_g_alpha(omega_r, Cg_over_Csigma, EJ, EC, Z_r):
    """Same coupling written with the fine-structure constant alpha = Zvac / 2RK."""
    alpha = Z_VAC / (2.0 * R_K)
    return omega_r * Cg_over_Csigma * (EJ / (2.0 * EC)) ** 0.25 * np.sqrt(Z_r / Z_VAC) * np.sqrt(2 * np.pi * alpha)


def bbq_cross_kerr(modes: Sequence[BBQMode], EJ: float):
    """Cross-Kerr matrix, self-Kerr and frequency shifts from participation ratios.

    EJ is an angular frequency EJ/hbar, matching the mode frequencies.
    Returns (chi, K, Delta) with chi[m, n] = -w_m w_n p_m p_n / (4 EJ),
    K = diag(chi)/2 and Delta_m = sum_n chi[m, n] / 2.
    """
    w = np.array([m.omega_m for m in modes], dtype=float)
    p = np.array([m.participation_p for m in modes], dtype=float)
    chi = -np.outer(w * p, w * p) / (4.0 * EJ)
    K = np.diag(chi) / 2.0
    delta = 0.5 * chi.sum(axis=1)
    return chi, K, delta


def bbq_cross_kerr_from_phase(phi: Sequence[float], EJ: float):
    """chi[m, n] = -EJ phi_m^2 phi_n^2, the zero-point-phase form."""
    ph2 = np.asarray(phi, dtype=float) ** 2
    return -EJ * np.outer(ph2, ph2)


def duffing_levels(params: TransmonParams, n_levels: int) -> np.ndarray:
    return np.diag(transmon_duffing_hamiltonian(params, max(n_levels, 3)).matrix).real[:n_levels]


def transmon_ladder(dim: int):
    """b and b^dag for the Duffing transmon."""
    return ladder_operators(dim)
