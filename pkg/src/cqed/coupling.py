"""Transmon-resonator Hamiltonians, exact spectra and dispersive perturbation theory.

Composite ordering is [transmon, resonator]. Frequencies and energies are
angular (hbar = 1) and share whatever time unit the caller uses.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from .errors import (CQEDError, CQEDWarning, DegeneracyError, DimensionError, ResonanceError,
                     StraddlingRegimeError)
from .hilbert import HilbertSpace, Operator, embed, ladder_operators


@dataclass(frozen=True)
class RabiSystem:
    transmon_dim: int
    resonator_dim: int
    omega_r: float
    omega_q: float
    EC: float
    g: float
    rwa: bool = True

    def __post_init__(self):
        if self.transmon_dim < 2 or self.resonator_dim < 2:
            raise DimensionError("transmon and resonator dims must be at least 2")
        if self.g < 0:
            raise CQEDError("g must be non-negative")

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace((self.transmon_dim, self.resonator_dim))

    @property
    def Delta(self) -> float:
        return self.omega_q - self.omega_r

    def operators(self):
        """(b, a) embedded in the composite space."""
        sp = self.space
        b = embed(ladder_operators(self.transmon_dim)[0], 0, sp)
        a = embed(ladder_operators(self.resonator_dim)[0], 1, sp)
        return b, a


@dataclass
class DispersiveParams:
    chi: float
    chi_j: np.ndarray
    Lambda_j: np.ndarray
    chi_ladder: np.ndarray
    omega_r_dressed: float
    omega_q_dressed: float
    K_a: float
    K_b: float
    chi_ab: float
    Delta: float
    lam: float
    n_crit: np.ndarray
    omega_q: float = float("nan")
    omega_r: float = float("nan")


@dataclass(frozen=True)
class MultilevelAtom:
    """Level energies w_j and couplings g_ij for V = sum g_ij |i><j| a^dag + h.c."""
    level_energies: np.ndarray
    coupling_matrix: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.level_energies, dtype=float)
        g = np.asarray(self.coupling_matrix, dtype=complex)
        if g.shape != (w.size, w.size):
            raise DimensionError("coupling matrix must be square and match the number of levels")
        object.__setattr__(self, "level_energies", w)
        object.__setattr__(self, "coupling_matrix", g)

    @classmethod
    def transmon_ladder(cls, omega_q: float, EC: float, g: float, n_levels: int) -> "MultilevelAtom":
        j = np.arange(n_levels)
        w = omega_q * j - 0.5 * EC * j * (j - 1)
        gm = np.zeros((n_levels, n_levels), dtype=complex)
        for k in range(n_levels - 1):
            gm[k, k + 1] = g * np.sqrt(k + 1)
        return cls(w, gm)


# ----------------------------------------------------------------------------
# Hamiltonians and exact spectra

def rabi_hamiltonian(sys: RabiSystem) -> Operator:
    """Duffing transmon plus resonator with RWA or full charge coupling."""
    b, a = sys.operators()
    nb = b.dag() @ b
    H = sys.omega_r * (a.dag() @ a) + sys.omega_q * nb - 0.5 * sys.EC * (b.dag() @ b.dag() @ b @ b)
    if sys.rwa:
        H = H + sys.g * (b.dag() @ a + b @ a.dag())
    else:
        H = H - sys.g * ((b.dag() - b) @ (a.dag() - a))
    return Operator(sys.space, 0.5 * (H.matrix + H.matrix.conj().T), True)


def assign_dressed_labels(vecs: np.ndarray, energies: np.ndarray | None = None) -> np.ndarray:
    """Map bare basis index -> dressed eigenvector index by maximum total overlap.

    Ties are broken in favour of lower energy through a tiny energy-ordered bias.
    """
    ov = np.abs(vecs) ** 2  # ov[bare, dressed]
    cost = -ov
    if energies is not None:
        order = np.argsort(np.argsort(energies))
        cost = cost + 1e-12 * order[None, :] * np.arange(ov.shape[0])[:, None] / ov.shape[0]
    rows, cols = linear_sum_assignment(cost)
    out = np.empty(ov.shape[0], dtype=int)
    out[rows] = cols
    return out


def dressed_energies(H: Operator | np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Eigenenergies arranged on the bare-label grid, shape ``dims``."""
    m = H.matrix if isinstance(H, Operator) else np.asarray(H)
    w, v = linalg.eigh(0.5 * (m + m.conj().T))
    lab = assign_dressed_labels(v, w)
    return w[lab].reshape(tuple(dims))


def chi_exact(sys: RabiSystem) -> float:
    """(E(e,1) - E(e,0) - E(g,1) + E(g,0)) / 2 from dense diagonalization."""
    E = dressed_energies(rabi_hamiltonian(sys), (sys.transmon_dim, sys.resonator_dim))
    return 0.5 * (E[1, 1] - E[1, 0] - E[0, 1] + E[0, 0])


def dressed_frequencies_exact(sys: RabiSystem):
    """(omega_r', omega_q') read off the dressed spectrum."""
    E = dressed_energies(rabi_hamiltonian(sys), (sys.transmon_dim, sys.resonator_dim))
    return E[0, 1] - E[0, 0], E[1, 0] - E[0, 0]


def bloch_siegert_numeric(omega_r: float, omega_q: float, g: float, resonator_dim: int = 6) -> float:
    """Shift of the two-level qubit transition caused by counter-rotating terms."""
    out = []
    for rwa in (False, True):
        s = RabiSystem(2, resonator_dim, omega_r, omega_q, 0.0, g, rwa)
        E = dressed_energies(rabi_hamiltonian(s), (2, resonator_dim))
        out.append(E[1, 0] - E[0, 0])
    return out[0] - out[1]


def bloch_siegert_shift(omega_r: float, omega_q: float, g: float) -> float:
    return g**2 / (omega_q + omega_r)


def jc_spectrum(n, Delta, g, omega_r: float = 0.0):
    """Doublet energies of the n-excitation manifold and the mixing angle.

    Energies use the convention where omega_r/2 is added to the
    Jaynes-Cummings Hamiltonian, so E = n omega_r -/+ sqrt(Delta^2 + 4 g^2 n)/2.
    """
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise CQEDError("excitation number must be at least 1")
    root = np.sqrt(Delta**2 + 4 * g**2 * n)
    theta = np.arctan2(2 * g * np.sqrt(n), Delta)
    lo = n * omega_r - 0.5 * root
    hi = n * omega_r + 0.5 * root
    if lo.ndim == 0:
        return float(lo), float(hi), float(theta)
    return lo, hi, theta


def jc_ground_energy(omega_r: float, omega_q: float) -> float:
    """Ground energy in the same convention as jc_spectrum."""
    return -0.5 * omega_q + 0.5 * omega_r


def jc_hamiltonian(resonator_dim: int, omega_r: float, omega_q: float, g: float) -> Operator:
    """Two-level JC model omega_r a^dag a + omega_q/2 sz + g(a^dag s- + a s+)."""
    sp = HilbertSpace((2, resonator_dim))
    sm = embed(Operator(HilbertSpace((2,)), np.array([[0, 1], [0, 0]])), 0, sp)
    sz = embed(Operator(HilbertSpace((2,)), np.diag([-1.0, 1.0])), 0, sp)
    a = embed(ladder_operators(resonator_dim)[0], 1, sp)
    H = omega_r * (a.dag() @ a) + 0.5 * omega_q * sz + g * (a.dag() @ sm + a @ sm.dag())
    return Operator(sp, H.matrix, True)


def _jc_parts(resonator_dim: int):
    sp = HilbertSpace((2, resonator_dim))
    sm = embed(Operator(HilbertSpace((2,)), np.array([[0, 1], [0, 0]])), 0, sp).matrix
    sz = embed(Operator(HilbertSpace((2,)), np.diag([-1.0, 1.0])), 0, sp).matrix
    a = embed(ladder_operators(resonator_dim)[0], 1, sp).matrix
    NT = a.conj().T @ a + sm.conj().T @ sm
    return sp, sm, sz, a, NT


def jc_diagonalizing_unitary(sys: RabiSystem) -> Operator:
    """U = exp[Lambda(N_T)(a^dag s- - a s+)] that diagonalizes the two-level JC model."""
    if sys.transmon_dim != 2 or not sys.rwa:
        raise CQEDError("the closed-form diagonalizing unitary needs a two-level RWA system")
    sp, sm, sz, a, NT = _jc_parts(sys.resonator_dim)
    nt = np.real(np.diag(NT))
    lam = sys.g / sys.Delta if sys.Delta != 0 else np.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        if np.isinf(lam):
            Lam = np.where(nt > 0, (np.pi / 2) / (2 * np.sqrt(nt)), 0.0)
        else:
            Lam = np.where(nt > 0, np.arctan(2 * lam * np.sqrt(nt)) / (2 * np.sqrt(np.maximum(nt, 1e-300))), lam)
    X = a.conj().T @ sm - a @ sm.conj().T
    U = linalg.expm(np.diag(Lam) @ X)
    return Operator(sp, U)


def jc_diagonal_form(sys: RabiSystem) -> Operator:
    """omega_r a^dag a + omega_q/2 sz - Delta/2 (1 - sqrt(1 + 4 lambda^2 N_T)) sz."""
    sp, sm, sz, a, NT = _jc_parts(sys.resonator_dim)
    nt = np.real(np.diag(NT))
    D = sys.Delta
    shift = np.sqrt(D**2 + 4 * sys.g**2 * nt)
    # -D/2 (1 - sqrt(1 + 4 l^2 N)) written without dividing by D
    corr = -0.5 * (D - np.sign(D if D != 0 else 1.0) * shift)
    H = sys.omega_r * (a.conj().T @ a) + 0.5 * sys.omega_q * sz + np.diag(corr) @ sz
    return Operator(sp, H, True)


# ----------------------------------------------------------------------------
# dispersive regime

def _check_straddling(Delta: float, EC: float):
    if Delta == 0:
        raise ResonanceError("zero detuning: dispersive theory does not apply")
    if EC > 0 and 0 < Delta < EC:
        raise StraddlingRegimeError(
            f"0 < Delta ({Delta:.4g}) < EC ({EC:.4g}): straddling regime, use exact diagonalization")


def dispersive_params_sw(EJ: float, EC: float, g: float, Delta: float, n_levels: int = 2) -> DispersiveParams:
    """Second-order dispersive quantities for the transmon ladder.

    EJ and EC are angular frequencies (E/hbar). omega_q = sqrt(8 EJ EC) - EC
    and omega_r = omega_q - Delta.
    """
    _check_straddling(Delta, EC)
    j = np.arange(1, n_levels + 1)
    den = Delta - (j - 1) * EC
    if np.any(den == 0):
        raise ResonanceError(f"transition {int(j[den == 0][0]) - 1}->{int(j[den == 0][0])} resonant with the resonator")
    chi_ladder = j * g**2 / den  # chi_{j-1,j} for j = 1..n_levels
    Lam = np.concatenate([[0.0], chi_ladder[:-1]])
    chij = np.empty(n_levels)
    chij[0] = -chi_ladder[0]
    chij[1:] = chi_ladder[:-1] - chi_ladder[1:]
    chi = -g**2 * EC / (Delta * (Delta - EC))
    omega_q = np.sqrt(8 * EJ * EC) - EC
    omega_r = omega_q - Delta
    jj = np.arange(n_levels)
    with np.errstate(divide="ignore"):
        ncrit = (np.abs(Delta - jj * EC) ** 2 / (4 * g**2) - jj) / (2 * jj + 1)
    Ka, Kb, chi_ab = kerr_params(EJ, EC, g, Delta)
    return DispersiveParams(
        chi=chi,
        chi_j=chij,
        Lambda_j=Lam,
        chi_ladder=chi_ladder,
        omega_r_dressed=omega_r - g**2 / (Delta - EC),
        omega_q_dressed=omega_q + g**2 / Delta,
        K_a=Ka, K_b=Kb, chi_ab=chi_ab,
        Delta=Delta,
        lam=g / Delta,
        n_crit=ncrit,
        omega_q=omega_q,
        omega_r=omega_r,
    )


def dispersive_tls(g: float, Delta: float) -> float:
    """Two-level (Jaynes-Cummings) dispersive shift g^2/Delta."""
    return g**2 / Delta


def bogoliubov_dressed(omega_r: float, omega_q: float, g: float):
    """Exact normal-mode frequencies of the linear part and the mixing angle.

    Each returned frequency follows its bare mode: for Delta > 0 the
    resonator-like mode is the lower one, for Delta < 0 the upper one.
    """
    D = omega_q - omega_r
    root = np.sqrt(D**2 + 4 * g**2)
    s = 1.0 if D >= 0 else -1.0
    wr = 0.5 * (omega_r + omega_q - s * root)
    wq = 0.5 * (omega_r + omega_q + s * root)
    angle = 0.5 * np.arctan(2 * g / D) if D != 0 else np.pi / 4
    return wr, wq, angle


def kerr_params(EJ: float, EC: float, g: float, Delta: float):
    """(K_a, K_b, chi_ab) of the dispersive transmon-resonator Hamiltonian."""
    _check_straddling(Delta, EC)
    Ka = -0.5 * EC * (g / Delta) ** 4
    Kb = -EC
    chi_ab = -2 * g**2 * EC / (Delta * (Delta - EC))
    return Ka, Kb, chi_ab


def multilevel_dispersive(atom: MultilevelAtom, omega_r: float, tol: float = 1e-12):
    """Lamb shifts and dispersive shifts of every level of a multilevel atom.

    Lambda_j = sum_i |g_ij|^2 / (w_j - w_i - w_r)
    chi_j    = sum_i |g_ij|^2 / (w_j - w_i - w_r) - |g_ji|^2 / (w_i - w_j - w_r)
    """
    w = atom.level_energies
    g2 = np.abs(atom.coupling_matrix) ** 2
    n = w.size
    D = w[None, :] - w[:, None] - omega_r  # D[i, j] = w_j - w_i - w_r
    scale = max(abs(omega_r), np.max(np.abs(w)), 1.0)
    for i in range(n):
        for j in range(n):
            if (g2[i, j] > 0 and abs(D[i, j]) < tol * scale) or (g2[j, i] > 0 and abs(D[j, i]) < tol * scale):
                raise ResonanceError(f"transition ({i}, {j}) is resonant with the resonator")
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(g2 > 0, g2 / D, 0.0)          # [i, j]
        t2 = np.where(g2.T > 0, g2.T / D.T, 0.0)    # |g_ji|^2 / (w_i - w_j - w_r)
    Lam = t1.sum(axis=0)
    chi = (t1 - t2).sum(axis=0)
    return Lam, chi


# ----------------------------------------------------------------------------
# generic second-order Schrieffer-Wolff

@dataclass
class SWResult:
    S: np.ndarray
    H_eff: np.ndarray
    blocks: np.ndarray
    max_offdiag: float
    min_gap: float
    warnings: list = field(default_factory=list)


def schrieffer_wolff_order2(H0_eigensystem, V: Operator | np.ndarray, subspace_projectors) -> SWResult:
    """Second-order effective Hamiltonian that is block diagonal in the given subspaces.

    H0_eigensystem is (energies, eigenvectors as columns). Each eigenvector is
    assigned to the projector with the largest weight. Returns the generator
    and H_eff in the original basis.
    """
    E, U = H0_eigensystem
    E = np.asarray(E, dtype=float)
    U = np.asarray(U, dtype=complex)
    Vm = V.matrix if isinstance(V, Operator) else np.asarray(V, dtype=complex)
    P = [p.matrix if isinstance(p, Operator) else np.asarray(p) for p in subspace_projectors]
    weights = np.array([np.real(np.einsum("ia,ij,ja->a", U.conj(), p, U)) for p in P])
    blk = np.argmax(weights, axis=0)

    Vt = U.conj().T @ Vm @ U
    same = blk[:, None] == blk[None, :]
    dE = E[:, None] - E[None, :]
    cross = ~same
    scale = max(np.max(np.abs(E)), 1.0)
    gaps = np.abs(dE[cross])
    min_gap = float(gaps.min()) if gaps.size else np.inf
    if gaps.size and min_gap < 1e-12 * scale:
        raise DegeneracyError("levels in different subspaces are degenerate")
    max_od = float(np.max(np.abs(Vt[cross]))) if gaps.size else 0.0
    warn = []
    if gaps.size and 2 * max_od >= min_gap:
        msg = f"coupling {max_od:.3e} not small against subspace gap {min_gap:.3e}"
        warnings.warn(msg, CQEDWarning, stacklevel=2)
        warn.append(msg)

    St = np.zeros_like(Vt)
    St[cross] = Vt[cross] / dE[cross]
    inv = np.zeros_like(dE)
    inv[cross] = 1.0 / dE[cross]  # inv[a, l] = 1/(E_a - E_l)

    Vc = np.where(cross, Vt, 0.0)
    # 1/2 sum_l V_al V_lb [1/(E_a - E_l) + 1/(E_b - E_l)] for a, b in one block
    second = 0.5 * ((Vc * inv) @ Vc + Vc @ (Vc * inv.T))
    Heff_t = np.diag(E).astype(complex) + np.where(same, Vt + second, 0.0)
    S = U @ St @ U.conj().T
    H_eff = U @ Heff_t @ U.conj().T
    return SWResult(S, 0.5 * (H_eff + H_eff.conj().T), blk, max_od, min_gap, warn)
