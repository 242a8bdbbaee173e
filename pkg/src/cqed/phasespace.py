"""Phase-space tools: coherent states, Wigner and Husimi-Q functions, marginals, squeezing, JPA model.

Conventions: x = Re(alpha), p = Im(alpha), X = (a + a^dag)/2 so a coherent
state has Wigner function (2/pi) exp(-2|alpha - beta|^2). The squeezing
variance follows the rotated quadrature X_phi = (a e^{-i phi} + h.c.)/sqrt(2)
whose vacuum variance is 1/2.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg
from scipy.ndimage import map_coordinates
from scipy.special import eval_genlaguerre, eval_hermite, gammaln

from .errors import CQEDError, CQEDWarning, LeakageError
from .hilbert import LEAKAGE_THRESHOLD, HilbertSpace, Operator, QuantumState

MIN_RESOLUTION = 32


@dataclass(frozen=True)
class PhaseSpaceGrid:
    x_range: tuple = (-5.0, 5.0)
    p_range: tuple = (-5.0, 5.0)
    resolution: int = 101

    def __post_init__(self):
        if self.resolution < 2:
            raise CQEDError("grid needs at least two points per axis")
        if self.resolution < MIN_RESOLUTION:
            warnings.warn(f"resolution {self.resolution} < {MIN_RESOLUTION}: default tolerances not guaranteed",
                          CQEDWarning, stacklevel=3)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.resolution)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(*self.p_range, self.resolution)

    def mesh(self):
        """Complex alpha on an (n_p, n_x) mesh; rows are p, columns are x."""
        X, P = np.meshgrid(self.x, self.p)
        return X + 1j * P

    @property
    def cell(self) -> float:
        return (self.x[1] - self.x[0]) * (self.p[1] - self.p[0])


@dataclass
class PhaseSpaceFunction:
    grid: PhaseSpaceGrid
    values: np.ndarray
    kind: str = "wigner"

    def integral(self) -> float:
        from scipy.integrate import trapezoid
        return float(trapezoid(trapezoid(self.values, self.grid.x, axis=1), self.grid.p))

    def write_csv(self, path: str | Path):
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "p", self.kind])
            for i, p in enumerate(self.grid.p):
                for j, x in enumerate(self.grid.x):
                    w.writerow([repr(float(x)), repr(float(p)), repr(float(self.values[i, j]))])


@dataclass(frozen=True)
class SqueezeParams:
    r: float
    theta: float = 0.0

    def __post_init__(self):
        if self.r < 0:
            raise CQEDError("squeezing parameter r must be non-negative")

    @property
    def zeta(self) -> complex:
        return self.r * np.exp(1j * self.theta)


@dataclass
class JPAParams:
    omega_0: float
    K: float
    epsilon_p: float
    omega_p: float
    kappa: float


@dataclass
class JPAResult:
    alpha: complex
    delta: float
    epsilon_2: complex
    below_threshold: bool
    solutions: list = field(default_factory=list)
    bistable: bool = False


# ----------------------------------------------------------------------------
# states and operators

def _dm(state) -> np.ndarray:
    if isinstance(state, QuantumState):
        return state.dm()
    s = np.asarray(state, dtype=complex)
    if s.ndim == 1:
        return np.outer(s, s.conj())
    return s


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    logmag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha) + (alpha == 0)) - 0.5 * gammaln(n + 1)
    c = np.exp(logmag) * np.exp(1j * n * np.angle(alpha))
    if alpha == 0:
        c = np.zeros(dim, complex)
        c[0] = 1.0
    return c


def coherent_state(alpha: complex, dim: int, threshold: float = LEAKAGE_THRESHOLD) -> QuantumState:
    """Truncated coherent state; raises LeakageError when the discarded weight exceeds ``threshold``."""
    c = coherent_amplitudes(alpha, dim)
    lost = 1.0 - float(np.sum(np.abs(c) ** 2))
    if lost > threshold:
        raise LeakageError(f"coherent state |{alpha}> loses {lost:.2e} of its norm at dim {dim}; "
                           f"use dim >= {int(np.ceil(abs(alpha)**2 + 6 * abs(alpha) + 10))}")
    return QuantumState(HilbertSpace((dim,)), ket=c / np.linalg.norm(c))


def displacement_elements(beta, rows: int, cols: int) -> np.ndarray:
    """<m|D(beta)|n> for m < rows, n < cols, exact (no truncation of the operator).

    ``beta`` may be an array; the result has shape beta.shape + (rows, cols).
    """
    beta = np.asarray(beta, dtype=complex)
    x = np.abs(beta) ** 2
    out = np.zeros(beta.shape + (rows, cols), dtype=complex)
    for m in range(rows):
        for n in range(cols):
            if m >= n:
                k, d, z = n, m - n, beta
            else:
                k, d, z = m, n - m, -np.conj(beta)
            logpref = 0.5 * (gammaln(k + 1) - gammaln(k + d + 1))
            with np.errstate(divide="ignore", invalid="ignore"):
                zpow = np.where(d == 0, 1.0, z**d)
            out[..., m, n] = np.exp(logpref - x / 2) * zpow * eval_genlaguerre(k, d, x)
    return out


def displacement_operator(alpha: complex, dim: int) -> Operator:
    return Operator(HilbertSpace((dim,)), displacement_elements(alpha, dim, dim))


def _padded_ladder(n: int):
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def squeeze_operator(params: SqueezeParams, dim: int, pad: int | None = None,
                     threshold: float = LEAKAGE_THRESHOLD) -> Operator:
    """S(zeta) = exp(zeta^* a^2/2 - zeta a^dag^2/2), built on a padded space then truncated."""
    r = params.r
    if pad is None:
        pad = int(40 + 20 * r**2 + 20 * r)
    big = dim + pad
    a = _padded_ladder(big)
    z = params.zeta
    G = 0.5 * np.conj(z) * (a @ a) - 0.5 * z * (a.conj().T @ a.conj().T)
    S = linalg.expm(G)
    vac = S[:, 0]
    lost = float(np.sum(np.abs(vac[dim:]) ** 2))
    if lost > threshold:
        raise LeakageError(f"squeezed vacuum with r={r} loses {lost:.2e} of its norm at dim {dim}")
    return Operator(HilbertSpace((dim,)), S[:dim, :dim])


def squeezed_vacuum(params: SqueezeParams, dim: int) -> QuantumState:
    S = squeeze_operator(params, dim)
    v = S.matrix[:, 0]
    return QuantumState(HilbertSpace((dim,)), ket=v / np.linalg.norm(v))


def squeezed_vacuum_variance(params: SqueezeParams, phi: float) -> float:
    """(1/2)(e^{2r} sin^2 phi~ + e^{-2r} cos^2 phi~), phi~ = phi - theta/2."""
    pt = phi - params.theta / 2
    return 0.5 * (np.exp(2 * params.r) * np.sin(pt) ** 2 + np.exp(-2 * params.r) * np.cos(pt) ** 2)


def squeezing_db(params: SqueezeParams, phi: float) -> float:
    return float(10 * np.log10(squeezed_vacuum_variance(params, phi) / 0.5))


def quadrature_variance(state, phi: float) -> float:
    """Variance of X_phi = (a e^{-i phi} + a^dag e^{i phi})/sqrt(2) (vacuum 1/2)."""
    rho = _dm(state)
    d = rho.shape[0]
    a = _padded_ladder(d)
    Xp = (a * np.exp(-1j * phi) + a.conj().T * np.exp(1j * phi)) / np.sqrt(2)
    m1 = np.trace(rho @ Xp).real
    m2 = np.trace(rho @ Xp @ Xp).real
    return float(m2 - m1**2)


def two_mode_squeeze_operator(params: SqueezeParams, dims: tuple, pad: int | None = None,
                              threshold: float = LEAKAGE_THRESHOLD) -> Operator:
    """S12(zeta) = exp(zeta^* a1 a2 - zeta a1^dag a2^dag) on two truncated modes.

    Its reduced single-mode state is thermal with ratio tanh^2 r and mean
    photon number sinh^2 r.
    """
    d1, d2 = dims
    r = params.r
    if pad is None:
        pad = int(10 + 12 * r**2 + 10 * r)
    b1, b2 = d1 + pad, d2 + pad
    a1 = np.kron(_padded_ladder(b1), np.eye(b2))
    a2 = np.kron(np.eye(b1), _padded_ladder(b2))
    z = params.zeta
    G = np.conj(z) * (a1 @ a2) - z * (a1.conj().T @ a2.conj().T)
    S = linalg.expm(G)
    keep = (np.arange(b1)[:, None] < d1) & (np.arange(b2)[None, :] < d2)
    idx = np.flatnonzero(keep.reshape(-1))
    lost = 1.0 - float(np.sum(np.abs(S[idx, 0]) ** 2))
    if lost > threshold:
        raise LeakageError(f"two-mode squeezed vacuum with r={r} loses {lost:.2e} at dims {dims}")
    return Operator(HilbertSpace((d1, d2)), S[np.ix_(idx, idx)])


# ----------------------------------------------------------------------------
# quasi-probability distributions

def wigner(state, grid: PhaseSpaceGrid | None = None, method: str = "parity") -> PhaseSpaceFunction:
    """W(alpha) = (2/pi) Tr[rho D(alpha) Pi D(alpha)^dag] with Pi the photon-number parity.

    Using D(alpha) Pi D(alpha)^dag = D(2 alpha) Pi, the Fock matrix elements of
    D(2 alpha) are evaluated in closed form ('parity'), or from an explicit
    matrix exponential on a padded space ('expm', slower, for cross-checks).
    """
    grid = grid or PhaseSpaceGrid()
    rho = _dm(state)
    d = rho.shape[0]
    al = grid.mesh()
    sign = (-1.0) ** np.arange(d)
    if method == "parity":
        D2 = displacement_elements(2 * al, d, d)
        # sum_{n,n'} rho_{n n'} (-1)^n <n'|D(2a)|n>
        W = np.einsum("ij,...ji->...", rho * sign[:, None], D2).real
    elif method == "expm":
        big = d + 60
        a = _padded_ladder(big)
        ad = a.conj().T
        W = np.empty(al.shape)
        for idx, z in np.ndenumerate(al):
            D = linalg.expm(2 * z * ad - 2 * np.conj(z) * a)[:d, :d]
            W[idx] = np.einsum("ij,ji->", rho * sign[:, None], D).real
    else:
        raise CQEDError(f"unknown Wigner method {method!r}")
    W = 2.0 / np.pi * W
    return PhaseSpaceFunction(grid, W, "wigner")


def husimi_q(state, grid: PhaseSpaceGrid | None = None) -> PhaseSpaceFunction:
    """Q(alpha) = <alpha|rho|alpha>/pi."""
    grid = grid or PhaseSpaceGrid()
    rho = _dm(state)
    d = rho.shape[0]
    al = grid.mesh()
    n = np.arange(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        logabs = np.log(np.abs(al))[..., None]
        amp = np.exp(-0.5 * np.abs(al)[..., None] ** 2 + n * logabs
                     - 0.5 * gammaln(n + 1)) * np.exp(1j * n * np.angle(al)[..., None])
    amp[..., 0] = np.exp(-0.5 * np.abs(al) ** 2)
    Q = np.einsum("...i,ij,...j->...", amp.conj(), rho, amp).real / np.pi
    return PhaseSpaceFunction(grid, Q, "husimi_q")


def marginal(func: PhaseSpaceFunction, phi: float = 0.0, n_points: int | None = None):
    """Density of the rotated quadrature x_phi = x cos(phi) + p sin(phi).

    Returns (x_phi grid, density). The distribution is interpolated onto a
    rotated grid and integrated along the conjugate direction.
    """
    g = func.grid
    n = n_points or g.resolution
    half = min(abs(g.x_range[0]), abs(g.x_range[1]), abs(g.p_range[0]), abs(g.p_range[1]))
    u = np.linspace(-half, half, n)
    U, V = np.meshgrid(u, u, indexing="ij")
    x = U * np.cos(phi) - V * np.sin(phi)
    p = U * np.sin(phi) + V * np.cos(phi)
    # cubic B-spline in index coordinates; exact at the grid nodes
    ix = (x - g.x[0]) / (g.x[1] - g.x[0])
    ip = (p - g.p[0]) / (g.p[1] - g.p[0])
    vals = map_coordinates(func.values, [ip, ix], order=3, mode="constant", cval=0.0)
    from scipy.integrate import trapezoid
    return u, trapezoid(vals, u, axis=1)


def quadrature_density(ket, x, phi: float = 0.0) -> np.ndarray:
    """|<x_phi|psi>|^2 with x = Re(alpha) scaling, i.e. X = (a + a^dag)/2."""
    c = np.asarray(ket.ket if isinstance(ket, QuantumState) else ket, dtype=complex)
    x = np.asarray(x, dtype=float)
    n = np.arange(c.size)
    # <x|n> for [X, P] = i/2: (2/pi)^{1/4} H_n(sqrt2 x) e^{-x^2} / sqrt(2^n n!)
    lognorm = 0.25 * np.log(2 / np.pi) - 0.5 * (n * np.log(2) + gammaln(n + 1))
    psi_n = np.array([np.exp(lognorm[k]) * eval_hermite(k, np.sqrt(2) * x) * np.exp(-x**2) for k in n])
    amp = np.einsum("k,k...->...", c * np.exp(-1j * n * phi), psi_n)
    return np.abs(amp) ** 2


# ----------------------------------------------------------------------------
# JPA effective model

def jpa_effective(params: JPAParams) -> JPAResult:
    """Displacement cancelling the pump, and the resulting detuning and two-photon drive.

    In the frame of the pump the classical amplitude satisfies
    (delta_0 + K|alpha|^2 - i kappa/2) alpha = -eps_p with delta_0 = omega_0 - omega_p,
    a cubic in n = |alpha|^2. Then delta = delta_0 + 2K|alpha|^2 and eps_2 = alpha^2 K.
    """
    d0 = params.omega_0 - params.omega_p
    K, ep, kappa = params.K, params.epsilon_p, params.kappa
    if ep == 0:
        return JPAResult(0j, d0, 0j, True, [0j], False)
    # n [(d0 + K n)^2 + kappa^2/4] = ep^2
    coeffs = [K**2, 2 * d0 * K, d0**2 + kappa**2 / 4, -(ep**2)]
    if K == 0:
        roots = np.array([ep**2 / (d0**2 + kappa**2 / 4)])
    else:
        roots = np.roots(coeffs)
    ns = sorted(float(r.real) for r in roots if abs(r.imag) < 1e-9 * max(1.0, abs(r.real)) and r.real >= 0)
    if not ns:
        raise CQEDError("no physical displacement found")
    sols = [-ep / (d0 + K * n - 1j * kappa / 2) for n in ns]
    bistable = len(sols) > 1
    if bistable:
        warnings.warn(f"pump admits {len(sols)} steady amplitudes (bistable); returning the lowest", CQEDWarning,
                      stacklevel=2)
    alpha = sols[0]
    n = abs(alpha) ** 2
    delta = d0 + 2 * K * n
    e2 = alpha**2 * K
    below = abs(e2) < np.sqrt(delta**2 + (kappa / 2) ** 2)
    return JPAResult(alpha, delta, e2, bool(below), sols, bistable)
