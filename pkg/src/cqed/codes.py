"""Bosonic and qubit codes against amplitude damping.

Codes carry their logical basis, the error set they are built to correct and
their stabilizers. ``knill_laflamme_check`` tests the correctability
conditions either algebraically or, for a Kraus family parameterized by the
damping strength, through the scaling of the residual violations.
``recovery_benchmark`` applies a loss channel followed by a recovery built
from the polar decomposition of the damaged codewords and reports the logical
entanglement fidelity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import CQEDError, DimensionError, LeakageError
from .hilbert import (HilbertSpace, Operator, QuantumState, destroy, identity, parity_operator, sigma_minus,
                      sigma_x, sigma_z, tensor)

ORTHO_TOL = 1e-10


@dataclass
class CodeSpec:
    """A two-dimensional code. ``codewords`` is the logical Z basis [|0_L>, |1_L>]."""

    name: str
    codewords: list
    error_set: list
    stabilizers: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.codewords) != 2:
            raise CQEDError(f"{self.name}: expected two codewords, got {len(self.codewords)}")
        G = self.gram()
        if np.max(np.abs(G - np.eye(2))) > ORTHO_TOL:
            raise CQEDError(f"{self.name}: codewords are not orthonormal (Gram deviation "
                            f"{np.max(np.abs(G - np.eye(2))):.2e})")
        d = self.dim
        for k, S in enumerate(self.stabilizers):
            m = S.matrix
            if np.max(np.abs(m @ m - np.eye(d))) > ORTHO_TOL:
                raise CQEDError(f"{self.name}: stabilizer {k} does not square to identity")
            for w in self.codewords:
                if np.linalg.norm(m @ w.ket - w.ket) > ORTHO_TOL:
                    raise CQEDError(f"{self.name}: stabilizer {k} does not fix every codeword")

    @property
    def dim(self) -> int:
        return self.codewords[0].space.dim

    @property
    def space(self) -> HilbertSpace:
        return self.codewords[0].space

    def encoder(self) -> np.ndarray:
        """Isometry C (dim x 2) with columns |0_L>, |1_L>."""
        return np.column_stack([w.ket for w in self.codewords])

    def projector(self) -> np.ndarray:
        C = self.encoder()
        return C @ C.conj().T

    def gram(self) -> np.ndarray:
        C = self.encoder()
        return C.conj().T @ C

    def mean_excitation(self, number: Operator | None = None) -> np.ndarray:
        """<n> for each codeword; the default counts excitations of every subsystem."""
        if number is None:
            number = total_number(self.space.subsystem_dims)
        return np.array([np.vdot(w.ket, number.matrix @ w.ket).real for w in self.codewords])

    def to_dict(self) -> dict:
        return {"name": self.name, "dims": list(self.space.subsystem_dims),
                "codewords": [{"re": w.ket.real.tolist(), "im": w.ket.imag.tolist()} for w in self.codewords],
                "n_errors": len(self.error_set), "n_stabilizers": len(self.stabilizers)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


@dataclass
class LossChannel:
    kappa_t: float
    kraus_operators: list

    @property
    def loss_probability(self) -> float:
        return float(-np.expm1(-self.kappa_t))

    def completeness_error(self) -> float:
        d = self.kraus_operators[0].dim
        s = sum(K.matrix.conj().T @ K.matrix for K in self.kraus_operators)
        return float(np.max(np.abs(s - np.eye(d))))

    def apply(self, rho) -> np.ndarray:
        rho = rho.dm() if isinstance(rho, QuantumState) else np.asarray(rho, dtype=complex)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
        return sum(K.matrix @ rho @ K.matrix.conj().T for K in self.kraus_operators)


def total_number(dims: Sequence[int]) -> Operator:
    dims = tuple(int(d) for d in dims)
    n = np.zeros(int(np.prod(dims)))
    for idx, levels in enumerate(np.ndindex(*dims)):
        n[idx] = sum(levels)
    return Operator(HilbertSpace(dims), np.diag(n), True)


def _ket(vec, dims) -> QuantumState:
    return QuantumState(HilbertSpace(tuple(dims)), ket=np.asarray(vec, dtype=complex))


# ----------------------------------------------------------------------------
# code constructions

def binomial_code(dim: int = 5) -> CodeSpec:
    """Smallest binomial code: |0_L> = (|0> + |4>)/sqrt2, |1_L> = |2>."""
    if dim < 5:
        raise DimensionError(f"the binomial code needs at least 5 Fock levels, got {dim}")
    z = np.zeros(dim, complex)
    z[[0, 4]] = 1 / np.sqrt(2)
    o = np.zeros(dim, complex)
    o[2] = 1
    return CodeSpec("binomial", [_ket(z, (dim,)), _ket(o, (dim,))], [identity(dim), destroy(dim)],
                    [parity_operator(dim)])


def _cat_component(alpha: complex, legs: int, residue: int, n_max: int) -> np.ndarray:
    """Unnormalized sum_k (i^k)-weighted coherent states projected on n = residue mod legs.

    Written as alpha^(n - r) u^r / sqrt(n!) with u = alpha/|alpha| so the
    alpha -> 0 limit is the Fock state |r>.
    """
    n = np.arange(n_max)
    keep = (n % legs) == residue
    r = abs(alpha)
    u = alpha / r if r > 0 else 1.0
    p = np.where(keep, n - residue, 0)
    with np.errstate(divide="ignore"):
        logmag = np.where(p > 0, p * np.log(r) if r > 0 else -np.inf, 0.0) - 0.5 * gammaln(n + 1)
    c = np.where(keep, np.exp(logmag) * np.exp(1j * np.angle(u) * n), 0.0)
    return c.astype(complex)


def _normalized_component(alpha, legs, residue, dim, threshold):
    ext = dim + 40 + int(4 * abs(alpha) ** 2)
    c = _cat_component(alpha, legs, residue, ext)
    total = np.linalg.norm(c)
    lost = 1.0 - (np.linalg.norm(c[:dim]) / total) ** 2
    if lost > threshold:
        raise LeakageError(f"cat codeword with alpha={alpha} loses {lost:.2e} of its norm at dim {dim}")
    c = c[:dim]
    return c / np.linalg.norm(c)


def cat_code(alpha: complex, legs: int = 2, dim: int | None = None, threshold: float = 1e-12) -> CodeSpec:
    """Two- or four-component cat code.

    legs=4: |0_L> on Fock states 4n, |1_L> on 4n+2, parity stabilizer, errors {I, a}.
    legs=2: |+-_L> = N(|alpha> +- |-alpha>) are stored in ``metadata`` and the
    logical Z basis is (|+_L> +- |-_L>)/sqrt2, close to |+-alpha>. There is no
    stabilizer; photon loss acts as a logical phase flip.
    """
    if legs not in (2, 4):
        raise CQEDError(f"legs must be 2 or 4, got {legs}")
    if dim is None:
        dim = int(np.ceil(abs(alpha) ** 2 + 8 * abs(alpha) + 12))
    if dim < legs:
        raise DimensionError(f"dim {dim} too small for a {legs}-leg cat")
    if legs == 4:
        w0 = _normalized_component(alpha, 4, 0, dim, threshold)
        w1 = _normalized_component(alpha, 4, 2, dim, threshold)
        return CodeSpec(f"cat4(alpha={alpha})", [_ket(w0, (dim,)), _ket(w1, (dim,))],
                        [identity(dim), destroy(dim)], [parity_operator(dim)], {"alpha": alpha, "legs": 4})
    plus = _normalized_component(alpha, 2, 0, dim, threshold)
    minus = _normalized_component(alpha, 2, 1, dim, threshold)
    w0 = (plus + minus) / np.sqrt(2)
    w1 = (plus - minus) / np.sqrt(2)
    return CodeSpec(f"cat2(alpha={alpha})", [_ket(w0, (dim,)), _ket(w1, (dim,))], [identity(dim)], [],
                    {"alpha": alpha, "legs": 2, "plus": plus, "minus": minus})


def trivial_code(dim: int = 2) -> CodeSpec:
    """Unencoded qubit in Fock states |0>, |1>."""
    if dim < 2:
        raise DimensionError("need at least two levels")
    e = np.eye(dim, dtype=complex)
    return CodeSpec("unencoded", [_ket(e[0], (dim,)), _ket(e[1], (dim,))], [identity(dim), destroy(dim)], [])


def _on_qubit(op: Operator, k: int, n: int = 4) -> Operator:
    ops = [identity(2)] * n
    ops[k] = op
    return tensor(ops)


def four_qubit_code() -> CodeSpec:
    """4-qubit amplitude-damping code: |0_L> = (|0000> + |1111>)/sqrt2, |1_L> = (|1100> + |0011>)/sqrt2."""
    dims = (2, 2, 2, 2)

    def basis(bits):
        v = np.zeros(16, complex)
        v[int(bits, 2)] = 1
        return v

    w0 = (basis("0000") + basis("1111")) / np.sqrt(2)
    w1 = (basis("1100") + basis("0011")) / np.sqrt(2)
    Z, X = sigma_z(), sigma_x()
    stabs = [_on_qubit(Z, 0) @ _on_qubit(Z, 1), _on_qubit(Z, 2) @ _on_qubit(Z, 3),
             reduce(lambda a, b: a @ b, [_on_qubit(X, k) for k in range(4)])]
    errors = [identity(dims)] + [_on_qubit(sigma_minus(), k) for k in range(4)]
    return CodeSpec("four-qubit", [_ket(w0, dims), _ket(w1, dims)], errors, stabs)


# ----------------------------------------------------------------------------
# channels

def amplitude_damping_kraus(kappa_t: float, dim: int) -> LossChannel:
    """Bosonic amplitude damping over a step kappa*dt.

    K_l = sum_n sqrt(C(n, l)) (1-p)^((n-l)/2) p^(l/2) |n-l><n|, p = 1 - exp(-kappa dt).
    K_l removes exactly l photons; l runs over 0..dim-1 so the set is complete
    on the truncated space.
    """
    if not (0 <= kappa_t < 1) or not np.isfinite(kappa_t):
        raise CQEDError(f"kappa*dt must lie in [0, 1), got {kappa_t}")
    if dim < 1:
        raise DimensionError("dim must be positive")
    p = -np.expm1(-kappa_t)
    sp = HilbertSpace((dim,))
    if p == 0:
        return LossChannel(float(kappa_t), [identity(dim)])
    n = np.arange(dim)
    ops = []
    for l in range(dim):
        K = np.zeros((dim, dim))
        m = n[l:]
        logc = gammaln(m + 1) - gammaln(l + 1) - gammaln(m - l + 1)
        K[m - l, m] = np.exp(0.5 * logc + 0.5 * (m - l) * np.log1p(-p) + 0.5 * l * np.log(p))
        ops.append(Operator(sp, K))
    return LossChannel(float(kappa_t), ops)


def qubit_amplitude_damping_kraus(gamma_t: float, n_qubits: int = 4, max_jumps: int | None = None) -> LossChannel:
    """Independent amplitude damping on ``n_qubits`` qubits.

    Kraus operators are products of the single-qubit pair
    A0 = |0><0| + sqrt(1-p)|1><1|, A1 = sqrt(p)|0><1|, ordered by the number of
    jumps (no jump first, then single jumps on qubit 1..n, ...). With
    ``max_jumps`` the set is cut after that many jumps and is then incomplete.
    """
    if not (0 <= gamma_t < 1):
        raise CQEDError(f"gamma*dt must lie in [0, 1), got {gamma_t}")
    p = -np.expm1(-gamma_t)
    sp2 = HilbertSpace((2,))
    A = [Operator(sp2, np.diag([1.0, np.sqrt(1 - p)])), Operator(sp2, np.array([[0, np.sqrt(p)], [0, 0]]))]
    patterns = sorted(np.ndindex(*([2] * n_qubits)), key=lambda s: (sum(s), [-b for b in s]))
    if max_jumps is not None:
        patterns = [s for s in patterns if sum(s) <= max_jumps]
    return LossChannel(float(gamma_t), [tensor([A[b] for b in s]) for s in patterns])


# ----------------------------------------------------------------------------
# Knill-Laflamme conditions

@dataclass
class KLReport:
    status: str  # "exact", "first-order" or "violated"
    max_offdiagonal: float
    max_asymmetry: float
    c_matrix: np.ndarray
    scaling_exponent: float | None = None
    kappa_ts: np.ndarray | None = None
    residuals: np.ndarray | None = None

    @property
    def residual(self) -> float:
        return max(self.max_offdiagonal, self.max_asymmetry)


def _kl_residuals(code: CodeSpec, errors: Sequence) -> tuple[float, float, np.ndarray]:
    C = code.encoder()
    mats = [E.matrix if isinstance(E, Operator) else np.asarray(E) for E in errors]
    EC = [M @ C for M in mats]
    m = len(mats)
    c = np.zeros((m, m), complex)
    off, asym = 0.0, 0.0
    for a in range(m):
        for b in range(m):
            block = EC[a].conj().T @ EC[b]
            c[a, b] = 0.5 * (block[0, 0] + block[1, 1])
            off = max(off, abs(block[0, 1]), abs(block[1, 0]))
            asym = max(asym, abs(block[0, 0] - block[1, 1]))
    return off, asym, c


def knill_laflamme_check(code: CodeSpec, errors: Sequence | Callable | None = None, order: int | None = None,
                         tol: float = 1e-10, kappa_ts: Sequence[float] = (1e-4, 3e-4, 1e-3, 3e-3)) -> KLReport:
    """Evaluate <i_L|E_a^dag E_b|j_L> = c_ab delta_ij.

    ``errors`` is either a list of operators (algebraic check; the code's own
    error set by default) or a callable mapping kappa*dt to a list of Kraus
    operators. In the second case the residual violations are computed over
    ``kappa_ts`` and fitted to a power law; the conditions hold to order
    ``order`` (default 1) when the violation scales at least as
    (kappa dt)^(order+1). A violation that does not vanish as kappa dt -> 0
    faster than that is reported as "violated".
    """
    if errors is None:
        errors = code.error_set
    if callable(errors):
        order = 1 if order is None else int(order)
        ks = np.asarray(kappa_ts, float)
        res = np.array([_kl_residuals(code, errors(k)) [:2] for k in ks])
        worst = res.max(axis=1)
        off, asym, c = _kl_residuals(code, errors(ks[0]))
        if np.all(worst < tol):
            return KLReport("exact", off, asym, c, None, ks, worst)
        slope = float(np.polyfit(np.log(ks), np.log(np.maximum(worst, 1e-300)), 1)[0])
        status = "first-order" if (order >= 1 and slope >= order + 1 - 0.2) else "violated"
        return KLReport(status, off, asym, c, slope, ks, worst)
    if len(errors) == 0:
        raise CQEDError("error set is empty")
    off, asym, c = _kl_residuals(code, errors)
    return KLReport("exact" if max(off, asym) < tol else "violated", off, asym, c)


# ----------------------------------------------------------------------------
# recovery

@dataclass
class RecoveryResult:
    kappa_ts: np.ndarray
    fidelity: np.ndarray  # logical entanglement (process) fidelity
    infidelity: np.ndarray
    exponent: float | None
    recovery: str
    code: str

    def rows(self):
        return [(float(k), float(f), float(i)) for k, f, i in zip(self.kappa_ts, self.fidelity, self.infidelity)]


def polar_recovery(code: CodeSpec, kraus: Sequence, n_correctable: int | None = None) -> list[np.ndarray]:
    """Decoding Kraus operators (2 x dim) built from the damaged codewords.

    The columns E_a|i_L> for the correctable errors are replaced by the
    closest set of orthonormal vectors (unitary factor of their polar
    decomposition); each error subspace is then mapped back onto the logical
    basis. Anything outside the recovered subspaces is sent to |0_L>.
    """
    n = len(code.error_set) if n_correctable is None else n_correctable
    C = code.encoder()
    mats = [K.matrix if isinstance(K, Operator) else np.asarray(K) for K in kraus][:n]
    W = np.column_stack([M @ C for M in mats])
    U, s, Vh = np.linalg.svd(W, full_matrices=False)
    if not np.all(np.isfinite(s)):
        raise CQEDError("recovery construction failed: singular values not finite")
    r = int(np.sum(s > 1e-13 * max(s[0], 1e-300)))
    iso = U[:, :r] @ Vh[:r, :]  # polar unitary factor, exact on the range of W
    ops = [iso[:, 2 * a:2 * a + 2].conj().T for a in range(len(mats))]
    # completion: orthonormal basis of the complement of the recovered range
    d = C.shape[0]
    comp = np.eye(d) - U[:, :r] @ U[:, :r].conj().T
    w, v = np.linalg.eigh(0.5 * (comp + comp.conj().T))
    for k in np.nonzero(w > 0.5)[0]:
        R = np.zeros((2, d), complex)
        R[0] = v[:, k].conj()
        ops.append(R)
    return ops


def logical_fidelity(code: CodeSpec, channel: LossChannel, recovery: str = "polar",
                     n_correctable: int | None = None) -> float:
    """Entanglement fidelity of encode -> channel -> decode against the logical identity."""
    C = code.encoder()
    if recovery == "polar":
        R = polar_recovery(code, channel.kraus_operators, n_correctable)
    elif recovery == "none":
        # project onto the code space and read out; everything else is lost
        R = [C.conj().T]
    else:
        raise CQEDError(f"unknown recovery '{recovery}'")
    f = 0.0
    for K in channel.kraus_operators:
        KC = K.matrix @ C
        for Rr in R:
            f += abs(np.trace(Rr @ KC)) ** 2
    return float(f / 4)


def recovery_benchmark(code: CodeSpec, channel: Callable[[float], LossChannel] | None = None,
                       kappa_ts: Sequence[float] | None = None, recovery: str = "polar",
                       n_correctable: int | None = None) -> RecoveryResult:
    """Logical infidelity versus kappa*dt and its fitted log-log slope.

    ``channel`` maps kappa*dt to a LossChannel on the code's space; the
    default is bosonic amplitude damping. Loss only lowers the photon number,
    so a truncation just above the highest codeword level is exact.
    """
    if channel is None:
        d = code.dim
        channel = lambda k: amplitude_damping_kraus(k, d)  # noqa: E731
    if kappa_ts is None:
        kappa_ts = np.geomspace(1e-3, 3e-2, 8)
    ks = np.asarray(kappa_ts, float)
    if ks.size == 0:
        raise CQEDError("empty kappa*dt grid")
    fid = np.array([logical_fidelity(code, channel(k), recovery, n_correctable) for k in ks])
    inf = np.clip(1 - fid, 0, None)
    pos = (ks > 0) & (inf > 1e-15)
    exponent = None
    if pos.sum() >= 2:
        exponent = float(np.polyfit(np.log(ks[pos]), np.log(inf[pos]), 1)[0])
    return RecoveryResult(ks, fid, inf, exponent, recovery, code.name)
