"""Truncated Fock-space operator algebra.

Operators are dense complex matrices tagged with the composite space they act
on. Subsystem order is the order of ``HilbertSpace.subsystem_dims`` and
Kronecker products follow it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import CompositionError, DimensionError, StateError, WarningRecord

HERM_TOL = 1e-12
STATE_TOL = 1e-10
LEAKAGE_THRESHOLD = 1e-6


@dataclass(frozen=True)
class HilbertSpace:
    subsystem_dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.subsystem_dims)
        if len(dims) == 0:
            raise DimensionError("a Hilbert space needs at least one subsystem")
        if any(d < 1 for d in dims):
            raise DimensionError(f"subsystem dimensions must be positive, got {dims}")
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.subsystem_dims))

    @property
    def n_subsystems(self) -> int:
        return len(self.subsystem_dims)

    def __mul__(self, other: "HilbertSpace") -> "HilbertSpace":
        return HilbertSpace(self.subsystem_dims + other.subsystem_dims)


def space(*dims) -> HilbertSpace:
    return HilbertSpace(tuple(dims))


@dataclass(frozen=True, eq=False)
class Operator:
    space: HilbertSpace
    matrix: np.ndarray
    hermitian_hint: bool = False

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator matrix must be square, got {m.shape}")
        if m.shape[0] != self.space.dim:
            raise DimensionError(
                f"matrix dimension {m.shape[0]} does not match space dimension {self.space.dim}")
        if self.hermitian_hint and m.size and np.max(np.abs(m - m.conj().T)) >= HERM_TOL * max(1.0, np.max(np.abs(m))):
            raise StateError("operator flagged Hermitian is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.space.dim

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T, self.hermitian_hint)

    def is_hermitian(self, tol: float = HERM_TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) < tol * max(1.0, np.max(np.abs(self.matrix))))

    def _check(self, other: "Operator"):
        if other.space != self.space:
            raise CompositionError(f"space mismatch {self.space.subsystem_dims} vs {other.space.subsystem_dims}")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix + other.matrix,
                            self.hermitian_hint and other.hermitian_hint)
        if np.isscalar(other) and other == 0:
            return self
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Operator(self.space, -self.matrix, self.hermitian_hint)

    def __sub__(self, other):
        if isinstance(other, Operator):
            return self + (-other)
        return NotImplemented

    def __mul__(self, c):
        if isinstance(c, Operator):
            return self @ c
        if np.isscalar(c):
            herm = self.hermitian_hint and np.isreal(c)
            return Operator(self.space, self.matrix * c, bool(herm))
        return NotImplemented

    def __rmul__(self, c):
        if np.isscalar(c):
            return self * c
        return NotImplemented

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        return NotImplemented

    def comm(self, other: "Operator") -> "Operator":
        return self @ other - other @ self

    def expm(self, factor: complex = 1.0) -> "Operator":
        return Operator(self.space, linalg.expm(factor * self.matrix))

    def eigh(self):
        return linalg.eigh(0.5 * (self.matrix + self.matrix.conj().T))

    def __repr__(self):
        return f"Operator(dims={self.space.subsystem_dims}, hermitian={self.hermitian_hint})"


@dataclass(frozen=True, eq=False)
class QuantumState:
    space: HilbertSpace
    ket: np.ndarray | None = None
    density_matrix: np.ndarray | None = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        if (self.ket is None) == (self.density_matrix is None):
            raise StateError("give exactly one of ket or density_matrix")
        d = self.space.dim
        if self.ket is not None:
            v = np.array(self.ket, dtype=complex).reshape(-1)
            if v.shape[0] != d:
                raise DimensionError(f"ket length {v.shape[0]} does not match dimension {d}")
            if self.validate and abs(np.linalg.norm(v) - 1.0) > STATE_TOL:
                raise StateError(f"ket norm {np.linalg.norm(v):.3e} is not 1")
            v.setflags(write=False)
            object.__setattr__(self, "ket", v)
        else:
            r = np.array(self.density_matrix, dtype=complex)
            if r.shape != (d, d):
                raise DimensionError(f"density matrix shape {r.shape} does not match dimension {d}")
            if self.validate:
                check_density_matrix(r)
            r.setflags(write=False)
            object.__setattr__(self, "density_matrix", r)

    @property
    def is_pure(self) -> bool:
        return self.ket is not None

    def dm(self) -> np.ndarray:
        if self.ket is not None:
            return np.outer(self.ket, self.ket.conj())
        return self.density_matrix

    def to_dm(self) -> "QuantumState":
        return QuantumState(self.space, density_matrix=self.dm(), validate=False)


def check_density_matrix(r: np.ndarray, tol: float = STATE_TOL):
    herm = np.max(np.abs(r - r.conj().T))
    if herm > tol:
        raise StateError(f"density matrix not Hermitian (max deviation {herm:.2e})")
    tr = np.trace(r).real
    if abs(tr - 1.0) > tol:
        raise StateError(f"density matrix trace {tr:.12f} is not 1")
    wmin = np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min()
    if wmin < -tol:
        raise StateError(f"density matrix has negative eigenvalue {wmin:.2e}")


def ket_state(vec, dims=None) -> QuantumState:
    vec = np.asarray(vec, dtype=complex)
    sp = HilbertSpace(tuple(dims) if dims is not None else (vec.shape[0],))
    return QuantumState(sp, ket=vec)


def dm_state(rho, dims=None) -> QuantumState:
    rho = np.asarray(rho, dtype=complex)
    sp = HilbertSpace(tuple(dims) if dims is not None else (rho.shape[0],))
    return QuantumState(sp, density_matrix=rho)


# ----------------------------------------------------------------------------
# single-mode operators

def ladder_operators(dim: int):
    """Annihilation and creation operators on a ``dim``-level Fock space."""
    if int(dim) != dim or dim < 2:
        raise DimensionError(f"ladder operators need dim >= 2, got {dim}")
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
    sp = HilbertSpace((dim,))
    return Operator(sp, a), Operator(sp, a.conj().T)


def destroy(dim: int) -> Operator:
    return ladder_operators(dim)[0]


def number_operator(dim: int) -> Operator:
    return Operator(HilbertSpace((dim,)), np.diag(np.arange(dim, dtype=float)), True)


def identity(dims) -> Operator:
    sp = dims if isinstance(dims, HilbertSpace) else HilbertSpace(tuple(np.atleast_1d(dims)))
    return Operator(sp, np.eye(sp.dim), True)


def parity_operator(dim: int) -> Operator:
    return Operator(HilbertSpace((dim,)), np.diag((-1.0) ** np.arange(dim)), True)


# Two-level operators in the [g, e] basis, which coincides with Fock |0>, |1>.
def sigma_z() -> Operator:
    return Operator(HilbertSpace((2,)), np.diag([-1.0, 1.0]), True)


def sigma_x() -> Operator:
    return Operator(HilbertSpace((2,)), np.array([[0, 1], [1, 0]]), True)


def sigma_y() -> Operator:
    return Operator(HilbertSpace((2,)), np.array([[0, 1j], [-1j, 0]]), True)


def sigma_minus() -> Operator:
    """Lowers |e> to |g>."""
    return Operator(HilbertSpace((2,)), np.array([[0, 1], [0, 0]]))


def sigma_plus() -> Operator:
    return sigma_minus().dag()


def projector(dim: int, level: int) -> Operator:
    p = np.zeros((dim, dim))
    p[level, level] = 1.0
    return Operator(HilbertSpace((dim,)), p, True)


def fock_state(dim: int, n: int) -> QuantumState:
    if not 0 <= n < dim:
        raise DimensionError(f"Fock level {n} outside dimension {dim}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return QuantumState(HilbertSpace((dim,)), ket=v)


def basis_vector(dims: Sequence[int], levels: Sequence[int]) -> np.ndarray:
    """Product basis ket |l0, l1, ...> as a flat vector."""
    idx = np.ravel_multi_index(tuple(levels), tuple(dims))
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    v[idx] = 1.0
    return v


# ----------------------------------------------------------------------------
# composition

def tensor(operators: Sequence[Operator]) -> Operator:
    ops = list(operators)
    if not ops:
        raise CompositionError("tensor of an empty list")
    for op in ops:
        if not isinstance(op, Operator):
            raise CompositionError(f"expected Operator, got {type(op).__name__}")
    sp = reduce(lambda s, t: s * t, [op.space for op in ops])
    mat = reduce(np.kron, [op.matrix for op in ops])
    return Operator(sp, mat, all(op.hermitian_hint for op in ops))


def embed(op: Operator, index: int, sp: HilbertSpace) -> Operator:
    """Place a single-subsystem operator at ``index`` with identities elsewhere."""
    if not 0 <= index < sp.n_subsystems:
        raise CompositionError(f"subsystem index {index} out of range for {sp.subsystem_dims}")
    if op.dim != sp.subsystem_dims[index]:
        raise CompositionError(
            f"operator dimension {op.dim} does not match subsystem {index} of size {sp.subsystem_dims[index]}")
    left = int(np.prod(sp.subsystem_dims[:index]))
    right = int(np.prod(sp.subsystem_dims[index + 1:]))
    mat = np.kron(np.kron(np.eye(left), op.matrix), np.eye(right))
    return Operator(sp, mat, op.hermitian_hint)


def expectation(state: QuantumState, op: Operator) -> complex:
    if state.space.dim != op.space.dim or state.space.subsystem_dims != op.space.subsystem_dims:
        raise CompositionError(
            f"state space {state.space.subsystem_dims} does not match operator space {op.space.subsystem_dims}")
    if state.ket is not None:
        return complex(np.vdot(state.ket, op.matrix @ state.ket))
    return complex(np.trace(state.density_matrix @ op.matrix))


def ptrace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a density matrix, keeping the listed subsystems in order."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    r = np.asarray(rho).reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace out highest index first so axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        nleft = n - count
        r = np.trace(r, axis1=i, axis2=i + nleft)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return r.reshape(dk, dk)


def propagator(H: Operator | np.ndarray, t: float) -> np.ndarray:
    """exp(-iHt) for Hermitian H via eigendecomposition."""
    m = H.matrix if isinstance(H, Operator) else np.asarray(H)
    w, v = linalg.eigh(0.5 * (m + m.conj().T))
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def top_level_population(rho: np.ndarray, dims: Sequence[int], index: int) -> float:
    """Population of the highest Fock level of subsystem ``index``."""
    red = ptrace(rho, dims, [index]) if len(dims) > 1 else np.asarray(rho)
    return float(np.real(red[-1, -1]))


def leakage_warnings(rho: np.ndarray, dims: Sequence[int], threshold: float = LEAKAGE_THRESHOLD,
                     subsystems: Sequence[int] | None = None) -> list:
    out = []
    idx = range(len(dims)) if subsystems is None else subsystems
    for i in idx:
        if dims[i] < 3:
            continue
        p = top_level_population(rho, dims, i)
        if p > threshold:
            out.append(WarningRecord("leakage", f"subsystem {i} top-level population {p:.3e} exceeds {threshold:.1e}", p))
    return out
