"""Core spectral types: Hamiltonians, states, composite indexing, Gibbs states.

Conventions used throughout the toolkit:
  * all matrices are written in the (unperturbed) energy product basis,
  * composite indices are system-major: flat = i * d2 + R for system level i
    and bath level R,
  * energy lists are ascending.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    DEFAULT_POLICY,
    NumericPolicy,
    ValidationError,
    frozen_array,
    hermiticity_defect,
    max_abs,
    unitarity_defect,
)


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """A finite Hamiltonian given by its spectrum and eigenbasis.

    energies are sorted ascending; eigenbasis columns are the eigenvectors,
    so the operator itself is eigenbasis @ diag(energies) @ eigenbasis^dag.
    """

    dim: int
    energies: np.ndarray
    eigenbasis: np.ndarray

    def __post_init__(self):
        en = frozen_array(self.energies, dtype=float)
        basis = frozen_array(self.eigenbasis)
        object.__setattr__(self, "energies", en)
        object.__setattr__(self, "eigenbasis", basis)
        if self.dim <= 0:
            raise ValidationError("dimension must be positive")
        if en.shape != (self.dim,):
            raise ValidationError(f"expected {self.dim} energies, got shape {en.shape}")
        if not np.all(np.isfinite(en)):
            raise ValidationError("energies must be finite reals")
        if np.any(np.diff(en) < 0):
            raise ValidationError("energies must be sorted ascending")
        if basis.shape != (self.dim, self.dim):
            raise ValidationError("eigenbasis shape does not match dimension")
        tol = DEFAULT_POLICY.structural
        if unitarity_defect(basis) > tol:
            raise ValidationError("eigenbasis is not unitary within tolerance")

    @classmethod
    def diagonal(cls, energies) -> "HamiltonianSpec":
        """Spec for an operator already diagonal in the working basis."""
        en = np.asarray(energies, dtype=float)
        return cls(dim=en.size, energies=en, eigenbasis=np.eye(en.size))

    def matrix(self) -> np.ndarray:
        return self.eigenbasis @ np.diag(self.energies).astype(complex) @ self.eigenbasis.conj().T

    def is_diagonal_basis(self, tol: float = DEFAULT_POLICY.structural) -> bool:
        return max_abs(self.eigenbasis - np.eye(self.dim)) <= tol


# ---------------------------------------------------------------------------
# density matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated quantum state.

    One reusable validator enforces hermiticity and unit trace within 1e-12
    and eigenvalues above -1e-10; every constructor in the package funnels
    through it, so a DensityMatrix in hand is always a genuine state.
    """

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        m = frozen_array(self.entries)
        object.__setattr__(self, "entries", m)
        if m.shape != (self.dim, self.dim):
            raise ValidationError("entries shape does not match dimension")
        tol = DEFAULT_POLICY.structural
        defect = hermiticity_defect(m)
        if defect > tol:
            raise ValidationError(f"not Hermitian: defect {defect:.3e} > {tol:.1e}")
        tr = m.trace()
        if abs(tr - 1.0) > tol:
            raise ValidationError(f"trace {tr:.15f} differs from 1 beyond {tol:.1e}")
        lo = float(np.min(np.linalg.eigvalsh(m)))
        if lo < -DEFAULT_POLICY.psd_floor:
            raise ValidationError(f"negative eigenvalue {lo:.3e} below PSD floor")

    @classmethod
    def from_entries(cls, entries) -> "DensityMatrix":
        m = np.asarray(entries, dtype=complex)
        return cls(dim=m.shape[0], entries=m)

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.entries))


def basis_state_density(dim: int, k: int) -> DensityMatrix:
    """|k><k| as a density matrix."""
    if not 0 <= k < dim:
        raise ValidationError(f"basis index {k} outside dimension {dim}")
    m = np.zeros((dim, dim), dtype=complex)
    m[k, k] = 1.0
    return DensityMatrix(dim=dim, entries=m)


def random_density_matrix(dim: int, rng: np.random.Generator) -> DensityMatrix:
    """Full-rank random state: normalized G G^dag with complex Gaussian G."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    m /= m.trace().real
    return DensityMatrix(dim=dim, entries=m)


# ---------------------------------------------------------------------------
# composite indexing and products
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompositeIndexMap:
    """Bijection between (system level i, bath level R) and flat index i*d2+R."""

    d1: int
    d2: int

    def __post_init__(self):
        if self.d1 <= 0 or self.d2 <= 0:
            raise ValidationError("both factor dimensions must be positive")

    @property
    def dim(self) -> int:
        return self.d1 * self.d2

    def flat(self, i: int, r: int) -> int:
        if not (0 <= i < self.d1 and 0 <= r < self.d2):
            raise ValidationError(f"pair ({i},{r}) outside {self.d1}x{self.d2}")
        return i * self.d2 + r

    def pair(self, x: int) -> tuple[int, int]:
        if not 0 <= x < self.dim:
            raise ValidationError(f"flat index {x} outside dimension {self.dim}")
        return divmod(x, self.d2)


def tensor_product(a: DensityMatrix, b: DensityMatrix,
                   policy: NumericPolicy = DEFAULT_POLICY) -> DensityMatrix:
    """Kronecker product a (x) b in system-major flat indexing."""
    dim = a.dim * b.dim
    if dim > policy.max_composite_dim:
        raise ValidationError(
            f"composite dimension {dim} exceeds cap {policy.max_composite_dim}")
    return DensityMatrix(dim=dim, entries=np.kron(a.entries, b.entries))


def partial_trace_bath(rho_sb: DensityMatrix, index_map: CompositeIndexMap) -> DensityMatrix:
    """Trace out the bath factor: out[i,j] = sum_R rho[(i,R),(j,R)]."""
    if rho_sb.dim != index_map.dim:
        raise ValidationError("state dimension does not match the index map")
    d1, d2 = index_map.d1, index_map.d2
    m = rho_sb.entries.reshape(d1, d2, d1, d2)
    return DensityMatrix(dim=d1, entries=np.einsum("irjr->ij", m))


def total_energies(hs: HamiltonianSpec, hb: HamiltonianSpec,
                   index_map: CompositeIndexMap) -> np.ndarray:
    """Flat vector of joint level energies E_i + E_R.

    Both Hamiltonians must be diagonal in the working basis; otherwise a
    flat energy list is not meaningful.
    """
    if (hs.dim, hb.dim) != (index_map.d1, index_map.d2):
        raise ValidationError("index map does not match the two Hamiltonians")
    for name, h in (("system", hs), ("bath", hb)):
        if not h.is_diagonal_basis():
            raise ValidationError(f"{name} Hamiltonian is not diagonal in the working basis")
    return np.add.outer(hs.energies, hb.energies).reshape(-1)


# ---------------------------------------------------------------------------
# Gibbs states
# ---------------------------------------------------------------------------

def gibbs_state(h: HamiltonianSpec, beta: float,
                policy: NumericPolicy = DEFAULT_POLICY) -> DensityMatrix:
    """Thermal state exp(-beta H) / Z.

    Populations are computed with the spectrum shifted by its minimum,
    exp(-beta (E_k - E_min)), so no exponent can overflow; the result is
    renormalized to unit trace after the division.
    """
    if not (isinstance(beta, (int, float)) and math.isfinite(beta) and beta > 0):
        raise ValidationError(f"beta must be a finite positive real, got {beta!r}")
    shifted = h.energies - h.energies[0]
    weights = np.exp(-beta * shifted)
    pops = weights / weights.sum()
    entries = h.eigenbasis @ np.diag(pops).astype(complex) @ h.eigenbasis.conj().T
    return DensityMatrix(dim=h.dim, entries=entries)


# ---------------------------------------------------------------------------
# Bohr spectrum check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BohrCheck:
    """Outcome of the distinct-gaps test.

    equal_energy_pairs lists level pairs whose energies coincide within tol;
    clashing_gap_pairs lists ordered level pairs whose nonzero gaps coincide.
    """

    ok: bool
    tol: float
    equal_energy_pairs: tuple = field(default_factory=tuple)
    clashing_gap_pairs: tuple = field(default_factory=tuple)


def check_bohr_nondegenerate(energies, tol: float = DEFAULT_POLICY.grouping) -> BohrCheck:
    """True iff all levels are distinct and all nonzero gaps are distinct.

    This is the condition under which an energy-conserving channel acts
    entrywise on coherences: E_i - E_p = E_j - E_q forces (i,p) = (j,q).
    """
    en = np.asarray(energies, dtype=float)
    n = en.size
    equal = []
    for i in range(n):
        for j in range(i + 1, n):
            if abs(en[i] - en[j]) <= tol:
                equal.append((i, j))
    clashes = []
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    gaps = {p: en[p[0]] - en[p[1]] for p in pairs}
    for a in range(len(pairs)):
        for b in range(a + 1, len(pairs)):
            pa, pb = pairs[a], pairs[b]
            if abs(gaps[pa] - gaps[pb]) <= tol:
                clashes.append((pa, pb))
    ok = not equal and not clashes
    return BohrCheck(ok=ok, tol=tol,
                     equal_energy_pairs=tuple(equal),
                     clashing_gap_pairs=tuple(clashes))
