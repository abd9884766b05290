"""First-order eigenbasis of H + eps V for nondegenerate spectra.

Standard stationary perturbation theory, kept deliberately unnormalized:

    |i'> = |i> + eps * sum_{k != i} <k|V|i> / (E_i - E_k) |k>
    E'_i = E_i + eps <i|V|i>            (first order)

The coefficient matrix C with C[k, i] = <k|V|i>/(E_i - E_k) is
anti-Hermitian, which is what makes the truncated vectors orthonormal to
O(eps^2).  Exact diagonalization of the same operator is provided alongside
for convergence checks, with eigenvectors gauge-fixed to have real positive
overlap with their unperturbed partners.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import (
    DEFAULT_POLICY,
    NumericPolicy,
    ValidationError,
    frozen_array,
    hermiticity_defect,
)
from .spectral import DensityMatrix, HamiltonianSpec, check_bohr_nondegenerate


@dataclass(frozen=True, eq=False)
class PerturbationSetup:
    """Base Hamiltonian, perturbation direction, and strength.

    The perturbation matrix is given in the unperturbed eigenbasis and must
    be Hermitian; the base spectrum must have distinct levels and distinct
    gaps; epsilon is restricted to [0, 1].
    """

    base: HamiltonianSpec
    hprime: np.ndarray
    epsilon: float

    def __post_init__(self):
        hp = frozen_array(self.hprime)
        object.__setattr__(self, "hprime", hp)
        if hp.shape != (self.base.dim, self.base.dim):
            raise ValidationError("perturbation shape does not match the base Hamiltonian")
        if hermiticity_defect(hp) > DEFAULT_POLICY.structural:
            raise ValidationError("perturbation matrix must be Hermitian")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValidationError(f"epsilon {self.epsilon} outside [0, 1]")
        bohr = check_bohr_nondegenerate(self.base.energies)
        if not bohr.ok:
            raise ValidationError(
                f"base spectrum unusable for nondegenerate perturbation theory: "
                f"equal levels {bohr.equal_energy_pairs}, clashing gaps {bohr.clashing_gap_pairs}")


@dataclass(frozen=True, eq=False)
class FirstOrderBasis:
    """Truncated perturbed basis.

    vectors        -- columns are the unnormalized first-order vectors |i'>
    coefficients   -- anti-Hermitian C with C[k, i] = <k|V|i>/(E_i - E_k)
    primed_energies -- first-order values E_i + eps <i|V|i>
    """

    setup: PerturbationSetup
    vectors: np.ndarray
    coefficients: np.ndarray
    primed_energies: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vectors", frozen_array(self.vectors))
        object.__setattr__(self, "coefficients", frozen_array(self.coefficients))
        object.__setattr__(self, "primed_energies", frozen_array(self.primed_energies, dtype=float))


def first_order_basis(setup: PerturbationSetup,
                      policy: NumericPolicy = DEFAULT_POLICY) -> FirstOrderBasis:
    """Build the truncated first-order eigenbasis of base + eps * hprime."""
    en = setup.base.energies
    d = setup.base.dim
    gaps = np.abs(np.subtract.outer(en, en))
    off = ~np.eye(d, dtype=bool)
    if d > 1 and float(gaps[off].min()) <= policy.gap_guard:
        raise ValidationError(
            f"level gap {float(gaps[off].min()):.3e} at or below guard {policy.gap_guard:.1e}")
    denom = np.subtract.outer(en, en)  # denom[k, i] = E_k - E_i
    coeff = np.zeros((d, d), dtype=complex)
    coeff[off] = setup.hprime[off] / (-denom[off])  # <k|V|i> / (E_i - E_k)
    vectors = np.eye(d, dtype=complex) + setup.epsilon * coeff
    primed = en + setup.epsilon * np.real(np.diag(setup.hprime))
    return FirstOrderBasis(setup=setup, vectors=vectors, coefficients=coeff,
                           primed_energies=primed)


def exact_perturbed_spec(setup: PerturbationSetup) -> HamiltonianSpec:
    """Exact spectrum of base + eps * hprime, gauge-fixed.

    Eigenvalues ascend; eigenvector k is multiplied by a phase making its
    overlap with unperturbed level k real and positive (falling back to its
    largest component if that overlap vanishes).
    """
    full = np.diag(setup.base.energies).astype(complex) + setup.epsilon * setup.hprime
    vals, vecs = np.linalg.eigh(full)
    vecs = np.array(vecs)
    for k in range(setup.base.dim):
        anchor = vecs[k, k]
        if abs(anchor) < 1e-14:
            anchor = vecs[int(np.argmax(np.abs(vecs[:, k]))), k]
        vecs[:, k] *= np.conj(anchor) / abs(anchor)
    return HamiltonianSpec(dim=setup.base.dim, energies=vals, eigenbasis=vecs)


def to_primed_basis(m: np.ndarray, basis: FirstOrderBasis, truncate: bool = False) -> np.ndarray:
    """Matrix elements of m between the truncated primed vectors, V^dag m V.

    With truncate=True the quadratic-in-eps term is dropped analytically:
    m + eps (C^dag m + m C), avoiding cancellation against the full product.
    """
    m = np.asarray(m, dtype=complex)
    if truncate:
        c = basis.coefficients
        return m + basis.setup.epsilon * (c.conj().T @ m + m @ c)
    v = basis.vectors
    return v.conj().T @ m @ v


def from_primed_basis(m: np.ndarray, basis: FirstOrderBasis) -> np.ndarray:
    """Approximate inverse of to_primed_basis (exact up to O(eps^2))."""
    v = basis.vectors
    return v @ np.asarray(m, dtype=complex) @ v.conj().T


def diagonal_state_in_perturbed_basis(populations, setup: PerturbationSetup) -> DensityMatrix:
    """State with the given populations on the exact perturbed eigenvectors.

    By construction it carries zero coherence in the perturbed energy
    eigenbasis while being a genuine state in the working basis.
    """
    pops = np.asarray(populations, dtype=float)
    if pops.shape != (setup.base.dim,):
        raise ValidationError(
            f"expected {setup.base.dim} populations, got shape {pops.shape}")
    spec = exact_perturbed_spec(setup)
    entries = spec.eigenbasis @ np.diag(pops).astype(complex) @ spec.eigenbasis.conj().T
    return DensityMatrix(dim=setup.base.dim, entries=entries)
