"""Energy-conserving unitaries on system+bath and the induced thermal channel.

The joint space splits into blocks of equal total energy E_i + E_R.  Any
unitary that is block diagonal in that decomposition commutes with the total
Hamiltonian, and conjugating rho (x) tau_B by it and tracing out the bath
yields a channel that preserves the system Gibbs state.

For a system whose spectrum has no repeated levels and no repeated gaps the
channel acts entrywise:

    Phi(|i><j|) = L_ij |i><j|          (i != j)
    Phi(|i><i|) = sum_j T(i->j) |j><j|

with  L_ij = sum_R p_R <i,R|U|i,R> conj(<j,R|U|j,R>)  and
T(i->j) = sum_R p_R |<j, E_R + E_i - E_j |U| i, E_R>|^2, a missing bath level
contributing zero.  Both are extracted here and cross-validated.
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
    max_abs,
    unitarity_defect,
)
from .spectral import (
    CompositeIndexMap,
    DensityMatrix,
    HamiltonianSpec,
    check_bohr_nondegenerate,
    gibbs_state,
    partial_trace_bath,
    tensor_product,
    total_energies,
)


# ---------------------------------------------------------------------------
# energy block decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EnergyBlockDecomposition:
    """Partition of flat joint indices into equal-total-energy blocks.

    Blocks are ordered by ascending energy and each block's indices ascend;
    `totals` retains the raw per-index energies for commutator checks.
    """

    totals: np.ndarray
    tol: float
    blocks: tuple  # of (energy value, tuple of flat indices)

    def __post_init__(self):
        object.__setattr__(self, "totals", frozen_array(self.totals, dtype=float))
        covered = sorted(i for _, members in self.blocks for i in members)
        if covered != list(range(self.totals.size)):
            raise ValidationError("blocks do not partition the index set")

    @property
    def dim(self) -> int:
        return int(self.totals.size)

    def block_sizes(self) -> tuple[int, ...]:
        return tuple(len(members) for _, members in self.blocks)


def decompose_energy_blocks(totals, tol: float = DEFAULT_POLICY.grouping) -> EnergyBlockDecomposition:
    """Group flat indices whose total energies agree within tol.

    Grouping is by gaps in the sorted energy list.  If chaining makes a
    group ambiguous (members pairwise-close but the group spanning more
    than tol) the spectrum is rejected: no silent tie-breaking.
    """
    totals = np.asarray(totals, dtype=float)
    if totals.size == 0:
        raise ValidationError("empty energy list")
    order = np.argsort(totals, kind="stable")
    groups: list[list[int]] = [[int(order[0])]]
    for idx in order[1:]:
        idx = int(idx)
        if totals[idx] - totals[groups[-1][-1]] <= tol:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    blocks = []
    for members in groups:
        vals = totals[members]
        span = float(vals.max() - vals.min())
        if span > tol:
            raise ValidationError(
                f"ambiguous energy grouping: indices {members} chain across a span "
                f"{span:.3e} wider than tol {tol:.1e}")
        blocks.append((float(vals.mean()), tuple(sorted(members))))
    return EnergyBlockDecomposition(totals=totals, tol=tol, blocks=tuple(blocks))


# ---------------------------------------------------------------------------
# energy-conserving unitaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EnergyConservingUnitary:
    """Block-diagonal unitary on the joint space.

    Stored per block; the full matrix is assembled on demand and cached.
    Construction verifies each block is unitary and that the assembled
    matrix commutes with the diagonal total-energy matrix.
    """

    decomposition: EnergyBlockDecomposition
    block_matrices: tuple  # one square ndarray per block, matching sizes

    def __post_init__(self):
        mats = tuple(frozen_array(m) for m in self.block_matrices)
        object.__setattr__(self, "block_matrices", mats)
        blocks = self.decomposition.blocks
        if len(mats) != len(blocks):
            raise ValidationError("one matrix per block required")
        tol = DEFAULT_POLICY.structural
        for k, ((_, members), m) in enumerate(zip(blocks, mats)):
            if m.shape != (len(members), len(members)):
                raise ValidationError(f"block {k} matrix shape {m.shape} mismatches size {len(members)}")
            if unitarity_defect(m) > tol:
                raise ValidationError(f"block {k} is not unitary within {tol:.1e}")
        resid = commutator_with_totals(self.matrix(), self.decomposition.totals)
        if resid > DEFAULT_POLICY.channel_residual:
            raise ValidationError(
                f"assembled unitary fails [U, H_T] = 0: residual {resid:.3e}")

    def matrix(self) -> np.ndarray:
        cached = getattr(self, "_matrix", None)
        if cached is None:
            cached = assemble_block_diagonal(self.decomposition, self.block_matrices)
            object.__setattr__(self, "_matrix", cached)
        return cached


def assemble_block_diagonal(decomposition: EnergyBlockDecomposition, block_matrices) -> np.ndarray:
    u = np.zeros((decomposition.dim, decomposition.dim), dtype=complex)
    for (_, members), m in zip(decomposition.blocks, block_matrices):
        idx = np.asarray(members)
        u[np.ix_(idx, idx)] = m
    u.setflags(write=False)
    return u


def commutator_with_totals(u: np.ndarray, totals: np.ndarray) -> float:
    """Max-entry norm of U H_T - H_T U with H_T = diag(totals)."""
    ht = np.diag(np.asarray(totals, dtype=float)).astype(complex)
    return max_abs(u @ ht - ht @ u)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n x n unitary via QR of a complex Gaussian matrix.

    The R-diagonal phases are divided out so the distribution is exactly
    Haar rather than QR-convention dependent.
    """
    g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def sample_energy_conserving_unitary(decomposition: EnergyBlockDecomposition,
                                     seed: int) -> EnergyConservingUnitary:
    """Seed-deterministic block-Haar unitary: one Haar draw per block, in order."""
    rng = np.random.default_rng(seed)
    mats = [haar_unitary(len(members), rng) for _, members in decomposition.blocks]
    return EnergyConservingUnitary(decomposition=decomposition, block_matrices=tuple(mats))


def corrupted_global_unitary(decomposition: EnergyBlockDecomposition, seed: int,
                             angle: float = 0.35) -> np.ndarray:
    """Negative control: a unitary that deliberately mixes two different blocks.

    Starts from the conforming sample for `seed`, then applies a real rotation
    between a lowest-total and a highest-total composite state.  Those states
    carry different system indices (the system spectrum is strictly
    increasing), so the thermal-population transfer between them survives the
    bath trace and Gibbs preservation must visibly fail.  Returned as a raw
    matrix: it cannot satisfy the EnergyConservingUnitary contract by design.
    """
    if len(decomposition.blocks) < 2:
        raise ValidationError("need at least two blocks to corrupt across")
    u = np.array(sample_energy_conserving_unitary(decomposition, seed).matrix())
    a = decomposition.blocks[0][1][0]
    b = decomposition.blocks[-1][1][0]
    rot = np.eye(decomposition.dim, dtype=complex)
    rot[a, a] = rot[b, b] = np.cos(angle)
    rot[a, b] = -np.sin(angle)
    rot[b, a] = np.sin(angle)
    return rot @ u


# ---------------------------------------------------------------------------
# the channel
# ---------------------------------------------------------------------------

def global_channel(u_matrix: np.ndarray, m_s: np.ndarray, tau_b: DensityMatrix,
                   index_map: CompositeIndexMap) -> np.ndarray:
    """Tr_B[ U (m (x) tau_B) U^dag ] for an arbitrary system matrix m.

    Raw-matrix workhorse shared by the validated channel, the negative
    controls, and the dyad helpers.
    """
    joint = np.kron(np.asarray(m_s, dtype=complex), tau_b.entries)
    out = u_matrix @ joint @ u_matrix.conj().T
    d1, d2 = index_map.d1, index_map.d2
    return np.einsum("irjr->ij", out.reshape(d1, d2, d1, d2))


def apply_channel(u: EnergyConservingUnitary, rho_s: DensityMatrix, tau_b: DensityMatrix,
                  policy: NumericPolicy = DEFAULT_POLICY) -> DensityMatrix:
    """Thermal channel Phi(rho) = Tr_B[U (rho (x) tau_B) U^dag]."""
    d = u.decomposition.dim
    if rho_s.dim * tau_b.dim != d:
        raise ValidationError("system and bath dimensions do not match the unitary")
    offdiag = tau_b.entries - np.diag(np.diag(tau_b.entries))
    if max_abs(offdiag) > policy.structural:
        raise ValidationError("bath state must be diagonal in the bath energy basis")
    index_map = CompositeIndexMap(d1=rho_s.dim, d2=tau_b.dim)
    joint = tensor_product(rho_s, tau_b, policy)
    out = u.matrix() @ joint.entries @ u.matrix().conj().T
    return partial_trace_bath(DensityMatrix(dim=d, entries=out), index_map)


def check_gibbs_preserving(u: EnergyConservingUnitary, hs: HamiltonianSpec,
                           hb: HamiltonianSpec, beta: float,
                           policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """Max-entry residual |Phi(tau_S) - tau_S|; conforming unitaries give ~0."""
    return gibbs_residual(u.matrix(), hs, hb, beta, policy)


def gibbs_residual(u_matrix: np.ndarray, hs: HamiltonianSpec, hb: HamiltonianSpec,
                   beta: float, policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """Same residual for a raw joint unitary (usable on corrupted controls)."""
    tau_s = gibbs_state(hs, beta, policy)
    tau_b = gibbs_state(hb, beta, policy)
    index_map = CompositeIndexMap(d1=hs.dim, d2=hb.dim)
    out = global_channel(u_matrix, tau_s.entries, tau_b, index_map)
    return max_abs(out - tau_s.entries)


# ---------------------------------------------------------------------------
# entrywise channel coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChannelCoefficients:
    """Entrywise action of the channel on a gap-nondegenerate system.

    damping[i, j]    -- factor multiplying the coherence |i><j|  (i != j)
    transition[i, j] -- population transfer probability i -> j

    Internal consistency is enforced at construction: damping is conjugate
    symmetric, its diagonal equals the transition diagonal, |damping|^2 is
    bounded by the corresponding survival products, rows of transition are
    stochastic.
    """

    damping: np.ndarray
    transition: np.ndarray
    system_energies: np.ndarray

    def __post_init__(self):
        lam = frozen_array(self.damping)
        tr = frozen_array(self.transition, dtype=float)
        en = frozen_array(self.system_energies, dtype=float)
        object.__setattr__(self, "damping", lam)
        object.__setattr__(self, "transition", tr)
        object.__setattr__(self, "system_energies", en)
        d = en.size
        if lam.shape != (d, d) or tr.shape != (d, d):
            raise ValidationError("coefficient matrices must be d x d")
        tol = DEFAULT_POLICY.channel_residual
        if hermiticity_defect(lam) > tol:
            raise ValidationError("damping matrix is not conjugate symmetric")
        if max_abs(np.diag(lam) - np.diag(tr)) > tol:
            raise ValidationError("damping diagonal must equal survival probabilities")
        if np.min(tr) < -tol or np.max(tr) > 1 + tol:
            raise ValidationError("transition probabilities outside [0, 1]")
        if max_abs(tr.sum(axis=1) - 1.0) > tol:
            raise ValidationError("transition rows must sum to one")
        surv = np.real(np.diag(lam))
        cs = np.abs(lam) ** 2 - np.outer(surv, surv)
        if float(cs.max()) > tol:
            raise ValidationError("|damping|^2 exceeds survival product (Cauchy-Schwarz)")

    @property
    def dim(self) -> int:
        return int(self.system_energies.size)


def extract_channel_coefficients(u: EnergyConservingUnitary, tau_b: DensityMatrix,
                                 hs: HamiltonianSpec, hb: HamiltonianSpec,
                                 policy: NumericPolicy = DEFAULT_POLICY) -> ChannelCoefficients:
    """Read damping/transition coefficients off the joint unitary.

    Requires a gap-nondegenerate system spectrum (checked).  Bath levels are
    matched by energy within the grouping tolerance, so repeated bath levels
    are summed over rather than silently dropped.
    """
    bohr = check_bohr_nondegenerate(hs.energies, policy.grouping)
    if not bohr.ok:
        raise ValidationError(
            f"system spectrum not gap-nondegenerate: equal levels {bohr.equal_energy_pairs}, "
            f"clashing gaps {bohr.clashing_gap_pairs}")
    index_map = CompositeIndexMap(d1=hs.dim, d2=hb.dim)
    if index_map.dim != u.decomposition.dim:
        raise ValidationError("unitary dimension does not match system x bath")
    um = u.matrix()
    p_bath = tau_b.populations()
    eb = hb.energies
    d1, d2 = hs.dim, hb.dim

    def matching_levels(value: float):
        return [r for r in range(d2) if abs(eb[r] - value) <= policy.grouping]

    # amp[i, r, r'] = <i,r'|U|i,r> for E_r' = E_r, zero otherwise; the same
    # arrival level r' must pair up in both factors of the damping sum.
    amp = np.zeros((d1, d2, d2), dtype=complex)
    for i in range(d1):
        for r in range(d2):
            col = index_map.flat(i, r)
            for rp in matching_levels(eb[r]):
                amp[i, r, rp] = um[index_map.flat(i, rp), col]
    lam = np.einsum("r,irs,jrs->ij", p_bath, amp, amp.conj())

    trans = np.zeros((d1, d1))
    for i in range(d1):
        for j in range(d1):
            for r in range(d2):
                target = eb[r] + hs.energies[i] - hs.energies[j]
                for rp in matching_levels(target):
                    trans[i, j] += p_bath[r] * abs(um[index_map.flat(j, rp), index_map.flat(i, r)]) ** 2
    return ChannelCoefficients(damping=lam, transition=trans, system_energies=hs.energies)


def dyad_image_from_coefficients(coeffs: ChannelCoefficients, i: int, j: int) -> np.ndarray:
    """Channel output of |i><j| reconstructed from the entrywise coefficients."""
    d = coeffs.dim
    out = np.zeros((d, d), dtype=complex)
    if i == j:
        out[np.diag_indices(d)] = coeffs.transition[i, :]
    else:
        out[i, j] = coeffs.damping[i, j]
    return out


def channel_on_dyad(u: EnergyConservingUnitary, tau_b: DensityMatrix,
                    v_i: np.ndarray, v_j: np.ndarray,
                    policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Phi(v_i v_j^dag) by linearity over genuine states.

    The dyad is split into the two Hermitian combinations v_i v_j^dag +
    v_j v_i^dag and i(v_i v_j^dag - v_j v_i^dag), each realized as a
    difference of pure states, so every channel application goes through
    the validated DensityMatrix path.
    """
    d = u.decomposition.dim
    d1 = np.asarray(v_i).size
    if d % d1 != 0:
        raise ValidationError("system vector does not divide the joint dimension")

    def pure_image(psi: np.ndarray) -> np.ndarray:
        norm2 = float(np.vdot(psi, psi).real)
        state = DensityMatrix(dim=d1, entries=np.outer(psi, psi.conj()) / norm2)
        return norm2 * apply_channel(u, state, tau_b, policy).entries

    v_i = np.asarray(v_i, dtype=complex)
    v_j = np.asarray(v_j, dtype=complex)
    if np.array_equal(v_i, v_j):
        return pure_image(v_i)
    herm = (pure_image(v_i + v_j) - pure_image(v_i - v_j)) / 2.0
    anti = (pure_image(v_i - 1j * v_j) - pure_image(v_i + 1j * v_j)) / 2.0
    return (herm - 1j * anti) / 2.0
