"""First-order transformation laws for the thermal channel under H -> H + eps V.

For a gap-nondegenerate system the unperturbed channel acts entrywise with
damping factors L_ij and transition probabilities T(i->j).  Expanding the
perturbed eigenvectors to first order and pushing them through the channel
predicts, in the primed basis and up to O(eps^2):

  off-diagonal dyad (i', j'):
      L_ij [ E_ij - eps (sum_{k!=i} c'_ki E_kj + sum_{l!=j} conj(c'_lj) E_il) ]
      + eps sum_{l!=j} conj(c_lj) * image(|i><l|)
      + eps sum_{k!=i} c_ki      * image(|k><j|)

  diagonal dyad (i', i'):
      sum_j T(i->j) [ E_jj - eps back-rotation around j ]
      + eps sum_{k!=i} ( L_ik conj(c_ki) E_ik + L_ki c_ki E_ki )

with c_ki = <k|V|i>/(E_i - E_k) and primed analogues c'.  Two forms are
provided.  The default ("derived") treats the index-collision terms l = i
and k = j by the full diagonal law, under which image(|i><i|) spreads over
all populations; this is what the channel actually does, and the residual
against the exact map is O(eps^2).  The "literal" form instead keeps a bare
L_ii / L_jj weight on those terms (and, in the diagonal law, pairs each
matrix element with the transposed dyad).  Whenever the bath induces real
population transfer between coupled levels the literal off-diagonal form is
first-order inaccurate, which the test suite demonstrates rather than hides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import DEFAULT_POLICY, NumericPolicy, ValidationError, frozen_array
from .perturb import FirstOrderBasis, exact_perturbed_spec, to_primed_basis
from .spectral import DensityMatrix
from .thermal import ChannelCoefficients, EnergyConservingUnitary, apply_channel, channel_on_dyad


@dataclass(frozen=True, eq=False)
class FirstOrderPrediction:
    """Predicted channel output of a primed dyad, as a matrix of primed-basis
    coefficients, truncated at first order in epsilon."""

    i: int
    j: int
    epsilon: float
    literal_form: bool
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", frozen_array(self.matrix))


def _check_same_source(coeffs: ChannelCoefficients, basis: FirstOrderBasis):
    if not np.array_equal(coeffs.system_energies, basis.setup.base.energies):
        raise ValidationError(
            "channel coefficients and perturbed basis come from different system spectra")


def _primed_coefficients(basis: FirstOrderBasis, first_order_energies: bool,
                         policy: NumericPolicy) -> np.ndarray:
    """c'[k, i] = <k'|V|i'>/(E'_i - E'_k); exact primed energies by default."""
    me = basis.vectors.conj().T @ basis.setup.hprime @ basis.vectors
    if first_order_energies:
        en = basis.primed_energies
    else:
        en = exact_perturbed_spec(basis.setup).energies
    d = en.size
    off = ~np.eye(d, dtype=bool)
    denom = np.subtract.outer(en, en)  # [k, i] = E'_k - E'_i
    if d > 1 and float(np.abs(denom[off]).min()) <= policy.gap_guard:
        raise ValidationError("perturbed spectrum has a level gap at or below the guard")
    cp = np.zeros((d, d), dtype=complex)
    cp[off] = me[off] / (-denom[off])
    return cp


def predict_offdiagonal(i: int, j: int, coeffs: ChannelCoefficients, basis: FirstOrderBasis,
                        literal_form: bool = False, first_order_energies: bool = False,
                        policy: NumericPolicy = DEFAULT_POLICY) -> FirstOrderPrediction:
    """First-order image of the primed dyad |i'><j'|, i != j."""
    _check_same_source(coeffs, basis)
    d = coeffs.dim
    if i == j or not (0 <= i < d and 0 <= j < d):
        raise ValidationError(f"need two distinct system levels, got ({i}, {j})")
    eps = basis.setup.epsilon
    lam = coeffs.damping
    trans = coeffs.transition
    c = basis.coefficients
    cp = _primed_coefficients(basis, first_order_energies, policy)

    m = np.zeros((d, d), dtype=complex)
    m[i, j] = lam[i, j]
    for k in range(d):
        if k != i:
            m[k, j] -= eps * lam[i, j] * cp[k, i]
    for l in range(d):
        if l != j:
            m[i, l] -= eps * lam[i, j] * np.conj(cp[l, j])
    # channel image of the first-order cross terms of the input dyad
    for l in range(d):
        if l == j:
            continue
        w = eps * np.conj(c[l, j])  # <j|V|l>/(E_j - E_l)
        if l == i and not literal_form:
            m[np.diag_indices(d)] += w * trans[i, :]
        else:
            m[i, l] += w * lam[i, l]
    for k in range(d):
        if k == i:
            continue
        w = eps * c[k, i]  # <k|V|i>/(E_i - E_k)
        if k == j and not literal_form:
            m[np.diag_indices(d)] += w * trans[j, :]
        else:
            m[k, j] += w * lam[k, j]
    return FirstOrderPrediction(i=i, j=j, epsilon=eps, literal_form=literal_form, matrix=m)


def predict_diagonal(i: int, coeffs: ChannelCoefficients, basis: FirstOrderBasis,
                     literal_form: bool = False, first_order_energies: bool = False,
                     policy: NumericPolicy = DEFAULT_POLICY) -> FirstOrderPrediction:
    """First-order image of the primed dyad |i'><i'|."""
    _check_same_source(coeffs, basis)
    d = coeffs.dim
    if not 0 <= i < d:
        raise ValidationError(f"system level {i} outside dimension {d}")
    eps = basis.setup.epsilon
    lam = coeffs.damping
    trans = coeffs.transition
    c = basis.coefficients
    cp = _primed_coefficients(basis, first_order_energies, policy)

    m = np.zeros((d, d), dtype=complex)
    for j in range(d):
        m[j, j] = trans[i, j]
        for k in range(d):
            if k == j:
                continue
            if literal_form:
                m[j, k] -= eps * trans[i, j] * cp[k, j]
                m[k, j] -= eps * trans[i, j] * np.conj(cp[k, j])
            else:
                m[k, j] -= eps * trans[i, j] * cp[k, j]
                m[j, k] -= eps * trans[i, j] * np.conj(cp[k, j])
    if literal_form:
        # matrix elements between primed vectors over unperturbed denominators,
        # paired exactly as typeset
        me = basis.vectors.conj().T @ basis.setup.hprime @ basis.vectors
        en = basis.setup.base.energies
        for k in range(d):
            if k == i:
                continue
            w = eps / (en[i] - en[k])
            m[i, k] += w * lam[i, k] * me[k, i]
            m[k, i] += w * lam[k, i] * np.conj(me[k, i])
    else:
        for k in range(d):
            if k == i:
                continue
            m[i, k] += eps * lam[i, k] * np.conj(c[k, i])
            m[k, i] += eps * lam[k, i] * c[k, i]
    return FirstOrderPrediction(i=i, j=i, epsilon=eps, literal_form=literal_form, matrix=m)


def predict_element(i: int, j: int, coeffs: ChannelCoefficients, basis: FirstOrderBasis,
                    **kwargs) -> FirstOrderPrediction:
    if i == j:
        return predict_diagonal(i, coeffs, basis, **kwargs)
    return predict_offdiagonal(i, j, coeffs, basis, **kwargs)


def exact_dyad_image(u: EnergyConservingUnitary, element: tuple[int, int],
                     basis: FirstOrderBasis, tau_b: DensityMatrix,
                     policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Brute-force channel output of the primed dyad, in primed coordinates.

    The dyad is built from the truncated first-order vectors, pushed through
    the channel by linearity over genuine states, and the result expressed
    in the primed basis.  No expansion in epsilon anywhere: this is the
    reference the predictions are judged against.
    """
    i, j = element
    v_i = basis.vectors[:, i]
    v_j = basis.vectors[:, j]
    out = channel_on_dyad(u, tau_b, v_i, v_j, policy)
    return to_primed_basis(out, basis)


def combine_predictions(rho_primed: np.ndarray, coeffs: ChannelCoefficients,
                        basis: FirstOrderBasis, **kwargs) -> np.ndarray:
    """Image of a state given by primed-basis coefficients, by linearity."""
    rho_primed = np.asarray(rho_primed, dtype=complex)
    d = coeffs.dim
    out = np.zeros((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            if rho_primed[i, j] != 0:
                out += rho_primed[i, j] * predict_element(i, j, coeffs, basis, **kwargs).matrix
    return out


def l1_coherence(m: np.ndarray) -> float:
    """Sum of off-diagonal entry magnitudes."""
    m = np.asarray(m)
    return float(np.sum(np.abs(m - np.diag(np.diag(m)))))


def coherence_generated(rho_diag: DensityMatrix, u: EnergyConservingUnitary,
                        basis: FirstOrderBasis, tau_b: DensityMatrix,
                        policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """Coherence the channel writes into a state that starts diagonal in the
    perturbed energy eigenbasis.

    Measured as the l1 off-diagonal weight of the output expressed in the
    exact perturbed eigenbasis.  The input must carry no such coherence to
    begin with (checked); at eps = 0, or for a perturbation that commutes
    with the base Hamiltonian, the result stays at numerical zero.
    """
    w = exact_perturbed_spec(basis.setup).eigenbasis
    rep_in = w.conj().T @ rho_diag.entries @ w
    if l1_coherence(rep_in) > 1e-8:
        raise ValidationError("input state is not diagonal in the perturbed eigenbasis")
    out = apply_channel(u, rho_diag, tau_b, policy)
    return l1_coherence(w.conj().T @ out.entries @ w)
