"""Channel-level behavior: block structure, sampled unitaries, the thermal
channel itself, and the entrywise coefficient extraction.

The central oracle here is a hand-built rotation inside the single
equal-energy block of the resonant qubit pair.  For a rotation by phi in
that block the damping and transition coefficients follow in closed form:

    lambda_01 = cos(phi)                 (independent of temperature)
    P(0 -> 1) = q1 * sin(phi)^2          q_r = bath Gibbs weights
    P(1 -> 0) = q0 * sin(phi)^2

which pins signs, conjugation, and which bath weight multiplies which jump.
"""

import numpy as np
import pytest

import thermops as t
from thermops import (
    CompositeIndexMap,
    DensityMatrix,
    EnergyConservingUnitary,
    HamiltonianSpec,
    ValidationError,
)
from thermops.thermal import commutator_with_totals, global_channel

BETA = 1.0
Q0 = 0.7310585786300049  # 1/(1+e^-1)
Q1 = 0.2689414213699951  # e^-1/(1+e^-1)


def resonant_pair():
    hs = HamiltonianSpec.diagonal([0.0, 1.0])
    hb = HamiltonianSpec.diagonal([0.0, 1.0])
    totals = t.total_energies(hs, hb, CompositeIndexMap(d1=2, d2=2))
    return hs, hb, totals


def rotation_unitary(phi, alpha=0.0):
    """Conforming unitary that rotates the middle block by phi with phase alpha."""
    _, _, totals = resonant_pair()
    dec = t.decompose_energy_blocks(totals)
    c, s = np.cos(phi), np.sin(phi)
    rot = np.array([[c * np.exp(1j * alpha), -s],
                    [s, c * np.exp(-1j * alpha)]])
    return EnergyConservingUnitary(dec, [np.eye(1, dtype=complex), rot,
                                         np.eye(1, dtype=complex)])


# ---------------------------------------------------------------------------
# block decomposition
# ---------------------------------------------------------------------------

def test_decompose_resonant_pair_blocks():
    _, _, totals = resonant_pair()
    dec = t.decompose_energy_blocks(totals)
    assert dec.block_sizes() == (1, 2, 1)
    assert dec.blocks[0][1] == (0,)
    assert dec.blocks[1][1] == (1, 2)   # (0,1) and (1,0) share total energy 1
    assert dec.blocks[2][1] == (3,)


def test_decompose_qutrit_ladder_blocks():
    hs = HamiltonianSpec.diagonal([0.0, 1.0, 2.5])
    hb = HamiltonianSpec.diagonal([0.0, 1.0, 2.0, 3.0])
    totals = t.total_energies(hs, hb, CompositeIndexMap(d1=3, d2=4))
    dec = t.decompose_energy_blocks(totals)
    assert dec.block_sizes() == (1, 2, 2, 1, 2, 1, 1, 1, 1)
    values = [v for v, _ in dec.blocks]
    np.testing.assert_allclose(values, [0.0, 1.0, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.5])


def test_decompose_fractional_ladder_blocks():
    # bath levels {0, 1, 2.5, 3.5} against the qutrit: one three-member block
    hs = HamiltonianSpec.diagonal([0.0, 1.0, 2.5])
    hb = HamiltonianSpec.diagonal([0.0, 1.0, 2.5, 3.5])
    totals = t.total_energies(hs, hb, CompositeIndexMap(d1=3, d2=4))
    dec = t.decompose_energy_blocks(totals)
    assert dec.block_sizes() == (1, 2, 1, 2, 3, 1, 1, 1)
    values = [v for v, _ in dec.blocks]
    np.testing.assert_allclose(values, [0.0, 1.0, 2.0, 2.5, 3.5, 4.5, 5.0, 6.0])
    assert dec.blocks[4][1] == (3, 6, 9)  # (0,3), (1,2), (2,1) all at total 3.5


def test_all_distinct_totals_force_diagonal_unitaries():
    # strictly off-resonant pair: every block is a 1x1, so any conforming
    # unitary is diagonal and the induced channel is pure dephasing
    hs = HamiltonianSpec.diagonal([0.0, 1.0])
    hb = HamiltonianSpec.diagonal([0.0, 0.45, 1.7])
    totals = t.total_energies(hs, hb, CompositeIndexMap(d1=2, d2=3))
    dec = t.decompose_energy_blocks(totals)
    assert dec.block_sizes() == (1,) * 6
    u = t.sample_energy_conserving_unitary(dec, 3).matrix()
    off = u - np.diag(np.diag(u))
    assert np.max(np.abs(off)) == 0.0
    np.testing.assert_allclose(np.abs(np.diag(u)), np.ones(6), atol=1e-14)


def test_decompose_rejects_chained_near_degeneracy():
    # pairwise-close values whose overall span exceeds the tolerance have no
    # unambiguous grouping
    totals = [0.0, 0.8e-9, 1.6e-9, 5.0]
    with pytest.raises(ValidationError, match="ambiguous"):
        t.decompose_energy_blocks(totals, tol=1e-9)


def test_decompose_partition_covers_every_index():
    rng = np.random.default_rng(11)
    totals = rng.uniform(0.0, 3.0, size=12)
    dec = t.decompose_energy_blocks(totals)
    seen = sorted(i for _, idx in dec.blocks for i in idx)
    assert seen == list(range(12))


# ---------------------------------------------------------------------------
# conforming unitaries
# ---------------------------------------------------------------------------

def test_haar_unitary_is_unitary_and_seeded():
    u1 = t.haar_unitary(5, np.random.default_rng(4))
    u2 = t.haar_unitary(5, np.random.default_rng(4))
    u3 = t.haar_unitary(5, np.random.default_rng(5))
    assert np.max(np.abs(u1.conj().T @ u1 - np.eye(5))) < 1e-13
    np.testing.assert_array_equal(u1, u2)
    assert np.max(np.abs(u1 - u3)) > 1e-3


def test_sampled_unitary_commutes_with_totals():
    _, _, totals = resonant_pair()
    dec = t.decompose_energy_blocks(totals)
    u = t.sample_energy_conserving_unitary(dec, 0)
    assert commutator_with_totals(u.matrix(), np.asarray(totals)) < 1e-12
    again = t.sample_energy_conserving_unitary(dec, 0)
    np.testing.assert_array_equal(u.matrix(), again.matrix())


def test_sampled_unitaries_conform_across_many_seeds():
    _, _, totals = resonant_pair()
    dec = t.decompose_energy_blocks(totals)
    eye = np.eye(4)
    for seed in range(100):
        u = t.sample_energy_conserving_unitary(dec, seed).matrix()
        assert np.max(np.abs(u.conj().T @ u - eye)) < 1e-13
        assert commutator_with_totals(u, np.asarray(totals)) < 1e-12
    assert commutator_with_totals(eye.astype(complex), np.asarray(totals)) == 0.0


def test_block_unitary_rejects_nonunitary_block():
    _, _, totals = resonant_pair()
    dec = t.decompose_energy_blocks(totals)
    bad = np.array([[1.0, 0.1], [0.0, 1.0]], dtype=complex)
    with pytest.raises(ValidationError):
        EnergyConservingUnitary(dec, [np.eye(1, dtype=complex), bad,
                                      np.eye(1, dtype=complex)])


def test_corrupted_unitary_breaks_commutation():
    _, _, totals = resonant_pair()
    dec = t.decompose_energy_blocks(totals)
    raw = t.corrupted_global_unitary(dec, seed=0)
    assert np.max(np.abs(raw.conj().T @ raw - np.eye(4))) < 1e-12  # still unitary
    assert commutator_with_totals(raw, np.asarray(totals)) > 1e-2


# ---------------------------------------------------------------------------
# the channel
# ---------------------------------------------------------------------------

def test_channel_output_is_valid_state():
    hs, hb, totals = resonant_pair()
    dec = t.decompose_energy_blocks(totals)
    tau_b = t.gibbs_state(hb, BETA)
    rng = np.random.default_rng(2)
    for seed in range(5):
        u = t.sample_energy_conserving_unitary(dec, seed)
        rho = t.random_density_matrix(2, rng)
        out = t.apply_channel(u, rho, tau_b)
        assert isinstance(out, DensityMatrix)  # constructor re-validates everything


def test_channel_matches_independent_dense_computation():
    # oracle coded from scratch: embed, conjugate, trace out with loops
    hs, hb, totals = resonant_pair()
    dec = t.decompose_energy_blocks(totals)
    u = t.sample_energy_conserving_unitary(dec, 7).matrix()
    tau_b = t.gibbs_state(hb, BETA)
    rho = DensityMatrix.from_entries([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    joint = u @ np.kron(rho.entries, tau_b.entries) @ u.conj().T
    expected = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            for r in range(2):
                expected[i, j] += joint[2 * i + r, 2 * j + r]
    out = t.apply_channel(t.sample_energy_conserving_unitary(dec, 7), rho, tau_b)
    np.testing.assert_allclose(out.entries, expected, atol=1e-14)


def test_channel_is_linear_in_the_state():
    hs, hb, totals = resonant_pair()
    dec = t.decompose_energy_blocks(totals)
    tau_b = t.gibbs_state(hb, BETA)
    u = t.sample_energy_conserving_unitary(dec, 4)
    rng = np.random.default_rng(21)
    r1, r2 = t.random_density_matrix(2, rng), t.random_density_matrix(2, rng)
    mixed = DensityMatrix.from_entries(0.25 * r1.entries + 0.75 * r2.entries)
    lhs = t.apply_channel(u, mixed, tau_b).entries
    rhs = (0.25 * t.apply_channel(u, r1, tau_b).entries
           + 0.75 * t.apply_channel(u, r2, tau_b).entries)
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)


def test_channel_preserves_diagonality():
    # exact thermal operations keep Bohr-nondegenerate diagonal states diagonal
    hs, hb, dec, tau_b = qutrit_setup()
    rho = DensityMatrix.from_entries(np.diag([0.5, 0.3, 0.2]).astype(complex))
    for seed in range(6):
        out = t.apply_channel(t.sample_energy_conserving_unitary(dec, seed), rho, tau_b)
        off = out.entries - np.diag(np.diag(out.entries))
        assert np.max(np.abs(off)) < 1e-13


def test_channel_preserves_thermal_state():
    hs, hb, totals = resonant_pair()
    dec = t.decompose_energy_blocks(totals)
    for seed in range(10):
        u = t.sample_energy_conserving_unitary(dec, seed)
        assert t.check_gibbs_preserving(u, hs, hb, BETA) < 1e-12


def test_corrupted_unitary_moves_thermal_state():
    hs, hb, totals = resonant_pair()
    dec = t.decompose_energy_blocks(totals)
    raw = t.corrupted_global_unitary(dec, seed=0)
    assert t.gibbs_residual(raw, hs, hb, BETA) > 1e-3


def test_channel_rejects_nondiagonal_bath_state():
    hs, hb, totals = resonant_pair()
    dec = t.decompose_energy_blocks(totals)
    u = t.sample_energy_conserving_unitary(dec, 0)
    coherent_bath = DensityMatrix.from_entries([[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(ValidationError):
        t.apply_channel(u, t.basis_state_density(2, 0), coherent_bath)


# ---------------------------------------------------------------------------
# entrywise coefficients: closed-form oracle
# ---------------------------------------------------------------------------

def test_damping_coefficient_of_block_rotation():
    hs, hb, _ = resonant_pair()
    tau_b = t.gibbs_state(hb, BETA)
    phi = 0.3
    coeffs = t.extract_channel_coefficients(rotation_unitary(phi), tau_b, hs, hb)
    # both bath levels contribute cos(phi) once, weighted q0 + q1 = 1
    np.testing.assert_allclose(coeffs.damping[0, 1], np.cos(phi), atol=1e-14)
    np.testing.assert_allclose(coeffs.damping[1, 0], np.cos(phi), atol=1e-14)


def test_damping_coefficient_tracks_block_phase():
    hs, hb, _ = resonant_pair()
    tau_b = t.gibbs_state(hb, BETA)
    phi, alpha = 0.3, 0.7
    coeffs = t.extract_channel_coefficients(rotation_unitary(phi, alpha), tau_b, hs, hb)
    np.testing.assert_allclose(coeffs.damping[0, 1],
                               np.cos(phi) * np.exp(1j * alpha), atol=1e-14)
    np.testing.assert_allclose(coeffs.damping[1, 0],
                               np.conj(coeffs.damping[0, 1]), atol=1e-15)


def test_transition_probabilities_of_block_rotation():
    hs, hb, _ = resonant_pair()
    tau_b = t.gibbs_state(hb, BETA)
    phi = 0.3
    p = t.extract_channel_coefficients(rotation_unitary(phi), tau_b, hs, hb).transition
    s2 = np.sin(phi) ** 2
    # excitation needs a bath quantum (weight q1), decay dumps one (weight q0)
    np.testing.assert_allclose(p[0, 1], Q1 * s2, atol=1e-14)
    np.testing.assert_allclose(p[1, 0], Q0 * s2, atol=1e-14)
    np.testing.assert_allclose(p.sum(axis=1), [1.0, 1.0], atol=1e-14)


def test_detailed_balance_of_block_rotation():
    # q1/q0 = e^-beta is exactly the Gibbs ratio of the system levels, so the
    # extracted transition matrix is stationary for the thermal populations
    hs, hb, _ = resonant_pair()
    tau_b = t.gibbs_state(hb, BETA)
    p = t.extract_channel_coefficients(rotation_unitary(1.1), tau_b, hs, hb).transition
    g = t.gibbs_state(hs, BETA).populations()
    np.testing.assert_allclose(g @ p, g, atol=1e-14)


# ---------------------------------------------------------------------------
# entrywise coefficients: property sweeps
# ---------------------------------------------------------------------------

def qutrit_setup():
    hs = HamiltonianSpec.diagonal([0.0, 1.0, 2.5])
    hb = HamiltonianSpec.diagonal([0.0, 1.0, 2.0, 3.0])
    totals = t.total_energies(hs, hb, CompositeIndexMap(d1=3, d2=4))
    return hs, hb, t.decompose_energy_blocks(totals), t.gibbs_state(hb, BETA)


def test_coefficients_reconstruct_the_channel_on_dyads():
    hs, hb, dec, tau_b = qutrit_setup()
    eye = np.eye(3, dtype=complex)
    for seed in range(4):
        u = t.sample_energy_conserving_unitary(dec, seed)
        coeffs = t.extract_channel_coefficients(u, tau_b, hs, hb)
        for i in range(3):
            for j in range(3):
                exact = t.channel_on_dyad(u, tau_b, eye[:, i], eye[:, j])
                rebuilt = t.dyad_image_from_coefficients(coeffs, i, j)
                assert np.max(np.abs(exact - rebuilt)) < 1e-12


def test_entrywise_assembly_equals_channel_on_full_states():
    # Phi(rho) = sum_ij rho_ij Phi(|i><j|): the channel never mixes entries
    hs, hb, dec, tau_b = qutrit_setup()
    rng = np.random.default_rng(9)
    for seed in range(3):
        u = t.sample_energy_conserving_unitary(dec, seed)
        coeffs = t.extract_channel_coefficients(u, tau_b, hs, hb)
        rho = t.random_density_matrix(3, rng)
        assembled = np.zeros((3, 3), dtype=complex)
        for i in range(3):
            for j in range(3):
                assembled += rho.entries[i, j] * t.dyad_image_from_coefficients(coeffs, i, j)
        direct = t.apply_channel(u, rho, tau_b)
        assert np.max(np.abs(assembled - direct.entries)) < 1e-12


def test_damping_dominated_by_survival_probabilities():
    # |lambda_ij|^2 <= P(i->i) P(j->j) for every sampled channel
    hs, hb, dec, tau_b = qutrit_setup()
    for seed in range(8):
        coeffs = t.extract_channel_coefficients(
            t.sample_energy_conserving_unitary(dec, seed), tau_b, hs, hb)
        lam, p = coeffs.damping, coeffs.transition
        for i in range(3):
            for j in range(3):
                assert abs(lam[i, j]) ** 2 <= p[i, i] * p[j, j] + 1e-12


def test_transition_matrix_fixes_thermal_populations():
    hs, hb, dec, tau_b = qutrit_setup()
    g = t.gibbs_state(hs, BETA).populations()
    for seed in range(8):
        coeffs = t.extract_channel_coefficients(
            t.sample_energy_conserving_unitary(dec, seed), tau_b, hs, hb)
        assert np.max(np.abs(g @ coeffs.transition - g)) < 1e-12


def test_extraction_handles_degenerate_bath_levels():
    # two bath levels share an energy; arrival amplitudes must be summed per
    # matching level inside the coefficient formula, not across levels
    hs = HamiltonianSpec.diagonal([0.0, 1.0])
    hb = HamiltonianSpec.diagonal([0.0, 0.0, 1.0])
    totals = t.total_energies(hs, hb, CompositeIndexMap(d1=2, d2=3))
    dec = t.decompose_energy_blocks(totals)
    tau_b = t.gibbs_state(hb, BETA)
    eye = np.eye(2, dtype=complex)
    for seed in range(6):
        u = t.sample_energy_conserving_unitary(dec, seed)
        coeffs = t.extract_channel_coefficients(u, tau_b, hs, hb)
        for i in range(2):
            for j in range(2):
                exact = t.channel_on_dyad(u, tau_b, eye[:, i], eye[:, j])
                rebuilt = t.dyad_image_from_coefficients(coeffs, i, j)
                assert np.max(np.abs(exact - rebuilt)) < 1e-12


def test_extraction_requires_nondegenerate_system_gaps():
    hs = HamiltonianSpec.diagonal([0.0, 1.0, 2.0])  # equispaced: gaps clash
    hb = HamiltonianSpec.diagonal([0.0, 1.0])
    totals = t.total_energies(hs, hb, CompositeIndexMap(d1=3, d2=2))
    dec = t.decompose_energy_blocks(totals)
    u = t.sample_energy_conserving_unitary(dec, 0)
    with pytest.raises(ValidationError):
        t.extract_channel_coefficients(u, t.gibbs_state(hb, BETA), hs, hb)


def test_channel_on_dyad_diagonal_matches_basis_state():
    hs, hb, dec, tau_b = qutrit_setup()
    u = t.sample_energy_conserving_unitary(dec, 1)
    eye = np.eye(3, dtype=complex)
    image = t.channel_on_dyad(u, tau_b, eye[:, 2], eye[:, 2])
    direct = t.apply_channel(u, t.basis_state_density(3, 2), tau_b)
    np.testing.assert_allclose(image, direct.entries, atol=1e-13)
