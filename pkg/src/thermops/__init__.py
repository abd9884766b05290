"""Thermal operations on finite systems: exact entrywise channel laws,
their first-order continuation to a perturbed Hamiltonian, and work
extraction in the phase-unitary regime, with a scenario-driven harness."""

__version__ = "0.1.0"

from .numerics import DEFAULT_POLICY, NumericPolicy, SlopeFit, ValidationError, fit_loglog_slope
from .spectral import (
    BohrCheck,
    CompositeIndexMap,
    DensityMatrix,
    HamiltonianSpec,
    basis_state_density,
    check_bohr_nondegenerate,
    gibbs_state,
    partial_trace_bath,
    random_density_matrix,
    tensor_product,
    total_energies,
)
from .thermal import (
    ChannelCoefficients,
    EnergyBlockDecomposition,
    EnergyConservingUnitary,
    apply_channel,
    channel_on_dyad,
    check_gibbs_preserving,
    corrupted_global_unitary,
    decompose_energy_blocks,
    dyad_image_from_coefficients,
    extract_channel_coefficients,
    gibbs_residual,
    haar_unitary,
    sample_energy_conserving_unitary,
)
from .perturb import (
    FirstOrderBasis,
    PerturbationSetup,
    diagonal_state_in_perturbed_basis,
    exact_perturbed_spec,
    first_order_basis,
    from_primed_basis,
    to_primed_basis,
)
from .approx import (
    FirstOrderPrediction,
    coherence_generated,
    combine_predictions,
    exact_dyad_image,
    l1_coherence,
    predict_diagonal,
    predict_element,
    predict_offdiagonal,
)
from .ergotropy import (
    ErgotropyReport,
    ExtractionAmplitudes,
    PhaseUnitary,
    ergotropy,
    ergotropy_under_thermal_ops,
    extraction_amplitudes,
    passive_state,
    perturbed_ergotropy_bruteforce,
    perturbed_ergotropy_closed_form,
)
from .scenario import (
    Scenario,
    ScenarioDiagnostics,
    bundled_scenario_dir,
    load_bundled,
    load_scenario,
    validate_scenario,
)
from .runner import RunRecord, run_ergotropy, run_second_laws
from .acceptance import AcceptanceRun, CriterionResult, load_scenario_directory, run_acceptance

__all__ = [
    "AcceptanceRun",
    "BohrCheck",
    "ChannelCoefficients",
    "CompositeIndexMap",
    "CriterionResult",
    "DEFAULT_POLICY",
    "DensityMatrix",
    "EnergyBlockDecomposition",
    "EnergyConservingUnitary",
    "ErgotropyReport",
    "ExtractionAmplitudes",
    "FirstOrderBasis",
    "FirstOrderPrediction",
    "HamiltonianSpec",
    "NumericPolicy",
    "PerturbationSetup",
    "PhaseUnitary",
    "RunRecord",
    "Scenario",
    "ScenarioDiagnostics",
    "SlopeFit",
    "ValidationError",
    "apply_channel",
    "basis_state_density",
    "bundled_scenario_dir",
    "channel_on_dyad",
    "check_bohr_nondegenerate",
    "check_gibbs_preserving",
    "coherence_generated",
    "combine_predictions",
    "corrupted_global_unitary",
    "decompose_energy_blocks",
    "diagonal_state_in_perturbed_basis",
    "dyad_image_from_coefficients",
    "ergotropy",
    "ergotropy_under_thermal_ops",
    "exact_dyad_image",
    "exact_perturbed_spec",
    "extract_channel_coefficients",
    "extraction_amplitudes",
    "first_order_basis",
    "fit_loglog_slope",
    "from_primed_basis",
    "gibbs_residual",
    "gibbs_state",
    "haar_unitary",
    "l1_coherence",
    "load_bundled",
    "load_scenario",
    "load_scenario_directory",
    "partial_trace_bath",
    "passive_state",
    "perturbed_ergotropy_bruteforce",
    "perturbed_ergotropy_closed_form",
    "predict_diagonal",
    "predict_element",
    "predict_offdiagonal",
    "random_density_matrix",
    "run_acceptance",
    "run_ergotropy",
    "run_second_laws",
    "sample_energy_conserving_unitary",
    "tensor_product",
    "to_primed_basis",
    "total_energies",
    "validate_scenario",
]
