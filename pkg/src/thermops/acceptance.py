"""Release gate: the eight checks a build must pass.

Each criterion runs a fixed, seeded computation on the bundled scenarios and
reports one pass/fail line with the measured numbers.  The final criterion
repeats the whole battery and demands byte-identical canonical output, so
every value collected here must be a deterministic function of the scenario
files and seeds alone.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .approx import coherence_generated
from .ergotropy import (
    ergotropy_under_thermal_ops,
    extraction_amplitudes,
    perturbed_ergotropy_bruteforce,
    perturbed_ergotropy_closed_form,
)
from .numerics import DEFAULT_POLICY, NumericPolicy, ValidationError, fit_loglog_slope, max_abs
from .perturb import diagonal_state_in_perturbed_basis, exact_perturbed_spec, first_order_basis
from .runner import run_ergotropy, run_second_laws
from .scenario import Scenario, bundled_scenario_dir, load_scenario
from .spectral import gibbs_state, random_density_matrix
from .thermal import (
    channel_on_dyad,
    check_gibbs_preserving,
    corrupted_global_unitary,
    dyad_image_from_coefficients,
    extract_channel_coefficients,
    gibbs_residual,
    sample_energy_conserving_unitary,
)

WORKHORSE = "qubit_qubit_resonant"
QUTRIT = "qutrit_ladder"
DIAGONAL_CONTROL = "diagonal_hprime_control"
CORRUPTED_CONTROL = "corrupted_unitary_control"
BATTERY = "qubit_battery_offresonant"

REQUIRED_ROLES = (WORKHORSE, QUTRIT, DIAGONAL_CONTROL, CORRUPTED_CONTROL, BATTERY)

SWEEP_EPSILONS = (1e-2, 1e-3, 1e-4)
SWEEP_SEEDS = (0, 1, 2)


def load_scenario_directory(path=None) -> dict:
    """All scenarios in a directory, keyed by name (bundled set by default)."""
    base = Path(path) if path is not None else bundled_scenario_dir()
    files = sorted(base.glob("*.json"))
    if not files:
        raise ValidationError(f"no scenario files found in {base}")
    out: dict = {}
    for f in files:
        scenario = load_scenario(f)
        if scenario.name in out:
            raise ValidationError(f"duplicate scenario name {scenario.name!r} in {base}")
        out[scenario.name] = scenario
    return out


def _require_roles(scenarios: dict):
    missing = [name for name in REQUIRED_ROLES if name not in scenarios]
    if missing:
        raise ValidationError(
            "scenario directory is missing required entries: " + ", ".join(missing))


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if value is None or isinstance(value, str):
        return value
    raise TypeError(f"non-serializable value in criterion payload: {value!r}")


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str
    values: dict
    elapsed_seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.index}. {self.name}: {self.detail}"


def _result(index, name, passed, detail, values, started) -> CriterionResult:
    return CriterionResult(index=index, name=name, passed=bool(passed), detail=detail,
                           values=_jsonable(values),
                           elapsed_seconds=time.perf_counter() - started)


# ---------------------------------------------------------------------------
# criteria 1-7
# ---------------------------------------------------------------------------

def criterion_gibbs_preservation(scenarios: dict,
                                 policy: NumericPolicy = DEFAULT_POLICY) -> CriterionResult:
    """Sampled conforming unitaries fix the thermal state; the corrupted one does not."""
    started = time.perf_counter()
    scen = scenarios[WORKHORSE]
    dec = scen.decomposition(policy)
    hs, hb = scen.system(), scen.bath()
    worst = 0.0
    for seed in range(100):
        u = sample_energy_conserving_unitary(dec, seed)
        worst = max(worst, check_gibbs_preserving(u, hs, hb, scen.beta, policy))

    ctrl = scenarios[CORRUPTED_CONTROL]
    raw = corrupted_global_unitary(ctrl.decomposition(policy), seed=0)
    corrupted = gibbs_residual(raw, ctrl.system(), ctrl.bath(), ctrl.beta, policy)

    passed = worst <= policy.channel_residual and corrupted > 1e-3
    detail = (f"max residual {worst:.3e} over 100 draws (tol {policy.channel_residual:g}); "
              f"corrupted control {corrupted:.3e} (must exceed 1e-3)")
    return _result(1, "gibbs-preservation", passed, detail,
                   {"max_residual": worst, "corrupted_residual": corrupted,
                    "n_seeds": 100}, started)


def criterion_entrywise_laws(scenarios: dict,
                             policy: NumericPolicy = DEFAULT_POLICY) -> CriterionResult:
    """Extracted damping/transition coefficients reproduce the channel entrywise."""
    started = time.perf_counter()
    tol = policy.channel_residual
    worst_dyad = worst_rows = worst_stationary = 0.0
    for role in (WORKHORSE, QUTRIT):
        scen = scenarios[role]
        hs, hb = scen.system(), scen.bath()
        tau_b = scen.tau_b(policy)
        dec = scen.decomposition(policy)
        d = hs.dim
        gibbs_pops = gibbs_state(hs, scen.beta, policy).populations()
        eye = np.eye(d, dtype=complex)
        for seed in range(5):
            u = sample_energy_conserving_unitary(dec, seed)
            coeffs = extract_channel_coefficients(u, tau_b, hs, hb, policy)
            for i in range(d):
                for j in range(d):
                    exact = channel_on_dyad(u, tau_b, eye[:, i], eye[:, j], policy)
                    predicted = dyad_image_from_coefficients(coeffs, i, j)
                    worst_dyad = max(worst_dyad, max_abs(exact - predicted))
            worst_rows = max(worst_rows,
                             max_abs(coeffs.transition.sum(axis=1) - 1.0))
            worst_stationary = max(worst_stationary,
                                   max_abs(gibbs_pops @ coeffs.transition - gibbs_pops))

    passed = worst_dyad <= tol and worst_rows <= tol and worst_stationary <= tol
    detail = (f"dyad reconstruction {worst_dyad:.3e}, row sums {worst_rows:.3e}, "
              f"thermal stationarity {worst_stationary:.3e} (tol {tol:g})")
    return _result(2, "entrywise-channel-laws", passed, detail,
                   {"max_dyad_residual": worst_dyad, "max_row_sum_defect": worst_rows,
                    "max_stationarity_defect": worst_stationary}, started)


def criterion_law_slopes(scenarios: dict,
                         policy: NumericPolicy = DEFAULT_POLICY) -> CriterionResult:
    """Every matrix element of the first-order prediction converges at order >= 1.9."""
    started = time.perf_counter()
    min_slope = None
    n_fitted = n_vacuous = 0
    all_ok = True
    summaries = {}
    for role in (WORKHORSE, QUTRIT):
        record = run_second_laws(scenarios[role], seeds=SWEEP_SEEDS,
                                 epsilons=SWEEP_EPSILONS, policy=policy)
        s = record.summary
        all_ok = all_ok and s["slopes_ok"]
        n_fitted += s["n_fitted"]
        n_vacuous += s["n_vacuous"]
        if s["min_slope"] is not None:
            min_slope = s["min_slope"] if min_slope is None else min(min_slope, s["min_slope"])
        summaries[role] = {"min_slope": s["min_slope"], "n_fitted": s["n_fitted"],
                           "n_vacuous": s["n_vacuous"]}
    detail = (f"min element slope {min_slope:.3f} over {n_fitted} fits "
              f"({n_vacuous} vacuously exact), required {policy.min_slope:g}")
    return _result(3, "first-order-law-slopes", all_ok, detail,
                   {"min_slope": min_slope, "n_fitted": n_fitted,
                    "n_vacuous": n_vacuous, "per_scenario": summaries}, started)


def criterion_coherence_order(scenarios: dict,
                              policy: NumericPolicy = DEFAULT_POLICY) -> CriterionResult:
    """Coherence generated from a perturbed-diagonal input scales linearly."""
    started = time.perf_counter()

    def coherences(scen: Scenario, epsilons):
        hs = scen.system()
        tau_b = scen.tau_b(policy)
        u = sample_energy_conserving_unitary(scen.decomposition(policy), 0)
        pops = gibbs_state(hs, scen.beta, policy).populations()
        out = []
        for eps in epsilons:
            setup = scen.setup(eps)
            rho = diagonal_state_in_perturbed_basis(pops, setup)
            basis = first_order_basis(setup, policy)
            out.append(coherence_generated(rho, u, basis, tau_b, policy))
        return out

    values = coherences(scenarios[WORKHORSE], SWEEP_EPSILONS)
    fit = fit_loglog_slope(SWEEP_EPSILONS, values, policy.noise_floor)
    slope_ok = (not fit.vacuous) and abs(fit.slope - 1.0) <= 0.1

    zero_value = coherences(scenarios[WORKHORSE], (0.0,))[0]
    diag_value = max(coherences(scenarios[DIAGONAL_CONTROL], SWEEP_EPSILONS))
    controls_ok = zero_value <= policy.channel_residual and diag_value <= policy.channel_residual

    passed = slope_ok and controls_ok
    slope_text = "vacuous" if fit.vacuous else f"{fit.slope:.3f}"
    detail = (f"coherence slope {slope_text} (need 1.0 +/- 0.1); "
              f"unperturbed control {zero_value:.3e}, diagonal-coupling control "
              f"{diag_value:.3e} (tol {policy.channel_residual:g})")
    return _result(4, "coherence-generation-order", passed, detail,
                   {"slope": None if fit.vacuous else fit.slope,
                    "coherences": values, "zero_epsilon_coherence": zero_value,
                    "diagonal_control_coherence": diag_value}, started)


def criterion_phase_no_extraction(scenarios: dict,
                                  policy: NumericPolicy = DEFAULT_POLICY) -> CriterionResult:
    """No phase unitary extracts energy from the unperturbed battery."""
    started = time.perf_counter()
    scen = scenarios[BATTERY]
    hs, hb = scen.system(), scen.bath()
    rng = np.random.default_rng(0)
    worst = 0.0
    for k in range(20):
        rho = random_density_matrix(hs.dim, rng)
        worst = max(worst, abs(ergotropy_under_thermal_ops(
            rho, hs, hb, scen.beta, samples=50, seed=k, policy=policy)))
    passed = worst <= 1e-12
    detail = f"max |extracted energy| {worst:.3e} over 20 states x 50 phase draws (tol 1e-12)"
    return _result(5, "phase-unitary-no-extraction", passed, detail,
                   {"max_extracted": worst, "n_states": 20, "n_samples": 50}, started)


def criterion_extraction_gap(scenarios: dict,
                             policy: NumericPolicy = DEFAULT_POLICY) -> CriterionResult:
    """Brute-force optimal extraction matches the closed form to second order."""
    started = time.perf_counter()
    scen = scenarios[BATTERY]
    record = run_ergotropy(scen, seeds=(0,), epsilons=(0.0,) + SWEEP_EPSILONS,
                           restarts=32, policy=policy)
    slope = record.summary["gap_slopes"]["0"]
    slope_ok = slope is None or slope >= policy.min_slope
    zero_ok = record.summary["zero_epsilon_ok"]

    # a coherence-free battery state must yield exactly no first-order work
    setup = scen.setup(1e-2)
    diag_rho = gibbs_state(scen.system(), scen.beta, policy)
    diag_closed = perturbed_ergotropy_closed_form(
        extraction_amplitudes(diag_rho, setup), setup.epsilon)
    diag_brute = perturbed_ergotropy_bruteforce(
        diag_rho, setup, scen.bath(), scen.beta, restarts=8, seed=0,
        policy=policy).brute_force
    diag_ok = diag_closed == 0.0 and abs(diag_brute) <= 1e-12

    passed = slope_ok and zero_ok and diag_ok
    slope_text = "vacuous" if slope is None else f"{slope:.3f}"
    detail = (f"gap slope {slope_text} (required {policy.min_slope:g}); "
              f"diagonal-state control closed {diag_closed:.1e} / brute {diag_brute:.3e}; "
              f"zero-epsilon rows {'clean' if zero_ok else 'dirty'}")
    return _result(6, "perturbed-extraction-gap", passed, detail,
                   {"gap_slope": slope, "diagonal_closed": diag_closed,
                    "diagonal_brute": diag_brute, "zero_epsilon_ok": zero_ok}, started)


def criterion_basis_accuracy(scenarios: dict,
                             policy: NumericPolicy = DEFAULT_POLICY) -> CriterionResult:
    """Truncated eigenvectors deviate from the exact ones at second order."""
    started = time.perf_counter()
    scen = scenarios[QUTRIT]
    deviations = []
    for eps in SWEEP_EPSILONS:
        setup = scen.setup(eps)
        truncated = first_order_basis(setup, policy).vectors
        exact = exact_perturbed_spec(setup).eigenbasis
        deviations.append(max_abs(truncated - exact))
    fit = fit_loglog_slope(SWEEP_EPSILONS, deviations, policy.noise_floor)
    passed = fit.passes(policy.min_slope)
    slope_text = "vacuous" if fit.vacuous else f"{fit.slope:.3f}"
    detail = (f"basis deviation slope {slope_text} (required {policy.min_slope:g}); "
              f"deviations {', '.join(f'{d:.3e}' for d in deviations)}")
    return _result(7, "perturbed-basis-accuracy", passed, detail,
                   {"slope": None if fit.vacuous else fit.slope,
                    "deviations": deviations}, started)


_BATTERY_CRITERIA = (
    criterion_gibbs_preservation,
    criterion_entrywise_laws,
    criterion_law_slopes,
    criterion_coherence_order,
    criterion_phase_no_extraction,
    criterion_extraction_gap,
    criterion_basis_accuracy,
)


def _battery_digest(results) -> str:
    payload = [{"index": r.index, "name": r.name, "values": r.values} for r in results]
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def criterion_determinism(scenarios: dict, first_pass,
                          policy: NumericPolicy = DEFAULT_POLICY) -> CriterionResult:
    """A full rerun of criteria 1-7 reproduces the numbers byte for byte."""
    started = time.perf_counter()
    digest_first = _battery_digest(first_pass)
    second_pass = [fn(scenarios, policy) for fn in _BATTERY_CRITERIA]
    digest_second = _battery_digest(second_pass)
    passed = digest_first == digest_second
    detail = (f"rerun digest {digest_second[:16]} "
              f"{'matches' if passed else 'differs from'} first pass {digest_first[:16]}")
    return _result(8, "deterministic-reruns", passed, detail,
                   {"digest_first": digest_first, "digest_second": digest_second},
                   started)


# ---------------------------------------------------------------------------
# the full battery
# ---------------------------------------------------------------------------

@dataclass
class AcceptanceRun:
    results: list = field(default_factory=list)
    elapsed_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def lines(self) -> list:
        out = [r.line() for r in self.results]
        n_fail = sum(1 for r in self.results if not r.passed)
        verdict = "all criteria passed" if self.passed else f"{n_fail} criteria FAILED"
        out.append(f"{len(self.results)} criteria: {verdict}")
        return out

    def payload(self) -> dict:
        return {
            "version": __version__,
            "passed": self.passed,
            "criteria": [{"index": r.index, "name": r.name, "passed": r.passed,
                          "detail": r.detail, "values": r.values}
                         for r in self.results],
        }

    def canonical_json(self) -> str:
        return json.dumps(self.payload(), sort_keys=True, separators=(",", ":"))


def run_acceptance(scenario_dir=None, policy: NumericPolicy = DEFAULT_POLICY,
                   progress=None) -> AcceptanceRun:
    """Run all eight criteria against a scenario directory (bundled by default)."""
    started = time.perf_counter()
    scenarios = load_scenario_directory(scenario_dir)
    _require_roles(scenarios)
    run = AcceptanceRun()
    for fn in _BATTERY_CRITERIA:
        result = fn(scenarios, policy)
        run.results.append(result)
        if progress is not None:
            progress(result.line())
    final = criterion_determinism(scenarios, run.results, policy)
    run.results.append(final)
    if progress is not None:
        progress(final.line())
    run.elapsed_seconds = time.perf_counter() - started
    return run
