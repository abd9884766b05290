"""Sweep drivers behind the command-line harness.

Each run walks a scenario over its seeds and epsilon grid, producing an
append-only RunRecord: a fixed column list, one row per grid point, and a
summary with fitted convergence orders.  Identical scenario + seeds give
bit-identical numeric fields; wall-clock time is kept off the record's
serializable payload on purpose.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .approx import coherence_generated, exact_dyad_image, predict_element
from .ergotropy import perturbed_ergotropy_bruteforce
from .numerics import DEFAULT_POLICY, NumericPolicy, ValidationError, fit_loglog_slope, max_abs
from .perturb import diagonal_state_in_perturbed_basis, first_order_basis
from .scenario import Scenario
from .thermal import extract_channel_coefficients, sample_energy_conserving_unitary


@dataclass(eq=False)
class RunRecord:
    """One harness run: columns, rows, and a numeric summary."""

    kind: str
    scenario_name: str
    fingerprint: str
    version: str
    columns: tuple
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    elapsed_seconds: float = 0.0  # informational only, never serialized

    def payload(self) -> dict:
        return {
            "kind": self.kind,
            "scenario": self.scenario_name,
            "fingerprint": self.fingerprint,
            "version": self.version,
            "columns": list(self.columns),
            "rows": self.rows,
            "summary": self.summary,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.payload(), sort_keys=True, separators=(",", ":"))


def _grid(scenario: Scenario, seeds, epsilons):
    seeds = tuple(scenario.seeds if seeds is None else seeds)
    epsilons = tuple(scenario.epsilons if epsilons is None else epsilons)
    if not seeds or not epsilons:
        raise ValidationError("need at least one seed and one epsilon")
    return seeds, epsilons


def _refuse_corrupted(scenario: Scenario, what: str):
    if scenario.corrupted_unitary:
        raise ValidationError(
            f"scenario {scenario.name!r} is a corrupted-unitary control; it is only "
            f"meaningful for the Gibbs-preservation check, not for {what}")


SECOND_LAWS_COLUMNS = (
    "scenario", "fingerprint", "seed", "epsilon", "i", "j",
    "residual", "coherence", "slope",
)


def run_second_laws(scenario: Scenario, seeds=None, epsilons=None,
                    law_form: str = "derived",
                    policy: NumericPolicy = DEFAULT_POLICY) -> RunRecord:
    """Residuals of the first-order transformation laws against the channel.

    For every seed, sampled block unitary, and epsilon, each primed dyad
    (i, j) is pushed through the channel exactly and compared entrywise
    with the first-order prediction; per-element log-log slopes over the
    positive epsilons summarize the convergence order.
    """
    if law_form not in ("derived", "literal"):
        raise ValidationError(f"unknown law form {law_form!r}")
    _refuse_corrupted(scenario, "the transformation-law sweep")
    seeds, epsilons = _grid(scenario, seeds, epsilons)
    started = time.perf_counter()
    literal = law_form == "literal"
    hs, hb = scenario.system(), scenario.bath()
    tau_b = scenario.tau_b(policy)
    dec = scenario.decomposition(policy)
    d = hs.dim
    fingerprint = scenario.fingerprint()
    pops = np.exp(-scenario.beta * (hs.energies - hs.energies[0]))
    pops /= pops.sum()

    record = RunRecord(kind="second-laws", scenario_name=scenario.name,
                       fingerprint=fingerprint, version=__version__,
                       columns=SECOND_LAWS_COLUMNS)
    residuals: dict = {}
    coherences: dict = {}
    for seed in seeds:
        u = sample_energy_conserving_unitary(dec, seed)
        coeffs = extract_channel_coefficients(u, tau_b, hs, hb, policy)
        for eps in epsilons:
            setup = scenario.setup(eps)
            basis = first_order_basis(setup, policy)
            rho_diag = diagonal_state_in_perturbed_basis(pops, setup)
            coherences[(seed, eps)] = coherence_generated(rho_diag, u, basis, tau_b, policy)
            for i in range(d):
                for j in range(d):
                    pred = predict_element(i, j, coeffs, basis,
                                           literal_form=literal, policy=policy)
                    exact = exact_dyad_image(u, (i, j), basis, tau_b, policy)
                    residuals[(seed, eps, i, j)] = max_abs(pred.matrix - exact)

    fit_eps = [e for e in epsilons if e > 0]
    slopes: dict = {}
    for seed in seeds:
        for i in range(d):
            for j in range(d):
                fit = fit_loglog_slope(fit_eps,
                                       [residuals[(seed, e, i, j)] for e in fit_eps],
                                       policy.noise_floor) if len(fit_eps) >= 2 else None
                slopes[(seed, i, j)] = fit

    for seed in seeds:
        for eps in epsilons:
            for i in range(d):
                for j in range(d):
                    fit = slopes[(seed, i, j)]
                    record.rows.append({
                        "scenario": scenario.name,
                        "fingerprint": fingerprint,
                        "seed": seed,
                        "epsilon": eps,
                        "i": i,
                        "j": j,
                        "residual": residuals[(seed, eps, i, j)],
                        "coherence": coherences[(seed, eps)],
                        "slope": None if fit is None or fit.vacuous else fit.slope,
                    })

    fitted = [f for f in slopes.values() if f is not None and not f.vacuous]
    zero_rows = [residuals[k] for k in residuals if k[1] == 0.0]
    record.summary = {
        "law_form": law_form,
        "min_slope_required": policy.min_slope,
        "n_elements": d * d,
        "n_fitted": len(fitted),
        "n_vacuous": sum(1 for f in slopes.values() if f is not None and f.vacuous),
        "min_slope": min((f.slope for f in fitted), default=None),
        "slopes_ok": all(f.slope >= policy.min_slope for f in fitted),
        "zero_epsilon_max_residual": max(zero_rows, default=None),
        "zero_epsilon_ok": all(r <= policy.channel_residual for r in zero_rows),
    }
    record.elapsed_seconds = time.perf_counter() - started
    return record


ERGOTROPY_COLUMNS = (
    "scenario", "fingerprint", "seed", "epsilon",
    "closed_form", "brute_force", "gap", "gap_slope", "phases",
)


def run_ergotropy(scenario: Scenario, seeds=None, epsilons=None, restarts: int = 32,
                  policy: NumericPolicy = DEFAULT_POLICY) -> RunRecord:
    """Closed-form versus brute-force first-order work extraction.

    Requires a nondegenerate joint spectrum (the phase-unitary regime).
    The per-seed gap |brute - closed| is order-fitted over the positive
    epsilons; scenarios where it fails the quadratic fit are flagged in the
    summary rather than treated as errors, since with several active level
    pairs the closed form is an upper envelope rather than an equality.
    """
    _refuse_corrupted(scenario, "work extraction")
    if scenario.totals_degenerate(policy):
        raise ValidationError(
            f"scenario {scenario.name!r} has a degenerate joint spectrum; "
            "energy-conserving unitaries do not reduce to phase unitaries, so the "
            "work-extraction treatment does not apply")
    seeds, epsilons = _grid(scenario, seeds, epsilons)
    started = time.perf_counter()
    hb = scenario.bath()
    rho = scenario.rho_s(policy)
    fingerprint = scenario.fingerprint()
    record = RunRecord(kind="ergotropy", scenario_name=scenario.name,
                       fingerprint=fingerprint, version=__version__,
                       columns=ERGOTROPY_COLUMNS)

    reports: dict = {}
    for seed in seeds:
        for eps in epsilons:
            reports[(seed, eps)] = perturbed_ergotropy_bruteforce(
                rho, scenario.setup(eps), hb, scenario.beta,
                restarts=restarts, seed=seed, policy=policy)

    fit_eps = [e for e in epsilons if e > 0]
    gap_slopes: dict = {}
    for seed in seeds:
        gap_slopes[seed] = (fit_loglog_slope(fit_eps,
                                             [reports[(seed, e)].residual for e in fit_eps],
                                             policy.noise_floor)
                            if len(fit_eps) >= 2 else None)

    for seed in seeds:
        for eps in epsilons:
            rep = reports[(seed, eps)]
            fit = gap_slopes[seed]
            record.rows.append({
                "scenario": scenario.name,
                "fingerprint": fingerprint,
                "seed": seed,
                "epsilon": eps,
                "closed_form": rep.closed_form,
                "brute_force": rep.brute_force,
                "gap": rep.residual,
                "gap_slope": None if fit is None or fit.vacuous else fit.slope,
                "phases": json.dumps([[float(v) for v in row]
                                      for row in rep.optimizing_phases.lambdas]),
            })

    fitted = {s: f for s, f in gap_slopes.items() if f is not None and not f.vacuous}
    flagged = sorted(s for s, f in fitted.items() if f.slope < policy.min_slope)
    zero_rows = [(reports[(s, e)].closed_form, reports[(s, e)].brute_force)
                 for (s, e) in reports if e == 0.0]
    record.summary = {
        "restarts": restarts,
        "min_slope_required": policy.min_slope,
        "gap_slopes": {str(s): (None if f is None or f.vacuous else f.slope)
                       for s, f in gap_slopes.items()},
        "gap_slope_flagged_seeds": [str(s) for s in flagged],
        "zero_epsilon_ok": all(abs(c) <= 1e-12 and abs(b) <= 1e-12 for c, b in zero_rows),
    }
    record.elapsed_seconds = time.perf_counter() - started
    return record
