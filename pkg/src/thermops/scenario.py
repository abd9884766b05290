"""Scenario files: the single input format of the command-line harness.

A scenario is a JSON document.  Complex matrices are written row-major with
each entry either a plain number (real) or a two-element [re, im] list:

    {
      "name": "qubit_qubit_resonant",
      "system": {"energies": [0.0, 1.0]},
      "bath": {"ladder": {"spacing": 1.0, "levels": 2}},
      "beta": 1.0,
      "hprime": [[0, 1], [1, 0]],
      "rho_s": "gibbs",
      "epsilons": [0.0, 0.01, 0.001, 0.0001],
      "seeds": [0, 1, 2]
    }

The bath is either an explicit {"energies": [...]} list or a uniform
{"ladder": {...}}.  rho_s is "gibbs", {"basis_state": k}, or
{"matrix": [...]}.  A scenario's fingerprint is the SHA-256 of its
canonical serialization and is stamped into every output.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .numerics import DEFAULT_POLICY, NumericPolicy, ValidationError, hermiticity_defect
from .perturb import PerturbationSetup
from .spectral import (
    CompositeIndexMap,
    DensityMatrix,
    HamiltonianSpec,
    basis_state_density,
    check_bohr_nondegenerate,
    gibbs_state,
    total_energies,
)
from .thermal import EnergyBlockDecomposition, decompose_energy_blocks

BUNDLED_NAMES = (
    "qubit_qubit_resonant",
    "qutrit_ladder",
    "diagonal_hprime_control",
    "corrupted_unitary_control",
    "qubit_battery_offresonant",
)


def parse_complex_matrix(rows, what: str = "matrix") -> np.ndarray:
    """Row-major literal -> complex ndarray; entries are numbers or [re, im]."""
    if not isinstance(rows, list) or not rows:
        raise ValidationError(f"{what}: expected a non-empty list of rows")
    parsed = []
    for r, row in enumerate(rows):
        if not isinstance(row, list):
            raise ValidationError(f"{what}: row {r} is not a list")
        out_row = []
        for c, cell in enumerate(row):
            if isinstance(cell, (int, float)) and not isinstance(cell, bool):
                out_row.append(complex(cell))
            elif (isinstance(cell, list) and len(cell) == 2
                  and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in cell)):
                out_row.append(complex(cell[0], cell[1]))
            else:
                raise ValidationError(
                    f"{what}: entry ({r},{c}) must be a number or an [re, im] pair, got {cell!r}")
        parsed.append(out_row)
    if len({len(r) for r in parsed}) != 1:
        raise ValidationError(f"{what}: ragged rows")
    return np.array(parsed, dtype=complex)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Parsed scenario plus the raw document it came from."""

    name: str
    system_energies: np.ndarray
    bath_energies: np.ndarray
    beta: float
    hprime: np.ndarray
    rho_spec: object  # "gibbs" | {"basis_state": k} | ndarray
    epsilons: tuple
    seeds: tuple
    corrupted_unitary: bool
    raw: dict = field(repr=False)

    # -- derived builders ---------------------------------------------------

    def fingerprint(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

    def system(self) -> HamiltonianSpec:
        return HamiltonianSpec.diagonal(self.system_energies)

    def bath(self) -> HamiltonianSpec:
        return HamiltonianSpec.diagonal(self.bath_energies)

    def index_map(self) -> CompositeIndexMap:
        return CompositeIndexMap(d1=self.system_energies.size, d2=self.bath_energies.size)

    def tau_b(self, policy: NumericPolicy = DEFAULT_POLICY) -> DensityMatrix:
        return gibbs_state(self.bath(), self.beta, policy)

    def rho_s(self, policy: NumericPolicy = DEFAULT_POLICY) -> DensityMatrix:
        if isinstance(self.rho_spec, str):  # "gibbs"
            return gibbs_state(self.system(), self.beta, policy)
        if isinstance(self.rho_spec, int):
            return basis_state_density(self.system_energies.size, self.rho_spec)
        return DensityMatrix.from_entries(self.rho_spec)

    def setup(self, epsilon: float) -> PerturbationSetup:
        return PerturbationSetup(base=self.system(), hprime=self.hprime, epsilon=epsilon)

    def decomposition(self, policy: NumericPolicy = DEFAULT_POLICY) -> EnergyBlockDecomposition:
        totals = total_energies(self.system(), self.bath(), self.index_map())
        return decompose_energy_blocks(totals, policy.grouping)

    def totals_degenerate(self, policy: NumericPolicy = DEFAULT_POLICY) -> bool:
        totals = np.sort(total_energies(self.system(), self.bath(), self.index_map()))
        return totals.size > 1 and float(np.diff(totals).min()) <= policy.grouping


def _as_float_list(value, what: str) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ValidationError(f"{what}: expected a non-empty list of numbers")
    out = []
    for v in value:
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ValidationError(f"{what}: {v!r} is not a number")
        out.append(float(v))
    return out


def _bath_energies(doc, what: str = "bath") -> np.ndarray:
    if not isinstance(doc, dict):
        raise ValidationError(f"{what}: expected an object")
    if "energies" in doc:
        return np.array(_as_float_list(doc["energies"], f"{what}.energies"))
    if "ladder" in doc:
        ladder = doc["ladder"]
        try:
            spacing = float(ladder["spacing"])
            levels = int(ladder["levels"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{what}.ladder: needs numeric 'spacing' and integer 'levels'") from exc
        if levels < 1 or spacing <= 0:
            raise ValidationError(f"{what}.ladder: spacing must be positive, levels >= 1")
        return spacing * np.arange(levels, dtype=float)
    raise ValidationError(f"{what}: provide either 'energies' or 'ladder'")


def scenario_from_dict(doc: dict, default_name: str = "scenario") -> Scenario:
    if not isinstance(doc, dict):
        raise ValidationError("scenario document must be a JSON object")
    known = {"name", "description", "system", "bath", "beta", "hprime", "rho_s",
             "epsilons", "seeds", "corrupted_unitary"}
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(f"unknown scenario fields: {sorted(unknown)}")
    for key in ("system", "bath", "beta", "hprime", "rho_s", "epsilons", "seeds"):
        if key not in doc:
            raise ValidationError(f"scenario is missing required field '{key}'")
    system = doc["system"]
    if not isinstance(system, dict) or "energies" not in system:
        raise ValidationError("system: expected an object with an 'energies' list")
    sys_en = np.array(_as_float_list(system["energies"], "system.energies"))
    bath_en = _bath_energies(doc["bath"])
    if not isinstance(doc["beta"], (int, float)) or isinstance(doc["beta"], bool):
        raise ValidationError("beta must be a number")
    hprime = parse_complex_matrix(doc["hprime"], "hprime")
    if hprime.shape != (sys_en.size, sys_en.size):
        raise ValidationError(
            f"hprime shape {hprime.shape} does not match the system dimension {sys_en.size}")
    rho_doc = doc["rho_s"]
    if rho_doc == "gibbs":
        rho_spec: object = "gibbs"
    elif isinstance(rho_doc, dict) and set(rho_doc) == {"basis_state"}:
        rho_spec = int(rho_doc["basis_state"])
    elif isinstance(rho_doc, dict) and set(rho_doc) == {"matrix"}:
        rho_spec = parse_complex_matrix(rho_doc["matrix"], "rho_s.matrix")
    else:
        raise ValidationError("rho_s must be \"gibbs\", {\"basis_state\": k}, or {\"matrix\": ...}")
    epsilons = tuple(_as_float_list(doc["epsilons"], "epsilons"))
    if any(e < 0 or e > 1 for e in epsilons):
        raise ValidationError("epsilons must lie in [0, 1]")
    seeds = doc["seeds"]
    if (not isinstance(seeds, list) or not seeds
            or not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in seeds)):
        raise ValidationError("seeds must be a non-empty list of non-negative integers")
    corrupted = bool(doc.get("corrupted_unitary", False))
    name = doc.get("name", default_name)
    if not isinstance(name, str) or not name:
        raise ValidationError("name must be a non-empty string")
    return Scenario(name=name, system_energies=sys_en, bath_energies=bath_en,
                    beta=float(doc["beta"]), hprime=hprime, rho_spec=rho_spec,
                    epsilons=epsilons, seeds=tuple(int(s) for s in seeds),
                    corrupted_unitary=corrupted, raw=doc)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc, default_name=path.stem)


# ---------------------------------------------------------------------------
# bundled scenarios
# ---------------------------------------------------------------------------

def bundled_scenario_dir() -> Path:
    return Path(resources.files("thermops") / "scenarios")


def load_bundled(name: str) -> Scenario:
    path = bundled_scenario_dir() / f"{name}.json"
    if not path.is_file():
        raise ValidationError(f"no bundled scenario named {name!r}")
    return load_scenario(path)


# ---------------------------------------------------------------------------
# validation report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioDiagnostics:
    """What `validate` prints: structural findings for one scenario."""

    fingerprint: str
    bohr_ok: bool
    block_sizes: tuple
    totals_degenerate: bool
    messages: tuple

    def lines(self) -> list[str]:
        out = [f"fingerprint: {self.fingerprint}"]
        out.append("blocks: " + ",".join(str(s) for s in self.block_sizes))
        out.append("Bohr: OK" if self.bohr_ok else "Bohr: FAILED")
        out.append("totals: degenerate (ergotropy command gated)" if self.totals_degenerate
                   else "totals: nondegenerate")
        out.extend(self.messages)
        return out


def validate_scenario(scenario: Scenario,
                      policy: NumericPolicy = DEFAULT_POLICY) -> ScenarioDiagnostics:
    """Structural checks; raises ValidationError only for unusable inputs."""
    scenario.system()        # ascending energies etc.
    scenario.bath()
    scenario.tau_b(policy)
    scenario.rho_s(policy)
    dec = scenario.decomposition(policy)
    bohr = check_bohr_nondegenerate(scenario.system_energies, policy.grouping)
    if bohr.ok:
        scenario.setup(0.0)  # hprime hermiticity via the perturbation contract
    elif hermiticity_defect(scenario.hprime) > policy.structural:
        raise ValidationError("perturbation matrix is not Hermitian")
    messages = []
    if not bohr.ok:
        if bohr.equal_energy_pairs:
            messages.append(f"Bohr failure: equal energy pairs {list(bohr.equal_energy_pairs)}")
        if bohr.clashing_gap_pairs:
            messages.append(f"Bohr failure: clashing gap pairs {list(bohr.clashing_gap_pairs)}")
    if scenario.corrupted_unitary:
        messages.append("corrupted-unitary control: channel invariants are expected to fail")
    return ScenarioDiagnostics(
        fingerprint=scenario.fingerprint(),
        bohr_ok=bohr.ok,
        block_sizes=dec.block_sizes(),
        totals_degenerate=scenario.totals_degenerate(policy),
        messages=tuple(messages))
