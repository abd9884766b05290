"""Release gate: every build must clear the eight-criterion battery.

The battery runs once per test session on the bundled scenarios; each test
below prints the corresponding pass/fail line and asserts it.  Criterion 8
internally reruns criteria 1-7 and compares canonical digests, so this
module also guards end-to-end determinism.
"""

import pytest

from thermops.acceptance import REQUIRED_ROLES, load_scenario_directory, run_acceptance


@pytest.fixture(scope="module")
def battery():
    return run_acceptance()


def _check(battery, index):
    result = battery.results[index - 1]
    assert result.index == index
    print(result.line())
    assert result.passed, result.line()


def test_bundled_directory_provides_every_role():
    scenarios = load_scenario_directory()
    assert set(REQUIRED_ROLES) <= set(scenarios)


def test_criterion_1_gibbs_preservation(battery):
    _check(battery, 1)


def test_criterion_2_entrywise_channel_laws(battery):
    _check(battery, 2)


def test_criterion_3_first_order_law_slopes(battery):
    _check(battery, 3)


def test_criterion_4_coherence_generation_order(battery):
    _check(battery, 4)


def test_criterion_5_phase_unitary_no_extraction(battery):
    _check(battery, 5)


def test_criterion_6_perturbed_extraction_gap(battery):
    _check(battery, 6)


def test_criterion_7_perturbed_basis_accuracy(battery):
    _check(battery, 7)


def test_criterion_8_deterministic_reruns(battery):
    _check(battery, 8)


def test_battery_verdict(battery):
    for line in battery.lines():
        print(line)
    assert battery.passed
    assert battery.exit_code == 0
