import json

import numpy as np
import pytest

from thermops import ValidationError, load_bundled, load_scenario, validate_scenario
from thermops.cli import main
from thermops.report import format_cell
from thermops.runner import run_ergotropy, run_second_laws
from thermops.scenario import BUNDLED_NAMES, parse_complex_matrix, scenario_from_dict


def workhorse_doc(**overrides):
    doc = {
        "name": "probe",
        "system": {"energies": [0.0, 1.0]},
        "bath": {"ladder": {"spacing": 1.0, "levels": 2}},
        "beta": 1.0,
        "hprime": [[0, 1], [1, 0]],
        "rho_s": "gibbs",
        "epsilons": [0.0, 0.01],
        "seeds": [0],
    }
    doc.update(overrides)
    return doc


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def test_parse_complex_matrix_forms():
    m = parse_complex_matrix([[1, [0, 1]], [[2.5, -0.5], 0]])
    np.testing.assert_array_equal(m, np.array([[1.0, 1.0j], [2.5 - 0.5j, 0.0]]))


def test_parse_complex_matrix_rejections():
    with pytest.raises(ValidationError):
        parse_complex_matrix([[1, 2], [3]])  # ragged
    with pytest.raises(ValidationError):
        parse_complex_matrix([[True, 0], [0, 0]])  # bool is not a number
    with pytest.raises(ValidationError):
        parse_complex_matrix([["1", 0], [0, 0]])
    with pytest.raises(ValidationError):
        parse_complex_matrix([[[1, 2, 3], 0], [0, 0]])  # not a [re, im] pair


def test_scenario_rejects_unknown_and_missing_fields():
    with pytest.raises(ValidationError, match="unknown"):
        scenario_from_dict(workhorse_doc(extra=1))
    doc = workhorse_doc()
    del doc["beta"]
    with pytest.raises(ValidationError, match="beta"):
        scenario_from_dict(doc)


def test_scenario_rejects_bad_grids():
    with pytest.raises(ValidationError):
        scenario_from_dict(workhorse_doc(epsilons=[0.01, 1.5]))
    with pytest.raises(ValidationError):
        scenario_from_dict(workhorse_doc(seeds=[-1]))
    with pytest.raises(ValidationError):
        scenario_from_dict(workhorse_doc(seeds=[]))


def test_scenario_rho_forms():
    s = scenario_from_dict(workhorse_doc(rho_s={"basis_state": 1}))
    np.testing.assert_allclose(s.rho_s().populations(), [0.0, 1.0])
    s = scenario_from_dict(workhorse_doc(rho_s={"matrix": [[0.6, 0.3], [0.3, 0.4]]}))
    np.testing.assert_allclose(s.rho_s().entries, [[0.6, 0.3], [0.3, 0.4]])
    with pytest.raises(ValidationError):
        scenario_from_dict(workhorse_doc(rho_s="thermal"))


def test_explicit_bath_energies():
    s = scenario_from_dict(workhorse_doc(bath={"energies": [0.0, 0.45, 1.7]}))
    np.testing.assert_allclose(s.bath().energies, [0.0, 0.45, 1.7])


def test_fingerprint_is_content_addressed():
    a = scenario_from_dict(workhorse_doc())
    b = scenario_from_dict(workhorse_doc())
    c = scenario_from_dict(workhorse_doc(beta=2.0))
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != c.fingerprint()
    assert len(a.fingerprint()) == 16
    assert set(a.fingerprint()) <= set("0123456789abcdef")


def test_all_bundled_scenarios_validate():
    for name in BUNDLED_NAMES:
        diagnostics = validate_scenario(load_bundled(name))
        assert diagnostics.bohr_ok, name


def test_battery_scenario_is_the_only_phase_regime_one():
    degenerate = {name: load_bundled(name).totals_degenerate() for name in BUNDLED_NAMES}
    assert degenerate == {
        "qubit_qubit_resonant": True,
        "qutrit_ladder": True,
        "diagonal_hprime_control": True,
        "corrupted_unitary_control": True,
        "qubit_battery_offresonant": False,
    }


# ---------------------------------------------------------------------------
# runner guards
# ---------------------------------------------------------------------------

def test_runner_refuses_corrupted_control_for_sweeps():
    scen = load_bundled("corrupted_unitary_control")
    with pytest.raises(ValidationError, match="corrupted"):
        run_second_laws(scen)
    with pytest.raises(ValidationError, match="corrupted"):
        run_ergotropy(scen)


def test_runner_refuses_degenerate_totals_for_ergotropy():
    with pytest.raises(ValidationError, match="degenerate"):
        run_ergotropy(load_bundled("qubit_qubit_resonant"))


def test_format_cell_rejects_embedded_delimiters():
    assert format_cell(None) == ""
    assert format_cell(0.25) == "0.25"
    assert format_cell(True) == "true"
    with pytest.raises(ValueError):
        format_cell("a\tb")


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def test_cli_validate_bundled_ok(capsys):
    assert main(["validate", "--scenario", "qubit_qubit_resonant"]) == 0
    out = capsys.readouterr().out
    assert "fingerprint:" in out
    assert "Bohr: OK" in out


def test_cli_validate_reports_bohr_failure(tmp_path, capsys):
    bad = workhorse_doc(system={"energies": [0.0, 1.0, 2.0]},
                        hprime=[[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert main(["validate", "--scenario", str(path)]) == 2
    assert "Bohr: FAILED" in capsys.readouterr().out


def test_cli_unknown_scenario_is_usage_error(capsys):
    assert main(["second-laws", "--scenario", "missing_thing"]) == 2
    assert "neither a scenario file nor a bundled name" in capsys.readouterr().err


def test_cli_second_laws_writes_table_and_figures(tmp_path, capsys):
    out = tmp_path / "laws.tsv"
    code = main(["second-laws", "--scenario", "qubit_qubit_resonant",
                 "--seeds", "0", "--epsilons", "1e-2,1e-3", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].count("\t") == len(lines[1].split("\t")) - 1
    assert lines[0].startswith("scenario\tfingerprint\tseed\tepsilon")
    assert len(lines) == 1 + 2 * 4  # header + two epsilons x four elements
    assert (tmp_path / "laws_residuals.png").stat().st_size > 0
    assert (tmp_path / "laws_coherence.png").stat().st_size > 0


def test_cli_second_laws_machine_format_roundtrips(tmp_path):
    out = tmp_path / "laws.json"
    code = main(["second-laws", "--scenario", "qubit_qubit_resonant",
                 "--seeds", "0", "--epsilons", "1e-2,1e-3",
                 "--out", str(out), "--format", "machine", "--no-figures"])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["kind"] == "second-laws"
    assert doc["summary"]["slopes_ok"] is True
    assert len(doc["rows"]) == 8
    assert not list(tmp_path.glob("*.png"))


def test_cli_second_laws_literal_form_fails_the_order_check(tmp_path):
    code = main(["second-laws", "--scenario", "qubit_qubit_resonant",
                 "--seeds", "0", "--epsilons", "1e-2,1e-3,1e-4",
                 "--law-form", "literal", "--out", str(tmp_path / "x.tsv"),
                 "--no-figures"])
    assert code == 1


def test_cli_reports_are_byte_identical_across_runs(tmp_path):
    args = ["second-laws", "--scenario", "qutrit_ladder", "--seeds", "0,1",
            "--epsilons", "1e-2,1e-3", "--no-figures", "--format", "machine"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_ergotropy_runs_and_renders(tmp_path, capsys):
    out = tmp_path / "work.tsv"
    code = main(["ergotropy", "--scenario", "qubit_battery_offresonant",
                 "--seeds", "0", "--epsilons", "0,1e-2,1e-3,1e-4",
                 "--restarts", "8", "--out", str(out)])
    assert code == 0
    assert out.read_text().startswith("scenario\tfingerprint\tseed\tepsilon\tclosed_form")
    assert (tmp_path / "work_ergotropy.png").stat().st_size > 0


def test_cli_ergotropy_refuses_resonant_scenario(capsys):
    assert main(["ergotropy", "--scenario", "qutrit_ladder"]) == 2
    assert "degenerate joint spectrum" in capsys.readouterr().err


def test_cli_accept_needs_complete_scenario_dir(tmp_path, capsys):
    assert main(["accept", "--scenarios", str(tmp_path)]) == 2
    assert "no scenario files" in capsys.readouterr().err
    (tmp_path / "only.json").write_text(json.dumps(workhorse_doc()))
    assert main(["accept", "--scenarios", str(tmp_path)]) == 2
    assert "missing required" in capsys.readouterr().err


def test_cli_bad_flag_values_are_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["second-laws", "--scenario", "qutrit_ladder", "--epsilons", "2.0"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["second-laws", "--scenario", "qutrit_ladder", "--seeds", "a,b"])
    assert exc.value.code == 2


def test_loading_rejects_missing_file(tmp_path):
    with pytest.raises(ValidationError):
        load_scenario(tmp_path / "ghost.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ValidationError):
        load_scenario(broken)
