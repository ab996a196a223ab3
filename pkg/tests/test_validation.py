"""Two-stage validation of experiment files."""

import textwrap
from pathlib import Path

import pytest

from src.models.experiment import TheoremId
from src.systems.errors import ConfigError
from src.systems.validation import ConfigValidator, LineIndex, load_experiments, suggest

ACCEPTANCE = Path(__file__).resolve().parents[1] / "acceptance.yaml"


def _issues(text):
    with pytest.raises(ConfigError) as exc:
        ConfigValidator(textwrap.dedent(text)).validate()
    return exc.value.issues


def _codes(text):
    return {issue.code for issue in _issues(text)}


def _warnings(text):
    validator = ConfigValidator(textwrap.dedent(text))
    validator.validate()
    return {issue.code for issue in validator.warnings}


def test_acceptance_suite_is_valid():
    data = load_experiments(ACCEPTANCE)
    ids = [exp.id for exp in data.experiments]
    assert len(ids) == len(set(ids))
    assert "benton" in ids
    controls = [exp for exp in data.experiments if exp.expect_status]
    assert {exp.expect_status for exp in controls} == {"hypothesis_failed"}


def test_empty_file_has_no_experiments():
    assert ConfigValidator("").validate().experiments == []


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_experiments(tmp_path / "nope.yaml")
    assert exc.value.issues[0].code == "missing_file"


def test_yaml_syntax_error_carries_a_line():
    issues = _issues("""\
        experiments:
          - id: a
            suite: [thm_stability_L2
        """)
    assert issues[0].code == "yaml_syntax"
    assert issues[0].line is not None


def test_structural_issues_come_with_lines_and_suggestions():
    issues = _issues("""\
        experiments:
          - id: a
            suite: [thm_stability_l2]
            drfit: {kind: zero}
        """)
    by_code = {issue.code: issue for issue in issues}
    assert by_code["enum"].path == "experiments.0.suite.0"
    assert by_code["enum"].line == 3
    assert by_code["enum"].suggestion == "did you mean 'thm_stability_L2'?"
    assert by_code["extra_forbidden"].line == 4
    assert by_code["extra_forbidden"].suggestion == "did you mean 'drift'?"
    assert "line 4" in by_code["extra_forbidden"].render()


def test_misspelled_drift_kind():
    issues = _issues("""\
        experiments:
          - id: a
            drift: {kind: one_side}
        """)
    assert issues[0].path == "experiments.0.drift.kind"
    assert issues[0].suggestion == "did you mean 'one_sided'?"


@pytest.mark.parametrize("body, code", [
    ("grid: {n_points: 48}", "not_power_of_two"),
    ("suite: [thm_stability_L2]\n  solver: {epsilon: 0.5}", "unit_viscosity"),
    ("suite: [thm_main2_Lp]\n  sweep: {epsilon: [1.0, 0.1]}", "unit_viscosity"),
    ("drift: {kind: lrlq, q: 2, r: 4}\n  solver: {t_start: 0.01}", "inadmissible_exponents"),
    ("drift: {kind: lrlq, q: 2, r: 2}", "sigma_required"),
    ("drift: {kind: lrlq, q: 2, r: 2, margin: 1.5}\n  solver: {t_start: 0.01}", "bad_margin"),
    ("sweep: {margin: [0.5, 0.0]}", "bad_margin"),
    ("drift: {kind: one_sided, c1: 1.0}", "sigma_required"),
    ("suite: [thm_one_sided_Linf]\n  drift: {kind: one_sided}", "sigma_required"),
    ("suite: [thm_superquadratic_cd]\n  hamiltonian: {kind: quadratic}", "hamiltonian_mismatch"),
    ("suite: [val_cole_hopf]\n  hamiltonian: {kind: power}", "hamiltonian_mismatch"),
    ("suite: [val_cole_hopf]\n  solver: {epsilon: 0.0}", "bad_epsilon"),
    ("checks: {p: [abc]}", "bad_exponent"),
    ("checks: {p: ['1/2']}", "bad_exponent"),
    ("suite: [thm_iii_AS_cd]\n  checks: {p: ['3/2']}", "bad_exponent"),
    ("checks: {interpolated_s: [2.5]}", "bad_index"),
    ("sweep: {gamma: [1.0]}", "bad_gamma"),
    ("hamiltonian: {kind: custom_smooth}", "missing_expression"),
    ("hamiltonian: {kind: custom_smooth, expression: 's * q'}", "bad_expression"),
])
def test_semantic_errors(body, code):
    text = "experiments:\n- id: a\n  " + body + "\n"
    assert code in _codes(text)


def test_duplicate_ids():
    issues = _issues("""\
        experiments:
          - id: a
          - id: a
        """)
    assert [i.code for i in issues] == ["duplicate_id"]
    assert issues[0].path == "experiments.1.id"
    assert issues[0].line == 3


def test_unknown_expected_status_is_suggested():
    issues = _issues("""\
        experiments:
          - id: a
            suite: [benton_demo]
            expect_status: hypothesis_faild
        """)
    assert issues[0].code == "unknown_status"
    assert issues[0].suggestion == "did you mean 'hypothesis_failed'?"


def test_semantic_line_points_at_the_field():
    issues = _issues("""\
        experiments:
          - id: a
            grid:
              dim: 1
              n_points: 48
        """)
    assert issues[0].line == 5


@pytest.mark.parametrize("body, code", [
    ("suite: [thm_one_sided_Linf]\n  solver: {t_start: 0.01}", "drift_mismatch"),
    ("suite: [thm_iii_AS_cd]\n  checks: {aronson_serrin_q: 1}", "aronson_serrin_range"),
    ("expect_status: hypothesis_failed", "empty_control"),
    ("suite: [thm_stability_L2]\n  drift: {kind: one_sided}", "hypothesis_unmet"),
    ("hamiltonian: {kind: quadratic, expression: s}", "unused_expression"),
])
def test_warnings_do_not_block(body, code):
    assert code in _warnings("experiments:\n- id: a\n  " + body + "\n")


def test_line_index_prefixes():
    index = LineIndex("experiments:\n- id: a\n  grid: {dim: 1}\n")
    assert index.line("experiments.0.grid.dim") == 3
    assert index.line("experiments.0.grid.n_points") == 3
    assert index.line("experiments.0.id") == 2


def test_suggest():
    assert suggest("thm_hjlip", [t.value for t in TheoremId]) == "did you mean 'thm_hjlip_cd'?"
    assert suggest("zzzzzz", ["quadratic", "power"]) is None
    assert suggest(3, ["a"]) is None
