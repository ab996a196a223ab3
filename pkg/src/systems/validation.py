"""Validation pipeline for experiment files.

Stage 1 (structural) checks the YAML against the pydantic schema; stage 2 (semantic) checks
what the schema cannot express: exponent admissibility, restrictions tied to a check,
and cross-field rules. Every issue carries a dotted path and the YAML line it points at.
"""

from __future__ import annotations
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Union

import yaml
from pydantic import BaseModel, ValidationError
from thefuzz import process

from src.models.experiment import (
    DriftKind,
    Experiment,
    ExperimentFile,
    HamiltonianKind,
    MeshKind,
    TheoremId,
)
from src.models.reports import ReportStatus
from src.systems.errors import ConfigError, ConfigIssue, InadmissibleExponentError, LabError
from src.systems.exponents import (
    ExponentPair,
    check_aronson_serrin_range,
    check_divb_admissible,
    to_exponent,
    to_float,
)
from src.systems.fields import custom_hamiltonian

logger = logging.getLogger(__name__)

SUGGESTION_CUTOFF = 60

# checks stated for unit viscosity only
UNIT_VISCOSITY_CHECKS = {
    TheoremId.THM_STABILITY_L2,
    TheoremId.THM_STABILITY_GRAD,
    TheoremId.THM_MAIN2_LP,
    TheoremId.COR_DIVLRLQ_DUAL,
    TheoremId.COR_UNIQUENESS_FP,
}
DIVERGENCE_CLASS_CHECKS = {TheoremId.THM_STABILITY_L2, TheoremId.THM_STABILITY_GRAD}


def suggest(value: Any, choices: Iterable[str]) -> Optional[str]:
    """'did you mean ...' for a misspelled name."""
    if not isinstance(value, str):
        return None
    match = process.extractOne(value, list(choices), score_cutoff=SUGGESTION_CUTOFF)
    return f"did you mean '{match[0]}'?" if match else None


class LineIndex:
    """Dotted path -> 1-based line number, read from the composed YAML node tree."""

    def __init__(self, text: str):
        self.lines: dict[str, int] = {}
        root = yaml.compose(text)
        if root is not None:
            self._walk(root, "")

    def _walk(self, node: yaml.Node, path: str) -> None:
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                child = f"{path}.{key.value}" if path else str(key.value)
                self._walk(value, child)
                self.lines[child] = key.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                self._walk(item, f"{path}.{i}" if path else str(i))

    def line(self, path: str) -> Optional[int]:
        """Line of the deepest existing prefix of `path`."""
        parts = path.split(".") if path else []
        while parts:
            key = ".".join(parts)
            if key in self.lines:
                return self.lines[key]
            parts.pop()
        return self.lines.get("")


def _dotted(loc: Iterable[Union[str, int]]) -> str:
    return ".".join(str(part) for part in loc)


def _field_names(model: type[BaseModel]) -> list[str]:
    return list(model.model_fields)


_SECTION_MODELS: dict[str, type[BaseModel]] = {
    name: info.annotation for name, info in Experiment.model_fields.items()
    if isinstance(info.annotation, type) and issubclass(info.annotation, BaseModel)
}


class StructuralValidator:
    """Stage 1: schema validation with field paths, line numbers and suggestions."""

    def __init__(self, index: LineIndex):
        self.index = index

    def validate(self, raw: Any) -> tuple[Optional[ExperimentFile], list[ConfigIssue]]:
        if raw is None:
            return ExperimentFile(), []
        try:
            return ExperimentFile.model_validate(raw), []
        except ValidationError as exc:
            return None, [self._issue(err) for err in exc.errors()]

    def _issue(self, err: dict[str, Any]) -> ConfigIssue:
        loc = err["loc"]
        path = _dotted(loc)
        kind = err["type"]
        return ConfigIssue(path=path, code=kind, message=err["msg"], line=self.index.line(path),
                           suggestion=self._suggestion(kind, loc, err.get("input")))

    def _suggestion(self, kind: str, loc: tuple, value: Any) -> Optional[str]:
        if kind == "enum":
            if "suite" in loc:
                return suggest(value, [t.value for t in TheoremId])
            if loc and loc[-1] == "kind":
                section = loc[-2] if len(loc) > 1 else ""
                enums = {"drift": DriftKind, "hamiltonian": HamiltonianKind}
                if section in enums:
                    return suggest(value, [k.value for k in enums[section]])
            if loc and loc[-1] == "mesh":
                return suggest(value, [m.value for m in MeshKind])
        if kind == "extra_forbidden" and loc:
            key = str(loc[-1])
            parent = loc[-2] if len(loc) > 1 else None
            model = _SECTION_MODELS.get(str(parent)) if parent is not None else None
            if model is None:
                model = Experiment if isinstance(parent, int) else ExperimentFile
            return suggest(key, _field_names(model))
        return None


class SemanticValidator:
    """Stage 2: rules that span fields or need the exponent algebra."""

    def __init__(self, index: LineIndex):
        self.index = index

    def validate(self, data: ExperimentFile) -> list[ConfigIssue]:
        issues: list[ConfigIssue] = []
        seen: set[str] = set()
        for i, exp in enumerate(data.experiments):
            base = f"experiments.{i}"
            if exp.id in seen:
                issues.append(self._issue(f"{base}.id", "duplicate_id", f"experiment id '{exp.id}' is used twice"))
            seen.add(exp.id)
            issues.extend(self._experiment(base, exp))
        return issues

    def _issue(self, path: str, code: str, message: str, suggestion: Optional[str] = None,
               severity: str = "error") -> ConfigIssue:
        return ConfigIssue(path=path, code=code, message=message, line=self.index.line(path),
                           suggestion=suggestion, severity=severity)

    def _exponent(self, path: str, value: str, minimum: float = 1.0) -> tuple[Optional[float], list[ConfigIssue]]:
        try:
            parsed = to_float(to_exponent(value))
        except (InadmissibleExponentError, ValueError, TypeError):
            return None, [self._issue(path, "bad_exponent", f"'{value}' is not a rational exponent or 'inf'")]
        if parsed < minimum:
            return None, [self._issue(path, "bad_exponent", f"exponent {value} must be >= {minimum:g}")]
        return parsed, []

    def _experiment(self, base: str, exp: Experiment) -> list[ConfigIssue]:
        issues: list[ConfigIssue] = []
        suite = set(exp.suite)
        n = exp.grid.n_points
        if n & (n - 1):
            issues.append(self._issue(f"{base}.grid.n_points", "not_power_of_two", f"n_points={n} must be a power of two"))

        epsilons = exp.sweep.epsilon or [exp.solver.epsilon]
        if suite & UNIT_VISCOSITY_CHECKS and any(e != 1.0 for e in epsilons):
            names = ", ".join(sorted(t.value for t in suite & UNIT_VISCOSITY_CHECKS))
            where = f"{base}.sweep.epsilon" if exp.sweep.epsilon else f"{base}.solver.epsilon"
            issues.append(self._issue(where, "unit_viscosity", f"{names} run at epsilon = 1 only"))

        drift = exp.drift
        if drift.kind == DriftKind.LRLQ:
            issues.extend(self._lrlq(base, exp))
        if drift.kind == DriftKind.ONE_SIDED and (drift.c1 > 0 or any(c > 0 for c in exp.sweep.c1)):
            if exp.solver.t_start <= 0:
                issues.append(self._issue(f"{base}.solver.t_start", "sigma_required",
                                          "a drift singular at t = 0 needs t_start > 0"))
        for j, m in enumerate(exp.sweep.margin):
            if not 0.0 < m <= 1.0:
                issues.append(self._issue(f"{base}.sweep.margin.{j}", "bad_margin", f"margin {m} must lie in (0, 1]"))
        for j, e in enumerate(exp.sweep.epsilon):
            if e < 0:
                issues.append(self._issue(f"{base}.sweep.epsilon.{j}", "bad_epsilon", f"epsilon {e} must be >= 0"))
        for j, g in enumerate(exp.sweep.gamma):
            if g <= 1:
                issues.append(self._issue(f"{base}.sweep.gamma.{j}", "bad_gamma", f"gamma {g} must exceed 1"))
        if exp.hamiltonian.kind == HamiltonianKind.CUSTOM_SMOOTH:
            if not exp.hamiltonian.expression:
                issues.append(self._issue(f"{base}.hamiltonian.expression", "missing_expression",
                                          "custom_smooth needs an expression in s = |p|^2"))
            else:
                try:
                    custom_hamiltonian(exp.hamiltonian.expression)
                except LabError as e:
                    issues.append(self._issue(f"{base}.hamiltonian.expression", "bad_expression", str(e)))
        elif exp.hamiltonian.expression is not None:
            issues.append(self._issue(f"{base}.hamiltonian.expression", "unused_expression",
                                      "expression is read only by custom_smooth", severity="warning"))
        for j, c in enumerate(exp.sweep.c1):
            if c < 0:
                issues.append(self._issue(f"{base}.sweep.c1.{j}", "bad_c1", f"c1 {c} must be >= 0"))

        for j, p in enumerate(exp.checks.p + exp.sweep.p):
            field = f"{base}.checks.p.{j}" if j < len(exp.checks.p) else f"{base}.sweep.p.{j - len(exp.checks.p)}"
            issues.extend(self._exponent(field, p)[1])
        for j, s in enumerate(exp.checks.interpolated_s):
            if not 1.0 < s < 2.0:
                issues.append(self._issue(f"{base}.checks.interpolated_s.{j}", "bad_index", f"index {s} must lie in (1, 2)"))
        issues.extend(self._exponent(f"{base}.checks.divb_q", exp.checks.divb_q)[1])
        issues.extend(self._check_requirements(base, exp))

        if exp.expect_status is not None and exp.expect_status not in {s.value for s in ReportStatus}:
            issues.append(self._issue(f"{base}.expect_status", "unknown_status",
                                      f"unknown status '{exp.expect_status}'",
                                      suggest(exp.expect_status, [s.value for s in ReportStatus])))
        return issues

    def _lrlq(self, base: str, exp: Experiment) -> list[ConfigIssue]:
        drift = exp.drift
        q, issues = self._exponent(f"{base}.drift.q", drift.q)
        r, r_issues = self._exponent(f"{base}.drift.r", drift.r)
        issues += r_issues
        if q is None or r is None:
            return issues
        ok, diagnostic = check_divb_admissible(ExponentPair(exp.grid.dim, drift.q, drift.r))
        if not ok:
            issues.append(self._issue(f"{base}.drift", "inadmissible_exponents",
                                      f"(q, r) = ({drift.q}, {drift.r}) in dimension {exp.grid.dim}: {diagnostic}"))
        if not 0.0 < drift.margin <= 1.0:
            issues.append(self._issue(f"{base}.drift.margin", "bad_margin", f"margin {drift.margin} must lie in (0, 1]"))
        if r != float("inf") and (drift.margin < 1.0 or exp.sweep.margin) and exp.solver.t_start <= 0:
            issues.append(self._issue(f"{base}.solver.t_start", "sigma_required",
                                      "a drift singular at t = 0 needs t_start > 0"))
        return issues

    def _check_requirements(self, base: str, exp: Experiment) -> list[ConfigIssue]:
        issues: list[ConfigIssue] = []
        suite = set(exp.suite)
        where = f"{base}.suite"
        if suite & DIVERGENCE_CLASS_CHECKS and exp.drift.kind == DriftKind.ONE_SIDED:
            issues.append(self._issue(where, "hypothesis_unmet",
                                      "stability checks need a divergence-class drift", severity="warning"))
        if TheoremId.THM_ONE_SIDED_LINF in suite and exp.drift.kind != DriftKind.ONE_SIDED:
            issues.append(self._issue(f"{base}.drift.kind", "drift_mismatch",
                                      "thm_one_sided_Linf needs the one_sided drift", severity="warning"))
        if TheoremId.THM_ONE_SIDED_LINF in suite and exp.solver.t_start <= 0:
            issues.append(self._issue(f"{base}.solver.t_start", "sigma_required", "thm_one_sided_Linf needs t_start > 0"))
        if TheoremId.THM_SUPERQUADRATIC_CD in suite:
            if exp.hamiltonian.kind != HamiltonianKind.POWER:
                issues.append(self._issue(f"{base}.hamiltonian.kind", "hamiltonian_mismatch",
                                          "thm_superquadratic_cd needs the power Hamiltonian"))
            if exp.grid.dim != 1:
                issues.append(self._issue(f"{base}.grid.dim", "dimension_mismatch", "thm_superquadratic_cd runs in 1D"))
        if TheoremId.VAL_COLE_HOPF in suite:
            if exp.hamiltonian.kind != HamiltonianKind.QUADRATIC:
                issues.append(self._issue(f"{base}.hamiltonian.kind", "hamiltonian_mismatch",
                                          "val_cole_hopf needs the quadratic Hamiltonian"))
            if any(e <= 0 for e in (exp.sweep.epsilon or [exp.solver.epsilon])):
                issues.append(self._issue(f"{base}.solver.epsilon", "bad_epsilon", "val_cole_hopf needs epsilon > 0"))
        if TheoremId.THM_III_AS_CD in suite:
            Q, q_issues = self._exponent(f"{base}.checks.aronson_serrin_q", exp.checks.aronson_serrin_q)
            R, r_issues = self._exponent(f"{base}.checks.aronson_serrin_r", exp.checks.aronson_serrin_r)
            issues += q_issues + r_issues
            if Q is not None and R is not None and not check_aronson_serrin_range(
                    exp.grid.dim, exp.checks.aronson_serrin_q, exp.checks.aronson_serrin_r):
                issues.append(self._issue(f"{base}.checks", "aronson_serrin_range",
                                          "(Q, R) outside the Aronson-Serrin range; the check reports a failed hypothesis",
                                          severity="warning"))
            for j, p in enumerate(exp.checks.p):
                parsed, _ = self._exponent(f"{base}.checks.p.{j}", p)
                if parsed is not None and parsed < 2:
                    issues.append(self._issue(f"{base}.checks.p.{j}", "bad_exponent",
                                              "the Aronson-Serrin check needs p >= 2"))
        if exp.expect_status is not None and not exp.suite:
            issues.append(self._issue(f"{base}.expect_status", "empty_control",
                                      "a negative control with an empty suite checks nothing", severity="warning"))
        return issues


class ConfigValidator:
    """Complete validation pipeline for an experiment file."""

    def __init__(self, text: str, source: str = "<string>"):
        self.text = text
        self.source = source
        self.warnings: list[ConfigIssue] = []

    @classmethod
    def from_path(cls, path: Union[str, Path]) -> "ConfigValidator":
        path = Path(path)
        if not path.exists():
            raise ConfigError([ConfigIssue(path=str(path), code="missing_file", message="file not found")])
        return cls(path.read_text(), str(path))

    def validate(self) -> ExperimentFile:
        """Run both stages; raise ConfigError listing every error, keep warnings on self."""
        try:
            index = LineIndex(self.text)
            raw = yaml.safe_load(self.text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ConfigError([ConfigIssue(path="", code="yaml_syntax", message=str(exc).splitlines()[0], line=line)])

        # Stage 1: Structural
        data, issues = StructuralValidator(index).validate(raw)
        if data is None:
            raise ConfigError(issues)

        # Stage 2: Semantic
        issues = SemanticValidator(index).validate(data)
        self.warnings = [i for i in issues if i.severity == "warning"]
        for warning in self.warnings:
            logger.warning("%s: %s", self.source, warning.render())
        errors = [i for i in issues if i.severity == "error"]
        if errors:
            raise ConfigError(errors)
        return data


def load_experiments(path: Union[str, Path]) -> ExperimentFile:
    """Parse and validate an experiment file."""
    return ConfigValidator.from_path(path).validate()
