"""Structural and semantic checks on a domain/problem pair."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .ast import OBJECT, Atom, Literal, PddlDomain, PddlProblem, is_variable


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    where: str = ""


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def add(self, code: str, message: str, where: str = "") -> None:
        v = Violation(code, message, where)
        if v not in self.violations:
            self.violations.append(v)

    def messages(self) -> list[str]:
        return [v.message for v in self.violations]

    def to_json(self) -> str:
        return json.dumps({"valid": self.valid, "violations": [asdict(v) for v in self.violations]}, indent=2)

    def to_text(self) -> str:
        if self.valid:
            return "valid"
        return "\n".join(f"- {v.message}" + (f" (in {v.where})" if v.where else "") for v in self.violations)


def validate_domain(d: PddlDomain, report: ValidationReport | None = None) -> ValidationReport:
    report = report if report is not None else ValidationReport()
    declared_types = {t.name for t in d.types} | {OBJECT}
    for t in d.types:
        if t.type is not None and t.type not in declared_types:
            report.add("undeclared-type", f"undeclared type {t.type}", f"type {t.name}")
    if ":typing" not in d.requirements and d.types:
        report.add("missing-requirement", "types declared without :typing requirement")

    preds: dict[str, int] = {}
    for p in d.predicates:
        if p.name in preds:
            report.add("duplicate-predicate", f"duplicate predicate {p.name}")
        preds[p.name] = p.arity
        for param in p.params:
            if param.type is not None and param.type not in declared_types:
                report.add("undeclared-type", f"undeclared type {param.type}", f"predicate {p.name}")

    seen_actions = set()
    for a in d.actions:
        where = f"action {a.name}"
        if a.name in seen_actions:
            report.add("duplicate-action", f"duplicate action {a.name}")
        seen_actions.add(a.name)
        names = [p.name for p in a.parameters]
        if len(set(names)) != len(names):
            report.add("duplicate-parameter", f"duplicate parameter name in action {a.name}", where)
        for param in a.parameters:
            if not is_variable(param.name):
                report.add("bad-parameter", f"parameter {param.name} must start with '?'", where)
            if param.type is not None and param.type not in declared_types:
                report.add("undeclared-type", f"undeclared type {param.type}", where)
        for lit in a.precondition + a.effect:
            _check_literal(report, lit, preds, where)
            for arg in lit.atom.args:
                if is_variable(arg) and arg not in names:
                    report.add("free-variable", f"variable {arg} is not a parameter of action {a.name}", where)
        adds = {lit.atom for lit in a.effect if lit.positive}
        dels = {lit.atom for lit in a.effect if not lit.positive}
        for atom in sorted(adds & dels):
            report.add("effect-conflict", f"atom {atom} is both added and deleted by action {a.name}", where)
    return report


def _check_literal(report: ValidationReport, lit: Literal, preds: dict[str, int], where: str) -> None:
    name = lit.atom.predicate
    if name not in preds:
        report.add("undeclared-predicate", f"undeclared predicate {name}", where)
    elif preds[name] != len(lit.atom.args):
        report.add(
            "arity-mismatch",
            f"arity mismatch: {name} expects {preds[name]} argument(s), got {len(lit.atom.args)} in {lit.atom}",
            where,
        )


def validate_pair(d: PddlDomain, p: PddlProblem) -> ValidationReport:
    """Prescreening check. Violations are returned as data, never raised."""
    report = validate_domain(d)
    if p.domain_name != d.name:
        report.add("domain-mismatch", f"problem refers to domain {p.domain_name} but domain is named {d.name}")
    declared_types = {t.name for t in d.types} | {OBJECT}
    obj_types: dict[str, str] = {}
    for o in list(d.constants) + list(p.objects):
        if o.name in obj_types:
            report.add("duplicate-object", f"duplicate object {o.name}")
        obj_types[o.name] = o.effective_type
        if o.type is not None and o.type not in declared_types:
            report.add("undeclared-type", f"undeclared type {o.type}", f"object {o.name}")
    preds = {pd.name: pd for pd in d.predicates}

    def check_ground(atom: Atom, where: str) -> None:
        decl = preds.get(atom.predicate)
        if decl is None:
            report.add("undeclared-predicate", f"undeclared predicate {atom.predicate}", where)
            return
        if decl.arity != len(atom.args):
            report.add(
                "arity-mismatch",
                f"arity mismatch: {atom.predicate} expects {decl.arity} argument(s), got {len(atom.args)} in {atom}",
                where,
            )
            return
        for arg, param in zip(atom.args, decl.params):
            if arg not in obj_types:
                report.add("undeclared-object", f"undeclared object {arg} in {atom}", where)
                continue
            want = param.effective_type
            if not d.is_subtype(obj_types[arg], want):
                report.add(
                    "type-mismatch",
                    f"type mismatch: {arg} has type {obj_types[arg]} but {atom.predicate} expects {want}",
                    where,
                )

    for atom in p.init:
        check_ground(atom, "init")
    for lit in p.goal:
        check_ground(lit.atom, "goal")

    for a in d.actions:
        for lit in a.precondition + a.effect:
            for arg in lit.atom.args:
                if not is_variable(arg) and arg not in obj_types:
                    report.add("undeclared-object", f"undeclared object {arg} in action {a.name}", f"action {a.name}")
    return report
