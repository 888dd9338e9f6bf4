"""Canonical text output for domain and problem trees."""
from __future__ import annotations

from .ast import OBJECT, Literal, PddlDomain, PddlProblem, TypedName


def _typed(names: tuple[TypedName, ...]) -> str:
    return " ".join(_typed_groups(names))


def _typed_groups(names: tuple[TypedName, ...]) -> list[str]:
    # an untyped run followed by a typed one must say "- object" explicitly
    groups: list[str] = []
    i = 0
    while i < len(names):
        j = i
        while j < len(names) and names[j].type == names[i].type:
            j += 1
        group = " ".join(n.name for n in names[i:j])
        if names[i].type is not None:
            group += f" - {names[i].type}"
        elif any(n.type is not None for n in names[j:]):
            group += f" - {OBJECT}"
        groups.append(group)
        i = j
    return groups


def _conj(lits: tuple[Literal, ...], indent: str) -> str:
    if not lits:
        return "()"
    inner = "".join(f"\n{indent}  {lit}" for lit in lits)
    return f"(and{inner}\n{indent})"


def print_domain(d: PddlDomain) -> str:
    out = [f"(define (domain {d.name})"]
    if d.requirements:
        out.append(f"  (:requirements {' '.join(d.requirements)})")
    if d.types:
        out.append(f"  (:types {_typed(d.types)})")
    if d.constants:
        out.append(f"  (:constants {_typed(d.constants)})")
    out.append("  (:predicates")
    for p in d.predicates:
        params = _typed(p.params)
        out.append(f"    ({p.name}{' ' + params if params else ''})")
    out.append("  )")
    for a in d.actions:
        out.append(f"  (:action {a.name}")
        out.append(f"    :parameters ({_typed(a.parameters)})")
        out.append(f"    :precondition {_conj(a.precondition, '    ')}")
        out.append(f"    :effect {_conj(a.effect, '    ')}")
        out.append("  )")
    out.append(")")
    return "\n".join(out) + "\n"


def print_problem(p: PddlProblem) -> str:
    out = [f"(define (problem {p.name})", f"  (:domain {p.domain_name})"]
    out.append("  (:objects")
    for group in _typed_groups(p.objects):
        out.append(f"    {group}")
    out.append("  )")
    out.append("  (:init")
    for atom in p.init:
        out.append(f"    {atom}")
    out.append("  )")
    out.append(f"  (:goal {_conj(p.goal, '  ')})")
    out.append(")")
    return "\n".join(out) + "\n"
