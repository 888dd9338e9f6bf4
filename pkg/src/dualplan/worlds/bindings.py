"""Correspondence between simulator action labels and PDDL action schemas.

A label maps to one or more schemas plus required parameter values, keyed by
parameter *name*. Generated domains are asked to keep the template's action
names and parameter names, so the same table serves golden and generated files.
"""
from __future__ import annotations

from ..pddl import GroundAction, GroundTask, PddlDomain
from .scenario import ACTION_VOCAB, DIRECTIONS

Binding = tuple[tuple[str, tuple[tuple[str, str], ...]], ...]


def _moves_by_schema() -> dict[str, Binding]:
    return {f"move {d}": ((f"move-{d}", ()),) for d in DIRECTIONS}


def _same_name(domain: str) -> dict[str, Binding]:
    return {a: ((a, ()),) for a in ACTION_VOCAB[domain]}


LABEL_BINDINGS: dict[str, dict[str, Binding]] = {
    "frozenlake": _moves_by_schema(),
    "maze": _moves_by_schema(),
    "sokoban": {
        f"move {d}": tuple((s, (("?dir", d),)) for s in ("move", "push-to-goal", "push-to-nongoal"))
        for d in DIRECTIONS
    },
    "package": _same_name("package"),
    "printer": _same_name("printer"),
    "overcooked": {
        **{f"move {d}": (("move", (("?dir", d),)),) for d in DIRECTIONS},
        **{a: ((a, ()),) for a in ACTION_VOCAB["overcooked"][4:]},
    },
}


def _matches(pddl: PddlDomain, ga: GroundAction, schema: str, required) -> bool:
    if ga.name != schema:
        return False
    sch = pddl.action(schema)
    if sch is None or len(sch.parameters) != len(ga.args):
        return False
    values = {p.name: v for p, v in zip(sch.parameters, ga.args)}
    return all(values.get(k) == v for k, v in required)


def label_for(domain: str, pddl: PddlDomain, ga: GroundAction) -> str | None:
    """Simulator label of a ground PDDL action, or None when it has no counterpart."""
    for label, cands in LABEL_BINDINGS[domain].items():
        for schema, required in cands:
            if _matches(pddl, ga, schema, required):
                return label
    return None


def label_index(domain: str, task: GroundTask) -> dict[str, list[int]]:
    """For each label, the compiled-action indices it may execute, in task order."""
    out: dict[str, list[int]] = {label: [] for label in LABEL_BINDINGS[domain]}
    pddl = task.domain
    for i, ca in enumerate(task.actions):
        label = label_for(domain, pddl, ca.action)
        if label is not None:
            out[label].append(i)
    return out


def first_applicable(task: GroundTask, candidates: list[int], state: int) -> int | None:
    """Lexicographically first applicable grounding among ``candidates``."""
    for i in candidates:
        if task.is_applicable(state, i):
            return i
    return None
