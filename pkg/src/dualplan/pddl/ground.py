"""Grounding and closed-world STRIPS semantics.

Two views are offered. The set-based functions (:func:`applicable_actions`,
:func:`apply`) work on explicit :class:`GroundState` values and are exact for
any state. :class:`GroundTask` compiles a pair into integer bitmasks using
relaxed reachability from the initial state; it is what search and random
walks use.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .ast import (
    ActionSchema,
    Atom,
    GroundAction,
    GroundState,
    Literal,
    PddlDomain,
    PddlProblem,
    is_variable,
    substitute,
)


class PddlExecutionError(Exception):
    pass


class UnknownActionError(PddlExecutionError):
    pass


class ArityError(PddlExecutionError):
    pass


class InapplicableError(PddlExecutionError):
    def __init__(self, action: GroundAction, unmet: list[Literal]):
        self.action = action
        self.unmet = unmet
        detail = ", ".join(str(l) for l in unmet)
        super().__init__(f"inapplicable: {action} (unmet: {detail})")


def initial_state(p: PddlProblem) -> GroundState:
    return GroundState(frozenset(p.init))


def holds(lits: Iterable[Literal], s: GroundState) -> bool:
    return all((lit.atom in s.atoms) == lit.positive for lit in lits)


def goal_satisfied(p: PddlProblem, s: GroundState) -> bool:
    return holds(p.goal, s)


def _objects_by_name(d: PddlDomain, p: PddlProblem | None) -> dict[str, str]:
    objs = {c.name: c.effective_type for c in d.constants}
    if p is not None:
        objs.update(p.object_types())
    return objs


def instantiate(schema: ActionSchema, args: tuple[str, ...]) -> tuple[list[Literal], list[Literal]]:
    if len(args) != len(schema.parameters):
        raise ArityError(
            f"action {schema.name} takes {len(schema.parameters)} argument(s), got {len(args)}"
        )
    binding = {param.name: arg for param, arg in zip(schema.parameters, args)}
    pre = [Literal(substitute(l.atom, binding), l.positive) for l in schema.precondition]
    eff = [Literal(substitute(l.atom, binding), l.positive) for l in schema.effect]
    return pre, eff


def unmet_preconditions(d: PddlDomain, s: GroundState, a: GroundAction) -> list[Literal]:
    schema = d.action(a.name)
    if schema is None:
        raise UnknownActionError(f"unknown action {a.name}")
    pre, _ = instantiate(schema, a.args)
    return [lit for lit in pre if (lit.atom in s.atoms) != lit.positive]


def apply(d: PddlDomain, s: GroundState, a: GroundAction) -> GroundState:
    """Delete-then-add successor; raises if ``a`` is not applicable in ``s``."""
    schema = d.action(a.name)
    if schema is None:
        raise UnknownActionError(f"unknown action {a.name}")
    pre, eff = instantiate(schema, a.args)
    unmet = [lit for lit in pre if (lit.atom in s.atoms) != lit.positive]
    if unmet:
        raise InapplicableError(a, unmet)
    atoms = set(s.atoms)
    atoms.difference_update(l.atom for l in eff if not l.positive)
    atoms.update(l.atom for l in eff if l.positive)
    return GroundState(frozenset(atoms))


def _facts_by_predicate(atoms: Iterable[Atom]) -> dict[str, list[tuple[str, ...]]]:
    out: dict[str, list[tuple[str, ...]]] = {}
    for atom in atoms:
        out.setdefault(atom.predicate, []).append(atom.args)
    return out


class _FactIndex:
    """Facts grouped by predicate, with per-position lookup tables."""

    def __init__(self, facts: dict[str, list[tuple[str, ...]]]):
        self.facts = facts
        self.by_pos: dict[tuple[str, int, str], list[tuple[str, ...]]] = {}
        for pred, rows in facts.items():
            for row in rows:
                for i, v in enumerate(row):
                    self.by_pos.setdefault((pred, i, v), []).append(row)

    def candidates(self, pred: str, bound: list[tuple[int, str]]) -> list[tuple[str, ...]]:
        best = self.facts.get(pred, ())
        for i, v in bound:
            rows = self.by_pos.get((pred, i, v), ())
            if len(rows) < len(best):
                best = rows
        return best


def _join(
    d: PddlDomain,
    schema: ActionSchema,
    positive: list[Atom],
    facts: dict[str, list[tuple[str, ...]]] | _FactIndex,
    objects: dict[str, str],
) -> Iterator[dict[str, str]]:
    """Enumerate parameter bindings satisfying every atom in ``positive``."""
    index = facts if isinstance(facts, _FactIndex) else _FactIndex(facts)
    param_types = {p.name: p.effective_type for p in schema.parameters}
    type_cache: dict[tuple[str, str], bool] = {}
    terms = [(atom.predicate, tuple((a, is_variable(a)) for a in atom.args)) for atom in positive]

    def type_ok(var: str, obj: str) -> bool:
        if obj not in objects:
            return False
        key = (objects[obj], param_types[var])
        if key not in type_cache:
            type_cache[key] = d.is_subtype(*key)
        return type_cache[key]

    def pick(remaining: list, binding: dict[str, str]) -> int:
        best, best_n = 0, None
        for i, (pred, args) in enumerate(remaining):
            bound = [(j, binding[a] if var else a) for j, (a, var) in enumerate(args) if not var or a in binding]
            n = len(index.candidates(pred, bound))
            if best_n is None or n < best_n:
                best, best_n = i, n
        return best

    def rec(remaining: list, binding: dict[str, str]) -> Iterator[dict[str, str]]:
        if not remaining:
            yield binding
            return
        idx = pick(remaining, binding)
        pred, args = remaining[idx]
        rest = remaining[:idx] + remaining[idx + 1:]
        bound = [(j, binding[a] if var else a) for j, (a, var) in enumerate(args) if not var or a in binding]
        for row in index.candidates(pred, bound):
            if len(row) != len(args):
                continue
            new = binding
            ok = True
            for (term, var), value in zip(args, row):
                if var:
                    if term not in param_types:
                        ok = False
                        break
                    cur = new.get(term)
                    if cur is None:
                        if not type_ok(term, value):
                            ok = False
                            break
                        if new is binding:
                            new = dict(binding)
                        new[term] = value
                    elif cur != value:
                        ok = False
                        break
                elif term != value:
                    ok = False
                    break
            if ok:
                yield from rec(rest, new)

    yield from rec(terms, {})


def _complete(
    d: PddlDomain, schema: ActionSchema, binding: dict[str, str], objects: dict[str, str]
) -> Iterator[tuple[str, ...]]:
    """Extend a partial binding over the typed domains of unbound parameters."""
    params = schema.parameters
    sorted_objs = sorted(objects)
    domains = []
    for p in params:
        if p.name in binding:
            domains.append([binding[p.name]])
        else:
            want = p.effective_type
            domains.append([o for o in sorted_objs if d.is_subtype(objects[o], want)])

    def rec(i: int, acc: list[str]) -> Iterator[tuple[str, ...]]:
        if i == len(domains):
            yield tuple(acc)
            return
        for o in domains[i]:
            acc.append(o)
            yield from rec(i + 1, acc)
            acc.pop()

    yield from rec(0, [])


def applicable_actions(d: PddlDomain, p: PddlProblem, s: GroundState) -> list[GroundAction]:
    """All ground actions whose preconditions hold in ``s``, sorted by name then args."""
    objects = _objects_by_name(d, p)
    facts = _facts_by_predicate(s.atoms)
    result: set[GroundAction] = set()
    for schema in d.actions:
        positive = [l.atom for l in schema.precondition if l.positive]
        for binding in _join(d, schema, positive, facts, objects):
            for args in _complete(d, schema, binding, objects):
                pre, _ = instantiate(schema, args)
                if holds(pre, s):
                    result.add(GroundAction(schema.name, args))
    return sorted(result, key=lambda a: (a.name, a.args))


@dataclass(frozen=True)
class CompiledAction:
    action: GroundAction
    pre_pos: int
    pre_neg: int
    add: int
    delete: int


class GroundTask:
    """Bitmask compilation of a domain/problem pair for fast search."""

    def __init__(self, d: PddlDomain, p: PddlProblem):
        self.domain = d
        self.problem = p
        objects = _objects_by_name(d, p)
        reachable = self._relaxed_reachable(d, p, objects)
        init_set = set(p.init)
        fluent_preds = {l.atom.predicate for a in d.actions for l in a.effect}

        ground: set[tuple[str, tuple[str, ...]]] = set()
        facts = _FactIndex(_facts_by_predicate(reachable))
        for schema in d.actions:
            positive = [l.atom for l in schema.precondition if l.positive]
            for binding in _join(d, schema, positive, facts, objects):
                for args in _complete(d, schema, binding, objects):
                    pre, _ = instantiate(schema, args)
                    if any(
                        not l.positive and l.atom.predicate not in fluent_preds and l.atom in init_set
                        for l in pre
                    ):
                        continue
                    ground.add((schema.name, args))

        atoms = set(reachable)
        for atom in p.goal:
            atoms.add(atom.atom)
        compiled_raw = []
        for name, args in sorted(ground):
            pre, eff = instantiate(d.action(name), args)
            compiled_raw.append((GroundAction(name, args), pre, eff))
            for lit in pre + eff:
                atoms.add(lit.atom)
        self.atoms: list[Atom] = sorted(atoms)
        self.index: dict[Atom, int] = {a: i for i, a in enumerate(self.atoms)}

        def mask(lits: Iterable[Atom]) -> int:
            m = 0
            for a in lits:
                m |= 1 << self.index[a]
            return m

        self.actions: list[CompiledAction] = []
        for ga, pre, eff in compiled_raw:
            self.actions.append(
                CompiledAction(
                    ga,
                    mask(l.atom for l in pre if l.positive),
                    mask(l.atom for l in pre if not l.positive),
                    mask(l.atom for l in eff if l.positive),
                    mask(l.atom for l in eff if not l.positive),
                )
            )
        self.by_action = {ca.action: i for i, ca in enumerate(self.actions)}
        self.init = mask(p.init)
        self.goal_pos = mask(l.atom for l in p.goal if l.positive)
        self.goal_neg = mask(l.atom for l in p.goal if not l.positive)
        self._build_triggers(init_set)

    @staticmethod
    def _relaxed_reachable(d: PddlDomain, p: PddlProblem, objects: dict[str, str]) -> set[Atom]:
        reached = set(p.init)
        while True:
            facts = _FactIndex(_facts_by_predicate(reached))
            new: set[Atom] = set()
            for schema in d.actions:
                positive = [l.atom for l in schema.precondition if l.positive]
                adds = [l.atom for l in schema.effect if l.positive]
                if not adds:
                    continue
                for binding in _join(d, schema, positive, facts, objects):
                    for args in _complete(d, schema, binding, objects):
                        b = {prm.name: v for prm, v in zip(schema.parameters, args)}
                        for atom in adds:
                            g = substitute(atom, b)
                            if g not in reached:
                                new.add(g)
            if not new:
                return reached
            reached |= new

    def _build_triggers(self, init_set: set[Atom]) -> None:
        count: dict[str, int] = {}
        for atom in init_set:
            count[atom.predicate] = count.get(atom.predicate, 0) + 1
        self.triggers: dict[int, list[int]] = {}
        self.untriggered: list[int] = []
        for i, ca in enumerate(self.actions):
            if not ca.pre_pos:
                self.untriggered.append(i)
                continue
            best = None
            m = ca.pre_pos
            while m:
                low = m & -m
                bit = low.bit_length() - 1
                key = (count.get(self.atoms[bit].predicate, 0), bit)
                if best is None or key < best[0]:
                    best = (key, bit)
                m ^= low
            self.triggers.setdefault(best[1], []).append(i)
        self.trigger_bits = sorted(self.triggers)

    def is_applicable(self, state: int, i: int) -> bool:
        ca = self.actions[i]
        return (state & ca.pre_pos) == ca.pre_pos and not (state & ca.pre_neg)

    def applicable(self, state: int) -> list[int]:
        out = [i for i in self.untriggered if self.is_applicable(state, i)]
        for bit in self.trigger_bits:
            if (state >> bit) & 1:
                out.extend(i for i in self.triggers[bit] if self.is_applicable(state, i))
        out.sort()
        return out

    def successor(self, state: int, i: int) -> int:
        ca = self.actions[i]
        return (state & ~ca.delete) | ca.add

    def is_goal(self, state: int) -> bool:
        return (state & self.goal_pos) == self.goal_pos and not (state & self.goal_neg)

    def lookup(self, action: GroundAction) -> int | None:
        return self.by_action.get(action)

    def to_state(self, state: int) -> GroundState:
        atoms = []
        m = state
        while m:
            low = m & -m
            atoms.append(self.atoms[low.bit_length() - 1])
            m ^= low
        return GroundState(frozenset(atoms))

    def from_state(self, s: GroundState) -> int:
        m = 0
        for a in s.atoms:
            if a in self.index:
                m |= 1 << self.index[a]
        return m
