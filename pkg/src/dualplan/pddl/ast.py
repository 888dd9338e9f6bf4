"""Immutable syntax trees for the STRIPS/typing subset of PDDL."""
from __future__ import annotations

from dataclasses import dataclass, field

OBJECT = "object"


@dataclass(frozen=True)
class TypedName:
    name: str
    type: str | None = None

    @property
    def effective_type(self) -> str:
        return self.type or OBJECT


@dataclass(frozen=True, order=True)
class Atom:
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return f"({self.predicate})"
        return f"({self.predicate} {' '.join(self.args)})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"(not {self.atom})"

    def negate(self) -> "Literal":
        return Literal(self.atom, not self.positive)


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    params: tuple[TypedName, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class ActionSchema:
    name: str
    parameters: tuple[TypedName, ...] = ()
    precondition: tuple[Literal, ...] = ()
    effect: tuple[Literal, ...] = ()

    @property
    def add_effects(self) -> tuple[Atom, ...]:
        return tuple(lit.atom for lit in self.effect if lit.positive)

    @property
    def del_effects(self) -> tuple[Atom, ...]:
        return tuple(lit.atom for lit in self.effect if not lit.positive)


@dataclass(frozen=True)
class PddlDomain:
    name: str
    requirements: tuple[str, ...] = ()
    types: tuple[TypedName, ...] = ()
    constants: tuple[TypedName, ...] = ()
    predicates: tuple[PredicateDecl, ...] = ()
    actions: tuple[ActionSchema, ...] = ()

    def predicate(self, name: str) -> PredicateDecl | None:
        for p in self.predicates:
            if p.name == name:
                return p
        return None

    def action(self, name: str) -> ActionSchema | None:
        for a in self.actions:
            if a.name == name:
                return a
        return None

    @property
    def type_parents(self) -> dict[str, str]:
        parents = {t.name: (t.type or OBJECT) for t in self.types}
        parents.setdefault(OBJECT, OBJECT)
        return parents

    def is_subtype(self, sub: str, sup: str) -> bool:
        if sup == OBJECT or sub == sup:
            return True
        parents = self.type_parents
        seen = set()
        while sub not in seen:
            seen.add(sub)
            if sub == sup:
                return True
            if sub not in parents or sub == OBJECT:
                return False
            sub = parents[sub]
        return False


@dataclass(frozen=True)
class PddlProblem:
    name: str
    domain_name: str
    objects: tuple[TypedName, ...] = ()
    init: tuple[Atom, ...] = ()
    goal: tuple[Literal, ...] = ()

    def object_types(self) -> dict[str, str]:
        return {o.name: o.effective_type for o in self.objects}


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return f"({self.name})"
        return f"({self.name} {' '.join(self.args)})"

    @classmethod
    def parse(cls, text: str) -> "GroundAction":
        parts = text.strip().strip("()").split()
        if not parts:
            raise ValueError(f"empty action: {text!r}")
        return cls(parts[0].lower(), tuple(p.lower() for p in parts[1:]))


@dataclass(frozen=True)
class GroundState:
    """A closed-world state: atoms not listed are false."""

    atoms: frozenset[Atom] = field(default_factory=frozenset)

    def __contains__(self, atom: Atom) -> bool:
        return atom in self.atoms

    def sorted_atoms(self) -> list[Atom]:
        return sorted(self.atoms)

    def __hash__(self) -> int:
        return hash(self.atoms)


@dataclass(frozen=True)
class Plan:
    steps: tuple[GroundAction, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def to_text(self) -> str:
        return "".join(f"{step}\n" for step in self.steps)

    @classmethod
    def from_text(cls, text: str) -> "Plan":
        steps = []
        for line in text.splitlines():
            line = line.split(";", 1)[0].strip()
            if line:
                steps.append(GroundAction.parse(line))
        return cls(tuple(steps))


def is_variable(term: str) -> bool:
    return term.startswith("?")


def substitute(atom: Atom, binding: dict[str, str]) -> Atom:
    return Atom(atom.predicate, tuple(binding.get(a, a) for a in atom.args))
