"""Request and result types shared by every generator."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..pddl import PddlDomain, PddlParseError, PddlProblem, parse_domain, parse_problem


class Phase(str, enum.Enum):
    INITIAL_PROBLEM = "InitialProblem"
    INITIAL_DOMAIN = "InitialDomain"
    REFINE = "Refine"
    INSTANTIATE_PROBLEM = "InstantiateProblem"


class RequestError(ValueError):
    """A request violates the invariants of its phase."""


class GenerationError(RuntimeError):
    """The generator could not produce a reply (transport failure and the like)."""


@dataclass
class GenRequest:
    phase: Phase
    domain: str  # domain id, e.g. "frozenlake"
    domain_text: str = ""  # natural-language domain description
    scenario_text: str = ""  # natural-language scenario description
    scene: object = None  # image reference: a GridScenario, a PNG path or raw bytes
    prior_domain: str | None = None
    prior_problem: str | None = None
    feedback: str = ""
    example_problem: str | None = None
    iteration: int = 0

    def __post_init__(self):
        self.phase = Phase(self.phase)
        self.check()

    def check(self) -> "GenRequest":
        if self.phase is Phase.REFINE:
            if self.prior_domain is None or self.prior_problem is None:
                raise RequestError("a refine request needs both prior files")
            if not self.feedback.strip():
                raise RequestError("a refine request needs non-empty feedback")
        if self.phase is Phase.INITIAL_DOMAIN and self.prior_problem is None:
            raise RequestError("domain generation needs the generated problem file")
        if self.phase is Phase.INSTANTIATE_PROBLEM and not self.example_problem:
            raise RequestError("problem instantiation needs an example problem file")
        return self


@dataclass
class GenResult:
    """Raw texts as produced, plus whatever parsed. Nothing is repaired here."""

    domain_text: str | None = None
    problem_text: str | None = None
    raw: str = ""
    domain: PddlDomain | None = None
    problem: PddlProblem | None = None
    errors: list[str] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def parse(self) -> "GenResult":
        self.errors = []
        self.domain = self.problem = None
        if self.domain_text is not None:
            try:
                self.domain = parse_domain(self.domain_text)
            except PddlParseError as exc:
                self.errors.append(f"domain file could not be parsed: {exc}")
        if self.problem_text is not None:
            try:
                self.problem = parse_problem(self.problem_text)
            except PddlParseError as exc:
                self.errors.append(f"problem file could not be parsed: {exc}")
        return self
