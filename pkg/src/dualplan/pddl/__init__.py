"""PDDL subset: parsing, validation, grounding, planning and printing."""
from .ast import (
    ActionSchema,
    Atom,
    GroundAction,
    GroundState,
    Literal,
    PddlDomain,
    PddlProblem,
    Plan,
    PredicateDecl,
    TypedName,
)
from .ground import (
    ArityError,
    GroundTask,
    InapplicableError,
    PddlExecutionError,
    UnknownActionError,
    applicable_actions,
    apply,
    goal_satisfied,
    initial_state,
)
from .parser import ParseIssue, PddlParseError, parse_domain, parse_problem
from .printer import print_domain, print_problem
from .search import BudgetExhausted, PlanVerdict, SearchFailure, Unsolvable, check_plan, solve
from .validate import ValidationReport, Violation, validate_pair

__all__ = [
    "ActionSchema",
    "ArityError",
    "Atom",
    "BudgetExhausted",
    "GroundAction",
    "GroundState",
    "GroundTask",
    "InapplicableError",
    "Literal",
    "ParseIssue",
    "PddlDomain",
    "PddlExecutionError",
    "PddlParseError",
    "PddlProblem",
    "Plan",
    "PlanVerdict",
    "PredicateDecl",
    "SearchFailure",
    "TypedName",
    "UnknownActionError",
    "Unsolvable",
    "ValidationReport",
    "Violation",
    "applicable_actions",
    "apply",
    "check_plan",
    "goal_satisfied",
    "initial_state",
    "parse_domain",
    "parse_problem",
    "print_domain",
    "print_problem",
    "solve",
    "validate_pair",
]
