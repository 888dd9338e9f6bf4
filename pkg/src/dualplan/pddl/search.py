from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .ast import GroundAction, PddlDomain, PddlProblem, Plan
from .ground import (
    ArityError,
    GroundTask,
    InapplicableError,
    UnknownActionError,
    apply,
    goal_satisfied,
    initial_state,
)

DEFAULT_BUDGET = 2_000_000


class SearchFailure(Exception):
    pass


class Unsolvable(SearchFailure):
    def __init__(self, expanded: int):
        self.expanded = expanded
        super().__init__(f"goal unreachable after exhausting {expanded} states")


class BudgetExhausted(SearchFailure):
    def __init__(self, expanded: int):
        self.expanded = expanded
        super().__init__(f"node budget of {expanded} states exhausted")


def solve(
    d: PddlDomain,
    p: PddlProblem,
    budget: int = DEFAULT_BUDGET,
    task: GroundTask | None = None,
) -> Plan:
    """Breadth-first forward search; the returned plan is a shortest one.

    Ties are broken by the lexicographic order of ground actions, so the
    result is reproducible. Raises :class:`Unsolvable` or
    :class:`BudgetExhausted`.
    """
    task = task or GroundTask(d, p)
    start = task.init
    if task.is_goal(start):
        return Plan(())
    parent: dict[int, tuple[int, int] | None] = {start: None}
    frontier = deque([start])
    expanded = 0
    while frontier:
        if expanded >= budget:
            raise BudgetExhausted(expanded)
        state = frontier.popleft()
        expanded += 1
        for i in task.applicable(state):
            nxt = task.successor(state, i)
            if nxt in parent:
                continue
            parent[nxt] = (state, i)
            if task.is_goal(nxt):
                return _extract(task, parent, nxt)
            frontier.append(nxt)
    raise Unsolvable(expanded)


def _extract(task: GroundTask, parent, state: int) -> Plan:
    steps = []
    while parent[state] is not None:
        prev, i = parent[state]
        steps.append(task.actions[i].action)
        state = prev
    return Plan(tuple(reversed(steps)))


@dataclass(frozen=True)
class PlanVerdict:
    valid: bool
    failed_step: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.valid


def check_plan(d: PddlDomain, p: PddlProblem, plan: Plan) -> PlanVerdict:
    """Replay ``plan`` from the initial state, VAL style."""
    state = initial_state(p)
    for i, step in enumerate(plan.steps):
        try:
            state = apply(d, state, step)
        except UnknownActionError as err:
            return PlanVerdict(False, i, str(err))
        except ArityError as err:
            return PlanVerdict(False, i, str(err))
        except InapplicableError as err:
            return PlanVerdict(False, i, str(err))
    if not goal_satisfied(p, state):
        unmet = [str(l) for l in p.goal if (l.atom in state.atoms) != l.positive]
        return PlanVerdict(False, None, "goal not satisfied: " + ", ".join(unmet))
    return PlanVerdict(True)


def plan_from_strings(lines: list[str]) -> Plan:
    return Plan(tuple(GroundAction.parse(line) for line in lines))
