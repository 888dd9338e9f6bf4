"""Catalog of seeded PDDL defects standing in for generator mistakes.

Every defect is a small edit of the ground-truth pair for a scenario. An
:class:`Injection` records what was changed, which file(s) must be restored to
undo it, and the *signature* of the feedback that points at it: the verdict
kind (``allow``, ``deny`` or ``goal``) and the action labels the first
mismatch may name, plus validator codes for defects prescreening catches.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from ..pddl import ActionSchema, Atom, Literal, PddlDomain, PddlProblem, TypedName
from ..worlds.golden import to_ground_truth_pddl
from ..worlds.rules import SUCCESS, step
from ..worlds.scenario import ACTION_VOCAB, DIRECTIONS, MOVES, GridScenario, pos_name, shift

DEFECTS = (
    "missing-predicate",
    "wrong-arity",
    "missing-precondition",
    "wrong-effect-sign",
    "extra-precondition",
    "missing-direction-atom",
    "missing-object-typing",
    "wrong-goal-atom",
    "missing-goal-state-predicate",
)

ALIASES = {
    "missing-hole-precondition": "missing-precondition",
    "missing-predicate-declaration": "missing-predicate",
    "missing-direction-atoms": "missing-direction-atom",
    "missing-goal-predicate": "missing-goal-state-predicate",
}

ALLOW, DENY, GOAL = "allow", "deny", "goal"

# predicate whose concept is dropped entirely by "missing-predicate"
MISSING_PREDICATE = {
    "frozenlake": "ice-hole",
    "maze": "wall",
    "sokoban": "clear",
    "package": "facing",
    "printer": "desk",
    "overcooked": "floor",
}


class DefectNotApplicable(ValueError):
    """The scenario offers no target for this defect."""


def canonical(defect_id: str) -> str:
    key = defect_id.strip().lower().replace("_", "-")
    key = ALIASES.get(key, key)
    if key not in DEFECTS:
        raise KeyError(f"unknown defect {defect_id!r}; known: {', '.join(DEFECTS)}")
    return key


@dataclass(frozen=True)
class Injection:
    defect: str
    domain: str
    detail: str
    touched: tuple[str, ...]  # "domain" and/or "problem"
    verdicts: frozenset
    labels: tuple[str, ...] = ()  # empty: any label
    prescreen: tuple[str, ...] = ()  # validator codes that flag this defect
    names: tuple[str, ...] = ()  # symbols the validator message mentions
    expected_feedback: str = ""


@dataclass
class Injected:
    injection: Injection
    domain: PddlDomain
    problem: PddlProblem
    golden: tuple[PddlDomain, PddlProblem] = field(repr=False, default=None)


# AST edits


def _map_actions(d: PddlDomain, fn) -> PddlDomain:
    return replace(d, actions=tuple(fn(a) for a in d.actions))


def _drop_literals(lits, pred: str, positive: bool | None = None, arg: str | None = None):
    def hit(lit: Literal) -> bool:
        if lit.atom.predicate != pred:
            return False
        if positive is not None and lit.positive != positive:
            return False
        return arg is None or arg in lit.atom.args

    return tuple(l for l in lits if not hit(l))


def _adjacency(domain: str, direction: str) -> str:
    if domain == "frozenlake":
        return f"{direction}_direction"
    if domain == "maze":
        return f"move-dir-{direction}"
    return "move-dir"


def _move_schema(domain: str, direction: str) -> str:
    return f"move-{direction}" if domain in ("frozenlake", "maze") else "move"


def _move_labels(domain: str, direction: str) -> tuple[str, ...]:
    if domain in ("frozenlake", "maze"):
        return (f"move {direction}",)
    if domain in ("package", "printer"):
        return ("move",)
    return MOVES


def _open_neighbours(sc: GridScenario) -> list[tuple[str, tuple[int, int]]]:
    """Directions in which the agent can successfully step from its start cell."""
    out = []
    for d in DIRECTIONS:
        if sc.domain in ("package", "printer"):
            probe, label = sc.evolve(facing=d), "move"
        else:
            probe, label = sc, f"move {d}"
        res = step(probe, label)
        if res.result == SUCCESS and res.scenario.agent == shift(sc.agent, d):
            out.append((d, shift(sc.agent, d)))
    return out


def _pick_neighbour(sc: GridScenario, rng) -> tuple[str, tuple[int, int]]:
    opts = _open_neighbours(sc)
    if not opts:
        raise DefectNotApplicable("the agent cannot step anywhere from its start cell")
    return opts[rng.randrange(len(opts))]


# defects


def _missing_predicate(sc, d, p, rng):
    pred = MISSING_PREDICATE[sc.domain]
    if not any(a.predicate == pred for a in p.init) and pred not in ("clear", "floor"):
        raise DefectNotApplicable(f"the scenario has no {pred} atoms")
    nd = replace(
        d,
        predicates=tuple(x for x in d.predicates if x.name != pred),
        actions=tuple(
            replace(a, precondition=_drop_literals(a.precondition, pred), effect=_drop_literals(a.effect, pred))
            for a in d.actions
        ),
    )
    np_ = replace(
        p,
        init=tuple(a for a in p.init if a.predicate != pred),
        goal=tuple(l for l in p.goal if l.atom.predicate != pred),
    )
    verdicts = {ALLOW, DENY, GOAL} if sc.domain == "package" else {ALLOW}
    labels = {"printer": ("move", "toggle-on"), "package": ()}.get(sc.domain, MOVES)
    return nd, np_, Injection(
        "missing-predicate", sc.domain, f"predicate {pred} missing from both files", ("domain", "problem"),
        frozenset(verdicts), labels,
        expected_feedback=f"the PDDL files allow an action the simulator rejects because of {pred}",
    )


def _wrong_arity(sc, d, p, rng):
    direction, _ = _pick_neighbour(sc, rng)
    schema, pred = _move_schema(sc.domain, direction), _adjacency(sc.domain, direction)

    def edit(a: ActionSchema) -> ActionSchema:
        if a.name != schema:
            return a
        pre = tuple(
            Literal(Atom(l.atom.predicate, l.atom.args[:-1]), l.positive) if l.atom.predicate == pred else l
            for l in a.precondition
        )
        return replace(a, precondition=pre)

    return _map_actions(d, edit), p, Injection(
        "wrong-arity", sc.domain, f"{pred} used with one argument too few in {schema}", ("domain",),
        frozenset({DENY}), _move_labels(sc.domain, direction), ("arity-mismatch",), (pred,),
        expected_feedback=f"the PDDL files do not allow {_move_labels(sc.domain, direction)[0]} where the simulator succeeds",
    )


def _missing_precondition(sc, d, p, rng):
    dom = sc.domain
    if dom == "frozenlake":
        if not sc.cells_of("hole"):
            raise DefectNotApplicable("no ice holes")
        drop = lambda a: replace(a, precondition=_drop_literals(a.precondition, "ice-hole", False))
        detail, labels = "move actions lack (not (ice-hole ?from)) and (not (ice-hole ?to))", MOVES
    elif dom == "maze":
        if not sc.cells_of("wall"):
            raise DefectNotApplicable("no walls")
        drop = lambda a: replace(a, precondition=_drop_literals(a.precondition, "wall", False))
        detail, labels = "move actions lack (not (wall ?to))", MOVES
    else:
        pred, positive = {
            "sokoban": ("clear", True),
            "package": ("facing", True),
            "printer": ("desk", False),
            "overcooked": ("floor", True),
        }[dom]
        if dom == "printer" and not sc.cells_of("desk"):
            raise DefectNotApplicable("no desks")

        def drop(a: ActionSchema) -> ActionSchema:
            if a.name != "move":
                return a
            return replace(a, precondition=_drop_literals(a.precondition, pred, positive))

        sign = f"({pred} ?to)" if positive else f"(not ({pred} ?to))"
        detail = f"move lacks {sign}" if pred != "facing" else "move lacks (facing ?dir)"
        labels = ("move",) if dom in ("package", "printer") else MOVES
    return _map_actions(d, lambda a: drop(a) if a.name.startswith("move") else a), p, Injection(
        "missing-precondition", dom, detail, ("domain",), frozenset({ALLOW}), labels,
        expected_feedback=f"the PDDL files allow {labels[0]} where the simulator says it is unsuccessful",
    )


def _wrong_effect_sign(sc, d, p, rng):
    direction, _ = _pick_neighbour(sc, rng)
    schema = _move_schema(sc.domain, direction)

    def edit(a: ActionSchema) -> ActionSchema:
        if a.name != schema:
            return a
        eff = tuple(
            l.negate() if l.positive and l.atom.predicate == "at" and l.atom.args == ("?to",) else l
            for l in a.effect
        )
        return replace(a, effect=eff)

    return _map_actions(d, edit), p, Injection(
        "wrong-effect-sign", sc.domain, f"{schema} deletes (at ?to) instead of adding it", ("domain",),
        frozenset({DENY, GOAL}),
        expected_feedback="the PDDL files do not allow a follow-up action after a move",
    )


def _extra_precondition(sc, d, p, rng):
    direction, _ = _pick_neighbour(sc, rng)
    schema, pred = _move_schema(sc.domain, direction), _adjacency(sc.domain, direction)

    def edit(a: ActionSchema) -> ActionSchema:
        if a.name != schema:
            return a
        adj = next(l for l in a.precondition if l.atom.predicate == pred)
        args = (adj.atom.args[1], adj.atom.args[0]) + adj.atom.args[2:]
        return replace(a, precondition=a.precondition + (Literal(Atom(pred, args)),))

    labels = _move_labels(sc.domain, direction)
    return _map_actions(d, edit), p, Injection(
        "extra-precondition", sc.domain, f"{schema} also requires the reversed {pred} link", ("domain",),
        frozenset({DENY}), labels,
        expected_feedback=f"executing {labels[0]} here should be Successful but the PDDL files do not allow it",
    )


def _missing_direction_atom(sc, d, p, rng):
    direction, q = _pick_neighbour(sc, rng)
    pred = _adjacency(sc.domain, direction)
    args = (pos_name(sc.agent), pos_name(q))
    if pred == "move-dir":
        args += (direction,)
    gone = Atom(pred, args)
    if gone not in p.init:
        raise DefectNotApplicable(f"{gone} is not in the problem")
    labels = _move_labels(sc.domain, direction)
    return d, replace(p, init=tuple(a for a in p.init if a != gone)), Injection(
        "missing-direction-atom", sc.domain, f"init lacks {gone}", ("problem",), frozenset({DENY}), labels,
        names=(str(gone),),
        expected_feedback=f"the PDDL files do not allow {labels[0]} from {args[0]}; the closest grounding misses {gone}",
    )


def _missing_object_typing(sc, d, p, rng):
    if not d.types:
        raise DefectNotApplicable("the domain is untyped")
    _, q = _pick_neighbour(sc, rng)
    name = pos_name(q)
    objects = tuple(TypedName(o.name, None) if o.name == name else o for o in p.objects)
    labels = ("move",) if sc.domain in ("package", "printer") else MOVES
    return d, replace(p, objects=objects), Injection(
        "missing-object-typing", sc.domain, f"object {name} has no type", ("problem",), frozenset({DENY}),
        labels, ("type-mismatch",), (name,),
        expected_feedback=f"the PDDL files do not allow moving into {name}",
    )


def _wrong_goal_atom(sc, d, p, rng):
    dom = sc.domain
    first = p.goal[0].atom
    if dom in ("frozenlake", "maze"):
        wrong = Atom("at", (pos_name(sc.agent),))
    elif dom == "sokoban":
        box = next(it for it in sc.items if it.name == first.args[0])
        wrong = Atom("box-at", (box.name, pos_name(box.pos)))
    elif dom == "package":
        wrong = Atom("package-closed", first.args)
    else:
        wrong = Atom("hand-empty", ())
    goal = (Literal(wrong),) + p.goal[1:]
    return d, replace(p, goal=goal), Injection(
        "wrong-goal-atom", dom, f"goal {first} replaced by {wrong}", ("problem",), frozenset({GOAL}),
        expected_feedback="the simulator and the PDDL files disagree on whether the goal holds",
    )


def _missing_goal_state_predicate(sc, d, p, rng):
    if len(p.goal) != 1:
        raise DefectNotApplicable("the goal has more than one conjunct")
    return d, replace(p, goal=p.goal[:-1]), Injection(
        "missing-goal-state-predicate", sc.domain, f"goal conjunct {p.goal[-1]} missing", ("problem",),
        frozenset({GOAL}),
        expected_feedback="the PDDL goal holds where the simulator says the goal is not reached",
    )


_INJECTORS = {
    "missing-predicate": _missing_predicate,
    "wrong-arity": _wrong_arity,
    "missing-precondition": _missing_precondition,
    "wrong-effect-sign": _wrong_effect_sign,
    "extra-precondition": _extra_precondition,
    "missing-direction-atom": _missing_direction_atom,
    "missing-object-typing": _missing_object_typing,
    "wrong-goal-atom": _wrong_goal_atom,
    "missing-goal-state-predicate": _missing_goal_state_predicate,
}


def inject(sc: GridScenario, defect_id: str, rng) -> Injected:
    """Apply one defect to the ground-truth pair of ``sc``."""
    defect = canonical(defect_id)
    golden = to_ground_truth_pddl(sc)
    d, p, inj = _INJECTORS[defect](sc, golden[0], golden[1], rng)
    return Injected(inj, d, p, golden)


def applicable_defects(sc: GridScenario) -> list[str]:
    import random

    out = []
    for defect in DEFECTS:
        try:
            inject(sc, defect, random.Random(0))
        except DefectNotApplicable:
            continue
        out.append(defect)
    return out


# feedback signatures

_ALLOW = re.compile(r"so the PDDL files allow (.+?) here")
_DENY = re.compile(r"so the PDDL files do not allow (.+?) here")
_GOAL = re.compile(r"After this sequence the simulator says the goal")


@dataclass(frozen=True)
class FeedbackSummary:
    kind: str | None  # allow / deny / goal / validation / None
    label: str | None = None
    text: str = ""


def summarize_feedback(text: str) -> FeedbackSummary:
    if not text:
        return FeedbackSummary(None)
    if m := _ALLOW.search(text):
        return FeedbackSummary(ALLOW, m.group(1), text)
    if m := _DENY.search(text):
        return FeedbackSummary(DENY, m.group(1), text)
    if _GOAL.search(text):
        return FeedbackSummary(GOAL, None, text)
    if "Validation failed" in text or "could not be parsed" in text:
        return FeedbackSummary("validation", None, text)
    return FeedbackSummary(None, None, text)


def matches(inj: Injection, feedback: str) -> bool:
    """Does ``feedback`` point at the defect described by ``inj``?"""
    s = summarize_feedback(feedback)
    if s.kind == "validation":
        return bool(inj.prescreen) and any(c in feedback for c in inj.prescreen) and all(
            n in feedback for n in inj.names[:1]
        )
    if s.kind not in inj.verdicts:
        return False
    if s.kind == GOAL or not inj.labels:
        return True
    return s.label in inj.labels


def labels_of(domain: str) -> tuple[str, ...]:
    return ACTION_VOCAB[domain]
