"""Executable semantics of the six grid domains and the FrozenLake rule variants.

Every handler returns a :class:`StepOutcome` whose reasoning sentence is
produced from a fixed template, so traces are reproducible byte for byte.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .scenario import (
    ACTION_VOCAB,
    DIRECTIONS,
    LEFT_OF,
    MOVES,
    OPPOSITE,
    RIGHT_OF,
    GridScenario,
    Item,
    Pos,
    pos_name,
    shift,
)

SUCCESS = "Successful"
FAIL = "Unsuccessful"
INVALID = "Invalid"
RESULTS = (SUCCESS, FAIL, INVALID)

INVALID_TEXT = "The agent has already failed the game, so this execution is invalid."


class UnknownAction(ValueError):
    pass


@dataclass(frozen=True)
class StepOutcome:
    result: str
    reasoning: str
    scenario: GridScenario


@dataclass(frozen=True)
class TraceStep:
    action: str
    reasoning: str
    result: str


@dataclass(frozen=True)
class ExecutionTrace:
    steps: tuple[TraceStep, ...]
    goal_reached: bool
    final: GridScenario | None = field(default=None, compare=False)

    @property
    def verdict(self) -> str:
        return SUCCESS if self.goal_reached else FAIL

    def executable_prefix(self) -> int:
        k = 0
        for s in self.steps:
            if s.result != SUCCESS:
                break
            k += 1
        return k


def normalize_action(domain: str, action: str) -> str:
    """Lowercase and collapse whitespace; bare directions become moves."""
    a = " ".join(action.strip().lower().replace("_", " ").split())
    if a in DIRECTIONS and MOVES[0] in ACTION_VOCAB[domain]:
        a = f"move {a}"
    if a not in ACTION_VOCAB[domain]:
        raise UnknownAction(f"unknown action {action!r} for domain {domain}")
    return a


_VOCAB_SETS = {d: frozenset(v) for d, v in ACTION_VOCAB.items()}


def step(sc: GridScenario, action: str) -> StepOutcome:
    if action not in _VOCAB_SETS[sc.domain]:
        action = normalize_action(sc.domain, action)
    if sc.failed:
        return StepOutcome(INVALID, INVALID_TEXT, sc)
    return _HANDLERS[sc.domain](sc, action)


def run_sequence(sc: GridScenario, actions) -> ExecutionTrace:
    actions = list(actions)
    if not actions:
        raise ValueError("action sequence must not be empty")
    steps = []
    cur = sc
    for a in actions:
        out = step(cur, a)
        steps.append(TraceStep(normalize_action(sc.domain, a), out.reasoning, out.result))
        cur = out.scenario
    return ExecutionTrace(tuple(steps), goal_reached(cur), cur)


def goal_reached(sc: GridScenario) -> bool:
    if sc.failed:
        return False
    d = sc.domain
    if d == "frozenlake":
        if sc.agent != sc.goal:
            return False
        need = {"r1": 1, "r2": 2}.get(sc.variant, 0)
        return bin(sc.get("visited")).count("1") >= need
    if d == "maze":
        return sc.agent == sc.goal
    if d == "sokoban":
        targets = set(sc.cells_of("target"))
        return all(b.pos in targets for b in sc.items_of("box"))
    if d == "package":
        return all(p.state == "open" for p in sc.items_of("package"))
    if d == "printer":
        return all(
            pr.state == "on" and pr.pos is not None and sc.cell(pr.pos) == "desk"
            for pr in sc.items_of("printer")
        )
    if d == "overcooked":
        return all(s.state == "delivered" for s in sc.items_of("salad"))
    raise AssertionError(d)


# shared sentences

def _border(d: str, p: Pos) -> str:
    return (
        f"The agent tries to move {d} from {pos_name(p)}. This action is not valid as it is "
        "moving into the border. So the execution is unsuccessful and the agent stays at the original location."
    )


def _tries(d: str, p: Pos, q: Pos) -> str:
    return f"The agent tries to move {d} from {pos_name(p)}, so it will move to {pos_name(q)}."


def _blocked(thing: str, q: Pos) -> str:
    return (
        f"There is {thing} in cell {pos_name(q)}, so the execution is unsuccessful "
        "and the agent stays at the original location."
    )


# FrozenLake and its variants

_REPEAT = {"r5": 2, "u3": 3, "r10": 2, "r11": 3}
_ONE_SHOT_REPEAT = {"r5", "u3"}
_ROCKET = {"r7": 2, "u1": 2, "u4": 3}


def _hole_bit(sc: GridScenario, q: Pos) -> int:
    return 1 << ((q[0] - 1) * sc.cols + (q[1] - 1))


def _frozenlake(sc: GridScenario, action: str) -> StepOutcome:
    d = action.split()[1]
    p = sc.agent
    v = sc.variant
    prefix = ""

    need = sc.get("repeat_need")
    if need:
        code = DIRECTIONS.index(d) + 1
        count = sc.get("repeat_count") + 1 if sc.get("repeat_action") == code else 1
        if count < need:
            text = (
                f"The agent has stepped on an ice hole, so the action {action} must be executed {need} times "
                f"in a row to take effect. This is attempt {count}, so the agent stays at {pos_name(p)}."
            )
            return StepOutcome(FAIL, text, sc.with_aux(repeat_action=code, repeat_count=count))
        keep = need if v not in _ONE_SHOT_REPEAT else 0
        sc = sc.with_aux(repeat_action=0, repeat_count=0, repeat_need=keep)
        prefix = f"The action {action} has now been executed {need} times in a row, so it takes effect. "

    if v == "u5" and sc.get("frozen"):
        text = (
            f"The agent stepped on an ice hole and is frozen, so the action {action} is skipped "
            f"and the agent stays at {pos_name(p)}."
        )
        return StepOutcome(FAIL, text, sc.with_aux(frozen=0))

    if v == "r15" and sc.cell(p) == "hole" and d in ("left", "right"):
        text = (
            f"The agent is on the ice hole at {pos_name(p)} and can only move up or down from an ice hole, "
            "so the execution is unsuccessful and the agent stays at the original location."
        )
        return StepOutcome(FAIL, prefix + text, sc)

    q = shift(p, d)
    if not sc.in_bounds(q):
        return StepOutcome(FAIL, prefix + _border(d, p), sc)
    if sc.cell(q) != "hole":
        text = (
            f"{_tries(d, p, q)} There is no ice hole in cell {pos_name(q)} and the agent is not moving to the "
            f"border, so no invalid action is executed and the agent successfully moves to {pos_name(q)}."
        )
        return StepOutcome(SUCCESS, prefix + text, sc.evolve(agent=q))

    head = f"{_tries(d, p, q)} Since there is an ice hole in cell {pos_name(q)}, "
    result, tail, nxt = _enter_hole(sc, d, p, q)
    return StepOutcome(result, prefix + head + tail, nxt)


def _enter_hole(sc: GridScenario, d: str, p: Pos, q: Pos) -> tuple[str, str, GridScenario]:
    v = sc.variant
    here = sc.evolve(agent=q)
    qn = pos_name(q)

    if v == "base":
        return (
            FAIL,
            "the agent will fall into the ice hole, so the game ended and the execution is unsuccessful.",
            here.evolve(failed=True),
        )
    if v == "r6":
        if sc.get("lives_lost") == 0:
            return (
                SUCCESS,
                f"the agent loses one of its two lives but does not fail, and it successfully moves to {qn}.",
                here.with_aux(lives_lost=1),
            )
        return (
            FAIL,
            "the agent loses its second life and falls into the ice hole, so the game ended and the execution is unsuccessful.",
            here.evolve(failed=True).with_aux(lives_lost=2),
        )
    if v == "r9":
        if d != "down":
            return (
                FAIL,
                "entering it is only allowed from above, so the execution is unsuccessful and the agent stays at the original location.",
                sc,
            )
        return SUCCESS, f"the agent enters it from above and successfully moves to {qn}.", here
    if v in ("r1", "r2"):
        nxt = here.with_aux(visited=sc.get("visited") | _hole_bit(sc, q))
        count = bin(nxt.get("visited")).count("1")
        return (
            SUCCESS,
            f"the agent steps on the ice hole without failing and successfully moves to {qn}. "
            f"The agent has now stepped on {count} distinct ice hole(s).",
            nxt,
        )
    if v in ("r3", "r4", "u2"):
        if v == "r3":
            others = [h for h in sc.cells_of("hole") if h != q]
            dest = others[0] if len(others) == 1 else q
        elif v == "r4":
            dest = sc.origin
        else:
            dest = (2, 2)
        return (
            SUCCESS,
            f"the agent steps on the ice hole, which teleports it to {pos_name(dest)}.",
            sc.evolve(agent=dest),
        )
    if v in _REPEAT:
        return (
            SUCCESS,
            f"the agent steps on the ice hole at {qn}. From now on the next action must be executed "
            f"{_REPEAT[v]} times in a row to take effect.",
            here.with_aux(repeat_need=_REPEAT[v], repeat_action=0, repeat_count=0),
        )
    if v in _ROCKET:
        k = _ROCKET[v]
        dest = q
        moved = 0
        while moved < k and sc.in_bounds(shift(dest, d)):
            dest = shift(dest, d)
            moved += 1
        if moved == k:
            tail = f"the agent unlocks a rocket and flies {k} more steps {d} to {pos_name(dest)}."
        else:
            tail = f"the agent unlocks a rocket and flies {d} until it stops at the border at {pos_name(dest)}."
        return SUCCESS, tail, sc.evolve(agent=dest)
    if v == "r8":
        nxt_cell = shift(q, d)
        if not (sc.in_bounds(nxt_cell) and sc.cell(nxt_cell) == "hole"):
            return SUCCESS, f"the agent steps on the ice, and the next cell in direction {d} is not ice, so the agent stops at {qn}.", here
        cur = q
        while sc.in_bounds(shift(cur, d)) and sc.cell(shift(cur, d)) == "hole":
            cur = shift(cur, d)
        if sc.in_bounds(shift(cur, d)):
            cur = shift(cur, d)
        return (
            SUCCESS,
            f"the agent steps on the ice, and the next cell in direction {d} is also ice, so the agent slips {d} until it reaches {pos_name(cur)}.",
            sc.evolve(agent=cur),
        )
    if v in ("r12", "r13"):
        way = d if v == "r12" else OPPOSITE[d]
        cur = q
        while sc.in_bounds(shift(cur, way)):
            cur = shift(cur, way)
        verb = "slides" if v == "r12" else "bounces back"
        return SUCCESS, f"the agent {verb} {way} until it hits the wall at {pos_name(cur)}.", sc.evolve(agent=cur)
    if v == "r14":
        old_goal = sc.goal
        swapped = here.evolve(goal=sc.origin, start=old_goal)
        return (
            SUCCESS,
            f"the agent steps on it and the goal and origin positions are swapped, so the goal is now at "
            f"{pos_name(sc.origin)}.",
            swapped,
        )
    if v == "r15":
        return SUCCESS, f"the agent steps on the ice hole at {qn}, where it can only move up or down.", here
    if v == "u5":
        return SUCCESS, f"the agent steps on the ice hole at {qn} and freezes, so its next action is skipped.", here.with_aux(frozen=1)
    raise AssertionError(v)


# Maze

def _maze(sc: GridScenario, action: str) -> StepOutcome:
    d = action.split()[1]
    p = sc.agent
    q = shift(p, d)
    if not sc.in_bounds(q):
        return StepOutcome(FAIL, _border(d, p), sc)
    if sc.cell(q) == "wall":
        return StepOutcome(FAIL, f"{_tries(d, p, q)} {_blocked('a wall', q)}", sc)
    text = (
        f"{_tries(d, p, q)} There is no wall in cell {pos_name(q)} and the agent is not moving to the border, "
        f"so the agent successfully moves to {pos_name(q)}."
    )
    return StepOutcome(SUCCESS, text, sc.evolve(agent=q))


# Sokoban

def _sokoban(sc: GridScenario, action: str) -> StepOutcome:
    d = action.split()[1]
    p = sc.agent
    q = shift(p, d)
    if not sc.in_bounds(q):
        return StepOutcome(FAIL, _border(d, p), sc)
    if sc.cell(q) == "wall":
        return StepOutcome(FAIL, f"{_tries(d, p, q)} {_blocked('a wall', q)}", sc)
    box = sc.item_at(q, "box")
    if box is None:
        text = (
            f"{_tries(d, p, q)} There is no wall or box in cell {pos_name(q)}, "
            f"so the agent successfully moves to {pos_name(q)}."
        )
        return StepOutcome(SUCCESS, text, sc.evolve(agent=q))
    t = shift(q, d)
    head = (
        f"The agent tries to move {d} from {pos_name(p)} and push {box.name} at {pos_name(q)} "
        f"to {pos_name(t)}."
    )
    if not sc.in_bounds(t):
        reason = "the box would be pushed into the border"
    elif sc.cell(t) == "wall":
        reason = f"there is a wall in cell {pos_name(t)}"
    elif sc.item_at(t, "box") is not None:
        reason = f"there is another box in cell {pos_name(t)}"
    else:
        reason = ""
    if reason:
        text = f"{head} The box cannot be pushed because {reason}, so the execution is unsuccessful and the agent stays at the original location."
        return StepOutcome(FAIL, text, sc)
    where = "a goal cell" if sc.cell(t) == "target" else "not a goal cell"
    text = (
        f"{head} Cell {pos_name(t)} is free, so the agent moves to {pos_name(q)} and pushes "
        f"{box.name} to {pos_name(t)}, which is {where}."
    )
    nxt = sc.with_item(Item(box.name, box.kind, t, box.state)).evolve(agent=q)
    return StepOutcome(SUCCESS, text, nxt)


# shared by the oriented domains

def _turn(sc: GridScenario, action: str) -> StepOutcome:
    new = LEFT_OF[sc.facing] if action == "turn-left" else RIGHT_OF[sc.facing]
    side = "left" if action == "turn-left" else "right"
    text = f"The agent turns {side} from facing {sc.facing}, so it is now facing {new}."
    return StepOutcome(SUCCESS, text, sc.evolve(facing=new))


def _front(sc: GridScenario) -> Pos:
    return shift(sc.agent, sc.facing)


def _fail(text: str, sc: GridScenario) -> StepOutcome:
    return StepOutcome(FAIL, text + " So the execution is unsuccessful.", sc)


def _oriented_move(sc: GridScenario, blocked: dict[str, str]) -> StepOutcome:
    d, p = sc.facing, sc.agent
    q = _front(sc)
    if not sc.in_bounds(q):
        return StepOutcome(FAIL, _border(d, p), sc)
    kind = sc.cell(q)
    if kind in blocked:
        return StepOutcome(FAIL, f"{_tries(d, p, q)} {_blocked(blocked[kind], q)}", sc)
    text = f"The agent is facing {d} and moves from {pos_name(p)} to {pos_name(q)}. The execution is successful."
    return StepOutcome(SUCCESS, text, sc.evolve(agent=q))


def _faced_border(sc: GridScenario, what: str) -> StepOutcome | None:
    q = _front(sc)
    if sc.in_bounds(q):
        return None
    return _fail(f"The agent at {pos_name(sc.agent)} is facing {sc.facing} toward the border, so there is no {what} in front of it.", sc)


def _pick_up(sc: GridScenario, kind: str, extra_ok=None) -> StepOutcome:
    out = _faced_border(sc, kind)
    if out:
        return out
    q = _front(sc)
    if sc.carried is not None:
        return _fail(f"The agent is already holding {sc.carried}, so it cannot pick up anything else.", sc)
    it = sc.item_at(q, kind)
    if it is None:
        return _fail(f"There is no {kind} in cell {pos_name(q)} in front of the agent, so there is nothing to pick up.", sc)
    if extra_ok is not None:
        why = extra_ok(it)
        if why:
            return _fail(why, sc)
    text = f"The agent picks up {it.name} from cell {pos_name(q)} in front of it. The execution is successful."
    return StepOutcome(SUCCESS, text, sc.with_item(Item(it.name, it.kind, None, it.state)).evolve(carried=it.name))


def _drop_down(sc: GridScenario, kind: str, occupied_kinds: tuple[str, ...]) -> StepOutcome:
    if sc.carried is None:
        return _fail("The agent is not holding anything, so there is nothing to drop down.", sc)
    out = _faced_border(sc, "cell")
    if out:
        return out
    q = _front(sc)
    for k in occupied_kinds:
        other = sc.item_at(q, k)
        if other is not None:
            return _fail(f"Cell {pos_name(q)} in front of the agent already contains {other.name}, so {sc.carried} cannot be dropped there.", sc)
    it = sc.item(sc.carried)
    text = f"The agent drops {it.name} into cell {pos_name(q)} in front of it. The execution is successful."
    return StepOutcome(SUCCESS, text, sc.with_item(Item(it.name, it.kind, q, it.state)).evolve(carried=None))


# Package

def _package(sc: GridScenario, action: str) -> StepOutcome:
    if action in ("turn-left", "turn-right"):
        return _turn(sc, action)
    if action == "move":
        return _oriented_move(sc, {})
    if action == "pick-up":
        return _pick_up(sc, "package")
    if action == "drop-down":
        return _drop_down(sc, "package", ("package",))
    # open / close
    out = _faced_border(sc, "package")
    if out:
        return out
    q = _front(sc)
    pkg = sc.item_at(q, "package")
    if pkg is None:
        return _fail(f"There is no package in cell {pos_name(q)} in front of the agent, so it cannot {action} a package.", sc)
    want, new = ("closed", "open") if action == "open" else ("open", "closed")
    if pkg.state != want:
        return _fail(f"The package {pkg.name} in cell {pos_name(q)} is already {pkg.state}.", sc)
    verb = "opens" if action == "open" else "closes"
    text = f"The agent {verb} the package {pkg.name} in cell {pos_name(q)} in front of it. The execution is successful."
    return StepOutcome(SUCCESS, text, sc.with_item(Item(pkg.name, pkg.kind, pkg.pos, new)))


# Printer

def _printer(sc: GridScenario, action: str) -> StepOutcome:
    if action in ("turn-left", "turn-right"):
        return _turn(sc, action)
    if action == "move":
        return _oriented_move(sc, {"desk": "a desk"})
    if action == "pick-up":
        return _pick_up(
            sc, "printer", lambda it: f"The printer {it.name} is turned on, so it cannot be picked up." if it.state == "on" else ""
        )
    if action == "drop-down":
        return _drop_down(sc, "printer", ("printer",))
    out = _faced_border(sc, "printer")
    if out:
        return out
    q = _front(sc)
    pr = sc.item_at(q, "printer")
    if pr is None:
        return _fail(f"There is no printer in cell {pos_name(q)} in front of the agent, so it cannot be toggled.", sc)
    if action == "toggle-on":
        if sc.cell(q) != "desk":
            return _fail(f"The printer {pr.name} in cell {pos_name(q)} is not on a desk, so it cannot be turned on.", sc)
        if pr.state == "on":
            return _fail(f"The printer {pr.name} is already on.", sc)
        new = "on"
    else:
        if pr.state != "on":
            return _fail(f"The printer {pr.name} is already off.", sc)
        new = "off"
    text = f"The agent turns {new} the printer {pr.name} in cell {pos_name(q)} in front of it. The execution is successful."
    return StepOutcome(SUCCESS, text, sc.with_item(Item(pr.name, pr.kind, pr.pos, new)))


# Overcooked

_SURFACES = ("counter", "board")


def _overcooked(sc: GridScenario, action: str) -> StepOutcome:
    if action.startswith("move "):
        d = action.split()[1]
        turned = sc.evolve(facing=d)
        out = _oriented_move(
            turned, {"wall": "a wall", "counter": "a counter", "board": "a chopping board", "delivery": "the delivery counter"}
        )
        if out.result != SUCCESS:
            return StepOutcome(out.result, out.reasoning, sc)
        return out
    out = _faced_border(sc, "counter")
    if out:
        return out
    q = _front(sc)
    kind = sc.cell(q)
    front_item = sc.item_at(q)
    held = sc.item(sc.carried) if sc.carried else None

    if action == "chop":
        if kind != "board":
            return _fail(f"Cell {pos_name(q)} in front of the agent is not a chopping board, so nothing can be chopped.", sc)
        if front_item is None or front_item.kind != "ingredient":
            return _fail(f"There is no ingredient on the chopping board at {pos_name(q)}.", sc)
        if front_item.state == "chopped":
            return _fail(f"The {front_item.name} on the chopping board is already chopped.", sc)
        text = f"The agent chops the {front_item.name} on the chopping board at {pos_name(q)}. The execution is successful."
        return StepOutcome(SUCCESS, text, sc.with_item(Item(front_item.name, front_item.kind, q, "chopped")))

    if action == "pick":
        if held is not None:
            return _fail(f"The agent is already holding the {held.name}, so it cannot pick anything else.", sc)
        if kind not in _SURFACES or front_item is None:
            return _fail(f"There is no item on a counter at {pos_name(q)} in front of the agent, so there is nothing to pick.", sc)
        text = f"The agent picks the {front_item.name} from {pos_name(q)}. The execution is successful."
        return StepOutcome(SUCCESS, text, sc.with_item(Item(front_item.name, front_item.kind, None, front_item.state)).evolve(carried=front_item.name))

    if held is None:
        return _fail(f"The agent is not holding anything, so it cannot {action}.", sc)

    if action == "drop":
        if kind not in _SURFACES:
            return _fail(f"Cell {pos_name(q)} in front of the agent is not a counter, so the {held.name} cannot be dropped there.", sc)
        if front_item is not None:
            return _fail(f"The counter at {pos_name(q)} already holds the {front_item.name}.", sc)
        text = f"The agent drops the {held.name} onto {pos_name(q)}. The execution is successful."
        return StepOutcome(SUCCESS, text, sc.with_item(Item(held.name, held.kind, q, held.state)).evolve(carried=None))

    if action == "merge-ingredient":
        if held.kind != "ingredient" or held.state != "chopped":
            return _fail(f"The agent must hold a chopped ingredient to merge, but it holds the {held.name}{'' if held.kind != 'ingredient' else ' which is not chopped'}.", sc)
        if front_item is None or front_item.kind != "ingredient" or front_item.state != "chopped":
            return _fail(f"There is no chopped ingredient at {pos_name(q)} in front of the agent to merge with.", sc)
        salad = sc.items_of("salad")[0]
        nxt = sc.with_item(Item(held.name, held.kind, None, "merged"))
        nxt = nxt.with_item(Item(front_item.name, front_item.kind, None, "merged"))
        nxt = nxt.with_item(Item(salad.name, salad.kind, q, "made")).evolve(carried=None)
        text = (
            f"The agent merges the chopped {held.name} with the chopped {front_item.name} at {pos_name(q)}, "
            "making a salad there. The execution is successful."
        )
        return StepOutcome(SUCCESS, text, nxt)

    if action == "put-plate":
        if held.kind != "salad" or held.state != "made":
            return _fail(f"The agent must hold an unplated salad to put it on a plate, but it holds the {held.name}.", sc)
        if front_item is None or front_item.kind != "plate":
            return _fail(f"There is no plate at {pos_name(q)} in front of the agent.", sc)
        nxt = sc.with_item(Item(front_item.name, front_item.kind, None, "used"))
        nxt = nxt.with_item(Item(held.name, held.kind, q, "plated")).evolve(carried=None)
        text = f"The agent puts the {held.name} onto the {front_item.name} at {pos_name(q)}. The execution is successful."
        return StepOutcome(SUCCESS, text, nxt)

    if action == "deliver":
        if held.kind != "salad" or held.state != "plated":
            return _fail(f"The agent must hold a plated salad to deliver, but it holds the {held.name}.", sc)
        if kind != "delivery":
            return _fail(f"Cell {pos_name(q)} in front of the agent is not the delivery counter.", sc)
        nxt = sc.with_item(Item(held.name, held.kind, None, "delivered")).evolve(carried=None)
        text = f"The agent delivers the plated {held.name} at {pos_name(q)}. The execution is successful."
        return StepOutcome(SUCCESS, text, nxt)
    raise AssertionError(action)


_HANDLERS = {
    "frozenlake": _frozenlake,
    "maze": _maze,
    "sokoban": _sokoban,
    "package": _package,
    "printer": _printer,
    "overcooked": _overcooked,
}
