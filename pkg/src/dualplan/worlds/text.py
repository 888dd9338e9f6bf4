"""Natural-language views of scenarios: task descriptions, initial-state
descriptions, simulation prompts and execution transcripts."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

from .rules import INVALID, SUCCESS, ExecutionTrace, TraceStep, normalize_action
from .scenario import GridScenario, parse_pos, pos_name

SEPARATOR = "-" * 46
DESCRIPTION_HEADER = "From the image we can observe the: Initial State Description: \nInitially:"
GOAL_HEADER = "Your goal is to achieve the following configuration:"

_CORNER = "The left upper corner is (pos-1-1) for (row, column) representation."

TASK_DESCRIPTIONS = {
    "frozenlake": (
        "In the scenario, you have a girdworld, where each cell can be either normal ground or ice holes. "
        f"{_CORNER} The player starts at a cell, and there is a goal position in a cell. The goal is to move "
        "the player to the goal position. You can move up, down, left, right, but you cannot move into the "
        "border, and stepping into the ice hole will fail the game."
    ),
    "maze": (
        "The scenario is a maze on a grid made of floor cells and wall cells. "
        f"{_CORNER} The player can move up, down, left or right by one cell. Moving into a wall or out of "
        "the grid fails and the player stays in place. The player must reach the goal cell."
    ),
    "sokoban": (
        "The scenario is a grid with walls, boxes and goal cells. "
        f"{_CORNER} The player moves up, down, left or right. Walking into a box pushes it one cell "
        "further in the same direction when that cell is free; boxes cannot be pulled. Moving into a wall, "
        "or pushing a box into a wall or another box, fails. The player must get every box onto a goal cell."
    ),
    "package": (
        "The scenario is a grid holding closed packages. "
        f"{_CORNER} The player faces one direction and can turn-left, turn-right, move one cell forward, "
        "pick-up or drop-down a package in the cell in front of it, and open or close the package in the "
        "cell in front of it. Moving out of the grid fails, as does any action whose target is missing. "
        "The player must open every package."
    ),
    "printer": (
        "The scenario is a grid with a desk region and one printer. "
        f"{_CORNER} The player faces one direction and can turn-left, turn-right, move one cell forward, "
        "pick-up or drop-down the printer in the cell in front of it, and toggle-on or toggle-off the "
        "printer in front of it. Desk cells cannot be entered, a printer that is on cannot be picked up, "
        "and a printer can only be turned on while it stands on a desk. The player must place the printer "
        "on the desk region and turn it on."
    ),
    "overcooked": (
        "The scenario is a kitchen grid with counters, ingredients, chopping boards, a plate and a delivery "
        f"counter. {_CORNER} The player can move up, down, left or right, which also turns it to face that "
        "way when the move succeeds. It acts on the cell it faces: chop an ingredient on a chopping board, "
        "pick or drop an item, merge-ingredient to combine a held chopped ingredient with a chopped one in "
        "front, put-plate to place the held salad on the plate, and deliver the plated salad at the delivery "
        "counter. Moving into a wall or any counter fails. The player must deliver a plated salad."
    ),
}

# one sentence per FrozenLake variant, appended to the base description
RULE_TEXT = {
    "r1": "Ice holes no longer end the game; instead the agent has to step on at least one ice hole before reaching the goal counts.",
    "r2": "Ice holes no longer end the game; instead the agent has to step on at least two different ice holes before reaching the goal counts.",
    "r3": "Ice holes no longer end the game; the two ice holes are linked teleports, and stepping on one moves the agent to the other.",
    "r4": "Ice holes no longer end the game; stepping on any ice hole sends the agent back to its starting cell.",
    "r5": "Ice holes no longer end the game; after stepping on one, the next action only takes effect once it has been issued twice in a row.",
    "r6": "The agent has two lives: the first ice hole it steps on costs a life, and the second ice hole ends the game.",
    "r7": "Ice holes no longer end the game; stepping on one launches the agent two more cells in the same direction, stopping at the border.",
    "r8": "Ice holes are slippery ice and do not end the game; when the agent steps on ice and the next cell ahead is also ice, it keeps slipping over the ice until it reaches a cell that is not ice.",
    "r9": "Ice holes no longer end the game, but they can only be entered while moving down; entering one from another direction fails.",
    "r10": "Ice holes no longer end the game; once the agent has stepped on one, every later action only takes effect after it is issued twice in a row.",
    "r11": "Ice holes no longer end the game; once the agent has stepped on one, every later action only takes effect after it is issued three times in a row.",
    "r12": "Ice holes no longer end the game; stepping on one makes the agent slide onward in the same direction until it reaches the border.",
    "r13": "Ice holes no longer end the game; stepping on one makes the agent bounce back in the opposite direction until it reaches the border.",
    "r14": "Ice holes no longer end the game; stepping on one swaps the goal cell with the starting cell.",
    "r15": "Ice holes no longer end the game, but while standing on an ice hole the agent can only move up or down.",
    "u1": "Ice holes are wet rather than deadly: landing on one carries the agent forward another two cells in the same direction.",
    "u2": "Ice holes are portals that always lead to pos-2-2.",
    "u3": "Ice holes do not end the game, but after stepping on one the next action only takes effect once it has been issued three times in a row.",
    "u4": "Ice holes do not end the game; stepping on one fires a rocket that moves the agent three more cells in the same direction, stopping at the border.",
    "u5": "Ice holes do not end the game, but stepping on one freezes the agent so that its next action is skipped.",
}


def task_description(domain: str, variant: str = "base") -> str:
    text = TASK_DESCRIPTIONS[domain]
    if variant != "base":
        if domain != "frozenlake":
            raise ValueError("rule variants only exist for frozenlake")
        text = f"{text} Rule change: {RULE_TEXT[variant]}"
    return text


# initial-state description

# role key -> (singular phrase, plural phrase)
ROLES = {
    "agent": ("agent", "agents"),
    "goal": ("goal", "goals"),
    "hole": ("ice hole", "ice holes"),
    "wall": ("wall", "walls"),
    "target": ("goal cell", "goal cells"),
    "desk": ("desk", "desks"),
    "counter": ("counter", "counters"),
    "board": ("chopping board", "chopping boards"),
    "delivery": ("delivery counter", "delivery counters"),
}

_DOMAIN_ROLES = {
    "frozenlake": ("hole",),
    "maze": ("wall",),
    "sokoban": ("wall", "target"),
    "package": (),
    "printer": ("desk",),
    "overcooked": ("wall", "counter", "board", "delivery"),
}


@dataclass
class ScenarioDescription:
    """Text form plus the structured form it was produced from."""

    text: str
    size: tuple[int, int]
    agent: str
    facing: str | None = None
    goal: str | None = None
    roles: dict[str, tuple[str, ...]] = field(default_factory=dict)
    items: dict[str, tuple[str, str | None, str]] = field(default_factory=dict)
    held: str | None = None
    goal_lines: tuple[str, ...] = ()

    def structured(self) -> dict:
        return {
            "size": list(self.size),
            "agent": self.agent,
            "facing": self.facing,
            "goal": self.goal,
            "roles": {k: list(v) for k, v in sorted(self.roles.items())},
            "items": {k: list(v) for k, v in sorted(self.items.items())},
            "held": self.held,
            "goal_lines": list(self.goal_lines),
        }

    def differences(self, other: "ScenarioDescription") -> list[str]:
        a, b = self.structured(), other.structured()
        diffs = []
        for key in a:
            if key == "roles":
                for role in sorted(set(a["roles"]) | set(b["roles"])):
                    x, y = set(a["roles"].get(role, [])), set(b["roles"].get(role, []))
                    if x != y:
                        diffs.append(
                            f"{ROLES[role][1]}: missing {sorted(x - y)}, unexpected {sorted(y - x)}"
                        )
            elif a[key] != b[key]:
                diffs.append(f"{key}: expected {a[key]}, got {b[key]}")
        return diffs


def _role_line(role: str, cells: list[str]) -> str:
    sing, plural = ROLES[role]
    if not cells:
        return f"- There are no {plural}."
    if len(cells) == 1:
        return f"- The {sing} is at ({cells[0]})."
    return f"- The {plural} are at {', '.join(f'({c})' for c in cells)}."


def _goal_lines(sc: GridScenario) -> list[str]:
    d = sc.domain
    if d in ("frozenlake", "maze"):
        lines = [f"- The agent is at ({pos_name(sc.goal)})"]
        need = {"r1": 1, "r2": 2}.get(sc.variant)
        if need:
            lines.append(f"- The agent has stepped on at least {need} ice hole(s)")
        return lines
    if d == "sokoban":
        return ["- Every box is at a goal cell"]
    if d == "package":
        return [f"- The package {p.name} is open" for p in sc.items_of("package")]
    if d == "printer":
        return [f"- The printer {p.name} is on a desk and is on" for p in sc.items_of("printer")]
    return [f"- The salad {s.name} is plated and delivered" for s in sc.items_of("salad")]


def describe(sc: GridScenario) -> ScenarioDescription:
    lines = [f"- The size of the gridworld is {sc.rows}x{sc.cols}.", f"- The agent is at ({pos_name(sc.agent)})."]
    if sc.facing is not None:
        lines.append(f"- The agent is facing {sc.facing}.")
    if sc.goal is not None:
        lines.append(f"- The goal is at ({pos_name(sc.goal)}).")
    roles = {}
    for role in _DOMAIN_ROLES[sc.domain]:
        cells = [pos_name(p) for p in sc.cells_of(role)]
        roles[role] = tuple(cells)
        lines.append(_role_line(role, cells))
    items = {}
    for it in sc.items:
        if it.pos is None:
            continue
        items[it.name] = (it.kind, pos_name(it.pos), it.state)
        state = f" and is {it.state}" if it.state else ""
        lines.append(f"- The {it.kind} {it.name} is at ({pos_name(it.pos)}){state}.")
    if sc.carried is not None:
        held = sc.item(sc.carried)
        lines.append(f"- The agent is holding the {held.kind} {held.name}.")
    goal_lines = _goal_lines(sc)
    text = "\n".join([DESCRIPTION_HEADER, *lines, "", GOAL_HEADER, *goal_lines])
    return ScenarioDescription(
        text=text,
        size=(sc.rows, sc.cols),
        agent=pos_name(sc.agent),
        facing=sc.facing,
        goal=pos_name(sc.goal) if sc.goal else None,
        roles=roles,
        items=items,
        held=sc.carried,
        goal_lines=tuple(goal_lines),
    )


class DescriptionParseError(ValueError):
    pass


_PHRASE_TO_ROLE = {}
for _k, (_s, _p) in ROLES.items():
    _PHRASE_TO_ROLE[_s] = _k
    _PHRASE_TO_ROLE[_p] = _k

_POS = r"\((pos-\d+-\d+)\)"
_RE_SIZE = re.compile(r"^- The size of the gridworld is (\d+)x(\d+)\.$")
_RE_FACING = re.compile(r"^- The agent is facing (up|down|left|right)\.$")
_RE_ROLE_ONE = re.compile(rf"^- The ([a-z ]+?) is at {_POS}\.$")
_RE_ROLE_MANY = re.compile(r"^- The ([a-z ]+?) are at (.+)\.$")
_RE_ROLE_NONE = re.compile(r"^- There are no ([a-z ]+)\.$")
_RE_ITEM = re.compile(rf"^- The ([a-z]+) ([a-z0-9-]+) is at {_POS}(?: and is ([a-z]+))?\.$")
_RE_HELD = re.compile(r"^- The agent is holding the ([a-z]+) ([a-z0-9-]+)\.$")


def parse_description(text: str) -> ScenarioDescription:
    """Recover the structured form from description text.

    Unknown lines raise rather than being skipped, so a malformed reply from
    a remote model is rejected instead of being half understood.
    """
    body = text.strip("\n")
    if GOAL_HEADER not in body:
        raise DescriptionParseError("missing goal configuration section")
    init_part, goal_part = body.split(GOAL_HEADER, 1)
    size = agent = facing = goal = held = None
    roles: dict[str, tuple[str, ...]] = {}
    items: dict[str, tuple[str, str | None, str]] = {}
    for raw in init_part.splitlines():
        line = raw.strip()
        if not line.startswith("- "):
            continue
        if m := _RE_SIZE.match(line):
            size = (int(m.group(1)), int(m.group(2)))
        elif m := _RE_FACING.match(line):
            facing = m.group(1)
        elif m := _RE_HELD.match(line):
            held = m.group(2)
        elif (m := _RE_ROLE_NONE.match(line)) and m.group(1) in _PHRASE_TO_ROLE:
            roles[_PHRASE_TO_ROLE[m.group(1)]] = ()
        elif (m := _RE_ROLE_ONE.match(line)) and m.group(1) in _PHRASE_TO_ROLE:
            role = _PHRASE_TO_ROLE[m.group(1)]
            if role == "agent":
                agent = m.group(2)
            elif role == "goal":
                goal = m.group(2)
            else:
                roles[role] = (m.group(2),)
        elif (m := _RE_ROLE_MANY.match(line)) and m.group(1) in _PHRASE_TO_ROLE:
            cells = re.findall(_POS, m.group(2))
            if not cells:
                raise DescriptionParseError(f"no positions in line: {line}")
            roles[_PHRASE_TO_ROLE[m.group(1)]] = tuple(cells)
        elif m := _RE_ITEM.match(line):
            items[m.group(2)] = (m.group(1), m.group(3), m.group(4) or "")
        else:
            raise DescriptionParseError(f"unrecognized description line: {line}")
    if size is None or agent is None:
        raise DescriptionParseError("description lacks the grid size or the agent position")
    for cell in [agent, goal, *[c for cs in roles.values() for c in cs]]:
        if cell is not None:
            r, c = parse_pos(cell)
            if not (1 <= r <= size[0] and 1 <= c <= size[1]):
                raise DescriptionParseError(f"position {cell} outside the {size[0]}x{size[1]} grid")
    goal_lines = tuple(l.strip() for l in goal_part.splitlines() if l.strip().startswith("- "))
    return ScenarioDescription(
        text=body,
        size=size,
        agent=agent,
        facing=facing,
        goal=goal,
        roles=roles,
        items=items,
        held=held,
        goal_lines=goal_lines,
    )


# prompt and transcript

def _prompt_header() -> str:
    ref = resources.files("dualplan.assets").joinpath("prompts/simulate_header.txt")
    return ref.read_text(encoding="utf-8").rstrip("\n")


def simulation_prompt(domain: str, actions, variant: str = "base") -> str:
    actions = [normalize_action(domain, a) for a in actions]
    if not actions:
        raise ValueError("action sequence must not be empty")
    lines = [
        "<image>" + _prompt_header(),
        "",
        f"Task Description: {task_description(domain, variant)}",
        "Action Sequence:",
    ]
    lines.extend(f"{i}: {a}" for i, a in enumerate(actions, 1))
    return "\n".join(lines) + "\n"


def format_step(i: int, action: str, reasoning: str, result: str) -> str:
    head = f"Step {i} - Action {action}:"
    if result == INVALID:
        return f"{head}\nExecution Reasoning: {reasoning} Execution result: {result}."
    return f"{head}\nExecution Reasoning: {reasoning}\nExecution result: {result}."


def format_trace(trace: ExecutionTrace) -> str:
    blocks = []
    for i, s in enumerate(trace.steps, 1):
        blocks.append(format_step(i, s.action, s.reasoning, s.result))
        blocks.append(SEPARATOR)
    blocks.append(f"Goal reaching: {trace.verdict}")
    return "\n".join(blocks)


def transcript(description: ScenarioDescription | str, trace: ExecutionTrace) -> str:
    """Full simulator output: description, step blocks and the goal line."""
    desc = description if isinstance(description, str) else description.text
    return f"{desc}\n\n{format_trace(trace)}\n"


class TranscriptParseError(ValueError):
    pass


_RE_STEP = re.compile(
    r"^Step (\d+) - Action (.+?):\nExecution Reasoning: (.*?)\s*Execution result: (Successful|Unsuccessful|Invalid)\.$",
    re.S,
)
_RE_GOAL = re.compile(r"^Goal reaching: (Successful|Unsuccessful)$")


def parse_transcript(text: str, expected_steps: int | None = None) -> tuple[str, ExecutionTrace]:
    """Split simulator output into the description text and a trace.

    Malformed input raises rather than being patched up.
    """
    body = text.strip("\n")
    head, sep, rest = body.partition("\n\nStep 1 - ")
    if not sep:
        raise TranscriptParseError("no step blocks found")
    blocks = ("Step 1 - " + rest).split("\n" + SEPARATOR + "\n")
    goal = _RE_GOAL.match(blocks[-1].strip())
    if goal is None:
        raise TranscriptParseError(f"missing goal line, got {blocks[-1][:80]!r}")
    steps = []
    for i, block in enumerate(blocks[:-1], 1):
        m = _RE_STEP.match(block.strip())
        if m is None:
            raise TranscriptParseError(f"malformed step block {i}: {block[:80]!r}")
        if int(m.group(1)) != i:
            raise TranscriptParseError(f"step {i} is numbered {m.group(1)}")
        steps.append(TraceStep(m.group(2).strip(), m.group(3).strip(), m.group(4)))
    if expected_steps is not None and len(steps) != expected_steps:
        raise TranscriptParseError(f"expected {expected_steps} steps, found {len(steps)}")
    return head, ExecutionTrace(tuple(steps), goal.group(1) == SUCCESS)
