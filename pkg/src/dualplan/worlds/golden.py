"""Ground-truth PDDL for each domain, emitted from a scenario.

The FrozenLake and Package files follow the reference fixture pairs; the other four
domains use the same conventions (``pos-r-c`` objects, explicit adjacency
atoms). Every pair here is behaviourally equivalent to :mod:`.rules` for the
base rules.
"""
from __future__ import annotations

from functools import lru_cache

from ..pddl import Atom, Literal, PddlDomain, PddlProblem, TypedName, parse_domain
from .scenario import DIRECTIONS, LEFT_OF, RIGHT_OF, GridScenario, pos_name, shift

FROZENLAKE_DOMAIN = """\
(define (domain frozenlake)
  (:requirements :strips :negative-preconditions)
  (:predicates (at ?x) (down_direction ?from ?to) (ice-hole ?x) (left_direction ?from ?to) (right_direction ?from ?to) (up_direction ?from ?to))
  (:action move-down
    :parameters (?from ?to)
    :precondition (and (at ?from) (down_direction ?from ?to) (not (ice-hole ?from)) (not (ice-hole ?to)))
    :effect (and (at ?to) (not (at ?from))))
  (:action move-left
    :parameters (?from ?to)
    :precondition (and (at ?from) (left_direction ?from ?to) (not (ice-hole ?from)) (not (ice-hole ?to)))
    :effect (and (at ?to) (not (at ?from))))
  (:action move-right
    :parameters (?from ?to)
    :precondition (and (at ?from) (right_direction ?from ?to) (not (ice-hole ?from)) (not (ice-hole ?to)))
    :effect (and (at ?to) (not (at ?from))))
  (:action move-up
    :parameters (?from ?to)
    :precondition (and (at ?from) (up_direction ?from ?to) (not (ice-hole ?from)) (not (ice-hole ?to)))
    :effect (and (at ?to) (not (at ?from))))
)
"""

MAZE_DOMAIN = """\
(define (domain maze)
  (:requirements :strips :typing :negative-preconditions)
  (:types position)
  (:predicates
    (move-dir-up ?x ?y - position) (move-dir-down ?x ?y - position)
    (move-dir-left ?x ?y - position) (move-dir-right ?x ?y - position)
    (at ?x - position) (is-goal ?x - position) (wall ?x - position))
""" + "".join(
    f"""  (:action move-{d}
    :parameters (?from ?to - position)
    :precondition (and (at ?from) (move-dir-{d} ?from ?to) (not (wall ?to)))
    :effect (and (not (at ?from)) (at ?to)))
"""
    for d in DIRECTIONS
) + ")\n"

SOKOBAN_DOMAIN = """\
(define (domain sokoban)
  (:requirements :strips :typing :negative-preconditions)
  (:types position box direction)
  (:predicates
    (at ?p - position)
    (box-at ?b - box ?p - position)
    (clear ?p - position)
    (is-goal ?p - position)
    (at-goal ?b - box)
    (move-dir ?from ?to - position ?dir - direction))
  (:action move
    :parameters (?from ?to - position ?dir - direction)
    :precondition (and (at ?from) (move-dir ?from ?to ?dir) (clear ?to))
    :effect (and (not (at ?from)) (at ?to)))
  (:action push-to-goal
    :parameters (?from ?boxpos ?topos - position ?b - box ?dir - direction)
    :precondition (and (at ?from) (move-dir ?from ?boxpos ?dir) (move-dir ?boxpos ?topos ?dir)
                       (box-at ?b ?boxpos) (clear ?topos) (is-goal ?topos))
    :effect (and (not (at ?from)) (at ?boxpos) (not (box-at ?b ?boxpos)) (box-at ?b ?topos)
                 (not (clear ?topos)) (clear ?boxpos) (at-goal ?b)))
  (:action push-to-nongoal
    :parameters (?from ?boxpos ?topos - position ?b - box ?dir - direction)
    :precondition (and (at ?from) (move-dir ?from ?boxpos ?dir) (move-dir ?boxpos ?topos ?dir)
                       (box-at ?b ?boxpos) (clear ?topos) (not (is-goal ?topos)))
    :effect (and (not (at ?from)) (at ?boxpos) (not (box-at ?b ?boxpos)) (box-at ?b ?topos)
                 (not (clear ?topos)) (clear ?boxpos) (not (at-goal ?b))))
)
"""

_TURNS = """\
  (:action turn-left
    :parameters (?current-dir - direction ?new-dir - direction)
    :precondition (and (facing ?current-dir) (left-turn ?current-dir ?new-dir))
    :effect (and (not (facing ?current-dir)) (facing ?new-dir)))
  (:action turn-right
    :parameters (?current-dir - direction ?new-dir - direction)
    :precondition (and (facing ?current-dir) (right-turn ?current-dir ?new-dir))
    :effect (and (not (facing ?current-dir)) (facing ?new-dir)))
"""

PACKAGE_DOMAIN = """\
(define (domain package)
  (:requirements :strips :typing)
  (:types position package direction)
  (:predicates
    (at ?pos - position)
    (package-at ?pkg - package ?pos - position)
    (package-open ?pkg - package)
    (package-closed ?pkg - package)
    (facing ?dir - direction)
    (left-turn ?from - direction ?to - direction)
    (right-turn ?from - direction ?to - direction)
    (move-dir ?pos1 - position ?pos2 - position ?dir - direction)
    (holding ?pkg - package)
    (hand-empty)
    (empty ?pos - position))
""" + _TURNS + """\
  (:action move
    :parameters (?from - position ?to - position ?dir - direction)
    :precondition (and (at ?from) (facing ?dir) (move-dir ?from ?to ?dir))
    :effect (and (not (at ?from)) (at ?to)))
  (:action open
    :parameters (?pkg - package ?pos - position ?pkgpos - position ?dir - direction)
    :precondition (and (at ?pos) (package-at ?pkg ?pkgpos) (package-closed ?pkg) (facing ?dir) (move-dir ?pos ?pkgpos ?dir))
    :effect (and (not (package-closed ?pkg)) (package-open ?pkg)))
  (:action close
    :parameters (?pkg - package ?pos - position ?pkgpos - position ?dir - direction)
    :precondition (and (at ?pos) (package-at ?pkg ?pkgpos) (package-open ?pkg) (facing ?dir) (move-dir ?pos ?pkgpos ?dir))
    :effect (and (not (package-open ?pkg)) (package-closed ?pkg)))
  (:action pick-up
    :parameters (?pkg - package ?pos - position ?pkgpos - position ?dir - direction)
    :precondition (and (at ?pos) (package-at ?pkg ?pkgpos) (hand-empty) (facing ?dir) (move-dir ?pos ?pkgpos ?dir))
    :effect (and (not (package-at ?pkg ?pkgpos)) (not (hand-empty)) (holding ?pkg) (empty ?pkgpos)))
  (:action drop-down
    :parameters (?pkg - package ?pos - position ?pkgpos - position ?dir - direction)
    :precondition (and (at ?pos) (holding ?pkg) (empty ?pkgpos) (facing ?dir) (move-dir ?pos ?pkgpos ?dir))
    :effect (and (package-at ?pkg ?pkgpos) (not (holding ?pkg)) (hand-empty) (not (empty ?pkgpos))))
)
"""

PRINTER_DOMAIN = """\
(define (domain printer)
  (:requirements :strips :typing :negative-preconditions)
  (:types position printer direction)
  (:predicates
    (at ?pos - position)
    (facing ?dir - direction)
    (left-turn ?from - direction ?to - direction)
    (right-turn ?from - direction ?to - direction)
    (move-dir ?pos1 - position ?pos2 - position ?dir - direction)
    (desk ?pos - position)
    (printer-at ?pr - printer ?pos - position)
    (holding ?pr - printer)
    (hand-empty)
    (printer-on ?pr - printer))
""" + _TURNS + """\
  (:action move
    :parameters (?from - position ?to - position ?dir - direction)
    :precondition (and (at ?from) (facing ?dir) (move-dir ?from ?to ?dir) (not (desk ?to)))
    :effect (and (not (at ?from)) (at ?to)))
  (:action pick-up
    :parameters (?pr - printer ?pos - position ?prpos - position ?dir - direction)
    :precondition (and (at ?pos) (facing ?dir) (move-dir ?pos ?prpos ?dir) (printer-at ?pr ?prpos) (hand-empty) (not (printer-on ?pr)))
    :effect (and (not (printer-at ?pr ?prpos)) (not (hand-empty)) (holding ?pr)))
  (:action drop-down
    :parameters (?pr - printer ?pos - position ?prpos - position ?dir - direction)
    :precondition (and (at ?pos) (facing ?dir) (move-dir ?pos ?prpos ?dir) (holding ?pr))
    :effect (and (printer-at ?pr ?prpos) (hand-empty) (not (holding ?pr))))
  (:action toggle-on
    :parameters (?pr - printer ?pos - position ?prpos - position ?dir - direction)
    :precondition (and (at ?pos) (facing ?dir) (move-dir ?pos ?prpos ?dir) (printer-at ?pr ?prpos) (desk ?prpos) (not (printer-on ?pr)))
    :effect (and (printer-on ?pr)))
  (:action toggle-off
    :parameters (?pr - printer ?pos - position ?prpos - position ?dir - direction)
    :precondition (and (at ?pos) (facing ?dir) (move-dir ?pos ?prpos ?dir) (printer-at ?pr ?prpos) (printer-on ?pr))
    :effect (and (not (printer-on ?pr))))
)
"""

_FRONT = "(at ?pos) (facing ?dir) (move-dir ?pos ?front ?dir)"

OVERCOOKED_DOMAIN = f"""\
(define (domain overcooked)
  (:requirements :strips :typing :negative-preconditions)
  (:types position direction item ingredient plate salad - item)
  (:predicates
    (at ?pos - position)
    (facing ?dir - direction)
    (move-dir ?pos1 - position ?pos2 - position ?dir - direction)
    (floor ?pos - position)
    (surface ?pos - position)
    (board ?pos - position)
    (delivery ?pos - position)
    (item-at ?i - item ?pos - position)
    (free ?pos - position)
    (holding ?i - item)
    (hand-empty)
    (chopped ?i - ingredient)
    (unmade ?s - salad)
    (plated ?s - salad)
    (delivered ?s - salad))
  (:action move
    :parameters (?from ?to - position ?dir ?old - direction)
    :precondition (and (at ?from) (facing ?old) (move-dir ?from ?to ?dir) (floor ?to))
    :effect (and (not (at ?from)) (at ?to) (not (facing ?old)) (facing ?dir)))
  (:action chop
    :parameters (?i - ingredient ?pos ?front - position ?dir - direction)
    :precondition (and {_FRONT} (board ?front) (item-at ?i ?front) (not (chopped ?i)))
    :effect (and (chopped ?i)))
  (:action pick
    :parameters (?i - item ?pos ?front - position ?dir - direction)
    :precondition (and {_FRONT} (hand-empty) (surface ?front) (item-at ?i ?front))
    :effect (and (not (item-at ?i ?front)) (free ?front) (not (hand-empty)) (holding ?i)))
  (:action drop
    :parameters (?i - item ?pos ?front - position ?dir - direction)
    :precondition (and {_FRONT} (holding ?i) (surface ?front) (free ?front))
    :effect (and (item-at ?i ?front) (not (free ?front)) (hand-empty) (not (holding ?i))))
  (:action merge-ingredient
    :parameters (?held ?other - ingredient ?s - salad ?pos ?front - position ?dir - direction)
    :precondition (and {_FRONT} (holding ?held) (chopped ?held) (item-at ?other ?front) (chopped ?other) (unmade ?s))
    :effect (and (not (holding ?held)) (hand-empty) (not (item-at ?other ?front)) (item-at ?s ?front) (not (unmade ?s))))
  (:action put-plate
    :parameters (?s - salad ?p - plate ?pos ?front - position ?dir - direction)
    :precondition (and {_FRONT} (holding ?s) (item-at ?p ?front) (not (plated ?s)))
    :effect (and (not (holding ?s)) (hand-empty) (not (item-at ?p ?front)) (item-at ?s ?front) (plated ?s)))
  (:action deliver
    :parameters (?s - salad ?pos ?front - position ?dir - direction)
    :precondition (and {_FRONT} (holding ?s) (plated ?s) (delivery ?front))
    :effect (and (not (holding ?s)) (hand-empty) (delivered ?s)))
)
"""

DOMAIN_TEXTS = {
    "frozenlake": FROZENLAKE_DOMAIN,
    "maze": MAZE_DOMAIN,
    "sokoban": SOKOBAN_DOMAIN,
    "package": PACKAGE_DOMAIN,
    "printer": PRINTER_DOMAIN,
    "overcooked": OVERCOOKED_DOMAIN,
}


@lru_cache(maxsize=None)
def golden_domain(domain: str) -> PddlDomain:
    return parse_domain(DOMAIN_TEXTS[domain])


def _a(pred: str, *args: str) -> Atom:
    return Atom(pred, tuple(args))


def _positions(sc: GridScenario) -> list[str]:
    return [pos_name(p) for p in sc.positions()]


def _typed(names, t: str | None) -> list[TypedName]:
    return [TypedName(n, t) for n in names]


def _turn_atoms() -> list[Atom]:
    out = [_a("left-turn", d, LEFT_OF[d]) for d in ("up", "left", "down", "right")]
    out += [_a("right-turn", d, RIGHT_OF[d]) for d in ("up", "right", "down", "left")]
    return out


def _move_dir_atoms(sc: GridScenario) -> list[Atom]:
    """Horizontal pairs row by row, then vertical pairs, each with its reverse."""
    out = []
    for r in range(1, sc.rows + 1):
        for c in range(1, sc.cols):
            a, b = pos_name((r, c)), pos_name((r, c + 1))
            out += [_a("move-dir", a, b, "right"), _a("move-dir", b, a, "left")]
    for r in range(1, sc.rows):
        for c in range(1, sc.cols + 1):
            a, b = pos_name((r, c)), pos_name((r + 1, c))
            out += [_a("move-dir", a, b, "down"), _a("move-dir", b, a, "up")]
    return out


def _directional(sc: GridScenario, pred_of) -> list[Atom]:
    """Per-direction adjacency predicates, ``pred_of(d)`` names the predicate."""
    out = []
    for d in pred_of.order:
        for p in sc.positions():
            q = shift(p, d)
            if sc.in_bounds(q):
                out.append(_a(pred_of(d), pos_name(p), pos_name(q)))
    return out


class _Named:
    def __init__(self, fmt: str, order: tuple[str, ...]):
        self.fmt = fmt
        self.order = order

    def __call__(self, d: str) -> str:
        return self.fmt.format(d)


def _frozenlake_problem(sc: GridScenario) -> PddlProblem:
    init = [_a("at", pos_name(sc.agent))]
    init += [_a("ice-hole", pos_name(p)) for p in sc.cells_of("hole")]
    init += _directional(sc, _Named("{}_direction", ("up", "down", "left", "right")))
    return PddlProblem(
        "fl-rand", "frozenlake", tuple(_typed(_positions(sc), None)), tuple(init),
        (Literal(_a("at", pos_name(sc.goal))),),
    )


def _maze_problem(sc: GridScenario) -> PddlProblem:
    init = [_a("at", pos_name(sc.agent)), _a("is-goal", pos_name(sc.goal))]
    init += [_a("wall", pos_name(p)) for p in sc.cells_of("wall")]
    init += _directional(sc, _Named("move-dir-{}", ("left", "right", "up", "down")))
    return PddlProblem(
        "maze", "maze", tuple(_typed(_positions(sc), "position")), tuple(init),
        (Literal(_a("at", pos_name(sc.goal))),),
    )


def _sokoban_problem(sc: GridScenario) -> PddlProblem:
    boxes = sc.items_of("box")
    targets = set(sc.cells_of("target"))
    occupied = {b.pos for b in boxes}
    init = [_a("at", pos_name(sc.agent))]
    for b in boxes:
        init.append(_a("box-at", b.name, pos_name(b.pos)))
        if b.pos in targets:
            init.append(_a("at-goal", b.name))
    init += [_a("is-goal", pos_name(p)) for p in sorted(targets)]
    init += [
        _a("clear", pos_name(p)) for p in sc.positions() if sc.cell(p) != "wall" and p not in occupied
    ]
    init += _move_dir_atoms(sc)
    objects = _typed(_positions(sc), "position") + _typed([b.name for b in boxes], "box")
    objects += _typed(DIRECTIONS, "direction")
    goal = tuple(Literal(_a("at-goal", b.name)) for b in boxes)
    return PddlProblem("sokoban", "sokoban", tuple(objects), tuple(init), goal)


def _package_problem(sc: GridScenario) -> PddlProblem:
    pkgs = sc.items_of("package")
    init = [_a("at", pos_name(sc.agent)), _a("facing", sc.facing)]
    for p in pkgs:
        if p.pos is not None:
            init.append(_a("package-at", p.name, pos_name(p.pos)))
        init.append(_a(f"package-{p.state}", p.name))
    init += _turn_atoms() + _move_dir_atoms(sc)
    if sc.carried is None:
        init.append(_a("hand-empty"))
    else:
        init.append(_a("holding", sc.carried))
    taken = {p.pos for p in pkgs}
    init += [_a("empty", pos_name(q)) for q in sc.positions() if q not in taken]
    objects = _typed(_positions(sc), "position") + _typed([p.name for p in pkgs], "package")
    objects += _typed(DIRECTIONS, "direction")
    goal = tuple(Literal(_a("package-open", p.name)) for p in pkgs)
    return PddlProblem("package", "package", tuple(objects), tuple(init), goal)


def _printer_problem(sc: GridScenario) -> PddlProblem:
    printers = sc.items_of("printer")
    init = [_a("at", pos_name(sc.agent)), _a("facing", sc.facing)]
    for pr in printers:
        if pr.pos is not None:
            init.append(_a("printer-at", pr.name, pos_name(pr.pos)))
        if pr.state == "on":
            init.append(_a("printer-on", pr.name))
    init.append(_a("hand-empty") if sc.carried is None else _a("holding", sc.carried))
    init += [_a("desk", pos_name(p)) for p in sc.cells_of("desk")]
    init += _turn_atoms() + _move_dir_atoms(sc)
    objects = _typed(_positions(sc), "position") + _typed([p.name for p in printers], "printer")
    objects += _typed(DIRECTIONS, "direction")
    goal = tuple(Literal(_a("printer-on", p.name)) for p in printers)
    return PddlProblem("printer", "printer", tuple(objects), tuple(init), goal)


def _overcooked_problem(sc: GridScenario) -> PddlProblem:
    init = [_a("at", pos_name(sc.agent)), _a("facing", sc.facing)]
    init.append(_a("hand-empty") if sc.carried is None else _a("holding", sc.carried))
    surfaces = [p for p in sc.positions() if sc.cell(p) in ("counter", "board")]
    init += [_a("floor", pos_name(p)) for p in sc.cells_of("floor")]
    init += [_a("surface", pos_name(p)) for p in surfaces]
    init += [_a("board", pos_name(p)) for p in sc.cells_of("board")]
    init += [_a("delivery", pos_name(p)) for p in sc.cells_of("delivery")]
    occupied = set()
    for it in sc.items:
        if it.pos is not None:
            init.append(_a("item-at", it.name, pos_name(it.pos)))
            occupied.add(it.pos)
        if it.kind == "ingredient" and it.state == "chopped":
            init.append(_a("chopped", it.name))
        if it.kind == "salad":
            if it.state in ("", "unmade"):
                init.append(_a("unmade", it.name))
            if it.state in ("plated", "delivered"):
                init.append(_a("plated", it.name))
            if it.state == "delivered":
                init.append(_a("delivered", it.name))
    init += [_a("free", pos_name(p)) for p in surfaces if p not in occupied]
    init += _move_dir_atoms(sc)
    objects = _typed(_positions(sc), "position") + _typed(DIRECTIONS, "direction")
    for kind in ("ingredient", "plate", "salad"):
        objects += _typed([it.name for it in sc.items_of(kind)], kind)
    goal = tuple(Literal(_a("delivered", s.name)) for s in sc.items_of("salad"))
    return PddlProblem("overcooked", "overcooked", tuple(objects), tuple(init), goal)


_PROBLEMS = {
    "frozenlake": _frozenlake_problem,
    "maze": _maze_problem,
    "sokoban": _sokoban_problem,
    "package": _package_problem,
    "printer": _printer_problem,
    "overcooked": _overcooked_problem,
}


def to_ground_truth_pddl(sc: GridScenario) -> tuple[PddlDomain, PddlProblem]:
    if sc.variant != "base":
        raise ValueError(
            f"rule variant {sc.variant} has history-dependent dynamics; only base rules are emitted as PDDL"
        )
    return golden_domain(sc.domain), _PROBLEMS[sc.domain](sc)


def ground_truth_problem(sc: GridScenario) -> PddlProblem:
    return to_ground_truth_pddl(sc)[1]
