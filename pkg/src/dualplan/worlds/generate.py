"""Procedural scenario generation and a simulator-level BFS oracle."""
from __future__ import annotations

import itertools
import random
from collections import deque
from typing import Iterator

from .rules import SUCCESS, goal_reached, step
from .scenario import (
    ACTION_VOCAB,
    DIRECTIONS,
    SIZE_RANGES,
    GridScenario,
    Item,
    Pos,
    normalize_domain,
)

SEEN_THEMES = ("theme-1", "theme-2", "theme-3", "theme-4", "theme-5")
UNSEEN_THEME = "unseen"
OVERCOOKED_SEEN_THEMES = SEEN_THEMES[:4]

INGREDIENTS = {"seen": ("lettuce", "tomato"), "unseen": ("onion", "tomato")}


class SizeOutOfRange(ValueError):
    pass


def check_size(domain: str, size: int) -> None:
    lo, hi = SIZE_RANGES[domain]
    if not lo <= size <= hi:
        raise SizeOutOfRange(f"size {size} out of range for {domain}: expected {lo}-{hi}")


def _grid(n: int, fill: str) -> list[list[str]]:
    return [[fill] * n for _ in range(n)]


def _freeze(grid: list[list[str]]) -> tuple[tuple[str, ...], ...]:
    return tuple(tuple(r) for r in grid)


def _all_cells(n: int) -> list[Pos]:
    return [(r, c) for r in range(1, n + 1) for c in range(1, n + 1)]


def _ring(n: int, corners: bool = True) -> list[Pos]:
    out = []
    for p in _all_cells(n):
        on_edge = p[0] in (1, n) or p[1] in (1, n)
        is_corner = p[0] in (1, n) and p[1] in (1, n)
        if on_edge and (corners or not is_corner):
            out.append(p)
    return out


def _interior(n: int) -> list[Pos]:
    return [(r, c) for r in range(2, n) for c in range(2, n)]


def _set(grid, p: Pos, kind: str) -> None:
    grid[p[0] - 1][p[1] - 1] = kind


def _frozenlake(rng: random.Random, n: int, prob: float, variant: str, theme: str) -> GridScenario:
    cells = _all_cells(n)
    start, goal = rng.sample(cells, 2)
    grid = _grid(n, "ground")
    rest = [p for p in cells if p not in (start, goal)]
    if variant == "r3":
        holes = rng.sample(rest, 2)
    else:
        holes = [p for p in rest if rng.random() < prob]
    for p in holes:
        _set(grid, p, "hole")
    return GridScenario("frozenlake", n, n, _freeze(grid), start, goal=goal, variant=variant, theme=theme, start=start)


def _maze(rng, n, prob, variant, theme) -> GridScenario:
    cells = _all_cells(n)
    start, goal = rng.sample(cells, 2)
    grid = _grid(n, "floor")
    for p in cells:
        if p not in (start, goal) and rng.random() < prob:
            _set(grid, p, "wall")
    return GridScenario("maze", n, n, _freeze(grid), start, goal=goal, theme=theme)


def _sokoban(rng, n, prob, variant, theme) -> GridScenario:
    grid = _grid(n, "floor")
    for p in _ring(n):
        _set(grid, p, "wall")
    inner = _interior(n)
    k = rng.randint(1, 2) if n >= 6 else 1
    chosen = rng.sample(inner, 1 + 2 * k)
    agent, boxes, targets = chosen[0], chosen[1:1 + k], chosen[1 + k:]
    for p in inner:
        if p not in chosen and rng.random() < prob:
            _set(grid, p, "wall")
    for p in targets:
        _set(grid, p, "target")
    items = tuple(Item(f"box-{i + 1}", "box", p) for i, p in enumerate(sorted(boxes)))
    return GridScenario("sokoban", n, n, _freeze(grid), agent, items=items, theme=theme)


def _package(rng, n, prob, variant, theme) -> GridScenario:
    k = 2 if rng.random() < max(prob, 0.3) else 1
    chosen = rng.sample(_all_cells(n), 1 + k)
    items = tuple(Item(f"pkg-{i + 1}", "package", p, "closed") for i, p in enumerate(chosen[1:]))
    return GridScenario(
        "package", n, n, _freeze(_grid(n, "floor")), chosen[0],
        facing=rng.choice(DIRECTIONS), items=items, theme=theme,
    )


def _printer(rng, n, prob, variant, theme) -> GridScenario:
    cells = _all_cells(n)
    agent, printer = rng.sample(cells, 2)
    grid = _grid(n, "floor")
    free = [p for p in cells if p not in (agent, printer)]
    desks = [p for p in free if rng.random() < prob] or [rng.choice(free)]
    for p in desks:
        _set(grid, p, "desk")
    items = (Item("printer-1", "printer", printer, "off"),)
    return GridScenario(
        "printer", n, n, _freeze(grid), agent, facing=rng.choice(DIRECTIONS), items=items, theme=theme
    )


def _overcooked(rng, n, prob, variant, theme) -> GridScenario:
    # three counters start loaded; the chopping board is the only free surface
    grid = _grid(n, "floor")
    for p in _ring(n):
        _set(grid, p, "wall")
    spots = rng.sample(_ring(n, corners=False), 5)
    board, delivery, counters = spots[0], spots[1], spots[2:]
    _set(grid, board, "board")
    _set(grid, delivery, "delivery")
    for p in counters:
        _set(grid, p, "counter")
    inner = _interior(n)
    agent = rng.choice(inner)
    for p in inner:
        if p != agent and rng.random() < prob * 0.5:
            _set(grid, p, "wall")
    first, second = INGREDIENTS["unseen" if theme == UNSEEN_THEME else "seen"]
    items = (
        Item(first, "ingredient", counters[0], "whole"),
        Item(second, "ingredient", counters[1], "whole"),
        Item("plate-1", "plate", counters[2]),
        Item("salad-1", "salad", None, "unmade"),
    )
    return GridScenario(
        "overcooked", n, n, _freeze(grid), agent, facing=rng.choice(DIRECTIONS), items=tuple(sorted(items)), theme=theme
    )


_BUILDERS = {
    "frozenlake": _frozenlake,
    "maze": _maze,
    "sokoban": _sokoban,
    "package": _package,
    "printer": _printer,
    "overcooked": _overcooked,
}


def generate_map(
    domain: str,
    size: int,
    obstacle_prob: float = 0.2,
    seed: int = 0,
    *,
    variant: str = "base",
    theme: str = "theme-1",
    require_solvable: bool = False,
    max_tries: int = 500,
    bfs_budget: int = 200_000,
) -> GridScenario:
    """Sample a scenario; deterministic in all arguments.

    With ``require_solvable`` the map is resampled (attempt counter folded
    into the seed) until the simulator BFS finds a plan.
    """
    domain = normalize_domain(domain)
    check_size(domain, size)
    if not 0.0 <= obstacle_prob <= 1.0:
        raise ValueError("obstacle probability must be within [0, 1]")
    if variant != "base" and domain != "frozenlake":
        raise ValueError("rule variants only exist for frozenlake")
    for attempt in range(max_tries):
        rng = random.Random(f"{domain}/{size}/{obstacle_prob!r}/{variant}/{seed}/{attempt}")
        sc = _BUILDERS[domain](rng, size, obstacle_prob, variant, theme)
        if not require_solvable:
            # solvability is left unknown; the BFS can be costly on large maps
            return sc.evolve(seed=seed).check()
        if shortest_plan(sc, budget=bfs_budget) is not None:
            return sc.evolve(seed=seed, solvable=True).check()
    raise RuntimeError(f"no solvable {domain} map found after {max_tries} attempts")


_PLAN_CACHE: dict[tuple, list[str] | None] = {}
_PLAN_CACHE_MAX = 4096


def shortest_plan(sc: GridScenario, budget: int = 200_000) -> list[str] | None:
    """Breadth-first search over simulator states using only Successful steps.

    This is independent of any PDDL encoding and serves as the optimality
    oracle for the planner. Returns None if unsolvable or over budget.
    """
    key = (sc.domain, sc.variant, sc.cells, sc.key(), budget)
    if key not in _PLAN_CACHE:
        if len(_PLAN_CACHE) >= _PLAN_CACHE_MAX:
            _PLAN_CACHE.clear()
        _PLAN_CACHE[key] = _bfs(sc, budget)
    plan = _PLAN_CACHE[key]
    return None if plan is None else list(plan)


def _bfs(sc: GridScenario, budget: int) -> list[str] | None:
    if goal_reached(sc):
        return []
    vocab = ACTION_VOCAB[sc.domain]
    parent: dict[tuple, tuple | None] = {sc.key(): None}
    frontier = deque([sc])
    while frontier:
        cur = frontier.popleft()
        if len(parent) > budget:
            return None
        for a in vocab:
            out = step(cur, a)
            if out.result != SUCCESS:
                continue
            k = out.scenario.key()
            if k in parent:
                continue
            parent[k] = (cur.key(), a)
            if goal_reached(out.scenario):
                plan = []
                while parent[k] is not None:
                    k, act = parent[k]
                    plan.append(act)
                return plan[::-1]
            frontier.append(out.scenario)
    return None


def all_small_maps(domain: str, n: int = 3) -> Iterator[GridScenario]:
    """Every FrozenLake or Maze map on an n x n grid with distinct free start and goal."""
    obstacle = {"frozenlake": "hole", "maze": "wall"}[domain]
    free = {"frozenlake": "ground", "maze": "floor"}[domain]
    cells = _all_cells(n)
    for mask in range(1 << len(cells)):
        blocked = {cells[i] for i in range(len(cells)) if mask >> i & 1}
        grid = tuple(
            tuple(obstacle if (r, c) in blocked else free for c in range(1, n + 1)) for r in range(1, n + 1)
        )
        open_cells = [p for p in cells if p not in blocked]
        for start, goal in itertools.permutations(open_cells, 2):
            yield GridScenario(domain, n, n, grid, start, goal=goal, start=start)
