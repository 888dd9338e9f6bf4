"""Symbolic grid scenarios shared by the simulator, renderer and PDDL emitter."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator

DOMAINS = ("frozenlake", "maze", "sokoban", "package", "printer", "overcooked")

SIZE_RANGES = {
    "frozenlake": (3, 8),
    "maze": (5, 8),
    "sokoban": (5, 8),
    "package": (4, 8),
    "printer": (4, 8),
    "overcooked": (5, 8),
}

DIRECTIONS = ("up", "down", "left", "right")
DELTA = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}
OPPOSITE = {"up": "down", "down": "up", "left": "right", "right": "left"}
LEFT_OF = {"up": "left", "left": "down", "down": "right", "right": "up"}
RIGHT_OF = {"up": "right", "right": "down", "down": "left", "left": "up"}

MOVES = tuple(f"move {d}" for d in DIRECTIONS)

ACTION_VOCAB = {
    "frozenlake": MOVES,
    "maze": MOVES,
    "sokoban": MOVES,
    "package": ("turn-left", "turn-right", "move", "pick-up", "drop-down", "open", "close"),
    "printer": ("turn-left", "turn-right", "move", "pick-up", "drop-down", "toggle-on", "toggle-off"),
    "overcooked": MOVES + ("chop", "pick", "drop", "merge-ingredient", "put-plate", "deliver"),
}

# base cell types per domain; the first entry is the default walkable cell
CELL_TYPES = {
    "frozenlake": ("ground", "hole"),
    "maze": ("floor", "wall"),
    "sokoban": ("floor", "wall", "target"),
    "package": ("floor",),
    "printer": ("floor", "desk"),
    "overcooked": ("floor", "wall", "counter", "board", "delivery"),
}

ORIENTED = frozenset({"package", "printer", "overcooked"})

BASE = "base"
SEEN_VARIANTS = tuple(f"r{i}" for i in range(1, 16))
UNSEEN_VARIANTS = tuple(f"u{i}" for i in range(1, 6))
VARIANTS = (BASE,) + SEEN_VARIANTS + UNSEEN_VARIANTS

Pos = tuple[int, int]


def pos_name(p: Pos) -> str:
    return f"pos-{p[0]}-{p[1]}"


def parse_pos(name: str) -> Pos:
    parts = name.strip().strip("()").split("-")
    if len(parts) != 3 or parts[0] != "pos":
        raise ValueError(f"not a position name: {name!r}")
    return int(parts[1]), int(parts[2])


def shift(p: Pos, direction: str, k: int = 1) -> Pos:
    dr, dc = DELTA[direction]
    return p[0] + k * dr, p[1] + k * dc


def normalize_domain(name: str) -> str:
    key = name.strip().lower().replace("_", "").replace("-", "").replace(" ", "")
    if key not in DOMAINS:
        raise ValueError(f"unknown domain {name!r}; expected one of {', '.join(DOMAINS)}")
    return key


@dataclass(frozen=True, order=True)
class Item:
    """A movable object. ``pos`` is None while carried or after it is consumed."""

    name: str
    kind: str
    pos: Pos | None = None
    state: str = ""


@dataclass(frozen=True)
class GridScenario:
    domain: str
    rows: int
    cols: int
    cells: tuple[tuple[str, ...], ...]
    agent: Pos
    goal: Pos | None = None
    facing: str | None = None
    items: tuple[Item, ...] = ()
    carried: str | None = None
    variant: str = BASE
    theme: str = "theme-1"
    start: Pos | None = None
    failed: bool = False
    aux: tuple[tuple[str, int], ...] = ()
    seed: int | None = None
    solvable: bool | None = field(default=None, compare=False)

    def check(self) -> "GridScenario":
        """Full structural check; run on construction from outside data."""
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown rule variant {self.variant!r}")
        if len(self.cells) != self.rows or any(len(r) != self.cols for r in self.cells):
            raise ValueError("cell grid does not match rows x cols")
        if not self.in_bounds(self.agent):
            raise ValueError(f"agent position {self.agent} out of bounds")
        allowed = set(CELL_TYPES[self.domain])
        for row in self.cells:
            for c in row:
                if c not in allowed:
                    raise ValueError(f"cell type {c!r} not allowed in {self.domain}")
        if self.domain in ORIENTED and self.facing not in DIRECTIONS:
            raise ValueError(f"{self.domain} scenarios need a facing direction")
        if self.goal is not None and not self.in_bounds(self.goal):
            raise ValueError(f"goal position {self.goal} out of bounds")
        for it in self.items:
            if it.pos is not None and not self.in_bounds(it.pos):
                raise ValueError(f"item {it.name} out of bounds")
        if self.domain == "sokoban" and len(self.items_of("box")) != len(self.cells_of("target")):
            raise ValueError("sokoban needs as many boxes as goal cells")
        return self

    def key(self) -> tuple:
        """Hashable dynamic state; cells never change during play."""
        return (self.agent, self.facing, self.items, self.carried, self.failed, self.aux, self.goal, self.start)

    # geometry
    def in_bounds(self, p: Pos) -> bool:
        return 1 <= p[0] <= self.rows and 1 <= p[1] <= self.cols

    def cell(self, p: Pos) -> str:
        return self.cells[p[0] - 1][p[1] - 1]

    def positions(self) -> Iterator[Pos]:
        for r in range(1, self.rows + 1):
            for c in range(1, self.cols + 1):
                yield (r, c)

    def cells_of(self, kind: str) -> list[Pos]:
        return [p for p in self.positions() if self.cell(p) == kind]

    @property
    def origin(self) -> Pos:
        return self.start if self.start is not None else self.agent

    # items
    def item(self, name: str) -> Item:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def items_at(self, p: Pos) -> list[Item]:
        return [it for it in self.items if it.pos == p]

    def item_at(self, p: Pos, kind: str | None = None) -> Item | None:
        for it in self.items:
            if it.pos == p and (kind is None or it.kind == kind):
                return it
        return None

    def items_of(self, kind: str) -> list[Item]:
        return [it for it in self.items if it.kind == kind]

    def with_item(self, new: Item) -> "GridScenario":
        items = tuple(sorted(new if it.name == new.name else it for it in self.items))
        return self.evolve(items=items)

    # auxiliary counters for rule variants
    def get(self, key: str, default: int = 0) -> int:
        for k, v in self.aux:
            if k == key:
                return v
        return default

    def with_aux(self, **updates: int) -> "GridScenario":
        merged = dict(self.aux)
        merged.update(updates)
        return self.evolve(aux=tuple(sorted((k, v) for k, v in merged.items() if v)))

    def evolve(self, **changes) -> "GridScenario":
        # hot path of every search; skips dataclasses.replace bookkeeping
        unknown = changes.keys() - self.__dict__.keys()
        if unknown:
            raise TypeError(f"unknown scenario fields: {sorted(unknown)}")
        new = object.__new__(GridScenario)
        new.__dict__.update(self.__dict__)
        new.__dict__.update(changes)
        return new

    # serialization
    def to_dict(self) -> dict:
        d = asdict(self)
        d["cells"] = [list(r) for r in self.cells]
        d["items"] = [
            {"name": it.name, "kind": it.kind, "pos": list(it.pos) if it.pos else None, "state": it.state}
            for it in self.items
        ]
        d["aux"] = dict(self.aux)
        for key in ("agent", "goal", "start"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GridScenario":
        def opt_pos(v) -> Pos | None:
            return None if v is None else (int(v[0]), int(v[1]))

        cells = tuple(tuple(r) for r in d["cells"])
        items = tuple(
            sorted(
                Item(it["name"], it["kind"], opt_pos(it.get("pos")), it.get("state", ""))
                for it in d.get("items", [])
            )
        )
        aux = d.get("aux") or {}
        return cls(
            domain=normalize_domain(d["domain"]),
            rows=int(d.get("rows", len(cells))),
            cols=int(d.get("cols", len(cells[0]) if cells else 0)),
            cells=cells,
            agent=opt_pos(d["agent"]),
            goal=opt_pos(d.get("goal")),
            facing=d.get("facing"),
            items=items,
            carried=d.get("carried"),
            variant=d.get("variant", BASE),
            theme=d.get("theme", "theme-1"),
            start=opt_pos(d.get("start")),
            failed=bool(d.get("failed", False)),
            aux=tuple(sorted((str(k), int(v)) for k, v in dict(aux).items() if v)),
            seed=d.get("seed"),
            solvable=d.get("solvable"),
        ).check()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GridScenario":
        return cls.from_dict(json.loads(text))

    def ascii(self) -> str:
        """Debug picture: one character per cell, agent shown as A."""
        glyph = {
            "ground": ".", "floor": ".", "hole": "O", "wall": "#", "target": "x",
            "desk": "D", "counter": "=", "board": "B", "delivery": "$",
        }
        kind_glyph = {"box": "b", "package": "p", "printer": "P", "ingredient": "i", "plate": "u", "salad": "s"}
        lines = []
        for r in range(1, self.rows + 1):
            row = []
            for c in range(1, self.cols + 1):
                p = (r, c)
                ch = glyph[self.cell(p)]
                it = self.item_at(p)
                if it is not None:
                    ch = kind_glyph.get(it.kind, "?")
                if p == self.goal:
                    ch = "G"
                if p == self.agent:
                    ch = "A"
                row.append(ch)
            lines.append("".join(row))
        return "\n".join(lines)


def grid_from_rows(rows: Iterable[str], legend: dict[str, str]) -> tuple[tuple[str, ...], ...]:
    """Build a cell grid from strings, e.g. ``["..O", "O.."]`` with a char legend."""
    return tuple(tuple(legend[ch] for ch in line) for line in rows)
