"""Tile-based raster rendering of grid scenarios, plus the inverse classifier.

Every tile is split into fixed regions so that each part of the symbolic
state lands in its own pixels:

* outer frame (width ``b``): goal marker for FrozenLake/Maze, otherwise cell colour
* top strip: the agent glyph with a facing notch
* centre square: the item on the cell, if any
* bottom strip: the item the agent carries (only on the agent's tile)
* everything else: plain cell colour

:func:`classify` reads a rendered image back region by region, picking the
nearest template, which gives an exact round trip for rendered inputs.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .worlds.scenario import CELL_TYPES, DIRECTIONS, ORIENTED, GridScenario, Item

GLYPHS = ("square", "circle", "diamond", "triangle", "cross")

# item descriptors (kind, name, state) that can appear on a grid cell, per domain
_ON_GRID = {
    "frozenlake": (),
    "maze": (),
    "sokoban": tuple(("box", f"box-{i}", "") for i in (1, 2)),
    "package": tuple(("package", f"pkg-{i}", s) for i in (1, 2) for s in ("closed", "open")),
    "printer": tuple(("printer", "printer-1", s) for s in ("off", "on")),
    "overcooked": tuple(
        ("ingredient", n, s) for n in ("lettuce", "tomato", "onion") for s in ("whole", "chopped")
    )
    + (("plate", "plate-1", ""), ("salad", "salad-1", "made"), ("salad", "salad-1", "plated")),
}


class ThemeError(ValueError):
    pass


@dataclass(frozen=True)
class Theme:
    id: str
    tile: int
    background: tuple[int, int, int]
    cells: dict
    goal: tuple[int, int, int]
    agent: dict
    facing: tuple[int, int, int]
    mark: tuple[int, int, int]
    items: dict

    def __post_init__(self):
        if self.tile < 16:
            raise ThemeError(f"theme {self.id}: tile size must be at least 16 px")
        if self.agent.get("glyph") not in GLYPHS:
            raise ThemeError(f"theme {self.id}: unknown agent glyph")
        colours = [tuple(c) for c in self.cells.values()]
        if len(set(colours)) != len(colours):
            raise ThemeError(f"theme {self.id}: cell roles must have distinct colours")

    def covers(self, domain: str) -> None:
        missing = [c for c in CELL_TYPES[domain] if c not in self.cells]
        for kind, name, state in _ON_GRID[domain]:
            try:
                self.item_style(kind, name, state)
            except KeyError:
                missing.append(f"{kind}:{name}:{state}")
        if missing:
            raise ThemeError(f"theme {self.id} has no mapping for {', '.join(missing)}")

    def item_style(self, kind: str, name: str, state: str) -> tuple[str, tuple[int, int, int]]:
        spec = self.items[kind]
        if kind == "ingredient":
            return spec["glyph"], tuple(spec["names"][name][state])
        return spec["glyph"], tuple(spec["colors"][state])

    @classmethod
    def from_dict(cls, theme_id: str, d: dict) -> "Theme":
        return cls(
            id=theme_id,
            tile=int(d.get("tile", 32)),
            background=tuple(d["background"]),
            cells={k: tuple(v) for k, v in d["cells"].items()},
            goal=tuple(d["goal"]),
            agent=dict(d["agent"]),
            facing=tuple(d["facing"]),
            mark=tuple(d["mark"]),
            items=d["items"],
        )


def load_themes(path: str | Path | None = None) -> dict[str, Theme]:
    if path is None:
        text = resources.files("dualplan.assets").joinpath("themes/themes.json").read_text()
    else:
        text = Path(path).read_text()
    return {k: Theme.from_dict(k, v) for k, v in json.loads(text).items()}


@lru_cache(maxsize=None)
def _default_themes() -> dict[str, Theme]:
    return load_themes()


def get_theme(theme: str | Theme) -> Theme:
    if isinstance(theme, Theme):
        return theme
    themes = _default_themes()
    if theme not in themes:
        raise ThemeError(f"unknown theme {theme!r}; available: {', '.join(themes)}")
    return themes[theme]


# geometry


def _frame(tile: int) -> int:
    return max(2, tile // 10)


def _regions(tile: int) -> dict[str, tuple[slice, slice]]:
    b = _frame(tile)
    q = tile // 4
    return {
        "frame": (slice(0, b), slice(0, tile)),
        "agent": (slice(b, q), slice(b, tile - b)),
        "center": (slice(q, tile - q), slice(q, tile - q)),
        "carried": (slice(tile - q, tile - b), slice(q, tile - q)),
        "plain": (slice(tile - q, tile - b), slice(b, q)),
    }


@lru_cache(maxsize=64)
def _mask(glyph: str, h: int, w: int) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    cy, cx = (h - 1) / 2, (w - 1) / 2
    ny, nx = (yy - cy) / (h / 2), (xx - cx) / (w / 2)
    if glyph == "square":
        m = (np.abs(ny) <= 0.8) & (np.abs(nx) <= 0.8)
    elif glyph == "circle":
        m = ny**2 + nx**2 <= 0.8
    elif glyph == "diamond":
        m = np.abs(ny) + np.abs(nx) <= 0.95
    elif glyph == "triangle":
        m = (ny >= -0.85) & (ny <= 0.85) & (np.abs(nx) <= (ny + 0.85) / 2)
    elif glyph == "cross":
        m = ((np.abs(ny) <= 0.3) | (np.abs(nx) <= 0.3)) & (np.abs(ny) <= 0.9) & (np.abs(nx) <= 0.9)
    else:
        raise ThemeError(f"unknown glyph {glyph!r}")
    return m


def _index_of(name: str) -> int:
    tail = name.rsplit("-", 1)[-1]
    return int(tail) if tail.isdigit() else 0


def _draw_item(block: np.ndarray, theme: Theme, kind: str, name: str, state: str) -> None:
    glyph, colour = theme.item_style(kind, name, state)
    h, w = block.shape[:2]
    block[_mask(glyph, h, w)] = colour
    # identity dots along the bottom row
    d = max(1, h // 8)
    for k in range(_index_of(name)):
        x = 1 + k * 2 * d
        block[h - d - 1:h - 1, x:x + d] = theme.mark


def _draw_tile(
    theme: Theme,
    cell: str,
    goal: bool = False,
    item: tuple[str, str, str] | None = None,
    facing: str | None = None,
    agent: bool = False,
    carried: tuple[str, str, str] | None = None,
) -> np.ndarray:
    t = theme.tile
    b = _frame(t)
    tile = np.empty((t, t, 3), dtype=np.uint8)
    tile[:] = theme.cells[cell]
    if goal:
        tile[:b, :] = theme.goal
        tile[-b:, :] = theme.goal
        tile[:, :b] = theme.goal
        tile[:, -b:] = theme.goal
    reg = _regions(t)
    if item is not None:
        _draw_item(tile[reg["center"]], theme, *item)
    if agent:
        strip = tile[reg["agent"]]
        h, w = strip.shape[:2]
        strip[_mask(theme.agent["glyph"], h, w)] = theme.agent["color"]
        if facing is not None:
            # notch position encodes the facing direction
            slot = DIRECTIONS.index(facing)
            n = max(2, w // 8)
            x0 = slot * (w // 4) + (w // 4 - n) // 2
            strip[: max(1, h // 3), x0:x0 + n] = theme.facing
        if carried is not None:
            _draw_item(tile[reg["carried"]], theme, *carried)
    return tile


def _desc(it: Item) -> tuple[str, str, str]:
    return (it.kind, it.name, it.state)


def render_array(sc: GridScenario, theme: str | Theme | None = None) -> np.ndarray:
    """RGB array of shape (rows*tile, cols*tile, 3)."""
    th = get_theme(theme if theme is not None else sc.theme)
    th.covers(sc.domain)
    t = th.tile
    img = np.empty((sc.rows * t, sc.cols * t, 3), dtype=np.uint8)
    img[:] = th.background
    on_cell = {it.pos: it for it in sc.items if it.pos is not None}
    carried = _desc(sc.item(sc.carried)) if sc.carried else None
    for r in range(1, sc.rows + 1):
        for c in range(1, sc.cols + 1):
            p = (r, c)
            it = on_cell.get(p)
            is_agent = p == sc.agent
            img[(r - 1) * t:r * t, (c - 1) * t:c * t] = _draw_tile(
                th,
                sc.cell(p),
                goal=p == sc.goal,
                item=_desc(it) if it else None,
                facing=sc.facing if is_agent else None,
                agent=is_agent,
                carried=carried if is_agent else None,
            )
    return img


def render(sc: GridScenario, theme: str | Theme | None = None) -> Image.Image:
    return Image.fromarray(render_array(sc, theme), mode="RGB")


def render_png(sc: GridScenario, theme: str | Theme | None = None) -> bytes:
    buf = io.BytesIO()
    render(sc, theme).save(buf, format="PNG", optimize=False, compress_level=6)
    return buf.getvalue()


def save_png(sc: GridScenario, path: str | Path, theme: str | Theme | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(render_png(sc, theme))
    return path


# inverse


class ClassifyError(ValueError):
    pass


def _nearest(patch: np.ndarray, templates: dict) -> object:
    best, best_d = None, None
    p = patch.astype(np.int32)
    for key, tmpl in templates.items():
        d = int(np.abs(p - tmpl).sum())
        if best_d is None or d < best_d:
            best, best_d = key, d
    return best


@lru_cache(maxsize=64)
def _templates(theme_id: str, domain: str) -> dict[str, dict]:
    th = get_theme(theme_id)
    reg = _regions(th.tile)
    base_cell = CELL_TYPES[domain][0]
    cut = lambda tile, name: tile[reg[name]].astype(np.int32)  # noqa: E731
    out: dict[str, dict] = {"plain": {}, "frame": {}, "agent": {}, "center": {}, "carried": {}}
    for cell in CELL_TYPES[domain]:
        out["plain"][cell] = cut(_draw_tile(th, cell), "plain")
    facings = DIRECTIONS if domain in ORIENTED else (None,)
    out["agent"][None] = cut(_draw_tile(th, base_cell), "agent")
    for f in facings:
        out["agent"][("agent", f)] = cut(_draw_tile(th, base_cell, agent=True, facing=f), "agent")
    out["center"][None] = cut(_draw_tile(th, base_cell), "center")
    out["carried"][None] = cut(_draw_tile(th, base_cell, agent=True), "carried")
    for desc in _ON_GRID[domain]:
        out["center"][desc] = cut(_draw_tile(th, base_cell, item=desc), "center")
        out["carried"][desc] = cut(_draw_tile(th, base_cell, agent=True, carried=desc), "carried")
    return out


def classify(
    image: np.ndarray | Image.Image,
    domain: str,
    theme: str | Theme,
    *,
    variant: str = "base",
) -> GridScenario:
    """Recover a scenario from a rendered image by nearest-template matching.

    Regions are compared against templates drawn on the domain's default
    cell; the cell colour is removed first so overlays on any cell type match.
    Items that are off the grid (e.g. the not-yet-made salad) are restored
    from domain conventions, and the image is taken to show an initial state.
    """
    th = get_theme(theme)
    arr = np.asarray(image.convert("RGB") if isinstance(image, Image.Image) else image)
    t = th.tile
    if arr.ndim != 3 or arr.shape[0] % t or arr.shape[1] % t:
        raise ClassifyError(f"image shape {arr.shape} is not a multiple of tile size {t}")
    rows, cols = arr.shape[0] // t, arr.shape[1] // t
    tm = _templates(th.id, domain)
    reg = _regions(t)
    base = np.array(th.cells[CELL_TYPES[domain][0]], dtype=np.int32)
    cells, items = [], []
    agent = facing = goal = carried = None
    for r in range(rows):
        row = []
        for c in range(cols):
            tile = arr[r * t:(r + 1) * t, c * t:(c + 1) * t].astype(np.int32)
            cell = _nearest(tile[reg["plain"]], tm["plain"])
            row.append(cell)
            colour = np.array(th.cells[cell], dtype=np.int32)
            # repaint background pixels with the default cell colour before matching overlays
            norm = tile.copy()
            norm[(tile == colour).all(axis=-1)] = base
            p = (r + 1, c + 1)
            if (tile[reg["frame"]] == np.array(th.goal)).all(axis=-1).mean() > 0.5:
                goal = p
            a = _nearest(norm[reg["agent"]], tm["agent"])
            if a is not None:
                if agent is not None:
                    raise ClassifyError("more than one agent found")
                agent, facing = p, a[1]
                held = _nearest(norm[reg["carried"]], tm["carried"])
                if held is not None:
                    carried = held
            it = _nearest(norm[reg["center"]], tm["center"])
            if it is not None:
                items.append(Item(it[1], it[0], p, it[2]))
        cells.append(tuple(row))
    if agent is None:
        raise ClassifyError("no agent found")
    if carried is not None:
        items.append(Item(carried[1], carried[0], None, carried[2]))
    if domain == "overcooked" and not any(i.kind == "salad" for i in items):
        items.append(Item("salad-1", "salad", None, "unmade"))
    return GridScenario(
        domain,
        rows,
        cols,
        tuple(cells),
        agent,
        goal=goal,
        facing=facing,
        items=tuple(sorted(items)),
        carried=carried[1] if carried else None,
        variant=variant,
        theme=th.id,
        start=agent if domain == "frozenlake" else None,
    ).check()

