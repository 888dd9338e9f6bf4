from __future__ import annotations

import io

import numpy as np
import pytest
from PIL import Image

from dualplan.render import ClassifyError, ThemeError, classify, get_theme, load_themes, render_array, render_png, save_png
from dualplan.worlds import DOMAINS, SIZE_RANGES, describe, generate_map


def test_themes_cover_every_domain():
    themes = load_themes()
    assert set(themes) == {"theme-1", "theme-2", "theme-3", "theme-4", "theme-5", "unseen"}
    for th in themes.values():
        for dom in DOMAINS:
            th.covers(dom)


def test_unknown_theme_is_an_error():
    with pytest.raises(ThemeError):
        get_theme("neon")


@pytest.mark.parametrize("domain", DOMAINS)
def test_image_size_follows_the_grid(domain):
    size = SIZE_RANGES[domain][0]
    sc = generate_map(domain, size, 0.2, 2)
    arr = render_array(sc)
    tile = get_theme("theme-1").tile
    assert arr.shape == (sc.rows * tile, sc.cols * tile, 3)
    assert arr.dtype == np.uint8


def test_png_is_deterministic_and_readable():
    sc = generate_map("sokoban", 6, 0.2, 4)
    a, b = render_png(sc, "theme-2"), render_png(sc, "theme-2")
    assert a == b
    img = Image.open(io.BytesIO(a))
    assert img.size == (6 * 32, 6 * 32)


def test_appearances_differ():
    sc = generate_map("maze", 5, 0.3, 1)
    assert render_png(sc, "theme-1") != render_png(sc, "unseen")


@pytest.mark.parametrize("theme", ["theme-1", "theme-3", "unseen"])
@pytest.mark.parametrize("domain", DOMAINS)
def test_classify_recovers_the_scenario(domain, theme):
    for seed in range(3):
        sc = generate_map(domain, SIZE_RANGES[domain][0] + 1, 0.25, seed, theme=theme)
        back = classify(render_array(sc, theme), domain, theme)
        assert describe(back).text == describe(sc).text


def test_classify_rejects_odd_shapes():
    with pytest.raises(ClassifyError):
        classify(np.zeros((33, 32, 3), dtype=np.uint8), "maze", "theme-1")


def test_save_png(tmp_path):
    sc = generate_map("frozenlake", 3, 0.2, 0)
    path = save_png(sc, tmp_path / "x.png")
    assert path.read_bytes() == render_png(sc)
