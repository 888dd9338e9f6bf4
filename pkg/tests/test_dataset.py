from __future__ import annotations

import json

import pytest

from dualplan.dataset import (
    Mix,
    SpecEntry,
    build_datapoint,
    content_hash,
    desk_spec,
    full_scale_spec,
    generate_dataset,
    label_balance,
    load_records,
    rebuild_scenario,
    spec_total,
    split_audit,
    verify_dataset,
)
from dualplan.render import render_png
from dualplan.worlds import describe, parse_transcript, run_sequence, transcript


def _small_spec():
    return [
        SpecEntry("frozenlake", "theme-1", 4, "base", 6),
        SpecEntry("maze", "theme-2", 5, "base", 4),
        SpecEntry("frozenlake", "theme-3", 4, "r3", 3),
        SpecEntry("frozenlake", "unseen", 4, "base", 2),
        SpecEntry("frozenlake", "theme-1", 4, "u1", 2),
    ]


def test_empty_spec_gives_an_empty_dataset(tmp_path):
    manifest = generate_dataset([SpecEntry("maze", "theme-1", 5, "base", 0)], 1, tmp_path)
    assert manifest["counts"] == {"seen": 0, "unseen": 0}
    assert load_records(tmp_path) == []
    assert verify_dataset(tmp_path) == []


def test_full_scale_total():
    spec = full_scale_spec()
    assert spec_total(spec) == 428_956
    assert all(e.variant == "base" for e in spec)
    # unseen appearances add one more batch per domain
    assert spec_total(full_scale_spec(include_unseen=True)) > 428_956


def test_spec_entry_checks():
    with pytest.raises(ValueError):
        SpecEntry("maze", "theme-1", 5, "r3", 1).check()
    with pytest.raises(ValueError):
        SpecEntry("frozenlake", "theme-1", 4, "r99", 1).check()
    with pytest.raises(ValueError):
        SpecEntry("maze", "theme-1", 50, "base", 1).check()
    assert SpecEntry("frozenlake", "theme-1", 4, "u2").split == "unseen"
    assert SpecEntry("frozenlake", "unseen", 4).split == "unseen"


def test_generation_is_reproducible(tmp_path):
    a = generate_dataset(_small_spec(), 5, tmp_path / "a")
    b = generate_dataset(_small_spec(), 5, tmp_path / "b")
    assert a["files"] == b["files"]
    assert (tmp_path / "a" / "seen.jsonl").read_bytes() == (tmp_path / "b" / "seen.jsonl").read_bytes()
    c = generate_dataset(_small_spec(), 6, tmp_path / "c")
    assert c["files"] != a["files"]
    assert verify_dataset(tmp_path / "a") == []


def test_verify_notices_tampering(tmp_path):
    generate_dataset(_small_spec(), 5, tmp_path)
    rec = load_records(tmp_path, "seen")[0]
    (tmp_path / rec["image"]).write_bytes(b"not a png")
    problems = verify_dataset(tmp_path)
    assert problems == [f"{rec['id']}: image differs"]


def test_records_are_self_consistent(tmp_path):
    generate_dataset(_small_spec(), 9, tmp_path)
    records = load_records(tmp_path)
    assert len(records) == 17
    for r in records:
        png = (tmp_path / r["image"]).read_bytes()
        assert r["sha256"] == content_hash(r, png)
        sc = rebuild_scenario(r["meta"])
        assert png == render_png(sc, r["meta"]["theme"])
        trace = run_sequence(sc, r["meta"]["actions"])
        assert r["target"] == transcript(describe(sc), trace)
        _, parsed = parse_transcript(r["target"], len(r["meta"]["actions"]))
        assert [s.result for s in parsed.steps] == r["meta"]["results"]


def test_splits_keep_held_out_material_apart(tmp_path):
    manifest = generate_dataset(_small_spec(), 2, tmp_path)
    assert manifest["counts"] == {"seen": 13, "unseen": 4}
    assert split_audit(tmp_path) == []
    # moving an unseen record into the seen split is caught
    unseen = (tmp_path / "unseen.jsonl").read_text().splitlines()
    with open(tmp_path / "seen.jsonl", "a") as fh:
        fh.write(unseen[0] + "\n")
    assert split_audit(tmp_path)


def test_action_lengths_follow_the_mix():
    e = SpecEntry("sokoban", "theme-1", 6, "base", 30)
    mix = Mix(min_len=2, max_len=4)
    lens = {len(build_datapoint(e, k, 0, mix)[0]["meta"]["actions"]) for k in range(30)}
    assert lens <= {2, 3, 4} and len(lens) > 1


def test_label_balance_report():
    records = [
        {"meta": {"domain": "frozenlake", "results": ["Successful", "Unsuccessful", "Invalid"]}},
        {"meta": {"domain": "maze", "results": ["Successful", "Successful", "Unsuccessful"]}},
        {"meta": {"domain": "sokoban", "results": ["Successful"] * 30}},
    ]
    rep = label_balance(records)
    assert rep["frozenlake"]["ok"] and rep["maze"]["ok"]
    assert not rep["sokoban"]["ok"]
    assert rep["maze"]["frequencies"]["Invalid"] == 0.0


def test_desk_spec_shape():
    spec = desk_spec(1000)
    assert spec_total(spec) == 1000
    assert {e.split for e in spec} == {"seen", "unseen"}
    assert any(e.variant != "base" for e in spec)


def test_manifest_round_trip(tmp_path):
    manifest = generate_dataset(_small_spec()[:1], 3, tmp_path, mix=Mix(noise=0.5))
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk == manifest
    assert on_disk["mix"]["noise"] == 0.5
