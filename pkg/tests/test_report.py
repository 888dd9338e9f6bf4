from __future__ import annotations

import json

from conftest import fixture_text
from dualplan.report import collect, format_text, to_csv, write_report


def _tree(root):
    (root / "protocol").mkdir(parents=True)
    (root / "protocol" / "success.json").write_text(json.dumps({
        "domain": "maze", "mode": "per-input", "instances": 4,
        "inputs": [{"index": 0, "converged": True, "rate": 1.0}, {"index": 1, "converged": False, "rate": 0.0}],
        "rate": 0.5, "planner_rate": 0.5,
    }))
    for name, scores in (("run-a", [0.4, 0.95, 1.0]), ("run-b", [1.0])):
        (root / name).mkdir()
        (root / name / "manifest.json").write_text(json.dumps({
            "domain": "frozenlake", "status": "success",
            "iterations": [{"iteration": t, "score": s} for t, s in enumerate(scores)],
        }))
    gold = fixture_text("recorded_target.txt")
    (root / "sim").mkdir()
    rows = [
        {"id": "a", "domain": "frozenlake", "split": "seen", "prediction": gold, "target": gold},
        {"id": "b", "domain": "frozenlake", "split": "seen", "prediction": "???", "target": gold},
    ]
    (root / "sim" / "predictions.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))


def test_collect_reads_every_artifact_kind(tmp_path):
    _tree(tmp_path)
    rep = collect(tmp_path)
    assert rep.runs == 2
    assert rep.success == [{
        "source": "protocol", "domain": "maze", "mode": "per-input", "inputs": 2, "converged": 1,
        "instances": 4, "rate": 0.5, "planner_rate": 0.5,
    }]
    assert rep.string_match[0]["n"] == 2 and rep.string_match[0]["ExecResult"] == 0.5
    assert sorted(rep.scores["frozenlake"]) == [0.4, 0.95, 1.0, 1.0]
    assert rep.final_scores["frozenlake"] == [1.0, 1.0]


def test_histogram_puts_one_in_the_last_bin(tmp_path):
    _tree(tmp_path)
    rows = collect(tmp_path).histogram()
    assert len(rows) == 10
    assert rows[-1] == {"domain": "frozenlake", "bin_lo": 0.9, "bin_hi": 1.0, "count": 3}
    assert rows[4]["count"] == 1
    assert sum(r["count"] for r in rows) == 4


def test_write_report_outputs(tmp_path):
    _tree(tmp_path)
    written = write_report(tmp_path, tmp_path / "tables")
    assert set(written) == {"success_rate.csv", "string_match.csv", "ew_histogram.csv", "ew_histogram.png"}
    assert written["ew_histogram.png"].read_bytes().startswith(b"\x89PNG")
    header = (tmp_path / "tables" / "success_rate.csv").read_text().splitlines()[0]
    assert header.split(",")[:3] == ["source", "domain", "mode"]
    assert "pipeline runs: 2" in format_text(collect(tmp_path))


def test_empty_tree(tmp_path):
    rep = collect(tmp_path)
    assert rep.runs == 0 and rep.histogram() == []
    written = write_report(tmp_path)
    assert "ew_histogram.png" not in written
    assert to_csv([]) == ""
