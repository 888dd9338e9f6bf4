from __future__ import annotations

import json
import subprocess
import sys

import pytest

from conftest import FIXTURES, fixture_text
from dualplan.cli import main
from dualplan.pddl import print_domain, print_problem
from dualplan.worlds import generate_map, to_ground_truth_pddl


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_simulate_reproduces_the_recorded_transcript(capsys):
    code = main(["simulate", "--scenario", str(FIXTURES / "recorded_scenario.json"),
                 "--actions", "left,down,down,up,up,right"])
    assert code == 0
    assert capsys.readouterr().out == fixture_text("recorded_target.txt")


def test_plan_writes_plan_txt(tmp_path, capsys):
    code = main(["--out", str(tmp_path), "--format", "json", "plan",
                 "--pddl-domain", str(FIXTURES / "frozenlake_domain.pddl"),
                 "--pddl-problem", str(FIXTURES / "frozenlake_problem.pddl")])
    assert code == 0
    data = _json_out(capsys)
    assert data["length"] == len((tmp_path / "plan.txt").read_text().splitlines()) == 6


def test_ew_on_the_golden_pair(tmp_path, capsys):
    sc = generate_map("maze", 5, 0.2, 4, require_solvable=True)
    d, p = to_ground_truth_pddl(sc)
    (tmp_path / "sc.json").write_text(sc.to_json())
    (tmp_path / "d.pddl").write_text(print_domain(d))
    (tmp_path / "p.pddl").write_text(print_problem(p))
    code = main(["ew", "--scenario", str(tmp_path / "sc.json"), "--pddl-domain", str(tmp_path / "d.pddl"),
                 "--pddl-problem", str(tmp_path / "p.pddl"), "--out", str(tmp_path), "--format", "json",
                 "--t-max", "5", "--walks-per-t", "5"])
    assert code == 0
    assert _json_out(capsys)["score"] == 1.0
    assert json.loads((tmp_path / "ew.json").read_text())["score"] == 1.0


def test_validate_exit_codes(tmp_path, capsys):
    dom = str(FIXTURES / "frozenlake_domain.pddl")
    assert main(["validate", "--pddl-domain", dom, "--pddl-problem", str(FIXTURES / "frozenlake_problem.pddl")]) == 0
    capsys.readouterr()
    bad = tmp_path / "bad.pddl"
    bad.write_text(fixture_text("frozenlake_problem.pddl").replace("(at pos-1-1)", "(at pos-1-1 pos-1-2)"))
    assert main(["validate", "--pddl-domain", dom, "--pddl-problem", str(bad)]) == 1
    assert _json_out(capsys)["error"] == "ValidationFailed"


def test_parse_errors_exit_one_with_a_json_body(tmp_path, capsys):
    broken = tmp_path / "broken.pddl"
    broken.write_text("(define (domain x)")
    assert main(["plan", "--pddl-domain", str(broken), "--pddl-problem", str(broken)]) == 1
    assert _json_out(capsys)["error"] == "PddlParseError"


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--actions", "left"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_run_pipeline_golden_and_failure(tmp_path, capsys):
    assert main(["run-pipeline", "--domain", "maze", "--size", "5", "--seed", "2", "--out", str(tmp_path / "ok")]) == 0
    capsys.readouterr()
    assert (tmp_path / "ok" / "plan.txt").exists()
    code = main(["run-pipeline", "--domain", "maze", "--size", "5", "--seed", "2", "--no-update",
                 "--generator", "scripted:fault=extra-precondition", "--out", str(tmp_path / "bad")])
    assert code == 1
    body = _json_out(capsys)
    assert body["error"] == "PipelineFailed" and body["message"] == "consistency not reached"


def test_config_file_is_overridden_by_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("seed: 5\nformat: json\npipeline:\n  max_refine: 1\n  t_max: 4\n  walks_per_t: 4\n")
    assert main(["--config", str(cfg), "describe", "--domain", "maze", "--seed", "7"]) == 0
    seven = _json_out(capsys)["description"]
    assert main(["--config", str(cfg), "describe", "--domain", "maze"]) == 0
    five = _json_out(capsys)["description"]
    assert main(["describe", "--domain", "maze", "--seed", "5", "--format", "json"]) == 0
    assert _json_out(capsys)["description"] == five != seven


def test_dataset_simulate_and_report(tmp_path, capsys):
    spec = tmp_path / "spec.yaml"
    spec.write_text("- {domain: frozenlake, theme: theme-1, size: 4, n: 5}\n- {domain: maze, theme: unseen, size: 5, n: 3}\n")
    data = tmp_path / "data"
    assert main(["gen-dataset", "--spec", str(spec), "--out", str(data), "--seed", "3"]) == 0
    assert main(["gen-dataset", "--verify", "--out", str(data)]) == 0
    assert main(["simulate", "--dataset", str(data), "--out", str(tmp_path / "sim")]) == 0
    capsys.readouterr()
    assert main(["report", "--root", str(tmp_path / "sim"), "--format", "json"]) == 0
    rows = _json_out(capsys)["string_match"]
    assert {r["domain"] for r in rows} == {"frozenlake", "maze"}
    assert all(r["ExecResult"] == 1.0 for r in rows)
    assert (tmp_path / "sim" / "string_match.csv").exists()


def test_render_and_instantiate(tmp_path, capsys):
    assert main(["render", "--domain", "sokoban", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "scene.png").read_bytes().startswith(b"\x89PNG")
    sc = generate_map("maze", 5, 0.2, 0, require_solvable=True)
    d, p = to_ground_truth_pddl(sc)
    (tmp_path / "ex.pddl").write_text(print_problem(p))
    (tmp_path / "d.pddl").write_text(print_domain(d))
    capsys.readouterr()
    assert main(["instantiate", "--example-problem", str(tmp_path / "ex.pddl"), "--domain", "maze", "--count", "3",
                 "--pddl-domain", str(tmp_path / "d.pddl"), "--workers", "1", "--out", str(tmp_path / "inst"),
                 "--format", "json"]) == 0
    assert _json_out(capsys)["rate"] == 1.0
    assert (tmp_path / "inst" / "problem-002.pddl").exists()


def test_console_entry_point_runs():
    out = subprocess.run([sys.executable, "-m", "dualplan.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("dualplan ")
