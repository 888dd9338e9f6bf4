from __future__ import annotations

import json

import pytest

from conftest import fixture_text
from dualplan.genclient import FaultInjectingGenerator, GoldenGenerator, make_generator
from dualplan.oracle import GroundTruthOracle
from dualplan.pddl import print_domain, print_problem
from dualplan.pipeline import (
    NOT_CONSISTENT,
    PipelineConfig,
    PipelineState,
    benchmark_case,
    benchmark_rates,
    evaluation_protocol,
    instantiate_problems,
    prescreen_errors,
    resume,
    run,
    string_match_rate,
    success_rate,
)
from dualplan.worlds import describe, generate_map, run_sequence, to_ground_truth_pddl, transcript

FAST = dict(t_max=6, walks_per_t=10)


def _maze(seed=1):
    return generate_map("maze", 5, 0.2, seed, require_solvable=True)


def test_golden_run_stops_at_the_first_check(tmp_path):
    sc = _maze()
    st = run(None, sc, GroundTruthOracle("maze"), GoldenGenerator(), PipelineConfig(**FAST), out=tmp_path)
    assert st.succeeded and st.iteration == 0
    assert len(st.history) == 1 and st.history[0]["score"] == 1.0
    assert run_sequence(sc, st.plan_labels).goal_reached
    for name in ("manifest.json", "state.json", "description.txt", "plan.txt",
                 "iter-00/domain.pddl", "iter-00/problem.pddl", "iter-00/prescreen-0.txt", "iter-00/ew.json"):
        assert (tmp_path / name).exists(), name
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "success" and manifest["iterations"][0]["score"] == 1.0
    assert (tmp_path / "plan.txt").read_text().splitlines() == st.plan


def test_seeded_defect_is_repaired():
    sc = _maze()
    gen = FaultInjectingGenerator("extra-precondition", seed=1)
    st = run(None, sc, GroundTruthOracle("maze"), gen, PipelineConfig(**FAST))
    assert st.succeeded and st.iteration >= 1
    assert st.history[0]["score"] < 1.0 and st.history[-1]["score"] == 1.0
    assert st.domain_text == print_domain(to_ground_truth_pddl(sc)[0])


def test_no_update_fails_after_one_check():
    sc = _maze()
    gen = FaultInjectingGenerator("extra-precondition", seed=1)
    st = run(None, sc, GroundTruthOracle("maze"), gen, PipelineConfig(no_update=True, **FAST))
    assert st.failure == NOT_CONSISTENT
    assert len(st.history) == 1


def test_refine_cap_is_respected():
    sc = _maze()
    gen = FaultInjectingGenerator("extra-precondition", seed=1, repair=False)
    st = run(None, sc, GroundTruthOracle("maze"), gen, PipelineConfig(max_refine=2, **FAST))
    assert st.failure.startswith(NOT_CONSISTENT)
    assert st.iteration == 2 and len(st.history) == 3


def test_prescreen_repairs_a_syntax_fault():
    sc = _maze()
    gen = FaultInjectingGenerator("extra-precondition", seed=1, syntax_faults=True)
    st = run(None, sc, GroundTruthOracle("maze"), gen, PipelineConfig(**FAST))
    assert st.prescreen[0]["errors"] and not st.prescreen[1]["errors"]
    assert st.succeeded


def test_prescreen_cap_ends_the_run():
    class Broken(GoldenGenerator):
        def generate(self, req):
            res = super().generate(req)
            if res.domain_text:
                res.domain_text = res.domain_text[:-3]
            return res.parse()

        def refine(self, req):
            return self.generate(req)

    st = run(None, _maze(), GroundTruthOracle("maze"), Broken(), PipelineConfig(max_prescreen=2, **FAST))
    assert st.failure == "prescreening failed after 2 regenerations"
    assert len(st.prescreen) == 3 and st.history == []


def test_prescreen_errors_name_the_problem(fl_pair):
    d, p = fixture_text("frozenlake_domain.pddl"), fixture_text("frozenlake_problem.pddl")
    assert prescreen_errors(d, p) == []
    assert prescreen_errors(d[:-2], p)[0].startswith("domain: ")
    bad = p.replace("(at pos-1-1)", "(at pos-1-1 pos-1-2)")
    assert any(e.startswith("arity-mismatch") for e in prescreen_errors(d, bad))


def test_resume_matches_an_uninterrupted_run(tmp_path):
    sc = _maze(3)
    cfg = PipelineConfig(**FAST)
    whole = run(None, sc, GroundTruthOracle("maze"), FaultInjectingGenerator("missing-precondition", seed=3), cfg)

    class Crash(FaultInjectingGenerator):
        def refine(self, req):
            raise KeyboardInterrupt

    with pytest.raises(KeyboardInterrupt):
        run(None, sc, GroundTruthOracle("maze"), Crash("missing-precondition", seed=3), cfg, out=tmp_path)
    saved = PipelineState.load(tmp_path / "state.json")
    assert saved.stage == "refine" and not saved.done
    again = resume(tmp_path, sc, GroundTruthOracle("maze"), FaultInjectingGenerator("missing-precondition", seed=3))
    assert again.plan == whole.plan
    assert [h["score"] for h in again.history] == [h["score"] for h in whole.history]
    assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "success"


def test_empty_instance_list():
    assert instantiate_problems("(define (problem x))", [], GoldenGenerator()) == []


def test_golden_instances_all_succeed():
    scenes = [generate_map("frozenlake", 4, 0.2, s, require_solvable=True) for s in range(5)]
    example = print_problem(to_ground_truth_pddl(scenes[0])[1])
    problems = instantiate_problems(example, scenes, GoldenGenerator(), workers=1)
    rep = success_rate(to_ground_truth_pddl(scenes[0])[0], problems, scenes)
    assert rep.rate == 1.0 and rep.planner_rate == 1.0 and rep.n == 5


def test_missing_direction_atoms_count_as_failures():
    scenes = [generate_map("maze", 5, 0.2, s, require_solvable=True) for s in range(4)]
    d = to_ground_truth_pddl(scenes[0])[0]
    problems = []
    for sc in scenes:
        p = print_problem(to_ground_truth_pddl(sc)[1])
        problems.append("\n".join(l for l in p.splitlines() if "move-dir-" not in l) + "\n")
    rep = success_rate(d, problems, scenes)
    assert rep.rate == 0.0
    assert all(o.reason for o in rep.outcomes)


def test_hole_fault_is_harmless_without_holes():
    # the missing hole precondition cannot matter on a map with no holes
    scenes = [generate_map("frozenlake", 4, 0.0, s) for s in range(3)]
    gen = FaultInjectingGenerator("missing-precondition", seed=0)
    d = gen.injected(generate_map("frozenlake", 4, 0.3, 1, require_solvable=True)).domain
    problems = [print_problem(to_ground_truth_pddl(sc)[1]) for sc in scenes]
    assert success_rate(d, problems, scenes).rate == 1.0


def test_success_rate_needs_matching_lists():
    with pytest.raises(ValueError):
        success_rate(print_domain(to_ground_truth_pddl(_maze())[0]), [], [_maze()])


def test_string_match_sections(recorded_scenario):
    actions = ["left", "down", "down", "up", "up", "right"]
    gold = fixture_text("recorded_target.txt")
    assert string_match_rate([gold], [gold], "ExecResult") == 1.0
    other = transcript(describe(recorded_scenario), run_sequence(recorded_scenario, ["down"] * len(actions)))
    assert string_match_rate([other], [gold], "TaskDescription") == 1.0
    assert string_match_rate([other], [gold], "ExecResult") == 0.0
    assert string_match_rate([other, gold], [gold, gold], "GoalReach") == 1.0
    assert string_match_rate(["garbage"], [gold], "ExecReason") == 0.0
    with pytest.raises(ValueError):
        string_match_rate([gold], [gold], "Plan")


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        PipelineConfig.from_dict({"max_refine": 3, "temperature": 0.2})
    with pytest.raises(ValueError):
        PipelineConfig(threshold=0.0)


def test_benchmark_case_and_rates():
    case = benchmark_case("frozenlake", 0, "full", config=PipelineConfig(seed=0, **FAST))
    assert case.success and case.defect
    assert benchmark_rates({"full": [case], "none": []}) == {"full": 1.0, "none": 0.0}


def test_evaluation_protocol_writes_success_json(tmp_path):
    inputs = [generate_map("maze", 5, 0.2, s, require_solvable=True) for s in (10, 11)]
    instances = [generate_map("maze", 5, 0.2, s, require_solvable=True) for s in (20, 21, 22)]
    # a domain-file defect: repaired once, then instances are clean
    gen = make_generator("scripted:fault=extra-precondition,seed=2")
    res = evaluation_protocol("maze", inputs, instances, GroundTruthOracle("maze"), gen,
                              PipelineConfig(**FAST), reuse=True, out=tmp_path)
    assert res["mode"] == "reuse" and res["instances"] == 3
    assert [r["converged"] for r in res["inputs"]] == [True, True]
    assert res["rate"] == 1.0
    assert json.loads((tmp_path / "success.json").read_text()) == res
    assert (tmp_path / "input-01" / "instances.json").exists()
