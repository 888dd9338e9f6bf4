from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import variant_cases
from conftest import fixture_text
from dualplan.pddl import check_plan, parse_problem, print_problem, solve, validate_pair
from dualplan.worlds import (
    ACTION_VOCAB,
    DOMAINS,
    INVALID,
    SIZE_RANGES,
    GridScenario,
    SizeOutOfRange,
    UnknownAction,
    describe,
    generate_map,
    goal_reached,
    label_for,
    parse_description,
    parse_transcript,
    run_sequence,
    shortest_plan,
    simulation_prompt,
    step,
    to_ground_truth_pddl,
    transcript,
)

RECORDED = ["left", "down", "down", "up", "up", "right"]


def test_recorded_prompt_and_transcript_are_byte_exact(recorded_scenario):
    assert simulation_prompt("frozenlake", RECORDED) == fixture_text("recorded_prompt.txt")
    trace = run_sequence(recorded_scenario, RECORDED)
    assert transcript(describe(recorded_scenario), trace) == fixture_text("recorded_target.txt")
    assert [s.result for s in trace.steps] == ["Unsuccessful", "Successful", "Unsuccessful", "Invalid", "Invalid", "Invalid"]
    assert not trace.goal_reached


def test_transcript_parses_back(recorded_scenario):
    trace = run_sequence(recorded_scenario, RECORDED)
    head, parsed = parse_transcript(transcript(describe(recorded_scenario), trace), len(RECORDED))
    assert [s.result for s in parsed.steps] == [s.result for s in trace.steps]
    assert [s.reasoning for s in parsed.steps] == [s.reasoning for s in trace.steps]
    assert head.startswith("From the image")


def test_single_action_gives_one_block(recorded_scenario):
    text = transcript(describe(recorded_scenario), run_sequence(recorded_scenario, ["down"]))
    assert text.count("Step ") == 1


def test_empty_sequence_is_rejected():
    with pytest.raises(ValueError):
        simulation_prompt("frozenlake", [])


@pytest.mark.parametrize("domain", DOMAINS)
def test_description_round_trip(domain):
    sc = generate_map(domain, SIZE_RANGES[domain][0], 0.3, 5)
    desc = describe(sc)
    assert parse_description(desc.text).differences(desc) == []


def test_unknown_action_raises(recorded_scenario):
    with pytest.raises(UnknownAction):
        step(recorded_scenario, "jump")


def test_size_ranges_are_enforced():
    with pytest.raises(SizeOutOfRange):
        generate_map("maze", 4)
    with pytest.raises(SizeOutOfRange):
        generate_map("frozenlake", 9)


@pytest.mark.parametrize("domain", DOMAINS)
def test_generation_is_deterministic(domain):
    lo, _ = SIZE_RANGES[domain]
    a = generate_map(domain, lo, 0.2, 11)
    b = generate_map(domain, lo, 0.2, 11)
    assert a.to_json() == b.to_json()
    assert GridScenario.from_json(a.to_json()) == a


def test_frozenlake_golden_pair_reproduces_fixture_problem():
    holes = {(1, 3), (1, 4), (2, 2), (3, 3), (3, 4), (4, 1)}
    sc = GridScenario.from_dict({
        "domain": "frozenlake",
        "cells": [["hole" if (r, c) in holes else "ground" for c in range(1, 5)] for r in range(1, 5)],
        "agent": [1, 1], "start": [1, 1], "goal": [4, 4],
    })
    d, p = to_ground_truth_pddl(sc)
    assert print_problem(p) == print_problem(parse_problem(fixture_text("frozenlake_problem.pddl")))
    # the golden moves also refuse to enter a hole
    assert all(any(l.atom.predicate == "ice-hole" and l.atom.args == ("?to",) and not l.positive for l in a.precondition)
               for a in d.actions)


def test_package_golden_pair_extends_fixture(pkg_pair):
    fd, fp = pkg_pair
    sc = GridScenario.from_dict({
        "domain": "package", "cells": [["floor"] * 4 for _ in range(4)], "agent": [3, 3], "facing": "up",
        "items": [{"name": "pkg-1", "kind": "package", "pos": [1, 3], "state": "closed"},
                  {"name": "pkg-2", "kind": "package", "pos": [4, 1], "state": "closed"}],
    })
    d, p = to_ground_truth_pddl(sc)
    assert p.init[: len(fp.init)] == fp.init
    assert set(fd.actions) <= set(d.actions)
    assert {a.name for a in d.actions} - {a.name for a in fd.actions} == {"pick-up", "drop-down"}


def test_two_by_two_grid_has_eight_direction_atoms():
    sc = GridScenario.from_dict({"domain": "frozenlake", "cells": [["ground"] * 2] * 2, "agent": [1, 1], "goal": [2, 2]})
    _, p = to_ground_truth_pddl(sc)
    assert len(p.objects) == 4
    assert sum(a.predicate.endswith("_direction") for a in p.init) == 8


@pytest.mark.parametrize("domain", DOMAINS)
def test_golden_plans_replay_in_the_simulator(domain):
    sc = generate_map(domain, SIZE_RANGES[domain][0], 0.2, 3, require_solvable=True)
    d, p = to_ground_truth_pddl(sc)
    assert validate_pair(d, p).valid
    plan = solve(d, p)
    assert check_plan(d, p, plan).valid
    labels = [label_for(domain, d, a) for a in plan.steps]
    trace = run_sequence(sc, labels)
    assert trace.goal_reached
    assert len(plan) == len(shortest_plan(sc))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.sampled_from(ACTION_VOCAB["frozenlake"]), min_size=1, max_size=12))
def test_invalid_is_absorbing(seed, actions):
    sc = generate_map("frozenlake", 4, 0.4, seed)
    results = [s.result for s in run_sequence(sc, actions).steps]
    if INVALID in results:
        first = results.index(INVALID)
        assert all(r == INVALID for r in results[first:])


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(DOMAINS), st.integers(0, 500), st.data())
def test_simulation_is_deterministic(domain, seed, data):
    sc = generate_map(domain, SIZE_RANGES[domain][0], 0.2, seed)
    actions = data.draw(st.lists(st.sampled_from(ACTION_VOCAB[domain]), min_size=1, max_size=8))
    assert run_sequence(sc, actions) == run_sequence(sc, actions)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 500), st.sampled_from(ACTION_VOCAB["maze"]))
def test_frame_property_on_maze(seed, action):
    sc = generate_map("maze", 5, 0.3, seed)
    out = step(sc, action)
    assert out.scenario.cells == sc.cells
    moved = out.scenario.agent != sc.agent
    assert moved == (out.result == "Successful")


def test_sokoban_push_onto_target_wins():
    row = ["wall", "floor", "floor", "target", "wall"]
    sc = GridScenario.from_dict({
        "domain": "sokoban", "cells": [["wall"] * 5, ["wall"] + ["floor"] * 3 + ["wall"], row,
                                       ["wall"] + ["floor"] * 3 + ["wall"], ["wall"] * 5],
        "agent": [3, 2], "items": [{"name": "box-1", "kind": "box", "pos": [3, 3]}],
    })
    trace = run_sequence(sc, ["move right", "move right"])
    assert [s.result for s in trace.steps] == ["Successful", "Unsuccessful"]
    assert trace.goal_reached


def test_package_open_needs_a_faced_package():
    sc = GridScenario.from_dict({
        "domain": "package", "cells": [["floor"] * 4 for _ in range(4)], "agent": [3, 3], "facing": "up",
        "items": [{"name": "pkg-1", "kind": "package", "pos": [2, 3], "state": "closed"}],
    })
    assert [s.result for s in run_sequence(sc, ["turn-left", "open"]).steps] == ["Successful", "Unsuccessful"]
    trace = run_sequence(sc, ["open"])
    assert trace.goal_reached


def test_printer_must_be_on_a_desk_to_switch_on():
    cells = [["floor"] * 4 for _ in range(4)]
    cells[0][2] = "desk"
    sc = GridScenario.from_dict({
        "domain": "printer", "cells": cells, "agent": [3, 3], "facing": "up",
        "items": [{"name": "printer-1", "kind": "printer", "pos": [2, 3], "state": "off"}],
    })
    trace = run_sequence(sc, ["toggle-on", "pick-up", "move", "drop-down", "toggle-on"])
    assert [s.result for s in trace.steps] == ["Unsuccessful", "Successful", "Successful", "Successful", "Successful"]
    assert trace.goal_reached
    assert not goal_reached(sc)


def test_overcooked_chop_needs_the_board():
    sc = generate_map("overcooked", 5, 0.2, 1)
    # facing the plate on a counter: nothing to chop there
    assert step(sc, "chop").result == "Unsuccessful"
    plan = shortest_plan(sc)
    assert plan and run_sequence(sc, plan).goal_reached
    assert "chop" in plan and plan[-1] == "deliver"


@pytest.mark.parametrize("case", variant_cases.CASES, ids=lambda c: f"{c.variant}-{c.note or 'basic'}")
def test_rule_variant(case):
    assert variant_cases.check(case) == []


def test_every_variant_has_a_case():
    from dualplan.worlds import VARIANTS

    assert {c.variant for c in variant_cases.CASES} == set(VARIANTS)


def test_r8_reasoning_mentions_sliding():
    case = variant_cases.CASES[11]
    trace = run_sequence(variant_cases.scenario(case), ["move right"])
    assert "slips" in trace.steps[0].reasoning
