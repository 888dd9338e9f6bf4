from __future__ import annotations

import math
import random
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualplan.consistency import (
    GENERIC_FEEDBACK,
    OracleSide,
    PddlSide,
    direction_rate,
    evaluate,
    ew,
    ew_score,
    exact_rates,
    exhaustive_mismatches,
    sample_walks,
)
from dualplan.genclient import inject
from dualplan.oracle import GroundTruthOracle
from dualplan.pddl import Literal
from dualplan.worlds import DOMAINS, SIZE_RANGES, generate_map, to_ground_truth_pddl

unit = st.floats(0.0, 1.0, allow_nan=False)


def _sides(sc, d, p):
    return OracleSide(GroundTruthOracle(sc.domain), sc, sc.domain), PddlSide(sc.domain, d, p)


def test_score_examples():
    assert ew_score(1.0, 1.0) == 1.0
    assert ew_score(1.0, 0.5) == pytest.approx(2 / 3)
    assert ew_score(0.0, 1.0) == 0.0
    assert ew_score(None, 1.0) == 0.0


@given(unit, unit)
def test_score_is_symmetric_and_bounded(a, b):
    s = ew_score(a, b)
    assert s == pytest.approx(ew_score(b, a))
    assert 0.0 <= s <= max(a, b) + 1e-12
    assert s <= min(a, b) * 2 + 1e-12


def test_direction_rate_averages_per_length():
    # length 1: all good, length 2: half good -> 0.75, not the pooled 2/3
    assert direction_rate({1: [1, 1], 2: [1, 0, 0, 1]}) == pytest.approx(0.75)
    assert direction_rate({}) is None


@pytest.mark.parametrize("domain", DOMAINS)
def test_golden_pair_is_fully_consistent(domain):
    sc = generate_map(domain, SIZE_RANGES[domain][0], 0.2, 6, require_solvable=True)
    d, p = to_ground_truth_pddl(sc)
    rep = ew(domain, d, p, sc, t_max=6, walks_per_t=8)
    assert rep.score == 1.0 and rep.consistent
    assert rep.mismatches == [] and rep.feedback == ""
    assert rep.walks == {"oracle": 48, "pddl": 48}


@pytest.mark.parametrize("domain", DOMAINS)
def test_golden_pair_has_no_disagreement_up_to_depth_four(domain):
    sc = generate_map(domain, SIZE_RANGES[domain][0], 0.25, 1)
    assert exhaustive_mismatches(*_sides(sc, *to_ground_truth_pddl(sc)), max_len=4) == []


def test_literal_frozenlake_fixture_is_not_consistent(fl_pair):
    # the fixture domain lets the agent step into a hole, which the simulator calls Unsuccessful
    from dualplan.worlds import GridScenario

    holes = {(1, 3), (1, 4), (2, 2), (3, 3), (3, 4), (4, 1)}
    sc = GridScenario.from_dict({
        "domain": "frozenlake",
        "cells": [["hole" if (r, c) in holes else "ground" for c in range(1, 5)] for r in range(1, 5)],
        "agent": [1, 1], "start": [1, 1], "goal": [4, 4],
    })
    rep = ew("frozenlake", *fl_pair, sc)
    assert rep.score < 1.0
    assert "so the PDDL files allow" in rep.feedback
    golden = ew("frozenlake", *to_ground_truth_pddl(sc), sc)
    assert golden.score == 1.0


def test_feedback_names_the_first_disagreement():
    sc = generate_map("maze", 5, 0.3, 4, require_solvable=True)
    inj = inject(sc, "extra-precondition", random.Random(0))
    rep = ew("maze", inj.domain, inj.problem, sc, seed=1)
    assert rep.score < 1.0
    first = rep.mismatches[0]
    assert first.kind == "exec" and first.oracle_verdict == "Successful"
    assert f"Step {first.index + 1} executes {first.label}" in rep.feedback
    assert "so the PDDL files do not allow" in rep.feedback


def test_ablated_feedback_is_generic():
    sc = generate_map("maze", 5, 0.3, 4, require_solvable=True)
    inj = inject(sc, "extra-precondition", random.Random(0))
    rep = ew("maze", inj.domain, inj.problem, sc, feedback=False)
    assert rep.feedback == GENERIC_FEEDBACK
    assert rep.mismatches


def test_goal_disagreement_feedback():
    sc = generate_map("frozenlake", 3, 0.0, 2)
    d, p = to_ground_truth_pddl(sc)
    # a goal that already holds at the start
    bad = replace(p, goal=tuple(Literal(a) for a in p.init if a.predicate == "at"))
    rep = ew("frozenlake", d, bad, sc, t_max=3, walks_per_t=5)
    assert rep.score < 1.0
    assert any(m.kind == "goal" for m in rep.mismatches)


def test_empty_pddl_side_is_flagged():
    sc = generate_map("maze", 5, 0.2, 0)
    d, p = to_ground_truth_pddl(sc)
    rep = ew("maze", d, replace(p, init=()), sc, t_max=3, walks_per_t=4)
    assert rep.score == 0.0
    assert "pddl side has no executable action at the root" in rep.flags
    assert rep.walks["pddl"] == 0


def test_sampling_is_deterministic_for_a_seed():
    sc = generate_map("sokoban", 6, 0.2, 3, require_solvable=True)
    inj = inject(sc, "missing-precondition", random.Random(2))
    a = ew("sokoban", inj.domain, inj.problem, sc, seed=5)
    b = ew("sokoban", inj.domain, inj.problem, sc, seed=5)
    assert a.to_dict() == b.to_dict()
    side = PddlSide("sokoban", inj.domain, inj.problem)
    assert sample_walks(side, 4, 3, seed=1).samples == sample_walks(side, 4, 3, seed=1).samples


def test_walk_counts_and_lengths():
    sc = generate_map("frozenlake", 4, 0.0, 1)
    ws = sample_walks(_sides(sc, *to_ground_truth_pddl(sc))[0], t_max=5, walks_per_t=7)
    assert len(ws.samples) == 35
    assert sorted({s.T for s in ws.samples}) == [1, 2, 3, 4, 5]
    assert all(len(s.sequence) == s.T for s in ws.samples)


def test_sampled_rates_approach_the_exact_expectation():
    sc = generate_map("frozenlake", 4, 0.3, 8, require_solvable=True)
    inj = inject(sc, "missing-precondition", random.Random(0))
    oside, pside = _sides(sc, inj.domain, inj.problem)
    exact_a, exact_b = exact_rates(oside, pside, t_max=6)
    assert exact_b < 1.0
    rep = evaluate(oside, pside, t_max=6, walks_per_t=400, seed=3)
    # per-length means of 400 Bernoulli draws: a 4-sigma band around the exact value
    tol = 4 * math.sqrt(0.25 / (6 * 400)) + 0.01
    assert rep.rate_sim_to_pddl == pytest.approx(exact_a, abs=tol)
    assert rep.rate_pddl_to_sim == pytest.approx(exact_b, abs=tol)


def test_exhaustive_search_finds_the_seeded_defect():
    sc = generate_map("maze", 5, 0.2, 2, require_solvable=True)
    inj = inject(sc, "wrong-effect-sign", random.Random(0))
    found = exhaustive_mismatches(*_sides(sc, inj.domain, inj.problem), max_len=3)
    assert found
    assert all(len(seq) <= 3 for seq, _ in found)


def test_report_serializes():
    sc = generate_map("maze", 5, 0.3, 4, require_solvable=True)
    inj = inject(sc, "extra-precondition", random.Random(0))
    data = ew("maze", inj.domain, inj.problem, sc).to_dict(max_mismatches=2)
    assert set(data) >= {"rate_sim_to_pddl", "rate_pddl_to_sim", "score", "mismatches", "feedback", "flags"}
    assert len(data["mismatches"]) <= 2 and data["mismatch_count"] >= len(data["mismatches"])
