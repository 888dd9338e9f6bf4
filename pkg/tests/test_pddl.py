from __future__ import annotations

import itertools
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualplan.pddl import (
    ActionSchema,
    Atom,
    BudgetExhausted,
    GroundAction,
    GroundState,
    GroundTask,
    InapplicableError,
    Literal,
    PddlDomain,
    PddlParseError,
    PddlProblem,
    Plan,
    PredicateDecl,
    TypedName,
    Unsolvable,
    applicable_actions,
    apply,
    check_plan,
    goal_satisfied,
    initial_state,
    parse_domain,
    parse_problem,
    print_domain,
    print_problem,
    solve,
    validate_pair,
)


def test_frozenlake_fixture_shape(fl_pair):
    d, p = fl_pair
    assert d.name == "frozenlake"
    assert [a.name for a in d.actions] == ["move-down", "move-left", "move-right", "move-up"]
    assert len(d.predicates) == 6
    assert len(p.objects) == 16
    assert p.goal == (Literal(Atom("at", ("pos-4-4",))),)


def test_package_fixture_shape(pkg_pair):
    d, p = pkg_pair
    # the reference file lists five actions
    assert len(d.actions) == 5
    assert len(d.predicates) == 8
    assert [t.name for t in d.types] == ["position", "package", "direction"]
    assert {o.type for o in p.objects} == {"position", "package", "direction"}


@pytest.mark.parametrize("pair", ["fl_pair", "pkg_pair"])
def test_fixture_pairs_validate_and_round_trip(pair, request):
    d, p = request.getfixturevalue(pair)
    assert validate_pair(d, p).valid
    assert parse_domain(print_domain(d)) == d
    assert parse_problem(print_problem(p)) == p
    # printing is a fixed point after one pass
    assert print_domain(parse_domain(print_domain(d))) == print_domain(d)


def test_empty_domain_round_trip():
    d = PddlDomain("empty")
    assert parse_domain(print_domain(d)) == d


def test_grounding_matches_brute_force(fl_pair):
    d, p = fl_pair
    s = initial_state(p)
    found = set(applicable_actions(d, p, s))
    names = [o.name for o in p.objects]
    brute = set()
    for a in d.actions:
        for args in itertools.product(names, repeat=len(a.parameters)):
            ga = GroundAction(a.name, args)
            try:
                apply(d, s, ga)
            except InapplicableError:
                continue
            brute.add(ga)
    assert found == brute
    assert GroundAction("move-right", ("pos-1-1", "pos-1-2")) in found
    assert not any(a.name == "move-left" and a.args[0] == "pos-1-1" for a in found)


def test_agent_on_hole_is_stuck(fl_pair):
    d, p = fl_pair
    atoms = {a for a in initial_state(p).atoms if a.predicate != "at"} | {Atom("at", ("pos-2-2",))}
    assert applicable_actions(d, p, GroundState(frozenset(atoms))) == []


def test_apply_moves_agent(fl_pair):
    d, p = fl_pair
    s = apply(d, initial_state(p), GroundAction("move-right", ("pos-1-1", "pos-1-2")))
    assert Atom("at", ("pos-1-2",)) in s
    assert Atom("at", ("pos-1-1",)) not in s


def test_apply_rejects_unmet_precondition(fl_pair):
    d, p = fl_pair
    with pytest.raises(InapplicableError):
        apply(d, initial_state(p), GroundAction("move-left", ("pos-1-2", "pos-1-1")))


def _symbolic_bfs(d, p):
    start = initial_state(p)
    seen = {start: 0}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        if goal_satisfied(p, s):
            return seen[s]
        for a in applicable_actions(d, p, s):
            nxt = apply(d, s, a)
            if nxt not in seen:
                seen[nxt] = seen[s] + 1
                queue.append(nxt)
    return None


def test_solve_is_optimal_and_valid(fl_pair):
    d, p = fl_pair
    plan = solve(d, p)
    assert len(plan) == _symbolic_bfs(d, p)
    assert check_plan(d, p, plan).valid


def test_solve_is_deterministic(pkg_pair):
    d, p = pkg_pair
    assert solve(d, p) == solve(d, p, task=GroundTask(d, p))


def test_check_plan_reports_first_bad_step(fl_pair):
    d, p = fl_pair
    plan = solve(d, p)
    broken = Plan(plan.steps[:1] + (GroundAction("move-left", ("pos-1-1", "pos-1-2")),) + plan.steps[1:])
    verdict = check_plan(d, p, broken)
    assert not verdict.valid
    assert verdict.failed_step == 1
    assert not check_plan(d, p, Plan(plan.steps[:-1])).valid


def test_plan_text_round_trip(fl_pair):
    plan = solve(*fl_pair)
    assert Plan.from_text(plan.to_text()) == plan


def test_unsolvable_and_budget(fl_pair):
    d, p = fl_pair
    walled = PddlProblem(p.name, p.domain_name, p.objects, p.init, (Literal(Atom("ice-hole", ("pos-1-1",))),))
    with pytest.raises(Unsolvable):
        solve(d, walled)
    with pytest.raises(BudgetExhausted):
        solve(d, p, budget=2)


def test_parse_errors_carry_positions():
    with pytest.raises(PddlParseError) as err:
        parse_domain("(define (domain x)\n  (:predicates (p ?a)\n")
    assert err.value.errors[0].line >= 1


@pytest.mark.parametrize("req", [":adl", ":equality", ":conditional-effects"])
def test_unsupported_requirements_are_rejected(req):
    with pytest.raises(PddlParseError, match="unsupported"):
        parse_domain(f"(define (domain x) (:requirements :strips {req}) (:predicates (p)))")


def test_disjunction_is_rejected():
    text = "(define (domain x) (:requirements :strips) (:predicates (p) (q)) (:action a :parameters () :precondition (or (p) (q)) :effect (p)))"
    with pytest.raises(PddlParseError):
        parse_domain(text)


def _codes(d_text, p_text):
    return {v.code for v in validate_pair(parse_domain(d_text), parse_problem(p_text)).violations}


DOM = """(define (domain t) (:requirements :strips :typing)
  (:types cell)
  (:predicates (at ?c - cell) (adj ?a ?b - cell))
  (:action go :parameters (?a ?b - cell) :precondition (and (at ?a) (adj ?a ?b)) :effect (and (at ?b) (not (at ?a)))))"""


def test_validator_flags_common_mistakes():
    ok = "(define (problem q) (:domain t) (:objects a b - cell) (:init (at a) (adj a b)) (:goal (and (at b))))"
    assert _codes(DOM, ok) == set()
    undeclared = ok.replace("(adj a b)", "(adj a b) (wall a)")
    assert "undeclared-predicate" in _codes(DOM, undeclared)
    arity = ok.replace("(adj a b)", "(adj a)")
    assert "arity-mismatch" in _codes(DOM, arity)
    wrong_domain = ok.replace("(:domain t)", "(:domain other)")
    assert "domain-mismatch" in _codes(DOM, wrong_domain)
    missing_object = ok.replace("(at b)", "(at c)")
    assert "undeclared-object" in _codes(DOM, missing_object)


def test_validator_flags_type_mismatch():
    dom = DOM.replace("(:types cell)", "(:types cell thing)")
    prob = "(define (problem q) (:domain t) (:objects a - cell b - thing) (:init (at a) (adj a b)) (:goal (and (at a))))"
    assert "type-mismatch" in _codes(dom, prob)


def test_validation_report_json(fl_pair):
    import json

    data = json.loads(validate_pair(*fl_pair).to_json())
    assert data == {"valid": True, "violations": []}


# random ASTs

NAMES = st.sampled_from(["a", "b", "c", "cell", "pos-1-1", "box_2", "k9", "on-top"])
TYPES = ["alpha", "beta"]


@st.composite
def domains(draw):
    preds = {}
    for name in draw(st.lists(st.sampled_from(["p", "q", "r", "s-t", "u_v"]), min_size=1, max_size=4, unique=True)):
        types = draw(st.lists(st.sampled_from(TYPES), max_size=3))
        preds[name] = tuple(TypedName(f"?x{i}", t) for i, t in enumerate(types))
    actions = []
    for i in range(draw(st.integers(0, 3))):
        params = tuple(TypedName(f"?v{j}", draw(st.sampled_from(TYPES))) for j in range(draw(st.integers(0, 3))))

        def literal():
            name = draw(st.sampled_from(sorted(preds)))
            args = tuple(draw(st.sampled_from([p.name for p in params])) for _ in preds[name]) if params else ()
            if preds[name] and not params:
                return None
            return Literal(Atom(name, args), draw(st.booleans()))

        pre = tuple(l for l in (literal() for _ in range(draw(st.integers(0, 3)))) if l is not None)
        eff = tuple(l for l in (literal() for _ in range(draw(st.integers(0, 3)))) if l is not None)
        actions.append(ActionSchema(f"act-{i}", params, pre, eff))
    return PddlDomain(
        draw(NAMES),
        (":strips", ":typing", ":negative-preconditions"),
        tuple(TypedName(t) for t in TYPES),
        (),
        tuple(PredicateDecl(n, ps) for n, ps in preds.items()),
        tuple(actions),
    )


@st.composite
def problems(draw):
    objs = draw(st.lists(NAMES, min_size=1, max_size=5, unique=True))
    objects = tuple(TypedName(o, draw(st.sampled_from(TYPES))) for o in objs)
    init = tuple(
        Atom(draw(st.sampled_from(["p", "q"])), tuple(draw(st.lists(st.sampled_from(objs), max_size=2))))
        for _ in range(draw(st.integers(0, 4)))
    )
    goal = tuple(Literal(a) for a in init[:2])
    return PddlProblem(draw(NAMES), "dom", objects, init, goal)


@settings(max_examples=150, deadline=None)
@given(domains())
def test_domain_print_parse_round_trip(d):
    assert parse_domain(print_domain(d)) == d


@settings(max_examples=150, deadline=None)
@given(problems())
def test_problem_print_parse_round_trip(p):
    assert parse_problem(print_problem(p)) == p
