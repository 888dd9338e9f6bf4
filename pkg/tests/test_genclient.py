from __future__ import annotations

import random

import pytest

from dualplan.genclient import (
    DEFECTS,
    DefectNotApplicable,
    FaultInjectingGenerator,
    GenerationError,
    GenRequest,
    GoldenGenerator,
    Phase,
    RemoteGenerator,
    RequestError,
    applicable_defects,
    canonical,
    domain_template,
    inject,
    make_generator,
    matches,
    problem_template,
)
from dualplan.genclient.templates import (
    ReplyFormatError,
    check_template,
    domain_from_reply,
    extract_define,
    function_calls,
)
from dualplan.llm import TransportError
from dualplan.pddl import parse_domain, print_domain, print_problem
from dualplan.pipeline import prescreen_errors
from dualplan.worlds import DOMAINS, SIZE_RANGES, describe, generate_map, to_ground_truth_pddl
from fakes import ScriptedClient


def _scene(domain="frozenlake", seed=3):
    return generate_map(domain, SIZE_RANGES[domain][0] + 1, 0.25, seed, require_solvable=True)


def test_defect_aliases():
    assert canonical("missing_hole_precondition") == "missing-precondition"
    assert canonical("Missing-Direction-Atoms") == "missing-direction-atom"
    with pytest.raises(KeyError):
        canonical("typo-in-name")


@pytest.mark.parametrize("domain", DOMAINS)
def test_every_applicable_defect_changes_the_pair(domain):
    sc = _scene(domain)
    golden = tuple(map(print_domain, [to_ground_truth_pddl(sc)[0]])) + (print_problem(to_ground_truth_pddl(sc)[1]),)
    defects = applicable_defects(sc)
    assert len(defects) >= 6
    for defect in defects:
        inj = inject(sc, defect, random.Random(1))
        now = (print_domain(inj.domain), print_problem(inj.problem))
        assert now != golden, defect
        # only the files it claims to touch differ
        assert (now[0] != golden[0]) == ("domain" in inj.injection.touched), defect
        assert (now[1] != golden[1]) == ("problem" in inj.injection.touched), defect


def test_typing_defect_is_not_offered_without_types():
    assert "missing-object-typing" not in applicable_defects(_scene("frozenlake"))
    with pytest.raises(DefectNotApplicable):
        inject(_scene("frozenlake"), "missing-object-typing", random.Random(0))


@pytest.mark.parametrize("defect", ["wrong-arity", "missing-object-typing"])
def test_prescreen_catches_structural_defects(defect):
    sc = _scene("sokoban")
    inj = inject(sc, defect, random.Random(0))
    errors = prescreen_errors(print_domain(inj.domain), print_problem(inj.problem))
    assert errors
    assert matches(inj.injection, "Validation failed:\n" + "\n".join(errors))


def test_feedback_signature_matching():
    sc = _scene("maze")
    inj = inject(sc, "missing-precondition", random.Random(0)).injection
    label = inj.labels[0] if inj.labels else "move up"
    allow = f"but the simulator says it fails, so the PDDL files allow {label} here"
    deny = f"so the PDDL files do not allow {label} here"
    assert matches(inj, allow)
    assert not matches(inj, deny)
    assert not matches(inj, "something is off")


def test_make_generator_specs():
    assert isinstance(make_generator("golden"), GoldenGenerator)
    g = make_generator("scripted:fault=missing_predicate,repair=false,seed=4")
    assert isinstance(g, FaultInjectingGenerator)
    assert (g.defect, g.repair, g.seed) == ("missing-predicate", False, 4)
    assert make_generator("remote", client=ScriptedClient()).send_image is False
    with pytest.raises(ValueError):
        make_generator("remote")
    with pytest.raises(ValueError):
        make_generator("oracle")


def test_request_invariants():
    with pytest.raises(RequestError):
        GenRequest(Phase.REFINE, "maze", prior_domain="(d)", prior_problem="(p)", feedback="  ")
    with pytest.raises(RequestError):
        GenRequest(Phase.INITIAL_DOMAIN, "maze")
    with pytest.raises(RequestError):
        GenRequest(Phase.INSTANTIATE_PROBLEM, "maze")
    assert GenRequest("InitialProblem", "maze").phase is Phase.INITIAL_PROBLEM


def test_golden_generator_phases():
    sc = _scene("package")
    gen = GoldenGenerator()
    d, p = to_ground_truth_pddl(sc)
    res = gen.generate(GenRequest(Phase.INITIAL_PROBLEM, "package", scene=sc))
    assert res.ok and res.problem_text == print_problem(p) and res.domain_text is None
    res = gen.generate(GenRequest(Phase.INITIAL_DOMAIN, "package", scene=sc, prior_problem=res.problem_text))
    assert res.domain_text == print_domain(d)
    with pytest.raises(RequestError):
        gen.generate(GenRequest(Phase.INITIAL_PROBLEM, "package", scene=b"png bytes"))


def test_fault_injector_repairs_on_matching_feedback():
    sc = _scene("frozenlake")
    gen = FaultInjectingGenerator("wrong-effect-sign", seed=2)
    prob = gen.generate(GenRequest(Phase.INITIAL_PROBLEM, "frozenlake", scene=sc)).problem_text
    dom = gen.generate(GenRequest(Phase.INITIAL_DOMAIN, "frozenlake", scene=sc, prior_problem=prob)).domain_text
    golden = print_domain(to_ground_truth_pddl(sc)[0])
    assert dom != golden
    refine = lambda fb: gen.refine(GenRequest(Phase.REFINE, "frozenlake", scene=sc, prior_domain=dom,
                                              prior_problem=prob, feedback=fb))
    # the defect makes moves too strict, so "allow" feedback does not point at it
    stale = refine("but the simulator says it fails, so the PDDL files allow move down here")
    assert stale.domain_text == dom
    fixed = refine("it succeeds, so the PDDL files do not allow move right here")
    assert fixed.domain_text == golden
    assert "applied fix for wrong-effect-sign" in fixed.flags


def test_generic_feedback_triggers_a_seeded_guess():
    sc = _scene("frozenlake")
    gen = FaultInjectingGenerator("wrong-effect-sign", seed=2)
    req = GenRequest(Phase.REFINE, "frozenlake", scene=sc, prior_domain=print_domain(gen.injected(sc).domain),
                     prior_problem=print_problem(gen.injected(sc).problem),
                     feedback="The PDDL files are inconsistent with the simulated scenario.", iteration=1)
    a, b = gen.refine(req), gen.refine(req)
    assert a.flags[0].startswith("feedback names no action; guessed")
    assert a.flags == b.flags


def test_fault_injector_without_repair_returns_prior_files():
    sc = _scene("maze")
    gen = FaultInjectingGenerator("missing-direction-atom", repair=False)
    res = gen.refine(GenRequest(Phase.REFINE, "maze", scene=sc, prior_domain="(a)", prior_problem="(b)", feedback="x"))
    assert res.flags == ["repair disabled"]
    assert res.domain_text == "(a)"


def test_syntax_fault_makes_the_domain_unparseable():
    sc = _scene("maze")
    gen = FaultInjectingGenerator("extra-precondition", syntax_faults=True)
    prob = gen.generate(GenRequest(Phase.INITIAL_PROBLEM, "maze", scene=sc)).problem_text
    res = gen.generate(GenRequest(Phase.INITIAL_DOMAIN, "maze", scene=sc, prior_problem=prob))
    assert not res.ok and "could not be parsed" in res.errors[0]


def test_fault_injection_is_seeded():
    sc = _scene("printer")
    a = FaultInjectingGenerator(seed=9).injected(sc).injection
    b = FaultInjectingGenerator(seed=9).injected(sc).injection
    assert a == b and a.defect in DEFECTS


# templates and reply extraction


@pytest.mark.parametrize("domain", DOMAINS)
def test_templates_parse(domain):
    d = check_template(domain)
    assert all(not a.precondition and not a.effect for a in d.actions)
    assert f"(:domain {d.name})" in problem_template(domain)


def test_extract_define_handles_prose_and_fences():
    reply = "Here you go:\n```pddl\n(define (domain x)\n  ; a comment (with parens\n  (:predicates (p)))\n```\nDone."
    assert extract_define(reply, "domain") == ["(define (domain x)\n  ; a comment (with parens\n  (:predicates (p)))"]
    assert extract_define("nothing here", "problem") == []


def test_unbalanced_define_is_kept_for_the_parser():
    out = extract_define("```\n(define (domain x) (:predicates (p))\n```", "domain")
    assert out == ["(define (domain x) (:predicates (p))\n"]


def test_function_call_reply_builds_a_domain():
    reply = (
        "```python\n"
        "add_or_update_predicates(['(agent-at ?p - position)', '(wall ?p - position)'])\n"
        "modify_action('move-up', ['(agent-at ?from)', '(not (wall ?to))'], ['(not (agent-at ?from))', '(agent-at ?to)'])\n"
        "```"
    )
    calls = function_calls(reply)
    assert [c[0] for c in calls] == ["add_or_update_predicates", "modify_action"]
    text = domain_from_reply("maze", reply)
    d = parse_domain(text)
    assert {p.name for p in d.predicates} == {"agent-at", "wall"}


def test_function_call_errors():
    with pytest.raises(ReplyFormatError):
        function_calls("```python\nmodify_action('move-up', [x], [])\n```")
    with pytest.raises(ReplyFormatError):
        domain_from_reply("maze", "```python\nmodify_action('fly', [], [])\n```")
    with pytest.raises(ReplyFormatError):
        domain_from_reply("maze", "I am not sure.")


def test_raw_domain_reply():
    golden = print_domain(to_ground_truth_pddl(_scene("maze"))[0])
    assert domain_from_reply("maze", f"Sure.\n```pddl\n{golden}```") == golden.rstrip()


# remote generator


def test_remote_generator_fills_the_problem_prompt():
    sc = _scene("maze")
    golden_p = print_problem(to_ground_truth_pddl(sc)[1])
    client = ScriptedClient(f"```pddl\n{golden_p}```")
    gen = RemoteGenerator(client)
    req = GenRequest(Phase.INITIAL_PROBLEM, "maze", domain_text="A maze.", scenario_text=describe(sc).text, scene=sc)
    res = gen.generate(req)
    assert res.ok and res.problem is not None
    prompt = client.prompts[0]
    assert "{" + "target_problem_nl}" not in prompt
    assert describe(sc).text in prompt
    assert domain_template("maze").rstrip() in prompt
    assert client.images == [None]


def test_remote_generator_can_send_the_image():
    sc = _scene("maze")
    client = ScriptedClient("(define (problem p) (:domain maze) (:objects) (:init) (:goal (and)))")
    RemoteGenerator(client, send_image=True).generate(GenRequest(Phase.INITIAL_PROBLEM, "maze", scene=sc))
    assert client.images[0].startswith(b"\x89PNG")


def test_remote_refine_keeps_the_unrevised_file():
    sc = _scene("maze")
    d, p = map(str, (print_domain(to_ground_truth_pddl(sc)[0]), print_problem(to_ground_truth_pddl(sc)[1])))
    client = ScriptedClient(f"Only the domain changes:\n```pddl\n{d}```")
    req = GenRequest(Phase.REFINE, "maze", prior_domain=d, prior_problem=p, feedback="fix it")
    res = RemoteGenerator(client).refine(req)
    assert res.problem_text == p and "reply revised only one file" in res.flags
    assert "fix it" in client.prompts[0] and p.rstrip() in client.prompts[0]


def test_remote_generator_keeps_bad_replies_as_errors():
    res = RemoteGenerator(ScriptedClient("no pddl today")).generate(GenRequest(Phase.INITIAL_PROBLEM, "maze"))
    assert not res.ok and res.raw == "no pddl today"


def test_transport_failures_become_generation_errors():
    class Down:
        def ask(self, *a, **k):
            raise TransportError("connection refused")

    with pytest.raises(GenerationError):
        RemoteGenerator(Down()).generate(GenRequest(Phase.INITIAL_PROBLEM, "maze"))
