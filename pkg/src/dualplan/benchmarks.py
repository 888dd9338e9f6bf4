"""Offline benchmarks: defect detection and planner optimality."""
from __future__ import annotations

import random
from dataclasses import dataclass

from .consistency import Mismatch, OracleSide, PddlSide, evaluate, exhaustive_mismatches
from .genclient.defects import DefectNotApplicable, canonical, inject
from .oracle import GroundTruthOracle
from .pddl import GroundTask, check_plan, solve
from .worlds import DOMAINS, SIZE_RANGES, generate_map, label_for, run_sequence, shortest_plan


@dataclass
class DetectionTrial:
    defect: str
    domain: str
    seed: int
    score: float
    detected: bool
    named: bool
    feedback: str

    @property
    def ok(self) -> bool:
        return self.detected and self.named


def expected_outcome_phrase(m: Mismatch) -> str:
    """The sentence fragment the feedback must contain for mismatch ``m``."""
    if m.kind == "goal":
        return f"the simulator says the {m.oracle_verdict.replace('goal ', 'goal is ', 1)}"
    return f"executing {m.sequence[m.index]} here should be {m.oracle_verdict}"


def defect_case(defect: str, seed: int, *, depth: int = 4, max_tries: int = 200):
    """A (scenario, injected pair) where the defect is visible within ``depth`` steps.

    Domains rotate with the seed among those the defect applies to; a defect
    that no action sequence can reveal is not a detection problem, so such
    maps are skipped.
    """
    defect = canonical(defect)
    domains = [d for d in DOMAINS if not (defect == "missing-object-typing" and d == "frozenlake")]
    dom = domains[seed % len(domains)]
    lo, hi = SIZE_RANGES[dom]
    for attempt in range(max_tries):
        size = lo + (seed + attempt) % (min(hi, lo + 2) - lo + 1)
        sc = generate_map(dom, size, 0.2, seed * 1000 + attempt, require_solvable=True)
        try:
            inj = inject(sc, defect, random.Random(f"case/{seed}/{attempt}"))
        except DefectNotApplicable:
            continue
        oside = OracleSide(GroundTruthOracle(dom), sc, dom)
        pside = PddlSide(dom, inj.domain, inj.problem)
        if exhaustive_mismatches(oside, pside, depth):
            return sc, inj, oside, pside
    raise RuntimeError(f"no exercisable case for {defect} at seed {seed}")


def detection_trial(defect: str, seed: int, *, t_max: int = 10, walks_per_t: int = 20) -> DetectionTrial:
    sc, inj, oside, pside = defect_case(defect, seed)
    rep = evaluate(oside, pside, t_max=t_max, walks_per_t=walks_per_t, seed=seed)
    named = False
    if rep.mismatches:
        first = min(rep.mismatches, key=Mismatch.sort_key)
        named = expected_outcome_phrase(first) in rep.feedback
        if first.kind == "exec":
            named = named and f"executes {first.sequence[first.index]}" in rep.feedback
    return DetectionTrial(inj.injection.defect, sc.domain, seed, rep.score, rep.score < 1.0, named, rep.feedback)


@dataclass
class OptimalityTrial:
    domain: str
    size: int
    seed: int
    bfs_length: int
    plan_length: int | None
    valid: bool
    replayed: bool

    @property
    def ok(self) -> bool:
        return self.plan_length == self.bfs_length and self.valid and self.replayed


def optimality_trial(domain: str, size: int, seed: int, obstacle_prob: float = 0.2) -> OptimalityTrial:
    from .worlds.golden import to_ground_truth_pddl

    sc = generate_map(domain, size, obstacle_prob, seed, require_solvable=True)
    reference = shortest_plan(sc)
    d, p = to_ground_truth_pddl(sc)
    plan = solve(d, p, task=GroundTask(d, p))
    valid = bool(check_plan(d, p, plan))
    labels = [label_for(domain, d, a) for a in plan.steps]
    replayed = False
    if None not in labels and labels:
        trace = run_sequence(sc, labels)
        replayed = trace.executable_prefix() == len(labels) and trace.goal_reached
    return OptimalityTrial(domain, size, seed, len(reference), len(plan), valid, replayed)
