"""The generate, prescreen, score and refine loop, plus evaluation helpers.

A run moves through stages ``init -> prescreen -> check -> refine -> prescreen
...`` until a plan survives both the planner and a replay through the
oracle, or a cap is hit. The state is saved after every stage when an output
directory is given, so an interrupted run can be resumed.

Artifact layout under ``out``::

    manifest.json        config, status, one entry per iteration
    state.json           the full PipelineState (used for resuming)
    description.txt      scenario description from the oracle
    iter-00/domain.pddl  files checked in iteration 0
    iter-00/problem.pddl
    iter-00/prescreen-0.txt  validator output per prescreen attempt
    iter-00/ew.json      score report
    iter-00/feedback.txt feedback handed to the generator
    plan.txt             final plan, one ground action per line
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .consistency import GENERIC_FEEDBACK, Mismatch, OracleSide, PddlSide, evaluate, synthesize_feedback
from .genclient import FaultInjectingGenerator, GenRequest, GenResult, Phase
from .oracle import GroundTruthOracle, ScenarioOracle
from .pddl import (
    GroundTask,
    PddlDomain,
    PddlExecutionError,
    PddlParseError,
    PddlProblem,
    SearchFailure,
    check_plan,
    parse_domain,
    parse_problem,
    solve,
    validate_pair,
)
from .worlds import SIZE_RANGES, describe, generate_map, label_for, run_sequence, task_description
from .worlds.rules import SUCCESS
from .worlds.scenario import GridScenario, normalize_domain
from .worlds.text import TranscriptParseError, parse_transcript

log = logging.getLogger(__name__)

NOT_CONSISTENT = "consistency not reached"


@dataclass
class PipelineConfig:
    max_prescreen: int = 5
    max_refine: int = 5
    t_max: int = 10
    walks_per_t: int = 20
    retry_cap: int = 20
    threshold: float = 1.0
    no_prescreen: bool = False
    no_feedback: bool = False
    no_update: bool = False
    budget: int = 200_000
    seed: int = 0

    def __post_init__(self):
        if self.max_prescreen < 0 or self.max_refine < 0:
            raise ValueError("caps must be non-negative")
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("threshold must be in (0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown pipeline settings: {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PipelineState:
    domain: str
    stage: str = "init"
    iteration: int = 0
    domain_text: str = ""
    problem_text: str = ""
    scenario_text: str = ""
    pending_feedback: str = ""
    history: list = field(default_factory=list)  # EwReport dicts, one per check
    prescreen: list = field(default_factory=list)
    plan: list | None = None
    plan_labels: list | None = None
    failure: str | None = None
    log: list = field(default_factory=list)

    @property
    def done(self) -> bool:
        return self.plan is not None or self.failure is not None

    @property
    def succeeded(self) -> bool:
        return self.plan is not None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineState":
        return cls(**data)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "PipelineState":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class _Artifacts:
    def __init__(self, out, config: PipelineConfig):
        self.root = Path(out)
        self.root.mkdir(parents=True, exist_ok=True)
        self.config = config

    def iter_dir(self, t: int) -> Path:
        d = self.root / f"iter-{t:02d}"
        d.mkdir(exist_ok=True)
        return d

    def write(self, t: int, name: str, text: str) -> None:
        (self.iter_dir(t) / name).write_text(text, encoding="utf-8")

    def save(self, st: PipelineState) -> None:
        st.save(self.root / "state.json")
        if st.scenario_text:
            (self.root / "description.txt").write_text(st.scenario_text, encoding="utf-8")
        if st.plan is not None:
            (self.root / "plan.txt").write_text("".join(f"{a}\n" for a in st.plan), encoding="utf-8")
        iterations = [
            {"iteration": t, "score": h["score"], "dir": f"iter-{t:02d}"} for t, h in enumerate(st.history)
        ]
        status = "running" if not st.done else ("success" if st.succeeded else "failure")
        manifest = {
            "domain": st.domain,
            "status": status,
            "failure": st.failure,
            "stage": st.stage,
            "iteration": st.iteration,
            "config": self.config.to_dict(),
            "iterations": iterations,
            "state": "state.json",
        }
        (self.root / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")


def prescreen_errors(domain_text: str, problem_text: str) -> list[str]:
    """Parse and validate; an empty list means the pair may move on."""
    try:
        d = parse_domain(domain_text)
    except PddlParseError as exc:
        return [f"domain: {exc}"]
    try:
        p = parse_problem(problem_text)
    except PddlParseError as exc:
        return [f"problem: {exc}"]
    report = validate_pair(d, p)
    return [f"{v.code}: {v.message}" + (f" ({v.where})" if v.where else "") for v in report.violations]


def _prescreen_feedback(errors: list[str]) -> str:
    head = "The PDDL files could not be parsed:" if _is_parse_error(errors) else "Validation failed:"
    return head + "\n" + "\n".join(f"- {e}" for e in errors)


def _is_parse_error(errors: list[str]) -> bool:
    return len(errors) == 1 and errors[0].startswith(("domain: ", "problem: "))


def _replay_feedback(sc_side: OracleSide, pddl: PddlSide, labels: list[str], plan) -> str | None:
    """Feedback when the found plan misbehaves in the oracle; None if it reaches the goal."""
    if not labels:
        root = sc_side.root()
        if sc_side.is_goal(root):
            return None
        return synthesize_feedback([Mismatch((), 0, "goal", "plan", "goal not reached", "goal satisfied")])
    trace = sc_side.oracle.simulate(sc_side.scene, labels)
    state = pddl.root()
    for i, (label, step) in enumerate(zip(labels, trace.steps)):
        if step.result != SUCCESS:
            context = ", ".join(
                a.args[0] for a in pddl.task.to_state(state).sorted_atoms() if a.predicate == "at" and len(a.args) == 1
            )
            m = Mismatch(
                tuple(labels), i, "exec", "plan", step.result, "applicable", step.reasoning, str(plan.steps[i]), context
            )
            return synthesize_feedback([m])
        state = pddl.task.successor(state, pddl.task.lookup(plan.steps[i]))
    if not trace.goal_reached:
        return synthesize_feedback([Mismatch(tuple(labels), len(labels), "goal", "plan", "goal not reached", "goal satisfied")])
    return None


def _request(st: PipelineState, phase: Phase, scene, n_d: str, **kw) -> GenRequest:
    return GenRequest(phase, st.domain, n_d, st.scenario_text, scene, **kw)


def run(
    n_d: str | None,
    scene,
    oracle: ScenarioOracle,
    generator,
    config: PipelineConfig | None = None,
    *,
    domain: str | None = None,
    out=None,
    state: PipelineState | None = None,
) -> PipelineState:
    """Drive one scenario to a validated plan or a recorded failure."""
    cfg = config or PipelineConfig()
    dom = normalize_domain(domain or oracle.domain)
    n_d = n_d or task_description(dom)
    st = state or PipelineState(dom)
    art = _Artifacts(out, cfg) if out is not None else None

    def note(msg: str) -> None:
        st.log.append(msg)
        log.info(msg)

    def save() -> None:
        if art is not None:
            art.save(st)

    if st.stage == "init":
        st.scenario_text = oracle.describe(scene, n_d).text
        pres = generator.generate(_request(st, Phase.INITIAL_PROBLEM, scene, n_d))
        dres = generator.generate(
            _request(st, Phase.INITIAL_DOMAIN, scene, n_d, prior_problem=pres.problem_text or "")
        )
        st.problem_text = pres.problem_text or ""
        st.domain_text = dres.domain_text or ""
        st.stage = "prescreen"
        note("generated initial files")
        save()

    while not st.done:
        if st.stage == "prescreen":
            _prescreen(st, cfg, scene, n_d, generator, art, note)
        elif st.stage == "check":
            _check(st, cfg, scene, oracle, art, note)
        elif st.stage == "refine":
            if cfg.no_update:
                st.failure = NOT_CONSISTENT
                note("updating disabled; stopping after the first check")
            elif st.iteration >= cfg.max_refine:
                st.failure = f"{NOT_CONSISTENT} within {cfg.max_refine} refine iterations"
                note(st.failure)
            else:
                res = generator.refine(
                    _request(
                        st, Phase.REFINE, scene, n_d,
                        prior_domain=st.domain_text, prior_problem=st.problem_text,
                        feedback=st.pending_feedback, iteration=st.iteration + 1,
                    )
                )
                st.iteration += 1
                st.domain_text = res.domain_text if res.domain_text is not None else st.domain_text
                st.problem_text = res.problem_text if res.problem_text is not None else st.problem_text
                note(f"refined files for iteration {st.iteration}" + (f" ({'; '.join(res.flags)})" if res.flags else ""))
                st.stage = "prescreen"
        else:
            raise ValueError(f"unknown pipeline stage {st.stage!r}")
        save()
    st.stage = "done"
    save()
    return st


def _prescreen(st, cfg, scene, n_d, generator, art, note) -> None:
    t = st.iteration
    if art is not None:
        art.write(t, "domain.pddl", st.domain_text)
        art.write(t, "problem.pddl", st.problem_text)
    if cfg.no_prescreen:
        st.stage = "check"
        return
    for attempt in range(cfg.max_prescreen + 1):
        errors = prescreen_errors(st.domain_text, st.problem_text)
        st.prescreen.append({"iteration": t, "attempt": attempt, "errors": errors})
        if art is not None:
            art.write(t, f"prescreen-{attempt}.txt", "\n".join(errors) + ("\n" if errors else "ok\n"))
        if not errors:
            st.stage = "check"
            return
        if attempt == cfg.max_prescreen:
            break
        note(f"prescreen attempt {attempt} failed with {len(errors)} problem(s); regenerating")
        res = generator.refine(
            GenRequest(
                Phase.REFINE, st.domain, n_d, st.scenario_text, scene,
                prior_domain=st.domain_text, prior_problem=st.problem_text,
                feedback=_prescreen_feedback(errors), iteration=t,
            )
        )
        st.domain_text = res.domain_text if res.domain_text is not None else st.domain_text
        st.problem_text = res.problem_text if res.problem_text is not None else st.problem_text
        if art is not None:
            art.write(t, "domain.pddl", st.domain_text)
            art.write(t, "problem.pddl", st.problem_text)
    st.failure = f"prescreening failed after {cfg.max_prescreen} regenerations"
    note(st.failure)


def _check(st, cfg, scene, oracle, art, note) -> None:
    t = st.iteration
    generic = cfg.no_feedback
    try:
        d, p = parse_domain(st.domain_text), parse_problem(st.problem_text)
        pside = PddlSide(st.domain, d, p, GroundTask(d, p))
    except (PddlParseError, PddlExecutionError, ValueError) as exc:
        # only reachable with prescreening off
        st.history.append({"score": 0.0, "error": str(exc)})
        errors = prescreen_errors(st.domain_text, st.problem_text) or [str(exc)]
        st.pending_feedback = GENERIC_FEEDBACK if generic else _prescreen_feedback(errors)
        st.stage = "refine"
        return
    oside = OracleSide(oracle, scene, st.domain)
    report = evaluate(
        oside, pside, t_max=cfg.t_max, walks_per_t=cfg.walks_per_t, seed=f"{cfg.seed}.{t}",
        retry_cap=cfg.retry_cap, feedback=not generic,
    )
    st.history.append(report.to_dict())
    if art is not None:
        art.write(t, "ew.json", report.to_json())
    note(f"iteration {t}: score {report.score:.4f}")
    if report.score < cfg.threshold:
        st.pending_feedback = report.feedback or GENERIC_FEEDBACK
        if art is not None:
            art.write(t, "feedback.txt", st.pending_feedback)
        st.stage = "refine"
        return
    try:
        plan = solve(d, p, cfg.budget, task=pside.task)
    except SearchFailure as exc:
        st.pending_feedback = GENERIC_FEEDBACK if generic else (
            f"The planner found no plan for these PDDL files ({exc}). The goal or the effects are likely wrong."
        )
        note(f"planner failed: {exc}")
        if art is not None:
            art.write(t, "feedback.txt", st.pending_feedback)
        st.stage = "refine"
        return
    labels = [label_for(st.domain, d, a) for a in plan.steps]
    if any(l is None for l in labels):
        fb = "The plan uses actions that have no counterpart in the scenario: " + ", ".join(
            str(a) for a, l in zip(plan.steps, labels) if l is None
        )
    else:
        fb = _replay_feedback(oside, pside, labels, plan)
    if fb is None:
        st.plan = [str(a) for a in plan.steps]
        st.plan_labels = labels
        note(f"plan of length {len(plan)} replayed to the goal")
        return
    st.pending_feedback = GENERIC_FEEDBACK if generic else fb
    note("plan rejected by the oracle replay")
    if art is not None:
        art.write(t, "feedback.txt", st.pending_feedback)
    st.stage = "refine"


def resume(out, scene, oracle: ScenarioOracle, generator, config: PipelineConfig | None = None, n_d=None) -> PipelineState:
    """Continue a run from ``out/state.json``."""
    root = Path(out)
    st = PipelineState.load(root / "state.json")
    if config is None:
        manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
        config = PipelineConfig.from_dict(manifest["config"])
    if st.done:
        return st
    return run(n_d, scene, oracle, generator, config, domain=st.domain, out=out, state=st)


# evaluation protocol


def instantiate_problems(example_problem: str, scenarios: list, generator, *, n_d: str | None = None, workers: int = 4) -> list[GenResult]:
    """One generated problem per scenario, using ``example_problem`` in context."""
    if not scenarios:
        return []

    def one(sc: GridScenario) -> GenResult:
        dom = sc.domain
        req = GenRequest(
            Phase.INSTANTIATE_PROBLEM, dom, n_d or task_description(dom), describe(sc).text, sc,
            example_problem=example_problem,
        )
        return generator.generate(req)

    if workers <= 1:
        return [one(sc) for sc in scenarios]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, scenarios))


@dataclass
class InstanceOutcome:
    index: int
    planned: bool = False
    valid: bool = False
    replayed: bool = False
    plan_length: int | None = None
    reason: str = ""


@dataclass
class SuccessReport:
    outcomes: list[InstanceOutcome]

    @property
    def n(self) -> int:
        return len(self.outcomes)

    @property
    def rate(self) -> float:
        """Planner-valid and replayed to the goal in the simulator."""
        return sum(o.valid and o.replayed for o in self.outcomes) / self.n if self.outcomes else 0.0

    @property
    def planner_rate(self) -> float:
        return sum(o.valid for o in self.outcomes) / self.n if self.outcomes else 0.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rate": self.rate,
            "planner_rate": self.planner_rate,
            "outcomes": [asdict(o) for o in self.outcomes],
        }


def _as_domain(d) -> PddlDomain:
    return d if isinstance(d, PddlDomain) else parse_domain(d)


def _evaluate_instance(args) -> InstanceOutcome:
    i, d, p, sc, budget = args
    out = InstanceOutcome(i)
    try:
        if p is None:
            raise ValueError("no problem file")
        if isinstance(p, GenResult):
            p = p.problem if p.problem is not None else parse_problem(p.problem_text or "")
        elif isinstance(p, str):
            p = parse_problem(p)
        plan = solve(d, p, budget)
    except (PddlParseError, PddlExecutionError, SearchFailure, ValueError) as exc:
        out.reason = f"{type(exc).__name__}: {exc}"
        return out
    out.planned = True
    out.plan_length = len(plan)
    verdict = check_plan(d, p, plan)
    out.valid = verdict.valid
    if not verdict.valid:
        out.reason = verdict.reason
        return out
    labels = [label_for(sc.domain, d, a) for a in plan.steps]
    if any(l is None for l in labels):
        out.reason = "plan uses actions without a simulator counterpart"
        return out
    if not labels:
        from .worlds import goal_reached

        out.replayed = goal_reached(sc)
    else:
        trace = run_sequence(sc, labels)
        out.replayed = trace.executable_prefix() == len(labels) and trace.goal_reached
    if not out.replayed:
        out.reason = "plan does not reach the goal in the simulator"
    return out


def success_rate(domain, problems: list, scenarios: list, budget: int = 200_000, *, workers: int = 1) -> SuccessReport:
    """Plan every instance, check it against the PDDL and replay it in the simulator."""
    if len(problems) != len(scenarios):
        raise ValueError("need exactly one problem per scenario")
    d = _as_domain(domain)
    jobs = [(i, d, p, sc, budget) for i, (p, sc) in enumerate(zip(problems, scenarios))]
    if workers <= 1:
        outcomes = [_evaluate_instance(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_evaluate_instance, jobs))
    return SuccessReport(sorted(outcomes, key=lambda o: o.index))


SECTIONS = ("TaskDescription", "ExecReason", "ExecResult", "GoalReach")


def _section(text: str, section: str):
    head, trace = parse_transcript(text)
    if section == "TaskDescription":
        return "\n".join(line.rstrip() for line in head.rstrip().splitlines())
    if section == "ExecReason":
        return tuple(s.reasoning.rstrip() for s in trace.steps)
    if section == "ExecResult":
        return tuple(s.result for s in trace.steps)
    return trace.goal_reached


def string_match_rate(predicted: list[str], golden: list[str], section: str) -> float:
    """Share of datapoints whose ``section`` matches exactly; unparseable predictions score 0."""
    if section not in SECTIONS:
        raise ValueError(f"section must be one of {', '.join(SECTIONS)}")
    if len(predicted) != len(golden):
        raise ValueError("predicted and golden lists differ in length")
    if not golden:
        return 0.0
    hits = 0
    for pred, gold in zip(predicted, golden):
        try:
            hits += _section(pred, section) == _section(gold, section)
        except TranscriptParseError:
            continue
    return hits / len(golden)


# ablations on the scripted defect benchmark

MODES = {
    "full": {},
    "no_prescreen": {"no_prescreen": True},
    "no_feedback": {"no_feedback": True},
    "no_update": {"no_update": True},
}


@dataclass
class BenchmarkCase:
    domain: str
    seed: int
    defect: str
    success: bool
    iterations: int
    failure: str | None = None


def benchmark_case(domain: str, seed: int, mode: str = "full", *, defect: str | None = None, size: int | None = None,
                   config: PipelineConfig | None = None) -> BenchmarkCase:
    lo, hi = SIZE_RANGES[domain]
    size = size or lo + seed % (min(hi, lo + 2) - lo + 1)
    sc = generate_map(domain, size, 0.2, seed, require_solvable=True)
    gen = FaultInjectingGenerator(defect, seed=seed)
    base = (config or PipelineConfig(seed=seed)).to_dict()
    base.update(MODES[mode])
    st = run(None, sc, GroundTruthOracle(domain), gen, PipelineConfig.from_dict(base))
    return BenchmarkCase(domain, seed, gen.injected(sc).injection.defect, st.succeeded, st.iteration, st.failure)


def ablation_benchmark(domains, seeds, modes=("full", "no_feedback", "no_update"), *, config=None) -> dict[str, list[BenchmarkCase]]:
    return {
        mode: [benchmark_case(dom, seed, mode, config=config) for dom in domains for seed in seeds] for mode in modes
    }


def benchmark_rates(results: dict[str, list[BenchmarkCase]]) -> dict[str, float]:
    return {mode: sum(c.success for c in cases) / len(cases) if cases else 0.0 for mode, cases in results.items()}


# input instances -> instantiated problems -> success rate


def evaluation_protocol(
    domain: str,
    inputs: list,
    instances: list,
    oracle: ScenarioOracle,
    generator,
    config: PipelineConfig | None = None,
    *,
    reuse: bool = False,
    out=None,
    workers: int = 1,
) -> dict:
    """Run the loop on each input scenario, then score its files on ``instances``.

    Each input normally yields its own domain file. With ``reuse`` the first
    converged domain file is kept and later inputs only contribute their
    problem file as the in-context example.
    """
    dom = normalize_domain(domain)
    root = Path(out) if out is not None else None
    rows = []
    shared = None
    for i, sc in enumerate(inputs):
        run_dir = root / f"input-{i:02d}" if root is not None else None
        st = run(None, sc, oracle, generator, config, domain=dom, out=run_dir)
        row = {"index": i, "converged": st.succeeded, "iterations": st.iteration, "failure": st.failure,
               "rate": 0.0, "planner_rate": 0.0}
        if st.succeeded:
            d_text = st.domain_text
            if reuse:
                shared = shared or d_text
                d_text = shared
            problems = instantiate_problems(st.problem_text, instances, generator, workers=workers)
            rep = success_rate(d_text, problems, instances, (config or PipelineConfig()).budget, workers=workers)
            row.update(rate=rep.rate, planner_rate=rep.planner_rate)
            if run_dir is not None:
                (run_dir / "instances.json").write_text(json.dumps(rep.to_dict(), indent=2), encoding="utf-8")
        rows.append(row)
    result = {
        "domain": dom,
        "mode": "reuse" if reuse else "per-input",
        "instances": len(instances),
        "inputs": rows,
        "rate": sum(r["rate"] for r in rows) / len(rows) if rows else 0.0,
        "planner_rate": sum(r["planner_rate"] for r in rows) / len(rows) if rows else 0.0,
    }
    if root is not None:
        root.mkdir(parents=True, exist_ok=True)
        (root / "success.json").write_text(json.dumps(result, indent=2), encoding="utf-8")
    return result
