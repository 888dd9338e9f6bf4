"""Exploration walks, the bidirectional executability score, and feedback.

Two *sides* are compared: the scenario oracle and a compiled PDDL task. Both
expose ``root()``, ``step(state, label)`` and ``is_goal(state)`` over the
domain's action labels. Walks are sampled in one side by picking uniformly
among labels executable at each step, then replayed in the other side.

A walk counts as consistent when it is fully executable in the other side and
both sides agree on whether the goal holds at the end of the walk.
"""
from __future__ import annotations

import json
import random
import re
from dataclasses import asdict, dataclass, field
from itertools import product

from .oracle import GroundTruthOracle, ScenarioOracle
from .pddl import GroundTask, Literal, PddlDomain, PddlProblem
from .pddl.ast import GroundAction, substitute
from .pddl.ground import holds
from .worlds.bindings import LABEL_BINDINGS, first_applicable, label_index
from .worlds.rules import SUCCESS
from .worlds.scenario import ACTION_VOCAB, normalize_domain

FROM_ORACLE = "oracle"
FROM_PDDL = "pddl"

GENERIC_FEEDBACK = "The PDDL files are inconsistent with the simulated scenario."


# sides


@dataclass
class StepInfo:
    ok: bool
    result: str = ""
    reasoning: str = ""
    action: GroundAction | None = None


class OracleSide:
    source = FROM_ORACLE

    def __init__(self, oracle: ScenarioOracle, scene, domain: str | None = None):
        self.oracle = oracle
        self.scene = scene
        self.domain = normalize_domain(domain or oracle.domain)
        self.vocab = ACTION_VOCAB[self.domain]

    def root(self):
        return self.oracle.start(self.scene)

    def step(self, state, label: str):
        result, nxt = self.oracle.advance(state, label)
        return (nxt if result == SUCCESS else None), result

    def is_goal(self, state) -> bool:
        return self.oracle.cursor_goal(state)

    def key(self, state):
        return state.key() if hasattr(state, "key") else state

    def explain(self, seq: list[str]) -> StepInfo:
        """Outcome of the last action of ``seq`` with the oracle's reasoning."""
        trace = self.oracle.simulate(self.scene, seq)
        last = trace.steps[-1]
        return StepInfo(last.result == SUCCESS, last.result, last.reasoning)


class PddlSide:
    source = FROM_PDDL

    def __init__(self, domain: str, d: PddlDomain, p: PddlProblem, task: GroundTask | None = None):
        self.domain = normalize_domain(domain)
        self.pddl_domain = d
        self.problem = p
        self.task = task or GroundTask(d, p)
        self.vocab = ACTION_VOCAB[self.domain]
        self.index = label_index(self.domain, self.task)
        self.label_of = {i: label for label, idx in self.index.items() for i in idx}

    def root(self) -> int:
        return self.task.init

    def step(self, state: int, label: str):
        i = first_applicable(self.task, self.index[label], state)
        if i is None:
            return None, None
        return self.task.successor(state, i), self.task.actions[i].action

    def is_goal(self, state: int) -> bool:
        return self.task.is_goal(state)

    def key(self, state: int) -> int:
        return state

    def options(self, state: int) -> list[tuple[str, int]]:
        first: dict[str, int] = {}
        for i in self.task.applicable(state):
            label = self.label_of.get(i)
            if label is not None and label not in first:
                first[label] = i
        return [(l, self.task.successor(state, first[l])) for l in self.vocab if l in first]

    def replay(self, seq: list[str]) -> int | None:
        state = self.root()
        for a in seq:
            state, _ = self.step(state, a)
            if state is None:
                return None
        return state


def _options(side, state) -> list[tuple[str, object]]:
    if hasattr(side, "options"):
        return side.options(state)
    out = []
    for label in side.vocab:
        nxt, _ = side.step(state, label)
        if nxt is not None:
            out.append((label, nxt))
    return out


# walks


@dataclass(frozen=True)
class WalkSample:
    sequence: tuple[str, ...]
    source: str
    T: int
    goal: bool


@dataclass
class WalkSet:
    samples: list[WalkSample]
    source: str
    empty_root: bool = False
    dead_ends: int = 0
    missing: dict[int, int] = field(default_factory=dict)


def sample_walks(side, t_max: int = 10, walks_per_t: int = 20, seed: int = 0, retry_cap: int = 20) -> WalkSet:
    """Uniform random extension walks of every length 1..t_max.

    A walk that reaches a state with no executable label before length T is
    abandoned and resampled, at most ``retry_cap`` times; after that the slot
    is recorded in ``missing``.
    """
    rng = random.Random(f"walks/{side.source}/{seed}")
    root = side.root()
    if not _options(side, root):
        return WalkSet([], side.source, empty_root=True)
    out = WalkSet([], side.source)
    for T in range(1, t_max + 1):
        for _ in range(walks_per_t):
            for _attempt in range(retry_cap + 1):
                state, seq = root, []
                for _t in range(T):
                    opts = _options(side, state)
                    if not opts:
                        break
                    label, state = opts[rng.randrange(len(opts))]
                    seq.append(label)
                if len(seq) == T:
                    out.samples.append(WalkSample(tuple(seq), side.source, T, side.is_goal(state)))
                    break
                out.dead_ends += 1
            else:
                out.missing[T] = out.missing.get(T, 0) + 1
    return out


# cross execution


@dataclass
class Mismatch:
    sequence: tuple[str, ...]
    index: int  # 0-based step that disagrees; len(sequence) for a goal disagreement
    kind: str  # "exec" or "goal"
    source: str
    oracle_verdict: str
    pddl_verdict: str
    reasoning: str = ""
    pddl_action: str = ""
    context: str = ""

    @property
    def label(self) -> str | None:
        return self.sequence[self.index] if self.kind == "exec" else None

    def sort_key(self):
        return (self.kind != "exec", self.index, len(self.sequence), self.source != FROM_ORACLE)


def cross_execute(sample: WalkSample, other) -> tuple[bool, int]:
    """Replay ``sample`` in ``other``; returns (bit, failing index).

    The failing index is ``len(sequence)`` when every step executes but the
    goal verdicts differ, and -1 when the walk is consistent.
    """
    state = other.root()
    for i, label in enumerate(sample.sequence):
        state, _ = other.step(state, label)
        if state is None:
            return False, i
    if other.is_goal(state) != sample.goal:
        return False, len(sample.sequence)
    return True, -1


def _agent_context(pddl: PddlSide, state: int) -> str:
    atoms = [a for a in pddl.task.to_state(state).sorted_atoms() if a.predicate == "at" and len(a.args) == 1]
    return ", ".join(a.args[0] for a in atoms)


_POS = re.compile(r"pos-\d+-\d+")


def diagnose_inapplicable(pddl: PddlSide, state: int, label: str, hint: str = "", cap: int = 20000):
    """Closest grounding of ``label`` and its unmet preconditions.

    Bindings come from joining the fluent preconditions with the current
    state, then completing the rest over typed objects. Ties prefer
    groundings whose arguments are mentioned in ``hint``.
    """
    d, p = pddl.pddl_domain, pddl.problem
    gstate = pddl.task.to_state(state)
    mentioned = set(_POS.findall(hint))
    objects = p.object_types()
    for c in d.constants:
        objects[c.name] = c.effective_type
    best = None
    for schema_name, required in LABEL_BINDINGS[pddl.domain].get(label, ()):
        schema = d.action(schema_name)
        if schema is None:
            continue
        fixed = dict(required)
        domains = []
        for prm in schema.parameters:
            if prm.name in fixed:
                domains.append([fixed[prm.name]])
            else:
                domains.append(sorted(o for o, t in objects.items() if d.is_subtype(t, prm.effective_type)))
        # narrow parameters bound by a true single-argument fluent such as (at ?from)
        for lit in schema.precondition:
            if lit.positive and len(lit.atom.args) == 1 and lit.atom.args[0].startswith("?"):
                var = lit.atom.args[0]
                true_vals = {a.args[0] for a in gstate.atoms if a.predicate == lit.atom.predicate and len(a.args) == 1}
                names = [prm.name for prm in schema.parameters]
                if var in names and true_vals:
                    i = names.index(var)
                    narrowed = [v for v in domains[i] if v in true_vals]
                    if narrowed:
                        domains[i] = narrowed
        size = 1
        for dom in domains:
            size *= max(1, len(dom))
        if size > cap:
            continue
        names = [prm.name for prm in schema.parameters]
        for args in product(*domains):
            binding = dict(zip(names, args))
            pre = [Literal(substitute(l.atom, binding), l.positive) for l in schema.precondition]
            unmet = [l for l in pre if not holds([l], gstate)]
            hits = len(mentioned.intersection(args))
            key = (len(unmet), -hits, schema_name, args)
            if best is None or key < best[0]:
                best = (key, GroundAction(schema_name, tuple(args)), unmet)
    if best is None:
        return None, []
    return best[1], best[2]


def _check_direction(samples: WalkSet, other):
    per_t: dict[int, list[int]] = {}
    failed = []
    for s in samples.samples:
        bit, idx = cross_execute(s, other)
        per_t.setdefault(s.T, []).append(int(bit))
        if not bit:
            failed.append((s, idx))
    return per_t, failed


def _failure_order(item):
    s, idx = item
    return (idx == len(s.sequence), idx, len(s.sequence), s.source != FROM_ORACLE, s.sequence)


def _brief_mismatch(s: WalkSample, idx: int) -> Mismatch:
    """Verdicts implied by the walk alone, without asking either side again."""
    if idx == len(s.sequence):
        src = "goal reached" if s.goal else "goal not reached"
        oth = "goal not reached" if s.goal else "goal reached"
        o, p = (src, oth) if s.source == FROM_ORACLE else (oth, src)
        return Mismatch(s.sequence, idx, "goal", s.source, o, p.replace("reached", "satisfied"))
    if s.source == FROM_ORACLE:
        return Mismatch(s.sequence, idx, "exec", s.source, SUCCESS, "inapplicable")
    return Mismatch(s.sequence, idx, "exec", s.source, "not " + SUCCESS, "applicable")


def _describe_mismatch(s: WalkSample, idx: int, oracle_side: OracleSide, pddl_side: PddlSide) -> Mismatch:
    seq = list(s.sequence)
    if idx == len(seq):
        o_goal = oracle_side.is_goal(_replay_oracle(oracle_side, seq))
        p_goal = pddl_side.is_goal(pddl_side.replay(seq))
        return Mismatch(
            s.sequence, idx, "goal", s.source,
            "goal reached" if o_goal else "goal not reached",
            "goal satisfied" if p_goal else "goal not satisfied",
            context=_agent_context(pddl_side, pddl_side.replay(seq)),
        )
    prefix_state = pddl_side.replay(seq[:idx])
    info = oracle_side.explain(seq[: idx + 1])
    context = _agent_context(pddl_side, prefix_state) if prefix_state is not None else ""
    _, ga = pddl_side.step(prefix_state, seq[idx])
    if ga is not None:
        pddl_verdict, pddl_action = "applicable", str(ga)
    else:
        cand, unmet = diagnose_inapplicable(pddl_side, prefix_state, seq[idx], info.reasoning)
        pddl_verdict = "inapplicable"
        pddl_action = ""
        if cand is not None:
            pddl_action = f"{cand} unmet: {' '.join(str(l) for l in unmet)}"
    return Mismatch(
        s.sequence, idx, "exec", s.source, info.result, pddl_verdict, info.reasoning, pddl_action, context
    )


def _replay_oracle(side: OracleSide, seq: list[str]):
    state = side.root()
    for a in seq:
        state, _ = side.step(state, a)
        if state is None:
            raise RuntimeError("oracle walk replay diverged")
    return state


# scoring


def harmonic(a: float, b: float) -> float:
    if a <= 0 or b <= 0:
        return 0.0
    return 2.0 / (1.0 / a + 1.0 / b)


def direction_rate(per_t: dict[int, list[int]]) -> float | None:
    """Mean over lengths T of the per-T mean bit; None if no walks at all."""
    means = [sum(v) / len(v) for _, v in sorted(per_t.items()) if v]
    if not means:
        return None
    return sum(means) / len(means)


@dataclass
class EwReport:
    rate_sim_to_pddl: float
    rate_pddl_to_sim: float
    score: float
    mismatches: list[Mismatch] = field(default_factory=list)
    feedback: str = ""
    flags: list[str] = field(default_factory=list)
    walks: dict[str, int] = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return self.score == 1.0

    def to_dict(self, max_mismatches: int = 20) -> dict:
        return {
            "rate_sim_to_pddl": self.rate_sim_to_pddl,
            "rate_pddl_to_sim": self.rate_pddl_to_sim,
            "score": self.score,
            "mismatch_count": len(self.mismatches),
            "mismatches": [asdict(m) for m in self.mismatches[:max_mismatches]],
            "feedback": self.feedback,
            "flags": list(self.flags),
            "walks": dict(self.walks),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def ew_score(rate_a: float | None, rate_b: float | None) -> float:
    """Harmonic mean of the two directional rates; 0 if either is 0 or undefined."""
    if rate_a is None or rate_b is None:
        return 0.0
    return harmonic(rate_a, rate_b)


def synthesize_feedback(mismatches: list[Mismatch]) -> str:
    """Templated description of the most informative (shortest) mismatch."""
    if not mismatches:
        return ""
    m = min(mismatches, key=Mismatch.sort_key)
    seq = ", ".join(m.sequence) if m.kind == "goal" else ", ".join(m.sequence[: m.index + 1])
    seq = seq or "(no actions)"
    lines = [f"The PDDL files disagree with the simulated scenario on the action sequence: {seq}."]
    if m.kind == "goal":
        lines.append(
            f"After this sequence the simulator says the {m.oracle_verdict.replace('goal ', 'goal is ', 1)}, "
            f"but in the PDDL files the {m.pddl_verdict.replace('goal ', 'goal is ', 1)}"
            + (f" (agent at {m.context})." if m.context else ".")
        )
        expect = "hold" if m.oracle_verdict == "goal reached" else "not hold"
        lines.append(f"Revise the goal or the effects so that the goal would {expect} in this situation.")
        return "\n".join(lines)
    action = m.sequence[m.index]
    where = f" with the agent at {m.context}" if m.context else ""
    lines.append(f"Step {m.index + 1} executes {action}{where}.")
    lines.append(f"Expected outcome: executing {action} here should be {m.oracle_verdict}. Simulator reasoning: {m.reasoning}")
    if m.pddl_verdict == "applicable":
        lines.append(f"PDDL verdict: the action is applicable as {m.pddl_action}, so the PDDL files allow {action} here.")
        lines.append(f"Revise the preconditions so that {action} is not executable in this situation.")
    else:
        detail = f" The closest grounding is {m.pddl_action}." if m.pddl_action else ""
        lines.append(f"PDDL verdict: no grounding of {action} is applicable, so the PDDL files do not allow {action} here.{detail}")
        lines.append(f"Revise the files so that {action} is executable in this situation.")
    return "\n".join(lines)


def evaluate(
    oracle_side: OracleSide,
    pddl_side: PddlSide,
    *,
    t_max: int = 10,
    walks_per_t: int = 20,
    seed: int = 0,
    retry_cap: int = 20,
    feedback: bool = True,
    detail_cap: int = 5,
) -> EwReport:
    """Sample walks in both sides, cross-execute, score and summarize."""
    flags = []
    sim_walks = sample_walks(oracle_side, t_max, walks_per_t, seed, retry_cap)
    pddl_walks = sample_walks(pddl_side, t_max, walks_per_t, seed, retry_cap)
    if sim_walks.empty_root:
        flags.append("oracle side has no executable action at the root")
    if pddl_walks.empty_root:
        flags.append("pddl side has no executable action at the root")
    for ws in (sim_walks, pddl_walks):
        if ws.missing:
            flags.append(f"{ws.source} side dead-ended for lengths {sorted(ws.missing)}")
    per_a, failed_a = _check_direction(sim_walks, pddl_side)
    per_b, failed_b = _check_direction(pddl_walks, oracle_side)
    rate_a, rate_b = direction_rate(per_a), direction_rate(per_b)
    score = ew_score(rate_a, rate_b)
    # only the leading mismatches get the (costly) diagnosis
    failed = sorted(failed_a + failed_b, key=_failure_order)
    mismatches = [
        _describe_mismatch(s, idx, oracle_side, pddl_side) if i < detail_cap else _brief_mismatch(s, idx)
        for i, (s, idx) in enumerate(failed)
    ]
    if score < 1.0 and not mismatches:
        # an empty side cannot be compared; report it as a mismatch-free failure
        flags.append("score undefined: empty walk set")
    text = synthesize_feedback(mismatches) if feedback else (GENERIC_FEEDBACK if score < 1.0 else "")
    return EwReport(
        rate_a or 0.0,
        rate_b or 0.0,
        score,
        mismatches,
        text,
        flags,
        {"oracle": len(sim_walks.samples), "pddl": len(pddl_walks.samples)},
    )


def ew(
    domain: str,
    d: PddlDomain,
    p: PddlProblem,
    scene,
    oracle: ScenarioOracle | None = None,
    **kw,
) -> EwReport:
    """Convenience wrapper: score a PDDL pair against a scene."""
    oracle = oracle or GroundTruthOracle(domain)
    return evaluate(OracleSide(oracle, scene, domain), PddlSide(domain, d, p), **kw)


# exact modes for small maps


def exact_rates(oracle_side: OracleSide, pddl_side: PddlSide, t_max: int = 10) -> tuple[float | None, float | None]:
    """Exact expected directional rates under the walk distribution.

    Walk probabilities are propagated over joint states; dead-ended walks are
    dropped and each length is renormalized, matching resampling with an
    unbounded retry cap.
    """
    return (
        _exact_direction(oracle_side, pddl_side, t_max),
        _exact_direction(pddl_side, oracle_side, t_max),
    )


def _exact_direction(src, other, t_max: int) -> float | None:
    root = (src.root(), other.root())
    layer: dict = {(src.key(root[0]), _okey(other, root[1])): (root, 1.0)}
    means = []
    for _T in range(1, t_max + 1):
        nxt_layer: dict = {}
        for (s_state, o_state), prob in layer.values():
            opts = _options(src, s_state)
            if not opts:
                continue
            share = prob / len(opts)
            for label, s_next in opts:
                o_next = None
                if o_state is not None:
                    o_next, _ = other.step(o_state, label)
                key = (src.key(s_next), _okey(other, o_next))
                if key in nxt_layer:
                    nxt_layer[key] = (nxt_layer[key][0], nxt_layer[key][1] + share)
                else:
                    nxt_layer[key] = ((s_next, o_next), share)
        total = sum(p for _, p in nxt_layer.values())
        if total == 0:
            break
        good = sum(
            p for (s, o), p in nxt_layer.values() if o is not None and other.is_goal(o) == src.is_goal(s)
        )
        means.append(good / total)
        layer = {k: ((s, o), p / total) for k, ((s, o), p) in nxt_layer.items()}
    if not means:
        return None
    return sum(means) / len(means)


def _okey(side, state):
    return None if state is None else side.key(state)


def exhaustive_mismatches(oracle_side: OracleSide, pddl_side: PddlSide, max_len: int = 6) -> list[tuple[tuple[str, ...], str]]:
    """Every label sequence up to ``max_len`` whose executability or goal verdict differs.

    Only prefixes executable in both sides are extended (any extension of a
    failed prefix fails in both). Subtrees are memoized on the joint state,
    and one witness sequence is reported per disagreeing joint state.
    """
    seen: set = set()
    out = []

    def visit(s_state, p_state, seq: tuple[str, ...]):
        key = (oracle_side.key(s_state), p_state, max_len - len(seq))
        if key in seen:
            return
        seen.add(key)
        if seq and oracle_side.is_goal(s_state) != pddl_side.is_goal(p_state):
            out.append((seq, "goal"))
        if len(seq) == max_len:
            return
        for label in oracle_side.vocab:
            s_next, _ = oracle_side.step(s_state, label)
            p_next, _ = pddl_side.step(p_state, label)
            if (s_next is None) != (p_next is None):
                out.append((seq + (label,), "exec"))
            elif s_next is not None:
                visit(s_next, p_next, seq + (label,))

    visit(oracle_side.root(), pddl_side.root(), ())
    return out
