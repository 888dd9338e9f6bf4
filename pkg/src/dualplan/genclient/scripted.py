"""Deterministic generators used as test doubles for the generating model.

Both read the exact scenario from ``req.scene``. The golden generator emits
the ground-truth pair. The fault injector emits that pair with one seeded
defect and, when repairing, undoes the defect once the feedback points at it.
"""
from __future__ import annotations

import hashlib
import random

from ..pddl import PddlParseError, parse_domain, parse_problem, print_domain, print_problem
from ..worlds.golden import to_ground_truth_pddl
from ..worlds.scenario import GridScenario
from .defects import DEFECTS, Injected, applicable_defects, canonical, inject, matches, summarize_feedback
from .requests import GenRequest, GenResult, Phase, RequestError


def _scene(req: GenRequest) -> GridScenario:
    if not isinstance(req.scene, GridScenario):
        raise RequestError("scripted generators need the symbolic scenario as the scene reference")
    return req.scene


def _scene_tag(sc: GridScenario) -> str:
    return hashlib.sha256(repr((sc.domain, sc.cells, sc.key())).encode()).hexdigest()[:16]


class GoldenGenerator:
    """Returns the ground-truth files; refinement is the identity."""

    name = "golden"

    def generate(self, req: GenRequest) -> GenResult:
        d, p = to_ground_truth_pddl(_scene(req))
        res = GenResult()
        if req.phase in (Phase.INITIAL_PROBLEM, Phase.INSTANTIATE_PROBLEM):
            res.problem_text = print_problem(p)
        elif req.phase is Phase.INITIAL_DOMAIN:
            res.domain_text = print_domain(d)
        else:
            res.domain_text, res.problem_text = print_domain(d), print_problem(p)
        res.raw = (res.domain_text or "") + (res.problem_text or "")
        return res.parse()

    def refine(self, req: GenRequest) -> GenResult:
        if req.phase is not Phase.REFINE:
            raise RequestError("refine expects a Refine request")
        return self.generate(req)


class FaultInjectingGenerator:
    """Golden files with exactly one seeded defect per scenario.

    ``defect=None`` draws the defect from the catalog entries that apply to
    the scenario. With ``repair=True`` a Refine request restores the touched
    file(s) when the feedback matches the defect's signature; generic
    feedback triggers a seeded guess from the fix table instead. With
    ``syntax_faults=True`` the first domain file is emitted unbalanced so the
    prescreening loop has something to reject.
    """

    name = "fault"

    def __init__(self, defect: str | None = None, *, seed: int = 0, repair: bool = True, syntax_faults: bool = False):
        self.defect = canonical(defect) if defect else None
        self.seed = seed
        self.repair = repair
        self.syntax_faults = syntax_faults
        self._cache: dict[str, Injected] = {}

    # injection

    def injected(self, sc: GridScenario) -> Injected:
        tag = _scene_tag(sc)
        if tag not in self._cache:
            rng = random.Random(f"fault/{self.seed}/{tag}")
            defect = self.defect or rng.choice(applicable_defects(sc))
            self._cache[tag] = inject(sc, defect, rng)
        return self._cache[tag]

    def generate(self, req: GenRequest) -> GenResult:
        if req.phase is Phase.REFINE:
            return self.refine(req)
        sc = _scene(req)
        inj = self.injected(sc)
        res = GenResult()
        if req.phase is Phase.INITIAL_PROBLEM:
            res.problem_text = print_problem(inj.problem)
        elif req.phase is Phase.INITIAL_DOMAIN:
            res.domain_text = print_domain(inj.domain)
            if self.syntax_faults:
                res.domain_text = res.domain_text.rstrip().rstrip(")")
        else:
            # instances reuse the defect only when it lives in the problem file
            p = inj.problem if "problem" in inj.injection.touched else to_ground_truth_pddl(sc)[1]
            res.problem_text = print_problem(p)
        res.raw = (res.domain_text or "") + (res.problem_text or "")
        return res.parse()

    # repair

    def fix(self, fault_id: str, sc: GridScenario, domain_text: str, problem_text: str) -> GenResult:
        """Apply the fix-table entry for ``fault_id``; unknown or absent faults leave the files unchanged."""
        res = GenResult(domain_text, problem_text)
        try:
            fault = canonical(fault_id)
        except KeyError:
            res.flags.append(f"unknown fault id {fault_id!r}; files unchanged")
            res.raw = domain_text + problem_text
            return res.parse()
        inj = self.injected(sc)
        if fault != inj.injection.defect:
            res.flags.append(f"no fix recorded for {fault}; files unchanged")
        else:
            d, p = inj.golden
            if "domain" in inj.injection.touched:
                res.domain_text = print_domain(d)
            if "problem" in inj.injection.touched:
                res.problem_text = print_problem(p)
            res.flags.append(f"applied fix for {fault}")
        res.raw = (res.domain_text or "") + (res.problem_text or "")
        return res.parse()

    def refine(self, req: GenRequest) -> GenResult:
        if req.phase is not Phase.REFINE:
            raise RequestError("refine expects a Refine request")
        sc = _scene(req)
        inj = self.injected(sc)
        unchanged = GenResult(req.prior_domain, req.prior_problem, raw=req.prior_domain + req.prior_problem)
        if not self.repair:
            unchanged.flags.append("repair disabled")
            return unchanged.parse()
        try:
            parse_domain(req.prior_domain)
            parse_problem(req.prior_problem)
        except PddlParseError:
            # rewrite the files cleanly; the seeded defect itself stays
            res = GenResult(print_domain(inj.domain), print_problem(inj.problem))
            res.flags.append("rewrote unparseable file")
            res.raw = res.domain_text + res.problem_text
            return res.parse()
        if summarize_feedback(req.feedback).kind is None:
            rng = random.Random(f"guess/{self.seed}/{_scene_tag(sc)}/{req.iteration}")
            guess = rng.choice(DEFECTS)
            res = self.fix(guess, sc, req.prior_domain, req.prior_problem)
            res.flags.insert(0, f"feedback names no action; guessed {guess}")
            return res
        if matches(inj.injection, req.feedback):
            return self.fix(inj.injection.defect, sc, req.prior_domain, req.prior_problem)
        unchanged.flags.append("feedback matches no recorded fault; files unchanged")
        return unchanged.parse()
