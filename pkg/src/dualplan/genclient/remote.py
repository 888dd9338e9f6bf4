"""Generator backed by a chat model, using the stored prompt templates."""
from __future__ import annotations

import logging

from ..llm import TransportError
from ..render import render_png
from ..worlds.scenario import GridScenario
from .requests import GenerationError, GenRequest, GenResult, Phase, RequestError
from .templates import (
    ReplyFormatError,
    domain_from_reply,
    domain_template,
    example_domain_description,
    extract_define,
    fenced,
    fill,
    problem_from_reply,
    problem_template,
    prompt_asset,
)

log = logging.getLogger(__name__)


class RemoteGenerator:
    """Build the phase prompt, ask the model, extract the file(s).

    By default no image is sent: the scenario description stands in for
    vision. Replies are parsed but never repaired; an unusable reply comes
    back as a result with errors and the raw text kept for the next round.
    """

    name = "remote"

    def __init__(self, client, *, send_image: bool = False, theme: str | None = None):
        self.client = client
        self.send_image = send_image
        self.theme = theme

    def prompt(self, req: GenRequest) -> str:
        dom = req.domain
        nl = req.domain_text
        if req.phase is Phase.INITIAL_PROBLEM:
            return fill(
                prompt_asset("gen_problem.txt"),
                domain_nl_wrapped=example_domain_description(),
                target_domain_nl=fenced(nl, "markdown"),
                target_domain_template_pddl=fenced(domain_template(dom)),
                target_problem_nl=fenced(req.scenario_text, "markdown"),
                target_problem_template_pddl=fenced(problem_template(dom)),
            )
        if req.phase is Phase.INITIAL_DOMAIN:
            return fill(
                prompt_asset("gen_domain.txt"),
                target_domain_name=dom,
                target_domain_nl=fenced(nl, "markdown"),
                target_problem_pddl=fenced(req.prior_problem or ""),
                target_domain_template_pddl=fenced(domain_template(dom)),
            )
        if req.phase is Phase.REFINE:
            return fill(
                prompt_asset("gen_update.txt"),
                target_domain_name=dom,
                target_domain_nl=nl,
                target_problem_nl=req.scenario_text,
                prior_domain_pddl=(req.prior_domain or "").rstrip(),
                prior_problem_pddl=(req.prior_problem or "").rstrip(),
                feedback=req.feedback,
            )
        return fill(
            prompt_asset("gen_instantiate.txt"),
            target_domain_name=dom,
            target_domain_nl=nl,
            example_problem_pddl=(req.example_problem or "").rstrip(),
            target_problem_nl=req.scenario_text,
        )

    def _png(self, req: GenRequest) -> bytes | None:
        if not self.send_image or req.scene is None:
            return None
        if isinstance(req.scene, GridScenario):
            return render_png(req.scene, self.theme or req.scene.theme)
        if isinstance(req.scene, (bytes, bytearray)):
            return bytes(req.scene)
        with open(req.scene, "rb") as fh:
            return fh.read()

    def generate(self, req: GenRequest) -> GenResult:
        req.check()
        try:
            reply = self.client.ask(self.prompt(req), png=self._png(req))
        except TransportError as exc:
            raise GenerationError(str(exc)) from exc
        return self.read_reply(req, reply)

    def refine(self, req: GenRequest) -> GenResult:
        if req.phase is not Phase.REFINE:
            raise RequestError("refine expects a Refine request")
        return self.generate(req)

    def read_reply(self, req: GenRequest, reply: str) -> GenResult:
        res = GenResult(raw=reply)
        try:
            if req.phase is Phase.INITIAL_DOMAIN:
                res.domain_text = domain_from_reply(req.domain, reply)
            elif req.phase is Phase.REFINE:
                domains = extract_define(reply, "domain")
                problems = extract_define(reply, "problem")
                # a reply may revise only one file; the other stays as it was
                res.domain_text = domains[-1] if domains else req.prior_domain
                res.problem_text = problems[-1] if problems else req.prior_problem
                if not domains and not problems:
                    raise ReplyFormatError("reply contains no PDDL file")
                if not domains or not problems:
                    res.flags.append("reply revised only one file")
            else:
                res.problem_text = problem_from_reply(reply)
        except ReplyFormatError as exc:
            log.warning("unusable generator reply: %s", exc)
            res.parse()
            res.errors.append(str(exc))
            return res
        return res.parse()
