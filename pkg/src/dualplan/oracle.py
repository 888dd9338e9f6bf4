"""Scenario oracles: describe a scene, simulate action sequences, judge goals.

:class:`GroundTruthOracle` reads the scenario symbolically (or classifies a
rendered image) and delegates to the simulator. :class:`RemoteOracle` asks a
chat model using the fixed prompt format and parses its reply strictly.

Both expose a cursor interface (``start``/``advance``) used by walk sampling:
a cursor stands for "the scene after this prefix", and ``advance`` reports the
result label of one more action.
"""
from __future__ import annotations

import io
import logging
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .render import classify, render_png
from .worlds.rules import SUCCESS, ExecutionTrace, TraceStep, goal_reached, normalize_action, run_sequence, step
from .worlds.scenario import GridScenario, normalize_domain
from .worlds.text import (
    DescriptionParseError,
    ScenarioDescription,
    TranscriptParseError,
    describe,
    parse_description,
    parse_transcript,
    simulation_prompt,
    task_description,
)

log = logging.getLogger(__name__)


class OracleError(RuntimeError):
    pass


class OracleReplyError(OracleError):
    """The remote model's reply could not be parsed after all retries."""


class ScenarioOracle:
    """Common interface. Subclasses implement :meth:`describe` and :meth:`simulate`."""

    domain: str
    variant: str = "base"

    def describe(self, scene, domain_text: str | None = None) -> ScenarioDescription:
        raise NotImplementedError

    def simulate(self, scene, actions, domain_text: str | None = None) -> ExecutionTrace:
        raise NotImplementedError

    def executable_prefix(self, scene, actions, domain_text: str | None = None) -> int:
        """Largest k such that the first k steps are all Successful."""
        return self.simulate(scene, actions, domain_text).executable_prefix()

    def goal_reached(self, scene, actions) -> bool:
        return self.simulate(scene, actions).goal_reached

    # cursor interface; the default replays the whole prefix
    def start(self, scene):
        return (scene, ())

    def advance(self, cursor, action: str) -> tuple[str, object]:
        scene, prefix = cursor
        seq = prefix + (action,)
        trace = self.simulate(scene, list(seq))
        return trace.steps[-1].result, (scene, seq)

    def cursor_goal(self, cursor) -> bool:
        scene, prefix = cursor
        if not prefix:
            raise OracleError("goal verdict needs at least one action")
        return self.simulate(scene, list(prefix)).goal_reached


def _load_image(scene) -> Image.Image:
    if isinstance(scene, Image.Image):
        return scene
    if isinstance(scene, np.ndarray):
        return Image.fromarray(scene.astype(np.uint8), mode="RGB")
    if isinstance(scene, (bytes, bytearray)):
        return Image.open(io.BytesIO(scene)).convert("RGB")
    if isinstance(scene, (str, Path)):
        return Image.open(scene).convert("RGB")
    raise OracleError(f"unsupported scene input {type(scene).__name__}")


class GroundTruthOracle(ScenarioOracle):
    """Exact oracle backed by the simulator.

    Images are accepted when ``domain`` and ``theme`` are known; they are
    mapped back to a scenario with the tile classifier.
    """

    def __init__(self, domain: str | None = None, *, theme: str | None = None, variant: str = "base"):
        self.domain = normalize_domain(domain) if domain else None
        self.theme = theme
        self.variant = variant

    def scenario(self, scene) -> GridScenario:
        if isinstance(scene, GridScenario):
            return scene
        if self.domain is None or self.theme is None:
            raise OracleError("image input needs the oracle's domain and theme")
        return classify(_load_image(scene), self.domain, self.theme, variant=self.variant)

    def describe(self, scene, domain_text: str | None = None) -> ScenarioDescription:
        return describe(self.scenario(scene))

    def simulate(self, scene, actions, domain_text: str | None = None) -> ExecutionTrace:
        return run_sequence(self.scenario(scene), actions)

    def start(self, scene) -> GridScenario:
        return self.scenario(scene)

    def advance(self, cursor: GridScenario, action: str) -> tuple[str, GridScenario]:
        out = step(cursor, action)
        return out.result, out.scenario

    def cursor_goal(self, cursor: GridScenario) -> bool:
        return goal_reached(cursor)


def _asset(name: str) -> str:
    return resources.files("dualplan.assets").joinpath(f"prompts/{name}").read_text(encoding="utf-8")


class RemoteOracle(ScenarioOracle):
    """Oracle backed by a chat model; replies are parsed strictly.

    A malformed reply is retried ``retries`` times, then :class:`OracleReplyError`
    is raised. Nothing is guessed or repaired.
    """

    def __init__(self, client, domain: str, *, variant: str = "base", theme: str | None = None, retries: int = 2):
        self.client = client
        self.domain = normalize_domain(domain)
        self.variant = variant
        self.theme = theme
        self.retries = retries
        self._cache: dict[tuple, ExecutionTrace] = {}

    def _png(self, scene) -> bytes:
        if isinstance(scene, GridScenario):
            return render_png(scene, self.theme or scene.theme)
        if isinstance(scene, (bytes, bytearray)):
            return bytes(scene)
        buf = io.BytesIO()
        _load_image(scene).save(buf, format="PNG")
        return buf.getvalue()

    def _scene_key(self, scene):
        if isinstance(scene, GridScenario):
            return ("sc", scene.cells, scene.key(), scene.variant)
        return ("img", id(scene))

    def _ask(self, prompt: str, png: bytes, parse):
        errors = []
        for attempt in range(self.retries + 1):
            reply = self.client.ask(prompt.replace("<image>", "", 1), png=png)
            try:
                return parse(reply)
            except (TranscriptParseError, DescriptionParseError, ValueError) as exc:
                errors.append(str(exc))
                log.warning("unparseable oracle reply (attempt %d): %s", attempt + 1, exc)
        raise OracleReplyError("; ".join(errors))

    def describe(self, scene, domain_text: str | None = None) -> ScenarioDescription:
        n_d = domain_text or task_description(self.domain, self.variant)
        prompt = f"{_asset('describe_header.txt').rstrip()}\n\nTask Description: {n_d}\n\n{_asset('describe_format.txt')}"

        def parse(reply: str) -> ScenarioDescription:
            start = reply.find("From the image")
            if start < 0:
                raise DescriptionParseError("reply has no description header")
            return parse_description(reply[start:].strip())

        return self._ask(prompt, self._png(scene), parse)

    def simulate(self, scene, actions, domain_text: str | None = None) -> ExecutionTrace:
        actions = [normalize_action(self.domain, a) for a in actions]
        key = (self._scene_key(scene), tuple(actions))
        if key in self._cache:
            return self._cache[key]
        prompt = simulation_prompt(self.domain, actions, self.variant)
        if domain_text:
            prompt = prompt.replace(f"Task Description: {task_description(self.domain, self.variant)}",
                                    f"Task Description: {domain_text}")

        def parse(reply: str) -> ExecutionTrace:
            _, trace = parse_transcript(reply, len(actions))
            steps = []
            for want, got in zip(actions, trace.steps):
                if normalize_action(self.domain, got.action) != want:
                    raise TranscriptParseError(f"reply step action {got.action!r} differs from {want!r}")
                steps.append(TraceStep(want, got.reasoning, got.result))
            return ExecutionTrace(tuple(steps), trace.goal_reached)

        trace = self._ask(prompt, self._png(scene), parse)
        self._cache[key] = trace
        return trace


def executable(trace: ExecutionTrace) -> bool:
    """True iff every step of the trace was Successful."""
    return all(s.result == SUCCESS for s in trace.steps)
