"""Generators that write and refine PDDL file pairs."""
from __future__ import annotations

from .defects import DEFECTS, DefectNotApplicable, Injection, applicable_defects, canonical, inject, matches
from .remote import RemoteGenerator
from .requests import GenerationError, GenRequest, GenResult, Phase, RequestError
from .scripted import FaultInjectingGenerator, GoldenGenerator
from .templates import ReplyFormatError, domain_template, problem_template


def _flag(value: str) -> bool:
    return value.strip().lower() in ("1", "true", "yes", "on")


def make_generator(spec: str, client=None, *, seed: int = 0):
    """Build a generator from a short spec string.

    ``golden``, ``scripted`` (a fault injector with a seeded defect),
    ``scripted:fault=<id>,repair=false,syntax=true`` and ``remote``.
    """
    kind, _, rest = spec.partition(":")
    opts = dict(part.split("=", 1) for part in rest.split(",") if "=" in part)
    kind = kind.strip().lower()
    if kind == "golden":
        return GoldenGenerator()
    if kind in ("scripted", "fault"):
        return FaultInjectingGenerator(
            opts.get("fault") or None,
            seed=int(opts.get("seed", seed)),
            repair=_flag(opts.get("repair", "true")),
            syntax_faults=_flag(opts.get("syntax", "false")),
        )
    if kind == "remote":
        if client is None:
            raise ValueError("the remote generator needs a chat client")
        return RemoteGenerator(client, send_image=_flag(opts.get("image", "false")))
    raise ValueError(f"unknown generator {spec!r}; expected golden, scripted[:fault=<id>] or remote")


__all__ = [
    "DEFECTS", "DefectNotApplicable", "FaultInjectingGenerator", "GenRequest", "GenResult", "GenerationError",
    "GoldenGenerator", "Injection", "Phase", "RemoteGenerator", "ReplyFormatError", "RequestError",
    "applicable_defects", "canonical", "domain_template", "inject", "make_generator", "matches", "problem_template",
]
