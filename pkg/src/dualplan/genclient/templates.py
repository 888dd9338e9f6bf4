"""Prompt templates, file skeletons and reply extraction for generators."""
from __future__ import annotations

import ast
import re
from importlib import resources

from ..pddl import PddlDomain, PddlParseError, parse_domain
from ..pddl.printer import _typed
from ..worlds.golden import golden_domain


class ReplyFormatError(ValueError):
    """The reply contains no usable PDDL or function calls."""


def prompt_asset(name: str) -> str:
    return resources.files("dualplan.assets").joinpath(f"prompts/{name}").read_text(encoding="utf-8")


def fill(template: str, **values: str) -> str:
    # the templates contain PDDL and code, so str.format is not safe here
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out


def fenced(text: str, lang: str = "pddl") -> str:
    return f"```{lang}\n{text.rstrip()}\n```"


def example_domain_description() -> str:
    """The grid example's domain description, taken from the domain-generation prompt."""
    text = prompt_asset("gen_domain.txt")
    start = text.index("Example Domain Description:\n") + len("Example Domain Description:\n")
    end = text.index("\n\nExample Problem PDDL:")
    return text[start:end]


def domain_template(domain: str) -> str:
    """Skeleton with types, action names and parameters only."""
    d = golden_domain(domain)
    lines = [f"(define (domain {d.name})", f"  (:requirements {' '.join(d.requirements)})"]
    if d.types:
        lines.append(f"  (:types {_typed(d.types)})")
    lines.append("  (:predicates)")
    for a in d.actions:
        lines += [
            "",
            f"  (:action {a.name}",
            f"    :parameters ({_typed(a.parameters)})",
            "    :precondition ()",
            "    :effect ()",
            "  )",
        ]
    lines.append(")")
    return "\n".join(lines) + "\n"


def problem_template(domain: str) -> str:
    name = golden_domain(domain).name
    return (
        f"(define (problem {name})\n    (:domain {name})\n    (:objects )\n    (:init )\n    (:goal (and ))\n)\n"
    )


# reply extraction


def _balanced(text: str, start: int) -> str | None:
    depth = 0
    i = start - 1
    while i + 1 < len(text):
        i += 1
        ch = text[i]
        if ch == ";":
            # comments run to the end of the line and may hold stray parens
            nl = text.find("\n", i)
            i = len(text) if nl < 0 else nl
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def extract_define(reply: str, kind: str) -> list[str]:
    """Every ``(define (<kind> ...`` form in the reply, in order of appearance."""
    pattern = re.compile(r"\(\s*define\s*\(\s*" + kind + r"\b", re.IGNORECASE)
    out = []
    for m in pattern.finditer(reply):
        block = _balanced(reply, m.start())
        # an unbalanced tail is kept as is so the parser reports the error
        out.append(block if block is not None else reply[m.start():].split("```")[0])
    return out


_CALL_NAMES = ("add_or_update_predicates", "modify_action")


def _code_blocks(reply: str) -> list[str]:
    blocks = re.findall(r"```[a-zA-Z]*\n(.*?)```", reply, re.DOTALL)
    return blocks or [reply]


def function_calls(reply: str) -> list[tuple[str, list]]:
    """Calls to the two editing interfaces, with literal arguments."""
    calls = []
    for block in _code_blocks(reply):
        if not any(n in block for n in _CALL_NAMES):
            continue
        try:
            tree = ast.parse(block)
        except SyntaxError as exc:
            raise ReplyFormatError(f"function-call block is not valid Python: {exc}") from exc
        for node in ast.walk(tree):
            if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _CALL_NAMES:
                try:
                    args = [ast.literal_eval(a) for a in node.args]
                except ValueError as exc:
                    raise ReplyFormatError(f"non-literal argument in {node.func.id}") from exc
                calls.append((node.func.id, args))
    return calls


def apply_function_calls(domain: str, calls: list[tuple[str, list]]) -> str:
    """Domain text obtained by applying the editing calls to the template."""
    tmpl = golden_domain(domain)
    predicates: dict[str, str] = {}
    pre: dict[str, list[str]] = {a.name: [] for a in tmpl.actions}
    eff: dict[str, list[str]] = {a.name: [] for a in tmpl.actions}
    for name, args in calls:
        if name == "add_or_update_predicates":
            if len(args) != 1 or not isinstance(args[0], (list, tuple)):
                raise ReplyFormatError("add_or_update_predicates takes one list of strings")
            for p in args[0]:
                m = re.match(r"\s*\(\s*([^\s()]+)", str(p))
                if not m:
                    raise ReplyFormatError(f"malformed predicate {p!r}")
                predicates[m.group(1).lower()] = str(p).strip()
        else:
            if len(args) != 3:
                raise ReplyFormatError("modify_action takes a name and two lists")
            action = str(args[0]).lower()
            if action not in pre:
                raise ReplyFormatError(f"modify_action names unknown action {args[0]!r}")
            pre[action] = [str(x).strip() for x in args[1]]
            eff[action] = [str(x).strip() for x in args[2]]
    lines = [f"(define (domain {tmpl.name})", f"  (:requirements {' '.join(tmpl.requirements)})"]
    if tmpl.types:
        lines.append(f"  (:types {_typed(tmpl.types)})")
    lines.append("  (:predicates " + " ".join(predicates.values()) + ")")
    for a in tmpl.actions:
        lines.append(f"  (:action {a.name}")
        lines.append(f"    :parameters ({_typed(a.parameters)})")
        lines.append(f"    :precondition (and {' '.join(pre[a.name])})")
        lines.append(f"    :effect (and {' '.join(eff[a.name])}))")
    lines.append(")")
    return "\n".join(lines) + "\n"


def domain_from_reply(domain: str, reply: str) -> str:
    """Domain text from either reply shape; raises ReplyFormatError if neither is present."""
    calls = function_calls(reply)
    if calls:
        return apply_function_calls(domain, calls)
    found = extract_define(reply, "domain")
    if found:
        return found[-1]
    raise ReplyFormatError("reply contains neither editing calls nor a domain definition")


def problem_from_reply(reply: str) -> str:
    found = extract_define(reply, "problem")
    if not found:
        raise ReplyFormatError("reply contains no problem definition")
    return found[-1]


def check_template(domain: str) -> PddlDomain:
    """The skeleton must itself parse; used by tests."""
    try:
        return parse_domain(domain_template(domain))
    except PddlParseError as exc:  # pragma: no cover - asset bug
        raise AssertionError(f"template for {domain} does not parse: {exc}") from exc
