"""Reader for PDDL domain and problem files.

Only the fragment used by the grid-world domains is accepted: ``:strips``,
``:typing``, negative preconditions and conjunctive goals. ADL constructs
are rejected with an error that names the construct.
"""
from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    OBJECT,
    ActionSchema,
    Atom,
    Literal,
    PddlDomain,
    PddlProblem,
    PredicateDecl,
    TypedName,
)

SUPPORTED_REQUIREMENTS = {
    ":strips",
    ":typing",
    ":negative-preconditions",
}
UNSUPPORTED_REQUIREMENTS = {
    ":adl",
    ":equality",
    ":disjunctive-preconditions",
    ":existential-preconditions",
    ":universal-preconditions",
    ":quantified-preconditions",
    ":conditional-effects",
    ":fluents",
    ":numeric-fluents",
    ":object-fluents",
    ":durative-actions",
    ":duration-inequalities",
    ":continuous-effects",
    ":derived-predicates",
    ":timed-initial-literals",
    ":preferences",
    ":constraints",
    ":action-costs",
}
ADL_KEYWORDS = {"or", "imply", "forall", "exists", "when", "=", "increase", "decrease"}


@dataclass(frozen=True)
class ParseIssue:
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


class PddlParseError(ValueError):
    def __init__(self, errors: list[ParseIssue]):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


@dataclass
class Node:
    value: str | list["Node"]
    line: int
    col: int

    @property
    def is_list(self) -> bool:
        return isinstance(self.value, list)

    def word(self) -> str:
        assert isinstance(self.value, str)
        return self.value


def _tokenize(text: str) -> list[tuple[str, int, int]]:
    tokens = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            tokens.append((ch, line, col))
            i += 1
            col += 1
            continue
        start_col = col
        j = i
        while j < n and not text[j].isspace() and text[j] not in "();":
            j += 1
        tokens.append((text[i:j].lower(), line, start_col))
        col += j - i
        i = j
    return tokens


def read_sexpr(text: str) -> Node:
    """Read exactly one top-level S-expression."""
    tokens = _tokenize(text)
    if not tokens:
        raise PddlParseError([ParseIssue(1, 1, "empty input")])
    stack: list[Node] = []
    root: Node | None = None
    for tok, line, col in tokens:
        if root is not None:
            raise PddlParseError([ParseIssue(line, col, f"unexpected token {tok!r} after end of definition")])
        if tok == "(":
            stack.append(Node([], line, col))
        elif tok == ")":
            if not stack:
                raise PddlParseError([ParseIssue(line, col, "unbalanced ')'")])
            node = stack.pop()
            if stack:
                stack[-1].value.append(node)
            else:
                root = node
        else:
            if not stack:
                raise PddlParseError([ParseIssue(line, col, f"token {tok!r} outside of any list")])
            stack[-1].value.append(Node(tok, line, col))
    if stack:
        node = stack[-1]
        raise PddlParseError([ParseIssue(node.line, node.col, "unbalanced '(': missing ')'")])
    assert root is not None
    return root


class _Builder:
    def __init__(self) -> None:
        self.errors: list[ParseIssue] = []

    def fail(self, node: Node, message: str) -> None:
        self.errors.append(ParseIssue(node.line, node.col, message))

    def expect_word(self, node: Node, what: str) -> str | None:
        if node.is_list:
            self.fail(node, f"expected {what}, got a list")
            return None
        return node.word()

    def typed_list(self, nodes: list[Node], what: str) -> tuple[TypedName, ...]:
        result: list[TypedName] = []
        pending: list[str] = []
        i = 0
        while i < len(nodes):
            node = nodes[i]
            name = self.expect_word(node, what)
            if name is None:
                i += 1
                continue
            if name == "-":
                if i + 1 >= len(nodes):
                    self.fail(node, f"missing type after '-' in {what} list")
                    break
                tnode = nodes[i + 1]
                if tnode.is_list:
                    if tnode.value and not tnode.value[0].is_list and tnode.value[0].word() == "either":
                        self.fail(tnode, "unsupported construct 'either'")
                    else:
                        self.fail(tnode, f"expected type name in {what} list")
                    i += 2
                    continue
                if not pending:
                    self.fail(node, f"type annotation without names in {what} list")
                tname = tnode.word()
                result.extend(TypedName(p, None if tname == OBJECT else tname) for p in pending)
                pending = []
                i += 2
                continue
            pending.append(name)
            i += 1
        result.extend(TypedName(p) for p in pending)
        return tuple(result)

    def atom(self, node: Node, ground: bool = False) -> Atom | None:
        if not node.is_list or not node.value:
            self.fail(node, "expected an atom '(predicate args*)'")
            return None
        head = node.value[0]
        pred = self.expect_word(head, "predicate name")
        if pred is None:
            return None
        if pred in ADL_KEYWORDS or pred in ("and", "not"):
            self.fail(head, f"unsupported construct '{pred}' (only conjunctions of literals are supported)")
            return None
        args = []
        for a in node.value[1:]:
            w = self.expect_word(a, "argument")
            if w is None:
                return None
            if ground and w.startswith("?"):
                self.fail(a, f"variable {w} not allowed in a ground atom")
            args.append(w)
        return Atom(pred, tuple(args))

    def literal(self, node: Node, ground: bool = False) -> Literal | None:
        if node.is_list and node.value and not node.value[0].is_list and node.value[0].word() == "not":
            if len(node.value) != 2:
                self.fail(node, "'not' takes exactly one atom")
                return None
            inner = self.atom(node.value[1], ground)
            return Literal(inner, False) if inner else None
        a = self.atom(node, ground)
        return Literal(a, True) if a else None

    def conjunction(self, node: Node, ground: bool = False) -> tuple[Literal, ...]:
        if not node.is_list:
            self.fail(node, "expected a condition list")
            return ()
        if not node.value:
            return ()
        head = node.value[0]
        if not head.is_list and head.word() == "and":
            parts = node.value[1:]
        else:
            parts = [node]
        out = []
        for part in parts:
            if part.is_list and part.value and not part.value[0].is_list and part.value[0].word() == "and":
                out.extend(self.conjunction(part, ground))
                continue
            lit = self.literal(part, ground)
            if lit is not None:
                out.append(lit)
        return tuple(out)

    def requirements(self, node: Node) -> tuple[str, ...]:
        flags = []
        for item in node.value[1:]:
            flag = self.expect_word(item, "requirement flag")
            if flag is None:
                continue
            if flag in UNSUPPORTED_REQUIREMENTS:
                self.fail(item, f"unsupported requirement {flag}")
            elif flag not in SUPPORTED_REQUIREMENTS:
                self.fail(item, f"unknown requirement flag {flag}")
            flags.append(flag)
        return tuple(flags)

    def header(self, root: Node, kind: str) -> tuple[str | None, list[Node]]:
        if not root.is_list or len(root.value) < 2:
            self.fail(root, "expected '(define (...) ...)'")
            return None, []
        head = root.value[0]
        if head.is_list or head.word() != "define":
            self.fail(head, "expected 'define'")
            return None, []
        name_node = root.value[1]
        if (
            not name_node.is_list
            or len(name_node.value) != 2
            or name_node.value[0].is_list
            or name_node.value[0].word() != kind
        ):
            self.fail(name_node, f"expected '({kind} NAME)'")
            return None, []
        name = self.expect_word(name_node.value[1], f"{kind} name")
        return name, root.value[2:]


def _section_key(builder: _Builder, node: Node) -> str | None:
    if not node.is_list or not node.value or node.value[0].is_list:
        builder.fail(node, "expected a section '(:keyword ...)'")
        return None
    return node.value[0].word()


def parse_domain(text: str) -> PddlDomain:
    root = read_sexpr(text)
    b = _Builder()
    name, sections = b.header(root, "domain")
    requirements: tuple[str, ...] = ()
    types: tuple[TypedName, ...] = ()
    constants: tuple[TypedName, ...] = ()
    predicates: list[PredicateDecl] = []
    actions: list[ActionSchema] = []
    for sec in sections:
        key = _section_key(b, sec)
        if key is None:
            continue
        body = sec.value[1:]
        if key == ":requirements":
            requirements = b.requirements(sec)
        elif key == ":types":
            types = b.typed_list(body, "type")
        elif key == ":constants":
            constants = b.typed_list(body, "constant")
        elif key == ":predicates":
            for p in body:
                if not p.is_list or not p.value or p.value[0].is_list:
                    b.fail(p, "expected a predicate declaration '(name ?x ...)'")
                    continue
                predicates.append(PredicateDecl(p.value[0].word(), b.typed_list(p.value[1:], "parameter")))
        elif key == ":action":
            action = _parse_action(b, sec)
            if action is not None:
                actions.append(action)
        elif key in (":functions", ":derived", ":durative-action"):
            b.fail(sec, f"unsupported section {key}")
        else:
            b.fail(sec, f"unknown domain section {key}")
    if b.errors:
        raise PddlParseError(b.errors)
    return PddlDomain(
        name=name or "",
        requirements=requirements,
        types=types,
        constants=constants,
        predicates=tuple(predicates),
        actions=tuple(actions),
    )


def _parse_action(b: _Builder, sec: Node) -> ActionSchema | None:
    items = sec.value[1:]
    if not items or items[0].is_list:
        b.fail(sec, "expected action name")
        return None
    name = items[0].word()
    params: tuple[TypedName, ...] = ()
    pre: tuple[Literal, ...] = ()
    eff: tuple[Literal, ...] = ()
    i = 1
    while i < len(items):
        key_node = items[i]
        key = b.expect_word(key_node, "action keyword")
        if key is None:
            i += 1
            continue
        if i + 1 >= len(items):
            b.fail(key_node, f"missing value for {key}")
            break
        val = items[i + 1]
        if key == ":parameters":
            if not val.is_list:
                b.fail(val, "expected parameter list")
            else:
                params = b.typed_list(val.value, "parameter")
        elif key == ":precondition":
            pre = b.conjunction(val)
        elif key == ":effect":
            eff = b.conjunction(val)
        else:
            b.fail(key_node, f"unknown action keyword {key}")
        i += 2
    return ActionSchema(name, params, pre, eff)


def parse_problem(text: str) -> PddlProblem:
    root = read_sexpr(text)
    b = _Builder()
    name, sections = b.header(root, "problem")
    domain_name = ""
    objects: tuple[TypedName, ...] = ()
    init: list[Atom] = []
    goal: tuple[Literal, ...] = ()
    for sec in sections:
        key = _section_key(b, sec)
        if key is None:
            continue
        body = sec.value[1:]
        if key == ":domain":
            if len(body) != 1:
                b.fail(sec, "expected '(:domain NAME)'")
            else:
                domain_name = b.expect_word(body[0], "domain name") or ""
        elif key == ":objects":
            objects = b.typed_list(body, "object")
        elif key == ":init":
            for item in body:
                if item.is_list and item.value and not item.value[0].is_list and item.value[0].word() == "not":
                    b.fail(item, "negative literals are not allowed in :init")
                    continue
                a = b.atom(item, ground=True)
                if a is not None:
                    init.append(a)
        elif key == ":goal":
            if len(body) != 1:
                b.fail(sec, "expected exactly one goal condition")
            else:
                goal = b.conjunction(body[0], ground=True)
        elif key == ":requirements":
            b.requirements(sec)
        elif key == ":metric":
            b.fail(sec, "unsupported section :metric")
        else:
            b.fail(sec, f"unknown problem section {key}")
    if b.errors:
        raise PddlParseError(b.errors)
    _check_problem_invariants(objects, init, goal, root)
    return PddlProblem(name or "", domain_name, objects, tuple(init), goal)


def _check_problem_invariants(objects, init, goal, root: Node) -> None:
    errors = []
    names = [o.name for o in objects]
    seen: set[str] = set()
    for n in names:
        if n in seen:
            errors.append(ParseIssue(root.line, root.col, f"duplicate object {n}"))
        seen.add(n)
    for atom in init:
        for arg in atom.args:
            if arg not in seen:
                errors.append(ParseIssue(root.line, root.col, f"init atom {atom} references undeclared object {arg}"))
    if errors:
        raise PddlParseError(errors)
