"""Parser and printer for the plan DSL.

The concrete syntax follows AgentSpeak conventions:

    // comment
    +!storeCup(C) : used(C) <-
        !openDishwasherIfNeed;
        navigateTo(table);
        pickUp(C).

    action pickUp(X) {
        pre: at(robot, L), at(X, L), holding(none);
        add: holding(X);
        del: at(X, L), holding(none);
    }

See docs/grammar.md for the full grammar. pretty_print produces canonical
text that re-parses to an equal PlanLibrary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .terms import (
    BELIEF_ADD,
    BELIEF_DEL,
    GOAL_ADD,
    Literal,
    Term,
    TermLike,
    TriggerEvent,
    Var,
    format_literal,
    format_term,
    variables_of,
)


class ParseError(Exception):
    """Syntax or validation error with source position and expected tokens."""

    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = expected
        where = f"line {line}, col {col}: {message}"
        if expected:
            where += " (expected " + " or ".join(expected) + ")"
        super().__init__(where)


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class ActionStep:
    term: Term


@dataclass(frozen=True)
class SubGoalStep:
    term: Term


Step = ActionStep | SubGoalStep


@dataclass(frozen=True)
class PlanTemplate:
    name: str
    trigger: TriggerEvent
    context: tuple[Literal, ...]
    body: tuple[Step, ...]

    def __post_init__(self) -> None:
        if not self.body:
            raise ValueError(f"plan {self.name}: body must be nonempty")

    def body_actions(self) -> list[Term]:
        return [s.term for s in self.body if isinstance(s, ActionStep)]


@dataclass(frozen=True)
class ActionSchema:
    head: Term
    preconditions: tuple[Literal, ...] = ()
    add_effects: tuple[Literal, ...] = ()
    del_effects: tuple[Literal, ...] = ()


@dataclass
class PlanLibrary:
    plans: tuple[PlanTemplate, ...] = ()
    actions: dict[tuple[str, int], ActionSchema] = field(default_factory=dict)

    def schema_for(self, action: Term) -> ActionSchema | None:
        return self.actions.get(action.indicator)


# ---------------------------------------------------------------------------
# Tokenizer

_PUNCT = {
    "(": "(", ")": ")", "{": "{", "}": "}",
    ",": ",", ";": ";", ".": ".", ":": ":", "&": "&", "!": "!",
    "+": "+", "-": "-",
}


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, VAR, one of the punctuation kinds, ARROW, EOF
    value: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source.startswith("<-", i):
            tokens.append(Token("ARROW", "<-", line, col))
            i += 2
            col += 2
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = "VAR" if word[0].isupper() or word[0] == "_" else "IDENT"
            tokens.append(Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        if ch in _PUNCT:
            tokens.append(Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser

class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            found = tok.value or "end of input"
            raise ParseError(
                f"found {found!r}", tok.line, tok.col, expected=(what or repr(kind),)
            )
        return self.advance()

    def at(self, kind: str, value: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    # -- terms and literals ------------------------------------------------

    def parse_term(self) -> TermLike:
        tok = self.peek()
        if tok.kind == "VAR":
            self.advance()
            return Var(tok.value)
        if tok.kind != "IDENT":
            found = tok.value or "end of input"
            raise ParseError(
                f"found {found!r}", tok.line, tok.col, expected=("identifier", "variable")
            )
        self.advance()
        if not self.at("("):
            return Term(tok.value)
        self.advance()
        args = [self.parse_term()]
        while True:
            nxt = self.peek()
            if nxt.kind == ",":
                self.advance()
                args.append(self.parse_term())
            elif nxt.kind == ")":
                self.advance()
                return Term(tok.value, tuple(args))
            else:
                found = nxt.value or "end of input"
                raise ParseError(f"found {found!r}", nxt.line, nxt.col, expected=("','", "')'"))

    def parse_atom(self, what: str) -> Term:
        tok = self.peek()
        t = self.parse_term()
        if isinstance(t, Var):
            raise ParseError(f"{what} cannot be a bare variable", tok.line, tok.col)
        return t

    def parse_literal(self) -> Literal:
        if self.at("IDENT", "not"):
            self.advance()
            return Literal(self.parse_atom("a condition"), negated=True)
        return Literal(self.parse_atom("a condition"))

    # -- plans ---------------------------------------------------------------

    def parse_trigger(self) -> TriggerEvent:
        tok = self.peek()
        if tok.kind == "+":
            self.advance()
            if self.at("!"):
                self.advance()
                return TriggerEvent(GOAL_ADD, self.parse_atom("a trigger"))
            return TriggerEvent(BELIEF_ADD, self.parse_atom("a trigger"))
        if tok.kind == "-":
            self.advance()
            return TriggerEvent(BELIEF_DEL, self.parse_atom("a trigger"))
        found = tok.value or "end of input"
        raise ParseError(f"found {found!r}", tok.line, tok.col, expected=("'+'", "'-'", "'action'"))

    def parse_plan(self) -> tuple[TriggerEvent, tuple[Literal, ...], tuple[Step, ...]]:
        start = self.peek()
        trigger = self.parse_trigger()
        context: list[Literal] = []
        if self.at(":"):
            self.advance()
            context.append(self.parse_literal())
            while self.at("&"):
                self.advance()
                context.append(self.parse_literal())
        self.expect("ARROW", "'<-'")
        body: list[Step] = [self.parse_step()]
        while self.at(";"):
            self.advance()
            body.append(self.parse_step())
        self.expect(".", "'.'")
        self._check_plan_bindings(trigger, context, body, start)
        return trigger, tuple(context), tuple(body)

    def parse_step(self) -> Step:
        if self.at("!"):
            self.advance()
            return SubGoalStep(self.parse_atom("a sub-goal"))
        return ActionStep(self.parse_atom("an action"))

    def _check_plan_bindings(self, trigger, context, body, start: Token) -> None:
        bound = {v.name for v in variables_of(trigger.payload)}
        for lit in context:
            if not lit.negated:
                bound.update(v.name for v in variables_of(lit.atom))
        for lit in context:
            if lit.negated:
                free = [v.name for v in variables_of(lit.atom) if v.name not in bound]
                if free:
                    raise ParseError(
                        f"unbound context variable {free[0]} in negated condition"
                        f" {format_literal(lit)}",
                        start.line, start.col,
                    )
        for step in body:
            free = [v.name for v in variables_of(step.term) if v.name not in bound]
            if free:
                raise ParseError(
                    f"unbound body variable {free[0]} in {format_term(step.term)}",
                    start.line, start.col,
                )

    # -- action schemas --------------------------------------------------------

    def parse_action_schema(self) -> ActionSchema:
        self.expect("IDENT")  # 'action'
        start = self.peek()
        head = self.parse_atom("an action head")
        self.expect("{", "'{'")
        sections: dict[str, tuple[Literal, ...]] = {}
        while not self.at("}"):
            tok = self.expect("IDENT", "'pre', 'add' or 'del'")
            if tok.value not in ("pre", "add", "del"):
                raise ParseError(
                    f"found {tok.value!r}", tok.line, tok.col,
                    expected=("'pre'", "'add'", "'del'"),
                )
            if tok.value in sections:
                raise ParseError(f"duplicate section {tok.value!r}", tok.line, tok.col)
            self.expect(":", "':'")
            lits = [self.parse_literal()]
            while self.at(","):
                self.advance()
                lits.append(self.parse_literal())
            self.expect(";", "';'")
            if tok.value in ("add", "del"):
                for lit in lits:
                    if lit.negated:
                        raise ParseError(
                            f"negated literal {format_literal(lit)} in effect section",
                            tok.line, tok.col,
                        )
            sections[tok.value] = tuple(lits)
        self.expect("}", "'}'")
        schema = ActionSchema(
            head=head,
            preconditions=sections.get("pre", ()),
            add_effects=sections.get("add", ()),
            del_effects=sections.get("del", ()),
        )
        self._check_schema_bindings(schema, start)
        return schema

    def _check_schema_bindings(self, schema: ActionSchema, start: Token) -> None:
        bound = {v.name for v in variables_of(schema.head)}
        for lit in schema.preconditions:
            bound.update(v.name for v in variables_of(lit.atom))
        for lit in schema.add_effects + schema.del_effects:
            free = [v.name for v in variables_of(lit.atom) if v.name not in bound]
            if free:
                raise ParseError(
                    f"unbound effect variable {free[0]} in {format_literal(lit)}"
                    f" of action {format_term(schema.head)}",
                    start.line, start.col,
                )
        overlap = set(schema.add_effects) & set(schema.del_effects)
        if overlap:
            lit = sorted(overlap, key=str)[0]
            raise ParseError(
                f"literal {format_literal(lit)} appears in both add and del"
                f" of action {format_term(schema.head)}",
                start.line, start.col,
            )

    # -- library -----------------------------------------------------------------

    def parse_library(self) -> PlanLibrary:
        raw_plans: list[tuple[TriggerEvent, tuple[Literal, ...], tuple[Step, ...]]] = []
        actions: dict[tuple[str, int], ActionSchema] = {}
        while not self.at("EOF"):
            if self.at("IDENT", "action"):
                tok = self.peek()
                schema = self.parse_action_schema()
                if schema.head.indicator in actions:
                    raise ParseError(
                        f"duplicate action schema {format_term(schema.head)}",
                        tok.line, tok.col,
                    )
                actions[schema.head.indicator] = schema
            else:
                raw_plans.append(self.parse_plan())
        plans = []
        name_counts: dict[str, int] = {}
        for trigger, context, body in raw_plans:
            base = trigger.payload.functor
            name_counts[base] = name_counts.get(base, 0) + 1
            name = base if name_counts[base] == 1 else f"{base}{name_counts[base]}"
            plans.append(PlanTemplate(name, trigger, context, body))
        return PlanLibrary(tuple(plans), actions)


def parse_plan_library(source: str) -> PlanLibrary:
    """Parse DSL text into a PlanLibrary; raises ParseError with position info."""
    return _Parser(tokenize(source)).parse_library()


def parse_term(text: str) -> TermLike:
    """Parse a single term, e.g. 'storeCup(cup1)'."""
    parser = _Parser(tokenize(text))
    t = parser.parse_term()
    parser.expect("EOF", "end of input")
    return t


def parse_ground_term(text: str) -> Term:
    t = parse_term(text)
    if not isinstance(t, Term) or variables_of(t):
        raise ParseError(f"expected a ground term, got {format_term(t)}", 1, 1)
    return t


def parse_literal(text: str) -> Literal:
    parser = _Parser(tokenize(text))
    lit = parser.parse_literal()
    parser.expect("EOF", "end of input")
    return lit


# ---------------------------------------------------------------------------
# Pretty printer

def _format_step(step: Step) -> str:
    if isinstance(step, SubGoalStep):
        return "!" + format_term(step.term)
    return format_term(step.term)


def format_plan(plan: PlanTemplate) -> str:
    header = str(plan.trigger)
    if plan.context:
        header += " : " + " & ".join(format_literal(l) for l in plan.context)
    lines = [header + " <-"]
    for i, step in enumerate(plan.body):
        terminator = "." if i == len(plan.body) - 1 else ";"
        lines.append(f"    {_format_step(step)}{terminator}")
    return "\n".join(lines)


def format_schema(schema: ActionSchema) -> str:
    lines = [f"action {format_term(schema.head)} {{"]
    for label, lits in (
        ("pre", schema.preconditions),
        ("add", schema.add_effects),
        ("del", schema.del_effects),
    ):
        if lits:
            lines.append(f"    {label}: " + ", ".join(format_literal(l) for l in lits) + ";")
    lines.append("}")
    return "\n".join(lines)


def pretty_print(library: PlanLibrary) -> str:
    """Canonical text form; parse(pretty_print(lib)) == lib."""
    blocks = [format_plan(p) for p in library.plans]
    blocks.extend(format_schema(s) for s in library.actions.values())
    return "\n\n".join(blocks) + ("\n" if blocks else "")
