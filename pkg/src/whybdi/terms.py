"""First-order terms, literals, substitutions and unification.

Variables are capitalized identifiers, constants and functors lowercase
(AgentSpeak convention). All values here are immutable and shareable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Term:
    functor: str
    args: tuple["TermLike", ...] = ()

    def __post_init__(self) -> None:
        if not self.functor:
            raise ValueError("term functor must be a nonempty identifier")

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def indicator(self) -> tuple[str, int]:
        """functor/arity key, e.g. ('at', 2)."""
        return (self.functor, len(self.args))

    def __str__(self) -> str:
        return format_term(self)


TermLike = Union[Term, Var]


@dataclass(frozen=True)
class Literal:
    """An atom with optional classical negation."""

    atom: Term
    negated: bool = False

    def complement(self) -> "Literal":
        return Literal(self.atom, not self.negated)

    def __str__(self) -> str:
        return format_literal(self)


# Trigger event kinds: belief addition, belief removal, goal addition.
BELIEF_ADD = "+"
BELIEF_DEL = "-"
GOAL_ADD = "+!"

TRIGGER_KINDS = (BELIEF_ADD, BELIEF_DEL, GOAL_ADD)


@dataclass(frozen=True)
class TriggerEvent:
    kind: str
    payload: Term

    def __post_init__(self) -> None:
        if self.kind not in TRIGGER_KINDS:
            raise ValueError(f"unknown trigger kind {self.kind!r}")

    def __str__(self) -> str:
        return self.kind + format_term(self.payload)


def iter_variables(t: TermLike) -> Iterator[Var]:
    """Yield variables of t left to right (with repeats)."""
    if isinstance(t, Var):
        yield t
    else:
        for a in t.args:
            yield from iter_variables(a)


def variables_of(t: TermLike) -> list[Var]:
    """Distinct variables of t in first-occurrence order."""
    seen: dict[Var, None] = {}
    for v in iter_variables(t):
        seen.setdefault(v)
    return list(seen)


def is_ground(t: TermLike) -> bool:
    return next(iter_variables(t), None) is None


def format_term(t: TermLike, compact: bool = False) -> str:
    """Render a term; compact form omits the space after argument commas."""
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return t.functor
    sep = "," if compact else ", "
    return t.functor + "(" + sep.join(format_term(a, compact) for a in t.args) + ")"


def format_literal(lit: Literal, compact: bool = False) -> str:
    text = format_term(lit.atom, compact)
    return "not " + text if lit.negated else text


def _contains(t: TermLike, v: Var, bindings: Mapping[str, TermLike]) -> bool:
    t = _walk(t, bindings)
    if isinstance(t, Var):
        return t == v
    return any(_contains(a, v, bindings) for a in t.args)


def _walk(t: TermLike, bindings: Mapping[str, TermLike]) -> TermLike:
    while isinstance(t, Var) and t.name in bindings:
        t = bindings[t.name]
    return t


def _deep_apply(t: TermLike, bindings: Mapping[str, TermLike]) -> TermLike:
    t = _walk(t, bindings)
    if isinstance(t, Var):
        return t
    if not t.args:
        return t
    return Term(t.functor, tuple(_deep_apply(a, bindings) for a in t.args))


@dataclass(frozen=True)
class Substitution:
    """An idempotent variable binding map.

    Normalized on construction: bound terms contain no bound variables, so a
    single application reaches the fixpoint. Construction rejects bindings
    that fail the occurs check.
    """

    bindings: Mapping[str, TermLike] = field(default_factory=dict)

    def __post_init__(self) -> None:
        raw = dict(self.bindings)
        for name, value in raw.items():
            if _contains(value, Var(name), raw):
                raise ValueError(f"occurs check: {name} is bound to a term containing it")
        normalized = {}
        for name, value in raw.items():
            resolved = _deep_apply(value, raw)
            if resolved != Var(name):
                normalized[name] = resolved
        object.__setattr__(self, "bindings", normalized)

    def get(self, v: Var) -> TermLike | None:
        return self.bindings.get(v.name)

    def extended(self, extra: Mapping[str, TermLike]) -> "Substitution":
        merged = dict(self.bindings)
        merged.update(extra)
        return Substitution(merged)

    def __bool__(self) -> bool:
        return bool(self.bindings)

    def __str__(self) -> str:
        items = ", ".join(f"{k} -> {format_term(v)}" for k, v in sorted(self.bindings.items()))
        return "{" + items + "}"


EMPTY_SUBSTITUTION = Substitution()


def apply_substitution(subst: Substitution, t: TermLike) -> TermLike:
    """Replace every bound variable in t; unbound variables are preserved."""
    return _deep_apply(t, subst.bindings)


def apply_to_literal(subst: Substitution, lit: Literal) -> Literal:
    atom = apply_substitution(subst, lit.atom)
    assert isinstance(atom, Term)
    return Literal(atom, lit.negated)


def unify(a: TermLike, b: TermLike, start: Substitution | None = None) -> Substitution | None:
    """Most general unifier of a and b extending start, or None.

    Robinson's algorithm with occurs check; failure is a value, not an error.
    """
    bindings: dict[str, TermLike] = dict(start.bindings) if start else {}
    stack: list[tuple[TermLike, TermLike]] = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = _walk(x, bindings)
        y = _walk(y, bindings)
        if x == y:
            continue
        if isinstance(x, Var):
            if _contains(y, x, bindings):
                return None
            bindings[x.name] = y
        elif isinstance(y, Var):
            if _contains(x, y, bindings):
                return None
            bindings[y.name] = x
        elif x.functor == y.functor and len(x.args) == len(y.args):
            stack.extend(zip(x.args, y.args))
        else:
            return None
    return Substitution(bindings)


def rename_apart(t: TermLike, suffix: str) -> TermLike:
    """Rename every variable in t by appending suffix (fresh per adoption)."""
    if isinstance(t, Var):
        return Var(t.name + suffix)
    if not t.args:
        return t
    return Term(t.functor, tuple(rename_apart(a, suffix) for a in t.args))
