"""Ground fact storage and closed-world conjunctive queries.

Facts are positive ground atoms kept in insertion order (query answers are
deterministic). Predicates may be declared single-valued ("functional"): the
last argument is a value slot and the leading arguments identify the state
variable, so inserting at(robot, dishwasher) displaces at(robot, table).
Negated conditions hold when no stored fact matches (closed world).
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .terms import (
    EMPTY_SUBSTITUTION,
    Literal,
    Substitution,
    Term,
    apply_substitution,
    format_term,
    is_ground,
    unify,
)


class ConsistencyError(Exception):
    """A single-valued predicate would hold two values at once."""


class FactStore:
    def __init__(
        self,
        facts: Iterable[Term] = (),
        functional: Iterable[tuple[str, int]] = (),
    ):
        self.functional: set[tuple[str, int]] = set(functional)
        self._facts: dict[Term, None] = {}
        for fact in facts:
            self.insert(fact)

    def facts(self) -> list[Term]:
        return list(self._facts)

    def __len__(self) -> int:
        return len(self._facts)

    def __contains__(self, fact: Term) -> bool:
        return fact in self._facts

    def copy(self) -> "FactStore":
        clone = type(self).__new__(type(self))
        clone.functional = set(self.functional)
        clone._facts = dict(self._facts)
        return clone

    def _require_ground(self, fact: Term) -> None:
        if not is_ground(fact):
            raise ValueError(f"fact must be ground: {format_term(fact)}")

    def conflicting_value(self, fact: Term) -> Term | None:
        """The stored fact holding a different value of the same state variable."""
        if fact.indicator not in self.functional:
            return None
        for other in self._facts:
            if other.indicator == fact.indicator and other.args[:-1] == fact.args[:-1]:
                if other != fact:
                    return other
        return None

    def insert(self, fact: Term) -> bool:
        """Add a ground fact, displacing a conflicting value. True if changed."""
        self._require_ground(fact)
        if fact in self._facts:
            return False
        displaced = self.conflicting_value(fact)
        if displaced is not None:
            del self._facts[displaced]
        self._facts[fact] = None
        return True

    def discard(self, fact: Term) -> bool:
        if fact in self._facts:
            del self._facts[fact]
            return True
        return False

    def holds(self, lit: Literal) -> bool:
        return bool(self.solve([lit]))

    def matching(self, pattern: Term, subst: Substitution) -> list[Substitution]:
        """Unifiers of pattern against stored facts, in insertion order."""
        out = []
        for fact in self._facts:
            u = unify(pattern, fact, subst)
            if u is not None:
                out.append(u)
        return out

    def solve(
        self,
        conditions: Sequence[Literal],
        start: Substitution = EMPTY_SUBSTITUTION,
    ) -> list[Substitution]:
        """All substitutions making the conjunction true, closed world.

        Positive literals are matched in the given order against facts in
        insertion order; negated literals then filter: they hold when no fact
        unifies with the (possibly still open) atom.
        """
        answers = [start]
        for lit in conditions:
            if lit.negated:
                continue
            answers = [u for s in answers for u in self.matching(lit.atom, s)]
            if not answers:
                return []
        for lit in conditions:
            if not lit.negated:
                continue
            answers = [s for s in answers if not self.matching(lit.atom, s)]
        return answers

    def check_consistency(self) -> None:
        for fact in self._facts:
            clash = self.conflicting_value(fact)
            if clash is not None:
                raise ConsistencyError(
                    f"{format_term(fact)} and {format_term(clash)} cannot both hold"
                )


class BeliefBase(FactStore):
    """The agent's knowledge: positive ground facts under closed world.

    Asserting a negated literal retracts its positive form; asserting a
    positive literal inserts it (displacing the believed conflicting value of
    a single-valued predicate).
    """

    def assert_literal(self, lit: Literal) -> bool:
        """Apply a belief change; True when the base actually changed."""
        if not is_ground(lit.atom):
            raise ValueError(f"belief must be ground: {format_term(lit.atom)}")
        if lit.negated:
            return self.discard(lit.atom)
        return self.insert(lit.atom)

    def believed_complement(self, lit: Literal) -> Term | None:
        """For a negated condition, the believed fact it resolves to.

        not dishwasherDoor(open) resolves to the believed dishwasherDoor(closed)
        when the predicate is single-valued and another value is held.
        """
        if not lit.negated:
            return None
        return self.conflicting_value(lit.atom)


def resolve_grounded_context(beliefs: BeliefBase, context: Iterable[Literal]) -> tuple[Literal, ...]:
    """Ground context literals in their believed form.

    Negated literals whose predicate holds another value are replaced by that
    believed fact; otherwise they are kept verbatim.
    """
    out: list[Literal] = []
    for lit in context:
        if lit.negated:
            believed = beliefs.believed_complement(lit)
            if believed is not None:
                out.append(Literal(believed))
                continue
        out.append(lit)
    return tuple(out)
