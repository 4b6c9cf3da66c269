import random

import pytest
from hypothesis import given, settings, strategies as st

from whybdi.parser import parse_term
from whybdi.terms import (
    Literal,
    Substitution,
    Term,
    Var,
    apply_substitution,
    format_term,
    is_ground,
    unify,
    variables_of,
)


def t(text):
    return parse_term(text)


class TestUnify:
    def test_single_binding(self):
        subst = unify(t("storeCup(C)"), t("storeCup(cup1)"))
        assert subst is not None
        assert subst.bindings == {"C": t("cup1")}

    def test_clash_on_repeated_variable(self):
        assert unify(t("p(X, X)"), t("p(a, b)")) is None

    def test_occurs_check(self):
        assert unify(t("p(X)"), t("p(f(X))")) is None

    def test_functor_mismatch(self):
        assert unify(t("p(a)"), t("q(a)")) is None
        assert unify(t("p(a)"), t("p(a, b)")) is None

    def test_extends_start(self):
        start = unify(t("f(X)"), t("f(a)"))
        extended = unify(t("g(Y)"), t("g(b)"), start)
        assert apply_substitution(extended, t("pair(X, Y)")) == t("pair(a, b)")

    def test_start_conflict_fails(self):
        start = unify(t("f(X)"), t("f(a)"))
        assert unify(t("g(X)"), t("g(b)"), start) is None


class TestSubstitution:
    def test_identity_on_empty(self):
        term = t("pickUp(C)")
        assert apply_substitution(Substitution(), term) == term

    def test_apply_replaces_bound_preserves_unbound(self):
        subst = Substitution({"C": t("cup1")})
        assert apply_substitution(subst, t("pickUp(C)")) == t("pickUp(cup1)")
        assert apply_substitution(subst, t("pickUp(D)")) == t("pickUp(D)")

    def test_normalization_reaches_fixpoint(self):
        # oracle: repeated application until nothing changes
        subst = Substitution({"X": t("f(Y)"), "Y": t("a")})
        once = apply_substitution(subst, t("p(X)"))
        again = apply_substitution(subst, once)
        assert once == t("p(f(a))")
        assert again == once

    def test_constructor_rejects_occurs_violation(self):
        with pytest.raises(ValueError):
            Substitution({"X": t("f(X)")})

    def test_idempotent_after_normalization(self):
        rng = random.Random(7)
        for _ in range(200):
            subst = _random_substitution(rng)
            term = _random_term(rng, list(subst.bindings) + ["Z"])
            once = apply_substitution(subst, term)
            assert apply_substitution(subst, once) == once


class TestLiteral:
    def test_complement_involution(self):
        lit = Literal(t("dishwasherDoor(open)"))
        assert lit.complement().complement() == lit

    def test_complement_flips_sign_only(self):
        lit = Literal(t("holding(none)"), negated=True)
        assert lit.complement() == Literal(t("holding(none)"), negated=False)


# ---------------------------------------------------------------------------
# Random term machinery shared with the property tests

_FUNCTORS = ["f", "g", "h"]
_CONSTANTS = ["a", "b", "c"]


def _random_term(rng, var_names, depth=0):
    roll = rng.random()
    if roll < 0.3 and var_names:
        return Var(rng.choice(var_names))
    if roll < 0.6 or depth >= 2:
        return Term(rng.choice(_CONSTANTS))
    arity = rng.randint(1, 2)
    return Term(
        rng.choice(_FUNCTORS),
        tuple(_random_term(rng, var_names, depth + 1) for _ in range(arity)),
    )


def _random_substitution(rng):
    names = ["X", "Y"]
    bindings = {}
    for name in names:
        if rng.random() < 0.8:
            others = [n for n in names if n != name]
            candidate = _random_term(rng, others)
            try:
                probe = Substitution({**bindings, name: candidate})
            except ValueError:
                continue
            bindings[name] = candidate
    return Substitution(bindings)


def random_term_pair(rng):
    var_names = ["X", "Y", "Z"]
    return _random_term(rng, var_names), _random_term(rng, var_names)


terms_st = st.deferred(
    lambda: st.one_of(
        st.sampled_from([Term(c) for c in _CONSTANTS]),
        st.sampled_from([Var(v) for v in ("X", "Y", "Z")]),
        st.builds(
            lambda f, args: Term(f, tuple(args)),
            st.sampled_from(_FUNCTORS),
            st.lists(terms_st, min_size=1, max_size=2),
        ),
    )
)


@given(terms_st, terms_st)
@settings(max_examples=300)
def test_unification_soundness(a, b):
    subst = unify(a, b)
    if subst is not None:
        assert apply_substitution(subst, a) == apply_substitution(subst, b)


def _matches(pattern, target, bindings):
    """One-way matcher used to check that another unifier factors through ours."""
    if isinstance(pattern, Var):
        if pattern.name in bindings:
            return bindings[pattern.name] == target
        bindings[pattern.name] = target
        return True
    if isinstance(target, Var):
        return False
    if pattern.functor != target.functor or len(pattern.args) != len(target.args):
        return False
    return all(_matches(p, q, bindings) for p, q in zip(pattern.args, target.args))


def _enumerate_substitutions(var_names):
    """Brute force: all substitutions over the given variables with depth <= 2 terms."""
    values = [Term(c) for c in _CONSTANTS]
    values += [Term("f", (Term(c),)) for c in _CONSTANTS]
    values += [None]  # leave unbound
    if not var_names:
        yield Substitution()
        return
    first, rest = var_names[0], var_names[1:]
    for tail in _enumerate_substitutions(rest):
        for value in values:
            if value is None:
                yield tail
            else:
                try:
                    yield Substitution({**tail.bindings, first: value})
                except ValueError:
                    continue


def test_unifier_is_most_general_on_small_instances():
    rng = random.Random(11)
    checked = 0
    for _ in range(150):
        a, b = random_term_pair(rng)
        subst = unify(a, b)
        if subst is None:
            continue
        names = sorted({v.name for v in variables_of(a) + variables_of(b)})
        for candidate in _enumerate_substitutions(names):
            if apply_substitution(candidate, a) != apply_substitution(candidate, b):
                continue
            # candidate must factor through the mgu
            bindings = {}
            ok = all(
                _matches(
                    apply_substitution(subst, Var(n)),
                    apply_substitution(candidate, Var(n)),
                    bindings,
                )
                for n in names
            )
            assert ok, (
                f"unifier of {format_term(a)} ~ {format_term(b)} not most general: "
                f"{candidate} does not factor through {subst}"
            )
            checked += 1
    assert checked > 50


def test_is_ground_and_variables():
    assert is_ground(t("at(cup1, table)"))
    assert not is_ground(t("at(C, table)"))
    assert [v.name for v in variables_of(t("p(X, f(Y, X))"))] == ["X", "Y"]
