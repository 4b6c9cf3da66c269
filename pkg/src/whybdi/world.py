"""Kitchen world state, action execution and scenario loading.

Actions change the world atomically through their schema: preconditions are
checked under closed world (free precondition variables are existential and
bound by the first belief answer), del effects are removed, then add effects
inserted. Scenario files bundle initial facts, user orders, predicate tags
and references to a plan file and a phrase lexicon; see docs/formats.md.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .beliefs import FactStore
from .parser import (
    ActionSchema,
    ParseError,
    PlanLibrary,
    parse_ground_term,
    parse_literal,
    parse_plan_library,
)
from .terms import (
    EMPTY_SUBSTITUTION,
    Literal,
    Substitution,
    Term,
    apply_substitution,
    apply_to_literal,
    format_term,
    is_ground,
    unify,
)

GROUP_TAGS = ("env", "obj", "robot", "user")


class ScenarioError(Exception):
    """A scenario file is missing, malformed or inconsistent."""


class UnknownActionError(Exception):
    def __init__(self, action: Term):
        self.action = action
        super().__init__(f"no action schema for {format_term(action)}")


class PreconditionError(Exception):
    def __init__(self, action: Term, violated: list[Literal]):
        self.action = action
        self.violated = violated
        failed = ", ".join(str(l) for l in violated)
        super().__init__(f"{format_term(action)}: unsatisfied preconditions {failed}")


class WorldState(FactStore):
    """Ground facts plus a group tag (env/obj/robot/user) per predicate."""

    def __init__(
        self,
        facts: Iterable[Term] = (),
        functional: Iterable[tuple[str, int]] = (),
        group_tags: Mapping[str, str] | None = None,
    ):
        super().__init__(facts=facts, functional=functional)
        self.group_tags: dict[str, str] = dict(group_tags or {})

    def copy(self) -> "WorldState":
        clone = super().copy()
        clone.group_tags = dict(self.group_tags)
        return clone


def _grounded_schema(
    world: FactStore, action: Term, schemas: Mapping[tuple[str, int], ActionSchema]
) -> tuple[ActionSchema, Substitution] | list[Literal]:
    """Bind the schema against the action term and the world.

    Returns (schema, bindings) on success; otherwise the violated
    precondition literals (the first conjunct at which matching dies).
    """
    schema = schemas.get(action.indicator)
    if schema is None:
        raise UnknownActionError(action)
    head_subst = unify(schema.head, action)
    if head_subst is None:
        raise UnknownActionError(action)
    answers = [head_subst]
    # evaluate conjuncts incrementally so the first failing one is reported
    for lit in schema.preconditions:
        grounded = apply_to_literal(answers[0], lit)
        next_answers = []
        for s in answers:
            if lit.negated:
                if not world.matching(lit.atom, s):
                    next_answers.append(s)
            else:
                next_answers.extend(world.matching(lit.atom, s))
        if not next_answers:
            return [grounded]
        answers = next_answers
    return schema, answers[0]


def check_preconditions(
    world: FactStore, action: Term, schemas: Mapping[tuple[str, int], ActionSchema]
) -> list[Literal]:
    """Empty list when every grounded precondition holds; else the violated ones."""
    if not is_ground(action):
        raise ValueError(f"action must be ground: {format_term(action)}")
    result = _grounded_schema(world, action, schemas)
    if isinstance(result, list):
        return result
    return []


def grounded_effects(
    action: Term,
    schemas: Mapping[tuple[str, int], ActionSchema],
    head_only: bool = True,
) -> tuple[tuple[Literal, ...], tuple[Literal, ...]]:
    """(add, del) effect literals grounded as far as the action term allows.

    Precondition-bound effect variables stay open with head_only; the
    explanation scan uses this static view since future world states are
    unknown when the explanation is built.
    """
    schema = schemas.get(action.indicator)
    if schema is None:
        raise UnknownActionError(action)
    subst = unify(schema.head, action)
    if subst is None:
        raise UnknownActionError(action)
    add = tuple(apply_to_literal(subst, l) for l in schema.add_effects)
    dele = tuple(apply_to_literal(subst, l) for l in schema.del_effects)
    return add, dele


def apply_effects(
    world: WorldState, action: Term, schemas: Mapping[tuple[str, int], ActionSchema]
) -> WorldState:
    """New world after the action: del effects removed, add effects inserted.

    Raises PreconditionError when the action is not applicable (misuse guard).
    """
    result = _grounded_schema(world, action, schemas)
    if isinstance(result, list):
        raise PreconditionError(action, result)
    schema, subst = result
    after = world.copy()
    for lit in schema.del_effects:
        after.discard(apply_substitution(subst, lit.atom))
    for lit in schema.add_effects:
        after.insert(apply_substitution(subst, lit.atom))
    after.check_consistency()
    return after


def effect_delta(
    world: WorldState, action: Term, schemas: Mapping[tuple[str, int], ActionSchema]
) -> tuple[list[Term], list[Term]]:
    """(added, removed) ground facts the action would produce on this world."""
    result = _grounded_schema(world, action, schemas)
    if isinstance(result, list):
        raise PreconditionError(action, result)
    schema, subst = result
    removed = [apply_substitution(subst, l.atom) for l in schema.del_effects]
    added = [apply_substitution(subst, l.atom) for l in schema.add_effects]
    return added, removed


# ---------------------------------------------------------------------------
# Scenario files

@dataclass
class ExpectationInit:
    """How to seed the expected-successor model (see explain.init_expectations)."""

    strategy: str = "empty"  # empty | cooccur | tasklinked
    task_links: dict[str, list[Term]] = field(default_factory=dict)
    theta: int = 2


@dataclass
class ScenarioSpec:
    name: str
    initial_facts: list[Term]
    plan_path: Path
    lexicon_path: Path
    orders: list[Term]
    group_tags: dict[str, str]
    functional: set[tuple[str, int]]
    expectations: ExpectationInit


def parse_scenario(path: str | Path) -> ScenarioSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc

    plans_ref: str | None = None
    lexicon_ref: str | None = None
    facts: list[Term] = []
    orders: list[Term] = []
    tags: dict[str, str] = {}
    functional: set[tuple[str, int]] = set()
    expectations = ExpectationInit()
    section = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        def err(msg: str) -> ScenarioError:
            return ScenarioError(f"{path.name}:{lineno}: {msg}")

        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in ("facts", "orders", "tags", "functional", "expectations"):
                raise err(f"unknown section [{section}]")
            continue
        if section is None:
            if "=" not in line:
                raise err("expected 'plans = <file>' or 'lexicon = <file>'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key == "plans":
                plans_ref = value
            elif key == "lexicon":
                lexicon_ref = value
            else:
                raise err(f"unknown setting {key!r}")
            continue
        try:
            if section == "facts":
                facts.append(parse_ground_term(line))
            elif section == "orders":
                orders.append(parse_ground_term(line))
            elif section == "tags":
                pred, _, tag = line.partition(":")
                pred, tag = pred.strip(), tag.strip()
                if tag not in GROUP_TAGS:
                    raise err(f"tag for {pred!r} must be one of {', '.join(GROUP_TAGS)}")
                tags[pred] = tag
            elif section == "functional":
                functor, _, arity = line.partition("/")
                try:
                    functional.add((functor.strip(), int(arity)))
                except ValueError:
                    raise err(f"expected functor/arity, got {line!r}") from None
            elif section == "expectations":
                if line.startswith("link "):
                    rest = line[len("link "):]
                    task, _, action_text = rest.partition("=>")
                    expectations.task_links.setdefault(task.strip(), []).append(
                        parse_ground_term(action_text.strip())
                    )
                else:
                    key, _, value = line.partition("=")
                    key, value = key.strip(), value.strip()
                    if key == "strategy":
                        if value not in ("empty", "cooccur", "tasklinked"):
                            raise err(f"unknown strategy {value!r}")
                        expectations.strategy = value
                    elif key == "theta":
                        expectations.theta = int(value)
                    else:
                        raise err(f"unknown expectation setting {key!r}")
        except ParseError as exc:
            raise err(str(exc)) from exc

    if plans_ref is None:
        raise ScenarioError(f"{path.name}: missing 'plans =' reference")
    if lexicon_ref is None:
        raise ScenarioError(f"{path.name}: missing 'lexicon =' reference")

    return ScenarioSpec(
        name=path.stem,
        initial_facts=facts,
        plan_path=(path.parent / plans_ref),
        lexicon_path=(path.parent / lexicon_ref),
        orders=orders,
        group_tags=tags,
        functional=functional,
        expectations=expectations,
    )


def _validate(spec: ScenarioSpec, library: PlanLibrary, world: WorldState) -> None:
    world.check_consistency()
    predicates = {f.functor for f in spec.initial_facts}
    for schema in library.actions.values():
        for lit in schema.preconditions + schema.add_effects + schema.del_effects:
            predicates.add(lit.atom.functor)
    untagged = sorted(p for p in predicates if p not in spec.group_tags)
    if untagged:
        raise ScenarioError(f"{spec.name}: predicates without a group tag: {', '.join(untagged)}")
    for order in spec.orders:
        if not any(
            p.trigger.kind == "+!" and unify(p.trigger.payload, order) is not None
            for p in library.plans
        ):
            raise ScenarioError(f"{spec.name}: order {format_term(order)} has no relevant plan")


def load_scenario(path: str | Path):
    """Build a ready-to-run (Agent, WorldState) pair from a scenario file.

    The agent starts with beliefs equal to the world facts (full
    observability) and one goal-addition event per order, in file order.
    """
    from .bdi import Agent  # deferred: bdi builds on this module's executor

    spec = parse_scenario(path)
    try:
        library = parse_plan_library(spec.plan_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioError(f"cannot read plan file {spec.plan_path}: {exc}") from exc
    except ParseError as exc:
        raise ScenarioError(f"{spec.plan_path.name}: {exc}") from exc

    try:
        world = WorldState(
            facts=spec.initial_facts,
            functional=spec.functional,
            group_tags=spec.group_tags,
        )
    except ValueError as exc:
        raise ScenarioError(f"{spec.name}: {exc}") from exc
    _validate(spec, library, world)

    agent = Agent(library=library, world=world)
    for order in spec.orders:
        agent.post_order(order)
    return agent, world
