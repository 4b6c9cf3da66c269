"""The BDI reasoning cycle.

A single-intention agent: one active intention chain at a time, a FIFO queue
of external events (user orders, belief changes), and a one-slot pending
internal event for sub-goal expansion (internal events must not interleave
with queued orders). Each step does exactly one of: process the pending
internal event, execute or expand the active intention's current step, adopt
a plan for the next external event, or finish.

Plan selection is first-match in library order with context answers in belief
insertion order, so runs are deterministic. Belief updates that mirror action
effects do not enqueue events (no plan in this runtime reacts to them);
assert_belief, the external belief-change entry point, does.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

from .beliefs import BeliefBase, resolve_grounded_context
from .parser import ActionStep, PlanLibrary, PlanTemplate, Step, SubGoalStep
from .terms import (
    GOAL_ADD,
    BELIEF_ADD,
    BELIEF_DEL,
    Literal,
    Substitution,
    Term,
    TriggerEvent,
    apply_substitution,
    apply_to_literal,
    format_literal,
    format_term,
    is_ground,
    unify,
)
from .trace import TraceRecord
from .world import WorldState, check_preconditions, effect_delta

from .explain import ExplanationEngine, Explanation, serialize_explanation


class AgentError(Exception):
    pass


@dataclass(frozen=True)
class Event:
    trigger: TriggerEvent
    source: str = "external"  # "external" or "internal"
    parent_id: str | None = None

    def compact(self) -> str:
        return self.trigger.kind + format_term(self.trigger.payload, compact=True)


@dataclass
class IntentionNode:
    """An adopted, grounded plan instance in the intention tree."""

    id: str
    template: PlanTemplate
    substitution: Substitution
    goal: Term
    grounded_context: tuple[Literal, ...]
    body: tuple[Step, ...]
    parent: "IntentionNode | None" = None
    cursor: int = 0
    marked: frozenset[int] = frozenset()

    def parents(self) -> list["IntentionNode"]:
        """[direct parent, grandparent, ..., root]; empty for roots."""
        chain = []
        node = self.parent
        while node is not None:
            chain.append(node)
            node = node.parent
        return chain

    def completed(self) -> bool:
        return self.cursor >= len(self.body)


class Agent:
    def __init__(
        self,
        library: PlanLibrary,
        beliefs: BeliefBase | None = None,
        world: WorldState | None = None,
        explainer: ExplanationEngine | None = None,
    ):
        self.library = library
        self.world = world
        if beliefs is not None:
            self.beliefs = beliefs
        elif world is not None:
            self.beliefs = BeliefBase(facts=world.facts(), functional=world.functional)
        else:
            self.beliefs = BeliefBase()
        self.explainer = explainer
        self.events: deque[Event] = deque()
        self.pending_internal: Event | None = None
        self.active: IntentionNode | None = None
        self.trace: list[TraceRecord] = []
        self.previous_action: Term | None = None
        self.last_explanation: Explanation | None = None
        self.failed = False
        self._finished = False
        self._ids = itertools.count(1)

    # -- beliefs ------------------------------------------------------------

    def assert_belief(self, lit: Literal) -> Event | None:
        """Record a belief change and enqueue its event; None when a no-op."""
        changed = self.beliefs.assert_literal(lit)
        if not changed:
            return None
        kind = BELIEF_DEL if lit.negated else BELIEF_ADD
        event = Event(TriggerEvent(kind, lit.atom))
        self.events.append(event)
        return event

    def query(self, conditions: list[Literal]) -> list[Substitution]:
        """All substitutions under which the conjunction is believed."""
        return self.beliefs.solve(conditions)

    # -- events and plans -----------------------------------------------------

    def post_order(self, goal: Term) -> Event:
        """Enqueue a user order as a goal-addition event."""
        if not is_ground(goal):
            raise AgentError(f"orders must be ground: {format_term(goal)}")
        event = Event(TriggerEvent(GOAL_ADD, goal))
        self.events.append(event)
        return event

    def select_plan(self, event: Event) -> tuple[PlanTemplate, Substitution] | None:
        """First plan (library order) that is relevant and applicable.

        The returned substitution extends the trigger unifier with the first
        context answer (belief insertion order). Event payloads are ground in
        this runtime, so plan variables cannot capture event variables and no
        renaming is needed.
        """
        for plan in self.library.plans:
            if plan.trigger.kind != event.trigger.kind:
                continue
            bound = unify(plan.trigger.payload, event.trigger.payload)
            if bound is None:
                continue
            answers = self.beliefs.solve(plan.context, start=bound)
            if answers:
                return plan, answers[0]
        return None

    def adopt_intention(
        self,
        plan: PlanTemplate,
        subst: Substitution,
        parent: IntentionNode | None = None,
    ) -> IntentionNode:
        """Instantiate the plan as the active intention (or sub-intention)."""
        goal = apply_substitution(subst, plan.trigger.payload)
        body: list[Step] = []
        for step in plan.body:
            term = apply_substitution(subst, step.term)
            if not is_ground(term):
                raise AgentError(
                    f"plan {plan.name}: step {format_term(term)} not ground at adoption"
                )
            body.append(type(step)(term))
        grounded = resolve_grounded_context(
            self.beliefs, [apply_to_literal(subst, l) for l in plan.context]
        )
        for lit in grounded:
            if not is_ground(lit.atom):
                raise AgentError(
                    f"plan {plan.name}: context {format_literal(lit)} not ground at adoption"
                )
        node = IntentionNode(
            id=f"i{next(self._ids)}",
            template=plan,
            substitution=subst,
            goal=goal,
            grounded_context=grounded,
            body=tuple(body),
            parent=parent,
        )
        if self.explainer is not None:
            node.marked = self.explainer.plan_adopted(node)
        if parent is None:
            self.previous_action = None
        self.active = node
        return node

    # -- the cycle ----------------------------------------------------------------

    def step(self) -> TraceRecord | None:
        """Advance by one reasoning step; None once the agent is done.

        A step that explains an action appends the explain record first and
        returns the action record; run_to_completion budgets count steps, not
        records.
        """
        if self._finished:
            return None
        record = self._do_step()
        self._check_invariants()
        return record

    def _do_step(self) -> TraceRecord | None:
        if self.pending_internal is not None:
            event = self.pending_internal
            self.pending_internal = None
            selected = self.select_plan(event)
            if selected is None:
                return self._fail_chain(event.compact(), "no applicable plan")
            plan, subst = selected
            self.adopt_intention(plan, subst, parent=self.active)
            return self._record("adopt", event.compact())

        if self.active is not None:
            return self._advance_intention(self.active)

        while self.events:
            event = self.events.popleft()
            selected = self.select_plan(event)
            if selected is None:
                if event.trigger.kind == GOAL_ADD:
                    self.failed = True
                    return self._record("fail", event.compact(), "no applicable plan")
                continue  # belief event nobody reacts to
            plan, subst = selected
            self.adopt_intention(plan, subst, parent=None)
            return self._record("adopt", event.compact())

        self._finished = True
        return self._record("done")

    def _advance_intention(self, node: IntentionNode) -> TraceRecord:
        step = node.body[node.cursor]
        if isinstance(step, SubGoalStep):
            self.pending_internal = Event(
                TriggerEvent(GOAL_ADD, step.term), "internal", node.id
            )
            return self._record("subgoal", "!" + format_term(step.term, compact=True))

        action = step.term
        if self.explainer is not None:
            explanation = self.explainer.before_action(self, node, action)
            if explanation is not None:
                self.last_explanation = explanation
                self._record(
                    "explain",
                    serialize_explanation(explanation),
                    self.explainer.rendered(explanation),
                )
        acted_on = self.world if self.world is not None else self.beliefs
        violated = check_preconditions(acted_on, action, self.library.actions)
        if violated:
            reason = "unsatisfied preconditions: " + ", ".join(
                format_literal(v) for v in violated
            )
            return self._fail_chain(format_term(action, compact=True), reason)
        self._execute(action)
        node.cursor += 1
        self.previous_action = action
        self._pop_completed()
        return self._record("action", format_term(action, compact=True))

    def _execute(self, action: Term) -> None:
        acted_on = self.world if self.world is not None else self.beliefs
        added, removed = effect_delta(acted_on, action, self.library.actions)
        for fact in removed:
            if self.world is not None:
                self.world.discard(fact)
            self.beliefs.discard(fact)
        for fact in added:
            if self.world is not None:
                self.world.insert(fact)
            self.beliefs.insert(fact)

    def _pop_completed(self) -> None:
        while self.active is not None and self.active.completed():
            parent = self.active.parent
            if parent is not None:
                parent.cursor += 1
            self.active = parent

    def _fail_chain(self, payload: str, reason: str) -> TraceRecord:
        self.active = None
        self.pending_internal = None
        self.failed = True
        return self._record("fail", payload, reason)

    def _record(self, kind: str, payload: str = "", detail: str = "") -> TraceRecord:
        record = TraceRecord(len(self.trace) + 1, kind, payload, detail)
        self.trace.append(record)
        return record

    def run_to_completion(self, max_steps: int) -> list[TraceRecord]:
        """step() until done or the budget runs out; returns the new records.

        Exhausting the budget is an outcome, not an error: the trace simply
        has no done record.
        """
        if max_steps <= 0:
            raise ValueError("max_steps must be positive")
        before = len(self.trace)
        for _ in range(max_steps):
            if self.step() is None:
                break
        return self.trace[before:]

    # -- introspection ----------------------------------------------------------

    @property
    def is_done(self) -> bool:
        return self._finished

    def intention_chain(self) -> list[IntentionNode]:
        """Root-first chain of the active intention; empty when idle."""
        if self.active is None:
            return []
        return list(reversed([self.active, *self.active.parents()]))

    def current_task_functor(self) -> str | None:
        chain = self.intention_chain()
        return chain[0].goal.functor if chain else None

    def _check_invariants(self) -> None:
        self.beliefs.check_consistency()
        if self.world is not None:
            self.world.check_consistency()
            if set(self.world.facts()) != set(self.beliefs.facts()):
                raise AgentError("belief base out of sync with the world")
        seen = set()
        node = self.active
        while node is not None:
            if node.id in seen:
                raise AgentError("intention chain has a cycle")
            seen.add(node.id)
            if not 0 <= node.cursor <= len(node.body):
                raise AgentError(f"cursor out of range in {node.id}")
            node = node.parent


def parents(node: IntentionNode) -> list[IntentionNode]:
    """[direct parent, grandparent, ..., root]; empty for roots."""
    return node.parents()
