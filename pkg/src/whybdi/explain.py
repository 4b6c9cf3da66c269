"""Deciding when to explain an action and what the explanation contains.

Demand: each user has an expected-successor model mapping an action to the
set of actions they expect next. When a plan is adopted, its body is scanned
pairwise and unexpected successors are marked (and learned). At runtime the
executed action stream is checked the same way across intention boundaries,
with the first action of a task checked against per-task links instead of a
predecessor.

Content: an explanation for action a is the pair of (1) the hierarchical
intention context: the union of the grounded context conditions of the
current intention and all its ancestors, and (2) the body suffix from a up to
the first action whose effects touch that context. Six renderers turn the
pair into text: EA (key action only), EG (root goal only), EC (key contextual
factors, the default), ECR (EC plus the following step), EB (EC plus a belief
dump), EI (the intention chain with cursors).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .parser import ActionSchema, ActionStep, ParseError, PlanLibrary, parse_ground_term
from .terms import (
    Literal,
    Term,
    format_literal,
    format_term,
    is_ground,
    unify,
)
from .world import grounded_effects

if TYPE_CHECKING:
    from .bdi import Agent, IntentionNode
    from .trace import TraceRecord

STYLES = ("EA", "EG", "EC", "ECR", "EB", "EI")
DEFAULT_STYLE = "EC"

MATCH_MODES = ("exact", "functor")


class ExplainError(Exception):
    pass


# ---------------------------------------------------------------------------
# Expected successors

class ExpectedSuccessorModel:
    """Per-user map from an action to the actions expected to follow it.

    Entries are only added, never removed, while a run is underway. Matching
    is exact on ground terms by default; "functor" mode ignores arguments.
    task_links holds the expected first actions per task functor, used when
    there is no predecessor yet.
    """

    def __init__(self, user_id: str = "default", match_mode: str = "exact"):
        if match_mode not in MATCH_MODES:
            raise ValueError(f"match_mode must be one of {MATCH_MODES}")
        self.user_id = user_id
        self.match_mode = match_mode
        self.successors: dict[Term, dict[Term, None]] = {}
        self.task_links: dict[str, dict[Term, None]] = {}

    def _matches(self, expected: Term, actual: Term) -> bool:
        if self.match_mode == "functor":
            return expected.functor == actual.functor
        return expected == actual

    def expects(self, prev: Term, nxt: Term) -> bool:
        known = self.successors.get(prev)
        if known is None and self.match_mode == "functor":
            for key, members in self.successors.items():
                if key.functor == prev.functor:
                    known = members
                    break
        if not known:
            return False
        return any(self._matches(m, nxt) for m in known)

    def learn(self, prev: Term, nxt: Term) -> None:
        self.successors.setdefault(prev, {}).setdefault(nxt)

    def expects_first(self, task: str, action: Term) -> bool:
        return any(self._matches(m, action) for m in self.task_links.get(task, {}))

    def learn_first(self, task: str, action: Term) -> None:
        self.task_links.setdefault(task, {}).setdefault(action)

    def size(self) -> int:
        pairs = sum(len(v) for v in self.successors.values())
        return pairs + sum(len(v) for v in self.task_links.values())

    def snapshot(self) -> tuple:
        succ = tuple((k, tuple(v)) for k, v in self.successors.items())
        links = tuple((k, tuple(v)) for k, v in self.task_links.items())
        return succ, links

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExpectedSuccessorModel):
            return NotImplemented
        return (
            self.user_id == other.user_id
            and self.match_mode == other.match_mode
            and {k: set(v) for k, v in self.successors.items() if v}
            == {k: set(v) for k, v in other.successors.items() if v}
            and {k: set(v) for k, v in self.task_links.items() if v}
            == {k: set(v) for k, v in other.task_links.items() if v}
        )


def mark_demand(model: ExpectedSuccessorModel, body_actions: Sequence[Term]) -> list[int]:
    """Indices of body actions needing an explanation, learned as a side effect.

    For each consecutive pair (a_i, a_i+1): when a_i+1 is not an expected
    successor of a_i, index i+1 is marked and the pair is learned.
    """
    marked: list[int] = []
    for i in range(len(body_actions) - 1):
        succ = body_actions[i + 1]
        if not model.expects(body_actions[i], succ):
            marked.append(i + 1)
            model.learn(body_actions[i], succ)
    return marked


def check_runtime_demand(
    model: ExpectedSuccessorModel,
    previous_executed: Term | None,
    next_action: Term,
    task: str | None = None,
) -> bool:
    """True when the upcoming action is surprising given the executed stream.

    Runs across intention boundaries. With no predecessor (first action of a
    task) the task's expected first actions are consulted instead. Either way
    a surprising action is learned so it does not surprise twice.
    """
    if previous_executed is not None:
        if model.expects(previous_executed, next_action):
            return False
        model.learn(previous_executed, next_action)
        return True
    if task is None:
        return False
    if model.expects_first(task, next_action):
        return False
    model.learn_first(task, next_action)
    return True


def init_expectations(
    strategy: str,
    plans: PlanLibrary,
    history: Iterable[Sequence["TraceRecord"]] | None = None,
    *,
    user_id: str = "default",
    theta: int = 2,
    task_links: Mapping[str, Sequence[Term]] | None = None,
    match_mode: str = "exact",
) -> ExpectedSuccessorModel:
    """Build a fresh model.

    empty      -- everything surprises at first occurrence.
    cooccur    -- seed pairs (and task first actions) seen consecutively at
                  least theta times in the history traces.
    tasklinked -- seed the given task -> expected-first-action links.
    """
    model = ExpectedSuccessorModel(user_id=user_id, match_mode=match_mode)
    if strategy == "empty":
        return model
    if strategy == "tasklinked":
        links = task_links or {}
        for task, actions in links.items():
            for action in actions:
                if action.indicator not in plans.actions:
                    raise ExplainError(
                        f"task link for {task!r} names unknown action {format_term(action)}"
                    )
                model.learn_first(task, action)
        return model
    if strategy == "cooccur":
        if history is None:
            raise ExplainError("co-occurrence initialization requires history traces")
        pair_counts: dict[tuple[Term, Term], int] = {}
        first_counts: dict[tuple[str, Term], int] = {}
        for trace in history:
            _count_stream(trace, pair_counts, first_counts)
        for (prev, nxt), count in pair_counts.items():
            if count >= theta:
                model.learn(prev, nxt)
        for (task, action), count in first_counts.items():
            if count >= theta:
                model.learn_first(task, action)
        return model
    raise ExplainError(f"unknown initialization strategy {strategy!r}")


def _count_stream(
    trace: Sequence["TraceRecord"],
    pair_counts: dict[tuple[Term, Term], int],
    first_counts: dict[tuple[str, Term], int],
) -> None:
    prev: Term | None = None
    task: str | None = None
    after_subgoal = False
    for rec in trace:
        if rec.kind == "subgoal":
            after_subgoal = True
        elif rec.kind == "adopt":
            if not after_subgoal:
                # a root adoption starts a new task stream
                goal = parse_ground_term(rec.payload.lstrip("+!"))
                task = goal.functor
                prev = None
            after_subgoal = False
        elif rec.kind == "action":
            action = parse_ground_term(rec.payload)
            if prev is not None:
                key = (prev, action)
                pair_counts[key] = pair_counts.get(key, 0) + 1
            elif task is not None:
                fkey = (task, action)
                first_counts[fkey] = first_counts.get(fkey, 0) + 1
            prev = action


# ---------------------------------------------------------------------------
# Hierarchical context and content

@dataclass(frozen=True)
class HierarchicalContext:
    """Grounded context conditions along the intention chain, root first."""

    literals: tuple[Literal, ...]
    provenance: Mapping[Literal, str] = field(default_factory=dict, compare=False)


def hierarchical_context(node: "IntentionNode") -> HierarchicalContext:
    """Union of grounded contexts of the node and every ancestor.

    Ordered root first (the rendering order of the worked scenarios), first
    contributor wins on duplicates.
    """
    chain = [node, *node.parents()]
    literals: dict[Literal, str] = {}
    for member in reversed(chain):
        for lit in member.grounded_context:
            literals.setdefault(lit, member.id)
    return HierarchicalContext(tuple(literals), dict(literals))


@dataclass(frozen=True)
class Explanation:
    """Why an action runs: its intention context and the steps that discharge it.

    action_suffix starts at the surprising action and ends at key_action, the
    first remaining body action whose effects touch the context (or the last
    body action when none does). Snapshot fields capture what the bulkier
    renderers need so a stored explanation can be re-rendered later.
    """

    surprising_action: Term
    context: HierarchicalContext
    action_suffix: tuple[Term, ...]
    key_action: Term
    intention_id: str
    root_goal: Term
    predecessor: Term | None = None
    next_action: Term | None = None
    beliefs_snapshot: tuple[Term, ...] = ()
    intention_chain: tuple[tuple[Term, int, int], ...] = ()


def _touches(effect: Literal, condition: Literal) -> bool:
    # sign-blind: an action touching the atom of a condition (or of its
    # complement) is what discharges or invalidates it
    return unify(effect.atom, condition.atom) is not None


def explanation_content(
    node: "IntentionNode",
    i: int,
    schemas: Mapping[tuple[str, int], ActionSchema],
) -> Explanation:
    """Build the explanation for the action at body index i of node.

    Scans the remaining body actions for the first one whose add or del
    effects intersect the hierarchical context. Sub-goal steps carry no
    direct effects and are skipped by the scan.
    """
    if not 0 <= i < len(node.body):
        raise IndexError(f"body index {i} out of range for {node.id}")
    step = node.body[i]
    if not isinstance(step, ActionStep):
        raise ValueError(f"body step {i} of {node.id} is a sub-goal, not an action")

    context = hierarchical_context(node)
    remaining = [s.term for s in node.body[i:] if isinstance(s, ActionStep)]
    key_index = len(remaining) - 1
    for t, action in enumerate(remaining):
        add, dele = grounded_effects(action, schemas)
        if any(_touches(e, c) for e in (*add, *dele) for c in context.literals):
            key_index = t
            break
    suffix = tuple(remaining[: key_index + 1])
    next_action = remaining[key_index + 1] if key_index + 1 < len(remaining) else None

    root = node
    while root.parent is not None:
        root = root.parent
    return Explanation(
        surprising_action=step.term,
        context=context,
        action_suffix=suffix,
        key_action=suffix[-1],
        intention_id=node.id,
        root_goal=root.goal,
        next_action=next_action,
    )


# ---------------------------------------------------------------------------
# Lexicon and renderers

_ROLES = ("doing", "purpose", "fact")


class Lexicon:
    """Predicate -> phrase templates with positional slots.

    Entries are keyed by functor/arity or by an exact ground term (which takes
    priority); unknown predicates fall back to the raw term text.
    """

    def __init__(self) -> None:
        self._by_term: dict[tuple[str, Term], str] = {}
        self._by_pred: dict[tuple[str, str, int], str] = {}

    def add_term_entry(self, role: str, term: Term, template: str) -> None:
        self._by_term[(role, term)] = template

    def add_pred_entry(self, role: str, functor: str, arity: int, template: str) -> None:
        self._by_pred[(role, functor, arity)] = template

    def phrase(self, role: str, term: Term) -> str:
        exact = self._by_term.get((role, term))
        if exact is not None:
            return exact
        template = self._by_pred.get((role, term.functor, len(term.args)))
        if template is not None:
            return template.format(*[format_term(a) for a in term.args])
        return self._fallback(role, term)

    def _fallback(self, role: str, term: Term) -> str:
        text = format_term(term)
        if role == "doing":
            return f"performing {text}"
        if role == "purpose":
            return f"perform {text}"
        return text

    def fact_phrase(self, lit: Literal) -> str:
        if lit.negated:
            return f"it is not the case that {self.phrase('fact', lit.atom)}"
        return self.phrase("fact", lit.atom)


def parse_lexicon(text: str, origin: str = "<lexicon>") -> Lexicon:
    lex = Lexicon()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, template = line.partition(":")
        if not sep:
            raise ExplainError(f"{origin}:{lineno}: expected '<key> <role>: <template>'")
        head_parts = head.strip().rsplit(" ", 1)
        if len(head_parts) != 2 or head_parts[1] not in _ROLES:
            raise ExplainError(
                f"{origin}:{lineno}: key must end with one of {', '.join(_ROLES)}"
            )
        key, role = head_parts[0].strip(), head_parts[1]
        template = template.strip()
        if "/" in key and "(" not in key:
            functor, _, arity = key.partition("/")
            try:
                lex.add_pred_entry(role, functor.strip(), int(arity), template)
            except ValueError:
                raise ExplainError(f"{origin}:{lineno}: bad arity in {key!r}") from None
        else:
            try:
                lex.add_term_entry(role, parse_ground_term(key), template)
            except ParseError as exc:
                raise ExplainError(f"{origin}:{lineno}: {exc}") from exc
    return lex


def load_lexicon(path: str | Path) -> Lexicon:
    path = Path(path)
    try:
        return parse_lexicon(path.read_text(encoding="utf-8"), origin=path.name)
    except OSError as exc:
        raise ExplainError(f"cannot read lexicon {path}: {exc}") from exc


def _ec_text(e: Explanation, lex: Lexicon) -> str:
    core = "I am " + lex.phrase("doing", e.surprising_action)
    if len(e.action_suffix) > 1:
        core += " to " + lex.phrase("purpose", e.key_action)
    if e.context.literals:
        clauses = "; ".join(lex.fact_phrase(l) for l in e.context.literals)
        return f"{core}, because: {clauses}."
    return core + "."


def render(e: Explanation, style: str, lexicon: Lexicon) -> str:
    """Deterministic text for an explanation in one of the six styles."""
    if style == "EA":
        return f"I will {lexicon.phrase('purpose', e.key_action)}."
    if style == "EG":
        return f"I am working on: {format_term(e.root_goal)}."
    if style == "EC":
        return _ec_text(e, lexicon)
    if style == "ECR":
        text = _ec_text(e, lexicon)
        if e.next_action is not None:
            return f"{text} After that, I will {lexicon.phrase('purpose', e.next_action)}."
        return f"{text} After that, this plan has no further steps."
    if style == "EB":
        text = _ec_text(e, lexicon)
        if e.beliefs_snapshot:
            dump = "; ".join(format_term(b) for b in e.beliefs_snapshot)
            return f"{text} My current beliefs are: {dump}."
        return f"{text} I currently hold no beliefs."
    if style == "EI":
        if not e.intention_chain:
            return f"My current intention is: {format_term(e.root_goal)}."
        chain = " > ".join(
            f"{format_term(goal)} [step {cursor + 1} of {size}]"
            for goal, cursor, size in e.intention_chain
        )
        return f"My current intentions are: {chain}."
    raise ExplainError(f"unknown explanation style {style!r}")


# ---------------------------------------------------------------------------
# Trace payload serialization

def _compact_literal(lit: Literal) -> str:
    text = format_term(lit.atom, compact=True)
    return "~" + text if lit.negated else text


def _parse_compact_literal(text: str) -> Literal:
    if text.startswith("~"):
        return Literal(parse_ground_term(text[1:]), negated=True)
    return Literal(parse_ground_term(text))


def _join(items: Iterable[str]) -> str:
    joined = ";".join(items)
    return joined if joined else "-"


def serialize_explanation(e: Explanation) -> str:
    """Space-separated key=value payload; term lists are ';'-joined."""
    chain = _join(
        f"{format_term(goal, compact=True)}@{cursor + 1}/{size}"
        for goal, cursor, size in e.intention_chain
    )
    parts = [
        f"action={format_term(e.surprising_action, compact=True)}",
        f"pred={format_term(e.predecessor, compact=True) if e.predecessor else '-'}",
        f"intention={e.intention_id}",
        f"context={_join(_compact_literal(l) for l in e.context.literals)}",
        f"suffix={_join(format_term(t, compact=True) for t in e.action_suffix)}",
        f"key={format_term(e.key_action, compact=True)}",
        f"next={format_term(e.next_action, compact=True) if e.next_action else '-'}",
        f"goal={format_term(e.root_goal, compact=True)}",
        f"beliefs={_join(format_term(b, compact=True) for b in e.beliefs_snapshot)}",
        f"intentions={chain}",
    ]
    return " ".join(parts)


def parse_explanation_payload(payload: str) -> Explanation:
    fields: dict[str, str] = {}
    for part in payload.split(" "):
        key, sep, value = part.partition("=")
        if not sep:
            raise ExplainError(f"malformed explanation payload near {part!r}")
        fields[key] = value

    def baskets(key: str) -> list[str]:
        value = fields.get(key, "-")
        return [] if value == "-" else value.split(";")

    try:
        context = HierarchicalContext(
            tuple(_parse_compact_literal(t) for t in baskets("context")), {}
        )
        suffix = tuple(parse_ground_term(t) for t in baskets("suffix"))
        chain = []
        for entry in baskets("intentions"):
            goal_text, _, pos = entry.rpartition("@")
            cursor, _, size = pos.partition("/")
            chain.append((parse_ground_term(goal_text), int(cursor) - 1, int(size)))
        pred = fields.get("pred", "-")
        nxt = fields.get("next", "-")
        return Explanation(
            surprising_action=parse_ground_term(fields["action"]),
            context=context,
            action_suffix=suffix,
            key_action=parse_ground_term(fields["key"]),
            intention_id=fields.get("intention", "-"),
            root_goal=parse_ground_term(fields["goal"]),
            predecessor=None if pred == "-" else parse_ground_term(pred),
            next_action=None if nxt == "-" else parse_ground_term(nxt),
            beliefs_snapshot=tuple(parse_ground_term(t) for t in baskets("beliefs")),
            intention_chain=tuple(chain),
        )
    except (KeyError, ValueError, ParseError) as exc:
        raise ExplainError(f"malformed explanation payload: {exc}") from exc


# ---------------------------------------------------------------------------
# Engine wiring used by the reasoning cycle

class ExplanationEngine:
    """Runs the demand checks and builds explanations during agent steps."""

    def __init__(self, model: ExpectedSuccessorModel, lexicon: Lexicon, style: str = DEFAULT_STYLE):
        if style not in STYLES:
            raise ExplainError(f"unknown explanation style {style!r}")
        self.model = model
        self.lexicon = lexicon
        self.style = style

    def plan_adopted(self, node: "IntentionNode") -> frozenset[int]:
        """Static demand pass over the adopted body; returns marked body indices."""
        action_positions = [
            idx for idx, s in enumerate(node.body) if isinstance(s, ActionStep)
        ]
        actions = [node.body[idx].term for idx in action_positions]
        marked = mark_demand(self.model, actions)
        return frozenset(action_positions[m] for m in marked)

    def before_action(self, agent: "Agent", node: "IntentionNode", action: Term) -> Explanation | None:
        """Combined static-mark / runtime-stream demand check for the next action."""
        statically_marked = node.cursor in node.marked
        task = agent.current_task_functor()
        dynamically_demanded = check_runtime_demand(
            self.model, agent.previous_action, action, task=task
        )
        if not (statically_marked or dynamically_demanded):
            return None
        content = explanation_content(node, node.cursor, agent.library.actions)
        chain = tuple(
            (member.goal, member.cursor, len(member.body))
            for member in reversed([node, *node.parents()])
        )
        return replace(
            content,
            predecessor=agent.previous_action,
            beliefs_snapshot=tuple(agent.beliefs.facts()),
            intention_chain=chain,
        )

    def rendered(self, e: Explanation) -> str:
        return render(e, self.style, self.lexicon)
