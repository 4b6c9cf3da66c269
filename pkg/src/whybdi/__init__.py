"""whybdi: a household BDI agent runtime that explains its surprising actions."""

from .beliefs import BeliefBase, ConsistencyError, FactStore
from .bdi import Agent, AgentError, Event, IntentionNode, parents
from .explain import (
    DEFAULT_STYLE,
    STYLES,
    Explanation,
    ExplanationEngine,
    ExpectedSuccessorModel,
    HierarchicalContext,
    Lexicon,
    check_runtime_demand,
    explanation_content,
    hierarchical_context,
    init_expectations,
    load_lexicon,
    mark_demand,
    render,
)
from .parser import (
    ActionSchema,
    ActionStep,
    ParseError,
    PlanLibrary,
    PlanTemplate,
    SubGoalStep,
    parse_ground_term,
    parse_literal,
    parse_plan_library,
    parse_term,
    pretty_print,
)
from .profiles import StoreError, UserProfile, load_profile, save_profile
from .terms import (
    Literal,
    Substitution,
    Term,
    TriggerEvent,
    Var,
    apply_substitution,
    format_literal,
    format_term,
    is_ground,
    unify,
)
from .trace import TraceRecord, format_trace, parse_trace, read_trace, write_trace
from .world import (
    PreconditionError,
    ScenarioError,
    ScenarioSpec,
    UnknownActionError,
    WorldState,
    apply_effects,
    check_preconditions,
    load_scenario,
    parse_scenario,
)

__version__ = "0.1.0"
