from __future__ import annotations

from pathlib import Path

import pytest

from whybdi.bdi import Agent
from whybdi.explain import ExplanationEngine, init_expectations, load_lexicon
from whybdi.world import load_scenario, parse_scenario

DATA_DIR = Path(__file__).parent.parent / "src" / "whybdi" / "data"
GOLDEN_DIR = Path(__file__).parent / "golden"

SCENARIOS = (
    "store_used_cup",
    "clear_table",
    "load_dishwasher",
    "wipe_counter",
    "take_out_trash",
    "put_away_groceries",
)


def scenario_path(name: str) -> Path:
    return DATA_DIR / "scenarios" / f"{name}.scenario"


def make_agent(name: str, model=None, style: str = "EC") -> Agent:
    """Load a bundled scenario with an explanation engine attached."""
    spec = parse_scenario(scenario_path(name))
    agent, _world = load_scenario(scenario_path(name))
    if model is None:
        model = init_expectations("empty", agent.library)
    agent.explainer = ExplanationEngine(model, load_lexicon(spec.lexicon_path), style)
    return agent


@pytest.fixture
def kitchen_lexicon():
    return load_lexicon(DATA_DIR / "kitchen.lex")
