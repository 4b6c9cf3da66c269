"""Command line entry points: scripted runs, an interactive REPL, re-rendering.

Exit codes are a stable contract: 0 done, 2 load/parse error, 3 runtime
intention failure, 4 step budget exhausted.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .bdi import Agent
from .explain import (
    DEFAULT_STYLE,
    STYLES,
    ExplainError,
    ExplanationEngine,
    init_expectations,
    load_lexicon,
    parse_explanation_payload,
    render,
)
from .parser import ParseError, parse_ground_term
from .profiles import StoreError, UserProfile, load_profile, read_store, save_profile
from .terms import format_term
from .trace import TraceError, format_record, format_trace, read_trace
from .world import ScenarioError, load_scenario, parse_scenario

_DATA_DIR = Path(__file__).parent / "data"
_LOAD_ERRORS = (ScenarioError, ParseError, ExplainError, StoreError, TraceError, OSError)

EXIT_OK = 0
EXIT_LOAD_ERROR = 2
EXIT_FAILURE = 3
EXIT_BUDGET = 4


def resolve_scenario(root: Path, name: str) -> Path:
    """A scenario argument is a path (relative to --root) or a bundled name."""
    candidates = []
    given = Path(name)
    candidates.append(given if given.is_absolute() else root / given)
    stem = name if name.endswith(".scenario") else f"{name}.scenario"
    candidates.append(root / stem)
    candidates.append(_DATA_DIR / "scenarios" / stem)
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    raise ScenarioError(f"no scenario named {name!r} (searched {root} and bundled data)")


def _resolve(root: Path, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else root / p


def _prepare(root, scenario, user, style, init_name, history, theta, store, match, reset):
    scenario_path = resolve_scenario(root, scenario)
    spec = parse_scenario(scenario_path)
    agent, _world = load_scenario(scenario_path)
    lexicon = load_lexicon(spec.lexicon_path)
    store_path = _resolve(root, store)

    existing = user in read_store(store_path)
    if reset or not existing:
        strategy = init_name or spec.expectations.strategy
        history_traces = [read_trace(_resolve(root, h)) for h in history] or None
        model = init_expectations(
            strategy,
            agent.library,
            history_traces,
            user_id=user,
            theta=theta if theta is not None else spec.expectations.theta,
            task_links=spec.expectations.task_links,
            match_mode=match or "exact",
        )
        profile = UserProfile(user, model, init_strategy=strategy)
    else:
        profile = load_profile(store_path, user)

    agent.explainer = ExplanationEngine(profile.model, lexicon, style)
    return agent, profile, store_path


def _emit_trace(agent: Agent, out: Path | None) -> None:
    text = format_trace(agent.trace)
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text, encoding="utf-8")


def _finish(ctx: click.Context, agent: Agent) -> None:
    if agent.failed:
        ctx.exit(EXIT_FAILURE)
    if not agent.is_done:
        click.echo("step budget exhausted before the agent finished", err=True)
        ctx.exit(EXIT_BUDGET)
    ctx.exit(EXIT_OK)


def _load_error(ctx: click.Context, exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    ctx.exit(EXIT_LOAD_ERROR)


_shared_options = [
    click.option("--user", default="default", show_default=True, help="Profile to use."),
    click.option("--style", type=click.Choice(STYLES), default=DEFAULT_STYLE,
                 show_default=True, help="Explanation content style."),
    click.option("--init", "init_name", type=click.Choice(["empty", "cooccur", "tasklinked"]),
                 default=None, help="Expectation seeding for a fresh profile "
                 "(default: what the scenario declares)."),
    click.option("--history", multiple=True, help="Past trace file(s) for --init cooccur."),
    click.option("--theta", type=int, default=None,
                 help="Co-occurrence threshold (default 2 or the scenario's value)."),
    click.option("--store", default="whybdi.store", show_default=True,
                 help="Profile store file."),
    click.option("--budget", type=int, default=500, show_default=True,
                 help="Maximum reasoning steps."),
    click.option("--out", type=click.Path(path_type=Path), default=None,
                 help="Write the trace to a file instead of stdout."),
    click.option("--match", type=click.Choice(["exact", "functor"]), default=None,
                 help="Successor matching mode for a fresh profile."),
    click.option("--reset", is_flag=True, help="Discard the stored profile for this user."),
    click.option("--seed", type=int, default=None,
                 help="Reserved; the runtime is deterministic and ignores it."),
]


def _with_shared_options(f):
    for option in reversed(_shared_options):
        f = option(f)
    return f


@click.group()
@click.option("--root", type=click.Path(path_type=Path), default=Path("."),
              show_default=True, help="Workspace all relative paths resolve against.")
@click.pass_context
def main(ctx: click.Context, root: Path) -> None:
    """A household BDI agent that explains its surprising actions."""
    ctx.obj = root


@main.command("run")
@click.argument("scenario")
@_with_shared_options
@click.pass_context
def cmd_run(ctx, scenario, user, style, init_name, history, theta, store, budget,
            out, match, reset, seed):
    """Run a scenario to completion and emit its trace."""
    root = ctx.obj
    try:
        agent, profile, store_path = _prepare(
            root, scenario, user, style, init_name, history, theta, store, match, reset
        )
    except _LOAD_ERRORS as exc:
        _load_error(ctx, exc)
        return
    agent.run_to_completion(budget)
    _emit_trace(agent, out)
    save_profile(store_path, profile)
    _finish(ctx, agent)


_REPL_HELP = """\
commands:
  order <goal>   queue a user order, e.g. order storeCup(cup1)
  step           advance one reasoning step
  auto           run until done (or the step budget runs out)
  beliefs        show the current belief base
  intentions     show the active intention chain
  why            re-render the last explanation in the current style
  style <S>      switch style (EA, EG, EC, ECR, EB, EI)
  help           show this text
  quit           save the profile and leave"""


@main.command("repl")
@click.argument("scenario")
@_with_shared_options
@click.pass_context
def cmd_repl(ctx, scenario, user, style, init_name, history, theta, store, budget,
             out, match, reset, seed):
    """Interactive session: issue orders and watch explanations inline.

    The scenario provides the world, plans and lexicon; its scripted orders
    are NOT queued here, you issue your own.
    """
    root = ctx.obj
    try:
        agent, profile, store_path = _prepare(
            root, scenario, user, style, init_name, history, theta, store, match, reset
        )
    except _LOAD_ERRORS as exc:
        _load_error(ctx, exc)
        return
    agent.events.clear()  # interactive: the human gives the orders

    def show_new(start: int) -> None:
        for record in agent.trace[start:]:
            click.echo(format_record(record))

    click.echo("whybdi repl; type 'help' for commands", err=True)
    while True:
        try:
            line = input("whybdi> ").strip()
        except EOFError:
            break
        if not line:
            continue
        command, _, argument = line.partition(" ")
        argument = argument.strip()
        if command == "quit":
            break
        elif command == "order":
            try:
                goal = parse_ground_term(argument)
            except ParseError as exc:
                click.echo(f"bad goal term: {exc}")
                continue
            agent.post_order(goal)
            click.echo(f"queued +!{format_term(goal, compact=True)}")
        elif command == "step":
            mark = len(agent.trace)
            if agent.step() is None:
                click.echo("nothing left to do")
            show_new(mark)
        elif command == "auto":
            mark = len(agent.trace)
            agent.run_to_completion(budget)
            show_new(mark)
        elif command == "beliefs":
            for fact in agent.beliefs.facts():
                click.echo(format_term(fact))
        elif command == "intentions":
            chain = agent.intention_chain()
            if not chain:
                click.echo("no active intention")
            for node in chain:
                click.echo(
                    f"{format_term(node.goal)} [step {node.cursor + 1} of {len(node.body)}]"
                )
        elif command == "why":
            if agent.last_explanation is None:
                click.echo("nothing has needed an explanation yet")
            else:
                click.echo(agent.explainer.rendered(agent.last_explanation))
        elif command == "style":
            if argument not in STYLES:
                click.echo(f"unknown style {argument!r}; one of {', '.join(STYLES)}")
            else:
                agent.explainer.style = argument
                click.echo(f"style set to {argument}")
        elif command == "help":
            click.echo(_REPL_HELP)
        else:
            click.echo(f"unknown command {command!r}")
            click.echo(_REPL_HELP)

    if out is not None:
        out.write_text(format_trace(agent.trace), encoding="utf-8")
    save_profile(store_path, profile)
    ctx.exit(EXIT_OK)


@main.command("render")
@click.argument("trace_path")
@click.option("--style", type=click.Choice(STYLES), default=None,
              help="Limit the table to one style (default: all six).")
@click.option("--lexicon", "lexicon_path", default=None,
              help="Phrase lexicon (default: the bundled kitchen lexicon).")
@click.pass_context
def cmd_render(ctx, trace_path, style, lexicon_path):
    """Re-render the explanations stored in a trace, one row per record.

    Rows are tab-separated: step number, surprising action, then the rendering
    per style. A trace without explanations yields no rows.
    """
    root = ctx.obj
    try:
        records = read_trace(_resolve(root, trace_path))
        lexicon = load_lexicon(
            _resolve(root, lexicon_path) if lexicon_path else _DATA_DIR / "kitchen.lex"
        )
        styles = (style,) if style else STYLES
        for record in records:
            if record.kind != "explain":
                continue
            explanation = parse_explanation_payload(record.payload)
            row = [str(record.step_no), format_term(explanation.surprising_action)]
            row.extend(render(explanation, s, lexicon) for s in styles)
            click.echo("\t".join(row))
    except _LOAD_ERRORS as exc:
        _load_error(ctx, exc)
        return
    ctx.exit(EXIT_OK)


if __name__ == "__main__":
    main()
