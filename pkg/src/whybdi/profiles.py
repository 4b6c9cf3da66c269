"""Per-user persistence of expectation models.

One human-diffable text store holds every profile:

    [profile alice]
    strategy = empty
    match = exact
    created = 2026-08-09T12:00:00+00:00
    updated = 2026-08-09T12:00:05+00:00
    task storeCup => navigateTo(dishwasher)
    pair navigateTo(table) => pickUp(cup1)

Saves are atomic (temp file + rename). Timestamps stay "-" until the profile
first learns something, so saving a fresh profile is byte-stable across runs.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .explain import MATCH_MODES, ExpectedSuccessorModel
from .parser import ParseError, parse_ground_term
from .terms import Term, format_term

_HEADER = "# whybdi expectation store v1"


class StoreError(Exception):
    """The store file exists but cannot be understood; never silently reset."""


@dataclass
class UserProfile:
    user_id: str
    model: ExpectedSuccessorModel
    init_strategy: str = "empty"
    created: str = "-"
    updated: str = "-"


def _fresh_profile(user_id: str, match_mode: str = "exact") -> UserProfile:
    return UserProfile(user_id, ExpectedSuccessorModel(user_id, match_mode=match_mode))


def _profile_body(profile: UserProfile) -> list[str]:
    """Canonical entry lines, timestamps excluded (used for change detection)."""
    lines = [
        f"strategy = {profile.init_strategy}",
        f"match = {profile.model.match_mode}",
    ]
    for task in sorted(profile.model.task_links):
        members = profile.model.task_links[task]
        if members:
            joined = ";".join(sorted(format_term(m, compact=True) for m in members))
            lines.append(f"task {task} => {joined}")
    key_of = lambda t: format_term(t, compact=True)
    for action in sorted(profile.model.successors, key=key_of):
        members = profile.model.successors[action]
        if members:
            joined = ";".join(sorted(key_of(m) for m in members))
            lines.append(f"pair {key_of(action)} => {joined}")
    return lines


def _format_store(profiles: dict[str, UserProfile]) -> str:
    chunks = [_HEADER]
    for user_id in sorted(profiles):
        profile = profiles[user_id]
        chunks.append("")
        chunks.append(f"[profile {user_id}]")
        body = _profile_body(profile)
        chunks.extend(body[:2])
        chunks.append(f"created = {profile.created}")
        chunks.append(f"updated = {profile.updated}")
        chunks.extend(body[2:])
    return "\n".join(chunks) + "\n"


def _parse_store(text: str, path: Path) -> dict[str, UserProfile]:
    profiles: dict[str, UserProfile] = {}
    current: UserProfile | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        def err(msg: str) -> StoreError:
            return StoreError(f"{path.name}:{lineno}: {msg}")

        if line.startswith("[profile ") and line.endswith("]"):
            user_id = line[len("[profile "):-1].strip()
            if not user_id:
                raise err("empty profile id")
            if user_id in profiles:
                raise err(f"duplicate profile {user_id!r}")
            current = _fresh_profile(user_id)
            profiles[user_id] = current
            continue
        if current is None:
            raise err("entry outside any [profile ...] section")
        try:
            if line.startswith("task "):
                task, _, rest = line[len("task "):].partition("=>")
                for item in rest.strip().split(";"):
                    current.model.learn_first(task.strip(), parse_ground_term(item))
            elif line.startswith("pair "):
                key_text, _, rest = line[len("pair "):].partition("=>")
                key = parse_ground_term(key_text.strip())
                for item in rest.strip().split(";"):
                    current.model.learn(key, parse_ground_term(item))
            elif "=" in line:
                name, _, value = line.partition("=")
                name, value = name.strip(), value.strip()
                if name == "strategy":
                    current.init_strategy = value
                elif name == "match":
                    if value not in MATCH_MODES:
                        raise err(f"unknown match mode {value!r}")
                    current.model.match_mode = value
                elif name == "created":
                    current.created = value
                elif name == "updated":
                    current.updated = value
                else:
                    raise err(f"unknown setting {name!r}")
            else:
                raise err(f"unrecognized entry {line!r}")
        except ParseError as exc:
            raise err(str(exc)) from exc
    return profiles


def read_store(store_path: str | Path) -> dict[str, UserProfile]:
    path = Path(store_path)
    if not path.exists():
        return {}
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StoreError(f"cannot read store {path}: {exc}") from exc
    return _parse_store(text, path)


def load_profile(store_path: str | Path, user_id: str) -> UserProfile:
    """Load a user's profile, or a fresh empty-strategy one if absent."""
    profiles = read_store(store_path)
    return profiles.get(user_id) or _fresh_profile(user_id)


def save_profile(store_path: str | Path, profile: UserProfile) -> None:
    """Write the profile back atomically, preserving other users' profiles.

    The updated timestamp moves only when the profile's content actually
    changed (and created is stamped on the first such change), so re-saving
    an unchanged store is byte-stable.
    """
    path = Path(store_path)
    profiles = read_store(path)
    previous = profiles.get(profile.user_id)
    if previous is None or _profile_body(previous) != _profile_body(profile):
        if profile.model.size() > 0 or previous is not None:
            now = datetime.now(timezone.utc).isoformat(timespec="seconds")
            if profile.created == "-":
                profile.created = now
            profile.updated = now
    profiles[profile.user_id] = profile

    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(_format_store(profiles))
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
