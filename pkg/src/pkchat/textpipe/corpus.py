"""Dialogue corpus schema, JSON-lines persistence, external-format unification."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

ROLES = ("user", "bot")


@dataclass(frozen=True)
class Utterance:
    role: str
    text: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}; got {self.role!r}")
        if not self.text.strip():
            raise ValueError("utterance text is empty")


@dataclass
class Scenario:
    """A dialogue episode: knowledge strings, an optional goal, role-tagged turns.

    Turns alternate roles starting with the user, and there are at least two.
    """

    id: str
    knowledge: list[str]
    goal: str | None = None
    turns: list[Utterance] = field(default_factory=list)

    def __post_init__(self):
        if not self.knowledge:
            raise ValueError(f"scenario {self.id}: needs at least one knowledge entry")
        if len(self.turns) < 2:
            raise ValueError(f"scenario {self.id}: needs at least two turns")
        for i, turn in enumerate(self.turns):
            expected = ROLES[i % 2]
            if turn.role != expected:
                raise ValueError(
                    f"scenario {self.id}: turn {i} has role {turn.role!r}, "
                    f"expected {expected!r} (turns alternate starting with user)")

    def bot_turn_indices(self) -> list[int]:
        return [i for i, t in enumerate(self.turns) if t.role == "bot"]


def save_corpus(scenarios: Iterable[Scenario], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for scen in scenarios:
            fh.write(json.dumps({
                "id": scen.id,
                "knowledge": scen.knowledge,
                "goal": scen.goal,
                "turns": [{"role": t.role, "text": t.text} for t in scen.turns],
            }, ensure_ascii=False) + "\n")


def load_corpus(path: str | Path) -> list[Scenario]:
    scenarios = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            scenarios.append(Scenario(
                id=rec["id"],
                knowledge=list(rec["knowledge"]),
                goal=rec.get("goal"),
                turns=[Utterance(t["role"], t["text"]) for t in rec["turns"]],
            ))
    return scenarios


def _as_lines(value) -> list[str]:
    if value is None:
        return []
    if isinstance(value, str):
        return [value] if value.strip() else []
    return [str(v) for v in value if str(v).strip()]


def unify_format(record: dict) -> Scenario:
    """Fold an external-style record into the common schema.

    Goal lines, knowledge lines, and profile lines are concatenated, in that
    order, into the scenario's knowledge list; turns are copied verbatim.
    """
    goal_lines = _as_lines(record.get("goal"))
    knowledge_lines = _as_lines(record.get("knowledge"))
    profile_lines = _as_lines(record.get("profile"))
    merged = goal_lines + knowledge_lines + profile_lines
    if not merged:
        raise ValueError("record has no goal, knowledge, or profile")
    raw_turns = record.get("turns") or []
    if not raw_turns:
        raise ValueError("record has no turns")
    turns = []
    for i, turn in enumerate(raw_turns):
        if isinstance(turn, str):
            turns.append(Utterance(ROLES[i % 2], turn))
        else:
            turns.append(Utterance(turn["role"], turn["text"]))
    return Scenario(
        id=str(record.get("id", "external")),
        knowledge=merged,
        goal=" ".join(goal_lines) if goal_lines else None,
        turns=turns,
    )


def corpus_stats(scenarios: list[Scenario]) -> dict:
    """Scenario count, total dialogue rounds (turns), and the average per
    scenario truncated to 2 decimals (matching how the reference counts were
    reported)."""
    n = len(scenarios)
    rounds = sum(len(s.turns) for s in scenarios)
    avg = math.floor((rounds / n) * 100) / 100 if n else 0.0
    return {"scenarios": n, "rounds": rounds, "avg_rounds": avg}
