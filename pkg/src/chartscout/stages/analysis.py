"""Stage 1: distill the presentation context into a compact analysis.

Input is the session snapshot (transcript window, active chart, dataset
summaries, audience profile); output is a shape-checked ContextAnalysis.
Over-long lists are truncated with a warning rather than rejected; a missing
topic, objectives, or key points is a shape failure and goes through the
repair round.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..catalog.model import Catalog
from ..errors import InsufficientContext, StageOutputInvalid
from ..gateway import Gateway, StagePrompt
from ..session import SessionSnapshot

STAGE = "analysis"

MAX_KEY_POINTS = 5
MAX_OBJECTIVES = 5
MAX_INTEREST_GUESSES = 5

_SYSTEM = """You support a live data presentation. From the conversation so far,
the chart on screen, and the audience description, identify what is being
discussed and what the presenter is trying to achieve.

Reply with ONLY a JSON object of this exact shape:
{"topic": string, "keyPoints": [string, ...], "audienceInterests": [string, ...], "objectives": [string, ...]}

topic: one line naming the subject under discussion.
keyPoints: 1 to 5 concrete points raised so far.
audienceInterests: 0 to 5 things this audience seems to care about.
objectives: 1 to 5 things the presenter wants the audience to take away."""


@dataclass(frozen=True)
class ContextAnalysis:
    topic: str
    key_points: tuple[str, ...]
    audience_interests: tuple[str, ...]
    objectives: tuple[str, ...]
    warnings: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "topic": self.topic,
            "keyPoints": list(self.key_points),
            "audienceInterests": list(self.audience_interests),
            "objectives": list(self.objectives),
        }

    def canonical(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


def _clean_list(value: object, field_name: str) -> list[str]:
    if value is None:
        return []
    if not isinstance(value, list):
        raise StageOutputInvalid(f"{field_name} must be a list of strings")
    out = []
    for item in value:
        if isinstance(item, str) and item.strip():
            out.append(item.strip())
    return out


def parse_analysis(value: object) -> ContextAnalysis:
    if not isinstance(value, dict):
        raise StageOutputInvalid("analysis must be a JSON object")
    topic = value.get("topic")
    if not isinstance(topic, str) or not topic.strip():
        raise StageOutputInvalid("analysis is missing a topic")

    warnings: list[str] = []
    key_points = _clean_list(value.get("keyPoints"), "keyPoints")
    if not key_points:
        raise StageOutputInvalid("analysis needs at least one key point")
    if len(key_points) > MAX_KEY_POINTS:
        key_points = key_points[:MAX_KEY_POINTS]
        warnings.append("keyPointsTruncated")

    objectives = _clean_list(value.get("objectives"), "objectives")
    if not objectives:
        raise StageOutputInvalid("analysis is missing objectives")
    if len(objectives) > MAX_OBJECTIVES:
        objectives = objectives[:MAX_OBJECTIVES]
        warnings.append("objectivesTruncated")

    interests = _clean_list(value.get("audienceInterests"), "audienceInterests")
    if len(interests) > MAX_INTEREST_GUESSES:
        interests = interests[:MAX_INTEREST_GUESSES]
        warnings.append("audienceInterestsTruncated")

    return ContextAnalysis(
        topic=topic.strip(),
        key_points=tuple(key_points),
        audience_interests=tuple(interests),
        objectives=tuple(objectives),
        warnings=tuple(warnings),
    )


def describe_catalog(catalog: Catalog) -> str:
    lines = []
    for dataset_id in catalog.ids():
        ds = catalog.datasets[dataset_id]
        cols = []
        for col in ds.schema.columns:
            stat = ds.stats.get(col.name)
            extent = ""
            if stat and stat.min_value is not None:
                extent = f" range {stat.min_value}..{stat.max_value}"
            cols.append(f"{col.name} ({col.role}{extent})")
        lines.append(f"- {dataset_id}: {ds.row_count} rows; columns: {', '.join(cols)}")
    return "\n".join(lines)


def describe_active_chart(snapshot: SessionSnapshot) -> str:
    chart = snapshot.active_chart
    if chart is None:
        return "No chart is currently displayed."
    if chart.kind == "table":
        return f"Currently displayed: a table of columns {', '.join(chart.columns)} (title: {chart.title!r})."
    spec = chart.spec or {}
    mark = spec.get("mark")
    mark = mark.get("type") if isinstance(mark, dict) else mark
    fields = []
    for channel, definition in (spec.get("encoding") or {}).items():
        if isinstance(definition, dict) and definition.get("field"):
            fields.append(f"{channel}={definition['field']}")
    return (
        f"Currently displayed: a {mark} chart on dataset {chart.dataset_id!r} "
        f"({', '.join(fields)}; title: {chart.title!r})."
    )


def build_analysis_prompt(snapshot: SessionSnapshot) -> StagePrompt:
    profile = snapshot.profile
    transcript = snapshot.transcript_text() or "(no conversation yet)"
    user = f"""Datasets available:
{describe_catalog(snapshot.catalog)}

{describe_active_chart(snapshot)}

Audience: expertise {profile.expertise}, domain familiarity {profile.domain_familiarity}, interests: {', '.join(profile.interests) or '(none given)'}

Conversation (most recent {len(snapshot.transcript_window)} utterances):
{transcript}"""
    return StagePrompt(
        stage=STAGE,
        system=_SYSTEM,
        user=user,
        prompt_version=snapshot.prompt_version,
    )


async def run_analysis(gateway: Gateway, snapshot: SessionSnapshot) -> ContextAnalysis:
    if not snapshot.transcript_window and snapshot.active_chart is None:
        raise InsufficientContext("nothing to analyze: no utterances and no chart on display")
    prompt = build_analysis_prompt(snapshot)
    return await gateway.complete_structured(prompt, parse_analysis)
