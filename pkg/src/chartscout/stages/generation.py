"""Stage 3: propose up to n candidate drafts in a single model call.

Per-draft tolerance: a draft that fails parsing is dropped on its own, and
only zero usable drafts triggers the repair round. After parsing, exact
duplicates collapse to the earliest draft and the chart-type mix is
rebalanced: with n >= 4 no type may hold more than ceil(n / 2) slots, and a
round that cannot offer at least 3 distinct types is flagged low-diversity.
Surviving drafts keep their generation index and order throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from ..candidates import CandidateDraft, parse_draft
from ..catalog.model import TableSchema
from ..errors import ChartScoutError, StageOutputInvalid
from ..gateway import Gateway, StagePrompt
from .analysis import ContextAnalysis
from .selection import DataSelection

STAGE = "generation"

MIN_DISTINCT_TYPES = 3
DIVERSITY_FLAG = "lowDiversity"

_SYSTEM = """You propose chart candidates for a live presentation. Work only
with the selected columns and the transform vocabulary below; anything else
will be discarded.

Transforms (JSON forms):
  {{"type": "filter", "column": c, "range": [lo, hi]}}    inclusive bounds
  {{"type": "filter", "column": c, "in": [v1, v2, ...]}}
  {{"type": "aggregate", "groupBy": [c1], "measures": [{{"column": c, "fn": "sum|mean|count|min|max"}}]}}
  {{"type": "timeunit", "column": c, "unit": "year|quarter|month"}}
  {{"type": "bin", "column": c, "maxBins": 1..20}}
  {{"type": "sort", "column": c, "direction": "ascending|descending"}}
  {{"type": "topk", "k": int}}
  {{"type": "windowdelta", "column": c, "mode": "difference|percentChange"}}

Derived column names you may encode: aggregate measures become
"<fn>_<column>" (count becomes "count"), timeunit becomes "<unit>_<column>",
bin becomes "<column>_bin", windowdelta becomes "<column>_delta".

Chart types and required encoding channels:
  line, bar, scatter: x and y (color optional)
  pie: theta and color
  table: no channels; give "columns" instead

Reply with ONLY a JSON object:
{{"candidates": [{{"chartType": ..., "title": ... (max 80 chars), "encoding": {{"x": {{"column": c, "aggregate": optional fn}}, ...}}, "transforms": [...], "rationale": one sentence, "columns": [table drafts only]}}, ...]}}

Propose exactly {n} candidates with genuinely different perspectives: vary
the chart types, include copies at different granularities or ranges only
when the conversation calls for it."""


@dataclass
class GenerationResult:
    drafts: list[CandidateDraft]
    low_diversity: bool = False
    flagged_indices: set[int] = field(default_factory=set)
    dropped: list[dict] = field(default_factory=list)
    warnings: tuple[str, ...] = ()


def parse_draft_list(value: object, schema: TableSchema) -> tuple[list[CandidateDraft], list[dict]]:
    if isinstance(value, dict):
        raw_list = value.get("candidates")
    else:
        raw_list = value
    if not isinstance(raw_list, list):
        raise StageOutputInvalid("generation output needs a 'candidates' list")
    drafts: list[CandidateDraft] = []
    dropped: list[dict] = []
    for i, obj in enumerate(raw_list):
        try:
            drafts.append(parse_draft(obj, i, schema))
        except ChartScoutError as exc:
            dropped.append({"index": i, "reason": exc.code, "detail": str(exc)})
    if not drafts:
        raise StageOutputInvalid(
            f"zero parseable drafts out of {len(raw_list)} "
            f"(first problem: {dropped[0]['detail'] if dropped else 'empty list'})"
        )
    return drafts, dropped


def dedupe_drafts(drafts: list[CandidateDraft]) -> tuple[list[CandidateDraft], list[dict]]:
    seen: dict[str, int] = {}
    kept: list[CandidateDraft] = []
    dropped: list[dict] = []
    for draft in drafts:
        key = draft.identity_key()
        if key in seen:
            dropped.append(
                {"index": draft.index, "reason": "duplicate", "detail": f"same as draft {seen[key]}"}
            )
            continue
        seen[key] = draft.index
        kept.append(draft)
    return kept, dropped


def enforce_diversity(drafts: list[CandidateDraft], n: int) -> GenerationResult:
    """Apply the type cap and the distinct-type floor; order is preserved."""
    result = GenerationResult(drafts=[])
    if n >= 4:
        cap = math.ceil(n / 2)
        counts: dict[str, int] = {}
        capped: list[CandidateDraft] = []
        overflowed: set[str] = set()
        for draft in drafts:
            counts[draft.chart_type] = counts.get(draft.chart_type, 0) + 1
            if counts[draft.chart_type] > cap:
                overflowed.add(draft.chart_type)
                result.dropped.append(
                    {
                        "index": draft.index,
                        "reason": "type-cap",
                        "detail": f"more than {cap} {draft.chart_type} drafts",
                    }
                )
                continue
            capped.append(draft)
        survivors = capped
    else:
        survivors = list(drafts)
        overflowed = set()

    if len(survivors) > n:
        for draft in survivors[n:]:
            result.dropped.append(
                {"index": draft.index, "reason": "over-count", "detail": f"beyond requested {n}"}
            )
        survivors = survivors[:n]

    distinct = {d.chart_type for d in survivors}
    if n >= 4 and len(distinct) < MIN_DISTINCT_TYPES:
        result.low_diversity = True
        result.flagged_indices = {d.index for d in survivors}
    elif overflowed:
        result.flagged_indices = {d.index for d in survivors if d.chart_type in overflowed}

    result.drafts = survivors
    return result


def build_generation_prompt(
    analysis: ContextAnalysis, selection: DataSelection, n: int, schema: TableSchema, prompt_version: str
) -> StagePrompt:
    columns = []
    for name in selection.columns:
        col = schema.get(name)
        columns.append(f"{name} ({col.role if col else 'unknown'})")
    ranges = "; ".join(f"{r.column} in [{r.lo}, {r.hi}]" for r in selection.ranges) or "(none)"
    user = f"""Context analysis:
{json.dumps(analysis.to_json(), indent=2)}

Selected dataset: {selection.dataset_id}
Selected columns: {', '.join(columns)}
Focus ranges: {ranges}
Selection rationale: {selection.rationale or '(none)'}"""
    return StagePrompt(
        stage=STAGE,
        system=_SYSTEM.format(n=n),
        user=user,
        prompt_version=prompt_version,
    )


async def run_generation(
    gateway: Gateway,
    analysis: ContextAnalysis,
    selection: DataSelection,
    n: int,
    schema: TableSchema,
    prompt_version: str,
) -> GenerationResult:
    """One gateway call for all n drafts, then dedupe and diversity."""
    prompt = build_generation_prompt(analysis, selection, n, schema, prompt_version)

    def parse(value: object) -> tuple[list[CandidateDraft], list[dict]]:
        return parse_draft_list(value, schema)

    drafts, parse_dropped = await gateway.complete_structured(prompt, parse)
    drafts, dupe_dropped = dedupe_drafts(drafts)
    result = enforce_diversity(drafts, n)
    result.dropped = parse_dropped + dupe_dropped + result.dropped
    return result
