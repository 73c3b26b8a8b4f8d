"""Stage 4a: turn one draft into a Vega-Lite document.

Runs once per candidate, concurrently across candidates, and in parallel
with the evaluation stage; neither sees the other's output. The model gets
four few-shot exemplars and the draft; whatever comes back must pass the
subset validator. When it cannot, even after the repair round, the
deterministic template compiler takes over, so a valid chart draft always
ends with some document. Table drafts skip this stage entirely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..candidates import CandidateDraft
from ..catalog.model import TableSchema
from ..errors import ChartScoutError, StageOutputInvalid
from ..gateway import Gateway, StagePrompt
from ..vega import compile_template, load_exemplars, validate_spec

STAGE = "specgen"

SOURCE_LLM = "llm"
SOURCE_TEMPLATE = "template"
SOURCE_NONE = "none"

_SYSTEM = """You write Vega-Lite v5 specifications. Constraints:
- single view only; marks limited to line, bar, arc, point
- encoding channels limited to x, y, color, theta, tooltip
- reference the dataset with {"data": {"name": "<dataset id>"}}, never inline values
- transform entries limited to: filter (expression string or field/oneOf),
  aggregate+groupby, timeUnit+field+as, bin+field+as, window (row_number,
  rank, lag), calculate+as
- every encoded field must exist in the named dataset or be derived by your
  own transform entries

Reply with ONLY the JSON document, no prose.

Examples of well-formed documents:
"""


@dataclass
class SpecResult:
    spec: dict | None
    source: str  # llm | template | none
    table_view: dict | None = None
    detail: str = ""


def _exemplar_block() -> str:
    parts = []
    for name, doc in load_exemplars().items():
        parts.append(f"// {name}\n{json.dumps(doc, indent=2)}")
    return "\n\n".join(parts)


def build_specgen_prompt(
    draft: CandidateDraft, schema: TableSchema, dataset_id: str, prompt_version: str
) -> StagePrompt:
    columns = ", ".join(f"{c.name} ({c.role})" for c in schema.columns)
    user = f"""Dataset id: {dataset_id}
Columns: {columns}

Chart draft to realize exactly (keep its transforms and encodings):
{json.dumps(draft.to_json(), indent=2)}"""
    return StagePrompt(
        stage=STAGE,
        system=_SYSTEM + _exemplar_block(),
        user=user,
        prompt_version=prompt_version,
        call_index=draft.index,
    )


async def generate_spec(
    gateway: Gateway,
    draft: CandidateDraft,
    schema: TableSchema,
    dataset_id: str,
    prompt_version: str,
) -> SpecResult:
    """Model first, template on failure; tables bypass both."""
    if draft.chart_type == "table":
        return SpecResult(spec=None, source=SOURCE_NONE, table_view={"columns": list(draft.columns)})

    prompt = build_specgen_prompt(draft, schema, dataset_id, prompt_version)

    def parse(value: object) -> dict:
        if not isinstance(value, dict):
            raise StageOutputInvalid("specification must be a JSON object")
        report = validate_spec(value, schema)
        if not report.valid:
            issues = "; ".join(f"{e.code} at {e.path}: {e.message}" for e in report.errors[:5])
            raise StageOutputInvalid(f"specification rejected: {issues}")
        return value

    try:
        spec = await gateway.complete_structured(prompt, parse)
        return SpecResult(spec=spec, source=SOURCE_LLM)
    except StageOutputInvalid as exc:
        detail = str(exc)
    try:
        spec = compile_template(draft, schema, dataset_id)
        report = validate_spec(spec, schema)
        if not report.valid:
            raise StageOutputInvalid(
                "; ".join(f"{e.code} at {e.path}" for e in report.errors)
            )
        return SpecResult(spec=spec, source=SOURCE_TEMPLATE, detail=detail)
    except ChartScoutError as template_error:
        return SpecResult(
            spec=None,
            source=SOURCE_NONE,
            detail=f"model output unusable ({detail}); template failed ({template_error})",
        )
