"""Deterministic draft-to-spec compiler.

This is the fallback path when the model cannot produce a usable document:
it must succeed on every valid non-table draft, and its output must pass the
subset validator. No model involvement, no randomness.

Transform mapping notes (the vocabulary has no single-entry image for two of
its forms):

- Sort becomes one window entry computing row_number over the sorted order
  into the helper field "_row".
- TopK becomes a filter on "_row"; when no Sort preceded it, the compiler
  inserts the row_number window itself, costing a second entry.
- WindowDelta becomes a lag window into a helper field plus a calculate
  entry deriving "<column>_delta".

Helper fields start with "_" and are never encoded.
"""

from __future__ import annotations

from ..candidates import CandidateDraft
from ..catalog.model import (
    GRAIN_YEAR,
    ROLE_NOMINAL,
    ROLE_ORDINAL,
    ROLE_QUANTITATIVE,
    ROLE_TEMPORAL,
    TableSchema,
)
from ..catalog.transforms import (
    Aggregate,
    Bin,
    Filter,
    Sort,
    TimeUnit,
    TopK,
    WindowDelta,
    output_schema,
)
from ..errors import UnsupportedChartType

VEGA_LITE_SCHEMA = "https://vega.github.io/schema/vega-lite/v5.json"

_MARK_BY_TYPE = {"line": "line", "bar": "bar", "pie": "arc", "scatter": "point"}
_ROW_FIELD = "_row"


def _literal(value: int | float) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def _field_type(schema: TableSchema, column: str) -> str:
    col = schema.get(column)
    if col is None:
        return "quantitative"
    if col.role == ROLE_TEMPORAL:
        # bare-year columns plot correctly as numbers; real timestamps do not
        return "quantitative" if col.granularity == GRAIN_YEAR else "temporal"
    if col.role == ROLE_NOMINAL:
        return "nominal"
    if col.role == ROLE_ORDINAL:
        return "ordinal"
    return "quantitative"


def compile_transforms(draft: CandidateDraft) -> list[dict]:
    entries: list[dict] = []
    # _row mirrors "current row order" only straight after Sort or TopK;
    # any other transform forces TopK to renumber before filtering
    row_field_ready = False
    for t in draft.transforms:
        if isinstance(t, Filter):
            if t.range is not None:
                lo, hi = t.range
                entries.append(
                    {
                        "filter": f"datum.{t.column} >= {_literal(lo)} && datum.{t.column} <= {_literal(hi)}"
                    }
                )
            else:
                entries.append({"filter": {"field": t.column, "oneOf": list(t.values or ())}})
            row_field_ready = False
        elif isinstance(t, Aggregate):
            measures = []
            for m in t.measures:
                entry = {"op": m.fn, "as": m.output_name}
                if m.fn != "count":
                    entry["field"] = m.column
                measures.append(entry)
            entries.append({"aggregate": measures, "groupby": list(t.group_by)})
            row_field_ready = False
        elif isinstance(t, TimeUnit):
            entries.append({"timeUnit": t.unit, "field": t.column, "as": t.output_name})
            row_field_ready = False
        elif isinstance(t, Bin):
            entries.append({"bin": {"maxbins": t.max_bins}, "field": t.column, "as": t.output_name})
            row_field_ready = False
        elif isinstance(t, Sort):
            order = "descending" if t.direction == "descending" else "ascending"
            entries.append(
                {
                    "window": [{"op": "row_number", "as": _ROW_FIELD}],
                    "sort": [{"field": t.column, "order": order}],
                }
            )
            row_field_ready = True
        elif isinstance(t, TopK):
            if not row_field_ready:
                entries.append({"window": [{"op": "row_number", "as": _ROW_FIELD}]})
                row_field_ready = True
            entries.append({"filter": f"datum.{_ROW_FIELD} <= {t.k}"})
        elif isinstance(t, WindowDelta):
            helper = f"_lag_{t.column}"
            entries.append({"window": [{"op": "lag", "field": t.column, "as": helper}]})
            if t.mode == "difference":
                expr = f"datum.{t.column} - datum.{helper}"
            else:
                expr = f"(datum.{t.column} - datum.{helper}) / datum.{helper} * 100"
            entries.append({"calculate": expr, "as": t.output_name})
            row_field_ready = False
    return entries


def compile_template(draft: CandidateDraft, schema: TableSchema, dataset_id: str) -> dict:
    """Compile a non-table draft into a subset Vega-Lite document.

    ``schema`` is the selection schema the draft was validated against.
    """
    mark = _MARK_BY_TYPE.get(draft.chart_type)
    if mark is None:
        raise UnsupportedChartType(f"no template for chart type {draft.chart_type!r}")

    final_schema = output_schema(schema, draft.transforms)
    encoding: dict[str, dict] = {}
    for channel, f in draft.encoding.items():
        channel_def: dict = {"field": f.column, "type": _field_type(final_schema, f.column)}
        if f.aggregate:
            channel_def["aggregate"] = f.aggregate
            channel_def["type"] = "quantitative"
        if channel == "theta":
            channel_def["type"] = "quantitative"
        encoding[channel] = channel_def

    spec: dict = {
        "$schema": VEGA_LITE_SCHEMA,
        "title": draft.title,
        "data": {"name": dataset_id},
        "mark": mark,
        "encoding": encoding,
    }
    transforms = compile_transforms(draft)
    if transforms:
        spec["transform"] = transforms
    return spec
