"""Chart candidate drafts: the abstract form between idea and rendered spec.

A draft names a chart type, an encoding over post-transform columns, and a
transform chain from the fixed vocabulary. Drafts come out of a model, so
parsing here is defensive: anything structurally off raises and the caller
drops that draft rather than guessing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .catalog.model import TableSchema
from .catalog.transforms import (
    AGGREGATE_FNS,
    Transform,
    output_schema,
    parse_transforms,
    transforms_to_json,
)
from .errors import ChartScoutError, UnknownColumn, UnsupportedChartType

CHART_TYPES = ("line", "bar", "pie", "scatter", "table")
CHANNELS = ("x", "y", "color", "theta")
TITLE_MAX_LEN = 80

# channel obligations per chart type: (required, allowed)
_CHANNEL_RULES: dict[str, tuple[set[str], set[str]]] = {
    "line": ({"x", "y"}, {"x", "y", "color"}),
    "bar": ({"x", "y"}, {"x", "y", "color"}),
    "scatter": ({"x", "y"}, {"x", "y", "color"}),
    "pie": ({"theta", "color"}, {"theta", "color"}),
    "table": (set(), set()),
}


@dataclass(frozen=True)
class EncodingField:
    column: str
    aggregate: str | None = None  # one of AGGREGATE_FNS

    def to_json(self) -> dict:
        out: dict = {"column": self.column}
        if self.aggregate:
            out["aggregate"] = self.aggregate
        return out


@dataclass
class CandidateDraft:
    index: int  # generation order, stable through the whole pipeline
    chart_type: str
    title: str
    encoding: dict[str, EncodingField]
    transforms: list[Transform]
    rationale: str
    columns: list[str] = field(default_factory=list)  # table drafts only

    def to_json(self) -> dict:
        out: dict = {
            "index": self.index,
            "chartType": self.chart_type,
            "title": self.title,
            "encoding": {ch: f.to_json() for ch, f in self.encoding.items()},
            "transforms": transforms_to_json(self.transforms),
            "rationale": self.rationale,
        }
        if self.chart_type == "table":
            out["columns"] = list(self.columns)
        return out

    def identity_key(self) -> str:
        """Dedupe key: chart type plus canonical encoding and transforms."""
        payload = {
            "chartType": self.chart_type,
            "encoding": {ch: f.to_json() for ch, f in sorted(self.encoding.items())},
            "transforms": transforms_to_json(self.transforms),
            "columns": sorted(self.columns) if self.chart_type == "table" else [],
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


class DraftInvalid(ChartScoutError):
    code = "DraftInvalid"


def parse_draft(obj: object, index: int, schema: TableSchema) -> CandidateDraft:
    """Parse and validate one draft against the selected columns.

    ``schema`` is the selection schema; encodings may also reference columns
    a transform in the chain derives from it.
    """
    if not isinstance(obj, dict):
        raise DraftInvalid(f"draft {index}: not an object")

    chart_type = obj.get("chartType")
    if chart_type not in CHART_TYPES:
        raise UnsupportedChartType(f"draft {index}: chartType {chart_type!r}")

    title = obj.get("title")
    if not isinstance(title, str) or not title.strip():
        raise DraftInvalid(f"draft {index}: missing title")
    title = title.strip()
    if len(title) > TITLE_MAX_LEN:
        title = title[:TITLE_MAX_LEN]

    rationale = obj.get("rationale")
    if not isinstance(rationale, str) or not rationale.strip():
        raise DraftInvalid(f"draft {index}: missing rationale")

    transforms = parse_transforms(obj.get("transforms", []))
    final_schema = output_schema(schema, transforms)  # raises on schema breaks

    raw_encoding = obj.get("encoding", {})
    if not isinstance(raw_encoding, dict):
        raise DraftInvalid(f"draft {index}: encoding must be an object")
    encoding: dict[str, EncodingField] = {}
    for channel, spec in raw_encoding.items():
        if channel not in CHANNELS:
            raise DraftInvalid(f"draft {index}: unknown channel {channel!r}")
        if not isinstance(spec, dict):
            raise DraftInvalid(f"draft {index}: channel {channel} must be an object")
        column = spec.get("column")
        if not isinstance(column, str) or not column:
            raise DraftInvalid(f"draft {index}: channel {channel} missing column")
        if not final_schema.has(column):
            raise UnknownColumn(f"draft {index}: channel {channel} references {column!r}")
        aggregate = spec.get("aggregate")
        if aggregate is not None and aggregate not in AGGREGATE_FNS:
            raise DraftInvalid(f"draft {index}: channel {channel} aggregate {aggregate!r}")
        encoding[channel] = EncodingField(column=column, aggregate=aggregate)

    required, allowed = _CHANNEL_RULES[chart_type]
    present = set(encoding)
    if not required <= present:
        raise DraftInvalid(
            f"draft {index}: {chart_type} requires channels {sorted(required)}, got {sorted(present)}"
        )
    if not present <= allowed:
        raise DraftInvalid(
            f"draft {index}: {chart_type} allows channels {sorted(allowed)}, got {sorted(present)}"
        )

    columns: list[str] = []
    if chart_type == "table":
        raw_columns = obj.get("columns")
        if not isinstance(raw_columns, list) or not raw_columns:
            raise DraftInvalid(f"draft {index}: table draft needs a column list")
        for c in raw_columns:
            if not isinstance(c, str) or not final_schema.has(c):
                raise UnknownColumn(f"draft {index}: table column {c!r}")
            if c not in columns:
                columns.append(c)

    return CandidateDraft(
        index=index,
        chart_type=chart_type,
        title=title,
        encoding=encoding,
        transforms=transforms,
        rationale=rationale.strip(),
        columns=columns,
    )
