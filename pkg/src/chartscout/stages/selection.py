"""Stage 2: pick the dataset and columns the suggestions should draw on.

The model's raw pick is never trusted: validate_selection drops unknown
columns, restricts ranges to numeric and time columns it kept, and clamps
range endpoints to the observed data extent. Validation is idempotent, so
running it over an already-validated selection changes nothing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..catalog.model import ROLE_QUANTITATIVE, ROLE_TEMPORAL, Catalog
from ..errors import EmptyCatalog, NoValidColumns, StageOutputInvalid, UnknownDataset
from ..gateway import Gateway, StagePrompt
from .analysis import ContextAnalysis, describe_catalog

STAGE = "selection"

MAX_COLUMNS = 6

_SYSTEM = """You choose the data to visualize next in a live presentation.
Pick exactly one dataset and the columns (at most 6) that best serve the
stated objectives, plus optional value ranges to focus on.

Reply with ONLY a JSON object of this exact shape:
{"datasetId": string, "columns": [string, ...], "ranges": [{"column": string, "lo": number, "hi": number}, ...], "selectionRationale": string}

Use only dataset ids and column names that appear in the catalog below.
Ranges are optional and only meaningful for numeric or time columns."""


@dataclass(frozen=True)
class ColumnRange:
    column: str
    lo: float
    hi: float

    def to_json(self) -> dict:
        return {"column": self.column, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class DataSelection:
    dataset_id: str
    columns: tuple[str, ...]
    ranges: tuple[ColumnRange, ...]
    rationale: str
    warnings: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "datasetId": self.dataset_id,
            "columns": list(self.columns),
            "ranges": [r.to_json() for r in self.ranges],
            "selectionRationale": self.rationale,
        }

    def canonical(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


def parse_selection(value: object) -> dict:
    """Shape check only; semantic validation happens against the catalog."""
    if not isinstance(value, dict):
        raise StageOutputInvalid("selection must be a JSON object")
    dataset_id = value.get("datasetId")
    if not isinstance(dataset_id, str) or not dataset_id:
        raise StageOutputInvalid("selection is missing datasetId")
    columns = value.get("columns")
    if not isinstance(columns, list) or not columns:
        raise StageOutputInvalid("selection needs a non-empty column list")
    if not all(isinstance(c, str) for c in columns):
        raise StageOutputInvalid("selection columns must be strings")
    ranges = value.get("ranges", [])
    if not isinstance(ranges, list):
        raise StageOutputInvalid("selection ranges must be a list")
    rationale = value.get("selectionRationale", "")
    if not isinstance(rationale, str):
        rationale = str(rationale)
    return {
        "datasetId": dataset_id,
        "columns": columns,
        "ranges": ranges,
        "selectionRationale": rationale,
    }


def validate_selection(raw: dict, catalog: Catalog) -> DataSelection:
    """Reconcile a raw selection with what actually exists.

    Raises UnknownDataset or NoValidColumns; anything less fatal is repaired
    in place and noted in warnings. Never widens a range beyond the data.
    """
    dataset = catalog.get(raw["datasetId"])
    if dataset is None:
        raise UnknownDataset(f"selection names unknown dataset {raw['datasetId']!r}")

    warnings: list[str] = []
    columns: list[str] = []
    for name in raw["columns"]:
        if not dataset.schema.has(name):
            warnings.append(f"droppedUnknownColumn:{name}")
            continue
        if name not in columns:
            columns.append(name)
    if not columns:
        raise NoValidColumns(f"selection kept no valid columns for dataset {dataset.dataset_id!r}")
    if len(columns) > MAX_COLUMNS:
        columns = columns[:MAX_COLUMNS]
        warnings.append("columnsTruncated")

    ranges: list[ColumnRange] = []
    for entry in raw.get("ranges", []):
        if not isinstance(entry, dict):
            warnings.append("droppedMalformedRange")
            continue
        column = entry.get("column")
        if column not in columns:
            warnings.append(f"droppedRangeUnknownColumn:{column}")
            continue
        role = dataset.schema.role_of(column)
        if role not in (ROLE_QUANTITATIVE, ROLE_TEMPORAL):
            warnings.append(f"droppedRangeNonNumeric:{column}")
            continue
        lo, hi = entry.get("lo"), entry.get("hi")
        if (
            isinstance(lo, bool)
            or isinstance(hi, bool)
            or not isinstance(lo, (int, float))
            or not isinstance(hi, (int, float))
        ):
            warnings.append(f"droppedRangeNonNumericBounds:{column}")
            continue
        stat = dataset.stats.get(column)
        if stat is not None and stat.min_value is not None:
            clamped_lo = max(lo, stat.min_value)
            clamped_hi = min(hi, stat.max_value)
            if (clamped_lo, clamped_hi) != (lo, hi):
                warnings.append(f"rangeClamped:{column}")
            lo, hi = clamped_lo, clamped_hi
        if lo > hi:
            warnings.append(f"droppedEmptyRange:{column}")
            continue
        if any(r.column == column for r in ranges):
            warnings.append(f"droppedDuplicateRange:{column}")
            continue
        ranges.append(ColumnRange(column=column, lo=lo, hi=hi))

    return DataSelection(
        dataset_id=dataset.dataset_id,
        columns=tuple(columns),
        ranges=tuple(ranges),
        rationale=raw.get("selectionRationale", ""),
        warnings=tuple(warnings),
    )


def build_selection_prompt(analysis: ContextAnalysis, catalog: Catalog, prompt_version: str) -> StagePrompt:
    user = f"""Catalog:
{describe_catalog(catalog)}

Context analysis:
{json.dumps(analysis.to_json(), indent=2)}"""
    return StagePrompt(stage=STAGE, system=_SYSTEM, user=user, prompt_version=prompt_version)


async def run_selection(
    gateway: Gateway, analysis: ContextAnalysis, catalog: Catalog, prompt_version: str
) -> DataSelection:
    if not catalog.datasets:
        raise EmptyCatalog("no datasets loaded; nothing to select from")
    prompt = build_selection_prompt(analysis, catalog, prompt_version)

    def parse_and_validate(value: object) -> DataSelection:
        return validate_selection(parse_selection(value), catalog)

    try:
        return await gateway.complete_structured(prompt, parse_and_validate)
    except StageOutputInvalid as exc:
        # keep the specific failure visible when repair could not fix it
        cause = exc.__cause__
        if isinstance(cause, (UnknownDataset, NoValidColumns)):
            raise cause
        raise
