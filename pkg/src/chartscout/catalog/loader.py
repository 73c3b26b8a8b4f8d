"""Dataset loading, schema inference, and fingerprinting.

Sources are CSV files (RFC 4180, first row is the header) and JSON files
holding an array of flat objects, discovered under a configured data
directory. The file stem becomes the dataset id and display name.

Inference rules, applied per column over the non-null cells:

1. temporal: the column name contains "year", "date", or "time"
   (case-insensitive) and every value is either an ISO-8601 date/datetime or
   a four-digit year in [1000, 2999]. Years stay integers (year
   granularity); dates become UTC epoch milliseconds (timestamp
   granularity). A column mixing the two granularities is malformed.
2. quantitative: every value parses as a number.
3. nominal: everything else. The ordinal role is never inferred; pass
   column names through ``ordinal_columns`` to assign it explicitly.

The cell tokens "", "null", "na", and "n/a" (case-insensitive) are nulls.
A dataset fingerprint is the SHA-256 of the file bytes, so any byte change,
including row reordering, produces a new fingerprint.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
import re
from pathlib import Path

from ..errors import DuplicateColumn, EmptyDataset, MalformedInput
from .model import (
    GRAIN_TIMESTAMP,
    GRAIN_YEAR,
    ROLE_NOMINAL,
    ROLE_ORDINAL,
    ROLE_QUANTITATIVE,
    ROLE_TEMPORAL,
    Catalog,
    Cell,
    ColumnDescriptor,
    ColumnStats,
    Dataset,
    Table,
    TableSchema,
)

NULL_TOKENS = {"", "null", "na", "n/a"}
TEMPORAL_NAME_RE = re.compile(r"year|date|time", re.IGNORECASE)
YEAR_RE = re.compile(r"^\d{4}$")
SAMPLE_LIMIT = 10


def _is_null_token(raw: str) -> bool:
    return raw.strip().lower() in NULL_TOKENS


def _parse_number(raw: str) -> int | float | None:
    text = raw.strip()
    if not text:
        return None
    try:
        value = int(text)
        return value
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        return None
    # inf/nan are not data values; let the column fall through to nominal
    if value != value or value in (float("inf"), float("-inf")):
        return None
    return value


def _parse_iso_date(raw: str) -> int | None:
    """ISO-8601 date or datetime to UTC epoch milliseconds, else None."""
    text = raw.strip()
    if len(text) < 8 or text[4:5] != "-":
        return None
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.datetime.fromisoformat(text)
    except ValueError:
        return None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=datetime.timezone.utc)
    return int(dt.timestamp() * 1000)


def _classify_column(name: str, raw_values: list) -> tuple[str, str | None, list[Cell]]:
    """Return (role, granularity, normalized_values) for one column."""
    present = [(i, v) for i, v in enumerate(raw_values) if v is not None]
    normalized: list[Cell] = list(raw_values)

    if present and TEMPORAL_NAME_RE.search(name):
        years = 0
        stamps = 0
        converted: dict[int, int] = {}
        for i, v in present:
            if isinstance(v, str):
                if YEAR_RE.match(v.strip()) and 1000 <= int(v.strip()) <= 2999:
                    converted[i] = int(v.strip())
                    years += 1
                    continue
                ms = _parse_iso_date(v)
                if ms is not None:
                    converted[i] = ms
                    stamps += 1
                    continue
                break
            if isinstance(v, int) and not isinstance(v, bool) and 1000 <= v <= 2999:
                converted[i] = v
                years += 1
                continue
            break
        else:
            if years and stamps:
                raise MalformedInput(
                    f"column {name!r} mixes bare years and full dates; "
                    "one granularity per column"
                )
            for i, v in converted.items():
                normalized[i] = v
            grain = GRAIN_YEAR if years else GRAIN_TIMESTAMP
            return ROLE_TEMPORAL, grain, normalized

    if present:
        numeric: dict[int, int | float] = {}
        for i, v in present:
            if isinstance(v, bool):
                break
            if isinstance(v, (int, float)):
                numeric[i] = v
                continue
            parsed = _parse_number(v) if isinstance(v, str) else None
            if parsed is None:
                break
            numeric[i] = parsed
        else:
            for i, v in numeric.items():
                normalized[i] = v
            return ROLE_QUANTITATIVE, None, normalized

    # nominal keeps values as given; booleans become strings for stability
    for i, v in enumerate(normalized):
        if isinstance(v, bool):
            normalized[i] = "true" if v else "false"
    return ROLE_NOMINAL, None, normalized


def _column_stats(role: str, values: list[Cell]) -> ColumnStats:
    null_count = sum(1 for v in values if v is None)
    seen: list[Cell] = []
    seen_set = set()
    for v in values:
        if v is None:
            continue
        key = (type(v).__name__, v)
        if key not in seen_set:
            seen_set.add(key)
            seen.append(v)
    min_value = max_value = None
    if role in (ROLE_QUANTITATIVE, ROLE_TEMPORAL) and seen:
        numbers = [v for v in values if v is not None]
        min_value = min(numbers)  # type: ignore[type-var]
        max_value = max(numbers)  # type: ignore[type-var]
    return ColumnStats(
        distinct_count=len(seen),
        null_count=null_count,
        min_value=min_value,
        max_value=max_value,
        sample_values=tuple(seen[:SAMPLE_LIMIT]),
    )


def _read_csv(path: Path, raw: bytes) -> tuple[list[str], list[list]]:
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise MalformedInput(f"{path.name}: not valid UTF-8 ({exc.reason})") from exc
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDataset(f"{path.name}: file is empty") from None
    names = [h.strip() for h in header]
    if any(not n for n in names):
        raise MalformedInput(f"{path.name}: blank column name in header")
    rows = []
    for line_no, record in enumerate(reader, start=2):
        if not record:
            continue  # trailing blank line
        if len(record) != len(names):
            raise MalformedInput(
                f"{path.name} line {line_no}: expected {len(names)} fields, got {len(record)}"
            )
        rows.append([None if _is_null_token(cell) else cell.strip() for cell in record])
    return names, rows


def _read_json(path: Path, raw: bytes) -> tuple[list[str], list[list]]:
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"{path.name}: invalid JSON ({exc})") from exc
    if not isinstance(data, list):
        raise MalformedInput(f"{path.name}: top level must be an array of objects")
    names: list[str] = []
    for i, record in enumerate(data):
        if not isinstance(record, dict):
            raise MalformedInput(f"{path.name} record {i}: expected an object")
        for key in record:
            if key not in names:
                names.append(key)
    rows = []
    for i, record in enumerate(data):
        row = []
        for name in names:
            v = record.get(name)
            if isinstance(v, (dict, list)):
                raise MalformedInput(f"{path.name} record {i}: field {name!r} is nested")
            if isinstance(v, str) and _is_null_token(v):
                v = None
            elif isinstance(v, str):
                v = v.strip()
            row.append(v)
        rows.append(row)
    return names, rows


def load_dataset(path: str | Path, ordinal_columns: set[str] | None = None) -> Dataset:
    """Load one CSV or JSON file into a Dataset.

    Raises EmptyDataset, MalformedInput, or DuplicateColumn.
    """
    path = Path(path)
    raw = path.read_bytes()
    fingerprint = hashlib.sha256(raw).hexdigest()

    if path.suffix.lower() == ".csv":
        names, value_rows = _read_csv(path, raw)
    elif path.suffix.lower() == ".json":
        names, value_rows = _read_json(path, raw)
    else:
        raise MalformedInput(f"{path.name}: unsupported file type {path.suffix!r}")

    seen = set()
    for n in names:
        if n in seen:
            raise DuplicateColumn(f"{path.name}: column {n!r} appears twice")
        seen.add(n)
    if not names:
        raise EmptyDataset(f"{path.name}: no columns")
    if not value_rows:
        raise EmptyDataset(f"{path.name}: no data rows")

    ordinals = ordinal_columns or set()
    columns: list[ColumnDescriptor] = []
    per_column: list[list[Cell]] = []
    for idx, name in enumerate(names):
        raw_values = [row[idx] for row in value_rows]
        role, grain, values = _classify_column(name, raw_values)
        if name in ordinals:
            role, grain = ROLE_ORDINAL, None
        nullable = any(v is None for v in values)
        columns.append(ColumnDescriptor(name=name, role=role, nullable=nullable, granularity=grain))
        per_column.append(values)

    rows = [
        {columns[c].name: per_column[c][r] for c in range(len(columns))}
        for r in range(len(value_rows))
    ]
    stats = {
        col.name: _column_stats(col.role, per_column[i]) for i, col in enumerate(columns)
    }
    return Dataset(
        dataset_id=path.stem,
        name=path.stem,
        table=Table(schema=TableSchema(columns=tuple(columns)), rows=rows),
        stats=stats,
        fingerprint=fingerprint,
        source_path=str(path),
    )


def load_catalog(data_dir: str | Path, ordinal_columns: set[str] | None = None) -> Catalog:
    """Discover and load every .csv and .json file directly under ``data_dir``."""
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise MalformedInput(f"data directory {data_dir} does not exist")
    catalog = Catalog()
    for path in sorted(data_dir.iterdir()):
        if path.suffix.lower() not in (".csv", ".json") or not path.is_file():
            continue
        if path.stem in catalog.datasets:
            raise DuplicateColumn(f"dataset id {path.stem!r} provided by more than one file")
        catalog.datasets[path.stem] = load_dataset(path, ordinal_columns)
    return catalog
