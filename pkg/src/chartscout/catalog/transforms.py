"""Fixed transform vocabulary and its interpreter.

Seven forms only. Anything a model proposes outside this vocabulary is
rejected, never guessed at. The semantics below are the contract both this
engine and the naive test evaluator implement independently:

- Filter: range form keeps rows with lo <= value <= hi (inclusive both ends);
  membership form keeps rows whose value is in the given set. Rows with a
  null in the filtered column are dropped by either form.
- Aggregate: groups by the groupBy columns (first-seen group order, null is a
  valid key). sum/mean/min/max skip nulls and yield null for an all-null
  group; count counts rows. Output schema is the groupBy columns followed by
  one column per measure: "count" for fn=count, else "<fn>_<column>".
- TimeUnit: derives "<unit>_<column>". unit=year accepts year- or
  timestamp-granularity temporal columns; quarter and month require
  timestamps. Null in, null out.
- Bin: equal-width bins over [min, max] of the non-null values,
  width = (max - min) / maxBins, index = min(floor((v - min) / width),
  maxBins - 1). Adds "<column>_bin" (start) and "<column>_bin_end". A
  constant column degenerates to the single bin [min, min + 1).
- Sort: stable sort by one column; nulls always placed last regardless of
  direction.
- TopK: first k rows of the current row order.
- WindowDelta: lag-1 difference or percent change over the current row
  order, written to "<column>_delta". The first row, any row whose own or
  previous value is null, and percentChange across a zero previous value
  all yield null. percentChange is (cur - prev) / prev * 100.

Composition is left to right; each transform is validated against the schema
produced by the previous one.
"""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass, field

from ..errors import TransformSchemaMismatch, UnsupportedTransform
from .model import (
    GRAIN_TIMESTAMP,
    GRAIN_YEAR,
    ROLE_NOMINAL,
    ROLE_ORDINAL,
    ROLE_QUANTITATIVE,
    ROLE_TEMPORAL,
    Cell,
    ColumnDescriptor,
    Row,
    Table,
    TableSchema,
)

AGGREGATE_FNS = ("sum", "mean", "count", "min", "max")
TIME_UNITS = ("year", "quarter", "month")
SORT_DIRECTIONS = ("ascending", "descending")
DELTA_MODES = ("difference", "percentChange")
MAX_BINS_LIMIT = 20


# ---------------------------------------------------------------------------
# vocabulary types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Filter:
    column: str
    # exactly one of the two is set
    range: tuple[float, float] | None = None
    values: tuple[Cell, ...] | None = None

    def to_json(self) -> dict:
        if self.range is not None:
            return {"type": "filter", "column": self.column, "range": [self.range[0], self.range[1]]}
        return {"type": "filter", "column": self.column, "in": list(self.values or ())}


@dataclass(frozen=True)
class Measure:
    column: str
    fn: str  # one of AGGREGATE_FNS

    @property
    def output_name(self) -> str:
        return "count" if self.fn == "count" else f"{self.fn}_{self.column}"


@dataclass(frozen=True)
class Aggregate:
    group_by: tuple[str, ...]
    measures: tuple[Measure, ...]

    def to_json(self) -> dict:
        return {
            "type": "aggregate",
            "groupBy": list(self.group_by),
            "measures": [{"column": m.column, "fn": m.fn} for m in self.measures],
        }


@dataclass(frozen=True)
class TimeUnit:
    column: str
    unit: str  # one of TIME_UNITS

    @property
    def output_name(self) -> str:
        return f"{self.unit}_{self.column}"

    def to_json(self) -> dict:
        return {"type": "timeunit", "column": self.column, "unit": self.unit}


@dataclass(frozen=True)
class Bin:
    column: str
    max_bins: int  # 1..20

    @property
    def output_name(self) -> str:
        return f"{self.column}_bin"

    def to_json(self) -> dict:
        return {"type": "bin", "column": self.column, "maxBins": self.max_bins}


@dataclass(frozen=True)
class Sort:
    column: str
    direction: str  # one of SORT_DIRECTIONS

    def to_json(self) -> dict:
        return {"type": "sort", "column": self.column, "direction": self.direction}


@dataclass(frozen=True)
class TopK:
    k: int  # >= 1

    def to_json(self) -> dict:
        return {"type": "topk", "k": self.k}


@dataclass(frozen=True)
class WindowDelta:
    column: str
    mode: str  # one of DELTA_MODES
    lag: int = 1  # fixed; only 1 is accepted

    @property
    def output_name(self) -> str:
        return f"{self.column}_delta"

    def to_json(self) -> dict:
        return {"type": "windowdelta", "column": self.column, "mode": self.mode}


Transform = Filter | Aggregate | TimeUnit | Bin | Sort | TopK | WindowDelta


# ---------------------------------------------------------------------------
# parsing from the JSON wire form
# ---------------------------------------------------------------------------


def _require_str(obj: dict, key: str, kind: str) -> str:
    v = obj.get(key)
    if not isinstance(v, str) or not v:
        raise UnsupportedTransform(f"{kind}: {key!r} must be a non-empty string")
    return v


def _as_number(v: object, context: str) -> float:
    # bool is an int subclass; it is never a valid numeric parameter here
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise UnsupportedTransform(f"{context}: expected a number, got {v!r}")
    return v


def parse_transform(obj: object) -> Transform:
    """Parse one transform from its JSON dict form.

    Raises UnsupportedTransform on anything outside the vocabulary.
    """
    if not isinstance(obj, dict):
        raise UnsupportedTransform(f"transform must be an object, got {type(obj).__name__}")
    kind = obj.get("type")
    if not isinstance(kind, str):
        raise UnsupportedTransform("transform missing 'type'")
    kind = kind.lower()

    if kind == "filter":
        column = _require_str(obj, "column", "filter")
        has_range = "range" in obj
        has_set = "in" in obj
        if has_range == has_set:
            raise UnsupportedTransform("filter: exactly one of 'range' or 'in' required")
        if has_range:
            rng = obj["range"]
            if not isinstance(rng, (list, tuple)) or len(rng) != 2:
                raise UnsupportedTransform("filter: 'range' must be [lo, hi]")
            lo = _as_number(rng[0], "filter range")
            hi = _as_number(rng[1], "filter range")
            if lo > hi:
                raise UnsupportedTransform(f"filter: range lo {lo} exceeds hi {hi}")
            return Filter(column=column, range=(lo, hi))
        values = obj["in"]
        if not isinstance(values, (list, tuple)) or not values:
            raise UnsupportedTransform("filter: 'in' must be a non-empty list")
        for v in values:
            if v is not None and not isinstance(v, (str, int, float)) or isinstance(v, bool):
                raise UnsupportedTransform(f"filter: unsupported member {v!r}")
        return Filter(column=column, values=tuple(values))

    if kind == "aggregate":
        group_by = obj.get("groupBy", [])
        if not isinstance(group_by, (list, tuple)) or any(not isinstance(g, str) or not g for g in group_by):
            raise UnsupportedTransform("aggregate: 'groupBy' must be a list of column names")
        raw_measures = obj.get("measures")
        if not isinstance(raw_measures, (list, tuple)) or not raw_measures:
            raise UnsupportedTransform("aggregate: 'measures' must be a non-empty list")
        measures = []
        for m in raw_measures:
            if not isinstance(m, dict):
                raise UnsupportedTransform("aggregate: each measure must be an object")
            col = _require_str(m, "column", "aggregate measure")
            fn = _require_str(m, "fn", "aggregate measure")
            if fn not in AGGREGATE_FNS:
                raise UnsupportedTransform(f"aggregate: unknown fn {fn!r}")
            measures.append(Measure(column=col, fn=fn))
        return Aggregate(group_by=tuple(group_by), measures=tuple(measures))

    if kind == "timeunit":
        column = _require_str(obj, "column", "timeunit")
        unit = _require_str(obj, "unit", "timeunit")
        if unit not in TIME_UNITS:
            raise UnsupportedTransform(f"timeunit: unknown unit {unit!r}")
        return TimeUnit(column=column, unit=unit)

    if kind == "bin":
        column = _require_str(obj, "column", "bin")
        max_bins = obj.get("maxBins")
        if isinstance(max_bins, bool) or not isinstance(max_bins, int):
            raise UnsupportedTransform("bin: 'maxBins' must be an integer")
        if not 1 <= max_bins <= MAX_BINS_LIMIT:
            raise UnsupportedTransform(f"bin: maxBins {max_bins} outside 1..{MAX_BINS_LIMIT}")
        return Bin(column=column, max_bins=max_bins)

    if kind == "sort":
        column = _require_str(obj, "column", "sort")
        direction = _require_str(obj, "direction", "sort")
        if direction not in SORT_DIRECTIONS:
            raise UnsupportedTransform(f"sort: unknown direction {direction!r}")
        return Sort(column=column, direction=direction)

    if kind == "topk":
        k = obj.get("k")
        if isinstance(k, bool) or not isinstance(k, int):
            raise UnsupportedTransform("topk: 'k' must be an integer")
        if k < 1:
            raise UnsupportedTransform(f"topk: k must be >= 1, got {k}")
        return TopK(k=k)

    if kind == "windowdelta":
        column = _require_str(obj, "column", "windowdelta")
        mode = obj.get("mode")
        if mode not in DELTA_MODES:
            raise UnsupportedTransform(f"windowdelta: unknown mode {mode!r}")
        lag = obj.get("lag", 1)
        if lag != 1:
            raise UnsupportedTransform("windowdelta: only lag=1 is supported")
        return WindowDelta(column=column, mode=mode)

    raise UnsupportedTransform(f"unknown transform type {kind!r}")


def parse_transforms(objs: object) -> list[Transform]:
    if not isinstance(objs, (list, tuple)):
        raise UnsupportedTransform("transforms must be a list")
    return [parse_transform(o) for o in objs]


def transforms_to_json(transforms: list[Transform]) -> list[dict]:
    return [t.to_json() for t in transforms]


# ---------------------------------------------------------------------------
# schema validation and propagation
# ---------------------------------------------------------------------------


def _col_or_raise(schema: TableSchema, name: str, index: int, context: str) -> ColumnDescriptor:
    col = schema.get(name)
    if col is None:
        raise TransformSchemaMismatch(f"transform {index} ({context}): unknown column {name!r}")
    return col


def _check_new_name(schema_names: list[str], name: str, index: int, context: str) -> None:
    if name in schema_names:
        raise TransformSchemaMismatch(f"transform {index} ({context}): output column {name!r} already exists")


def propagate_schema(schema: TableSchema, transform: Transform, index: int = 0) -> TableSchema:
    """Validate one transform against ``schema`` and return the output schema.

    Raises TransformSchemaMismatch with the transform index on any violation.
    """
    if isinstance(transform, Filter):
        col = _col_or_raise(schema, transform.column, index, "filter")
        if transform.range is not None and col.role not in (ROLE_QUANTITATIVE, ROLE_TEMPORAL):
            raise TransformSchemaMismatch(
                f"transform {index} (filter): range filter needs a quantitative or temporal column, "
                f"{transform.column!r} is {col.role}"
            )
        return schema

    if isinstance(transform, Aggregate):
        out: list[ColumnDescriptor] = []
        names: list[str] = []
        for g in transform.group_by:
            col = _col_or_raise(schema, g, index, "aggregate")
            if g in names:
                raise TransformSchemaMismatch(f"transform {index} (aggregate): duplicate groupBy column {g!r}")
            out.append(col)
            names.append(g)
        for m in transform.measures:
            col = _col_or_raise(schema, m.column, index, "aggregate")
            if m.fn in ("sum", "mean") and col.role != ROLE_QUANTITATIVE:
                raise TransformSchemaMismatch(
                    f"transform {index} (aggregate): {m.fn} needs a quantitative column, "
                    f"{m.column!r} is {col.role}"
                )
            if m.fn in ("min", "max") and col.role not in (ROLE_QUANTITATIVE, ROLE_TEMPORAL):
                raise TransformSchemaMismatch(
                    f"transform {index} (aggregate): {m.fn} needs a quantitative or temporal column"
                )
            _check_new_name(names, m.output_name, index, "aggregate")
            if m.fn in ("min", "max"):
                out.append(ColumnDescriptor(m.output_name, col.role, nullable=True, granularity=col.granularity))
            elif m.fn == "count":
                out.append(ColumnDescriptor(m.output_name, ROLE_QUANTITATIVE, nullable=False))
            else:
                out.append(ColumnDescriptor(m.output_name, ROLE_QUANTITATIVE, nullable=True))
            names.append(m.output_name)
        return TableSchema(columns=tuple(out))

    if isinstance(transform, TimeUnit):
        col = _col_or_raise(schema, transform.column, index, "timeunit")
        if col.role != ROLE_TEMPORAL:
            raise TransformSchemaMismatch(
                f"transform {index} (timeunit): {transform.column!r} is {col.role}, not temporal"
            )
        if transform.unit in ("quarter", "month") and col.granularity != GRAIN_TIMESTAMP:
            raise TransformSchemaMismatch(
                f"transform {index} (timeunit): unit {transform.unit!r} needs timestamp granularity"
            )
        _check_new_name(schema.names(), transform.output_name, index, "timeunit")
        if transform.unit == "year":
            new = ColumnDescriptor(transform.output_name, ROLE_TEMPORAL, col.nullable, granularity=GRAIN_YEAR)
        else:
            new = ColumnDescriptor(transform.output_name, ROLE_ORDINAL, col.nullable)
        return TableSchema(columns=schema.columns + (new,))

    if isinstance(transform, Bin):
        col = _col_or_raise(schema, transform.column, index, "bin")
        if col.role not in (ROLE_QUANTITATIVE, ROLE_TEMPORAL):
            raise TransformSchemaMismatch(
                f"transform {index} (bin): {transform.column!r} is {col.role}, not binnable"
            )
        names = schema.names()
        start = transform.output_name
        end = f"{start}_end"
        _check_new_name(names, start, index, "bin")
        _check_new_name(names, end, index, "bin")
        extra = (
            ColumnDescriptor(start, ROLE_QUANTITATIVE, nullable=True),
            ColumnDescriptor(end, ROLE_QUANTITATIVE, nullable=True),
        )
        return TableSchema(columns=schema.columns + extra)

    if isinstance(transform, Sort):
        _col_or_raise(schema, transform.column, index, "sort")
        return schema

    if isinstance(transform, TopK):
        return schema

    if isinstance(transform, WindowDelta):
        col = _col_or_raise(schema, transform.column, index, "windowdelta")
        if col.role != ROLE_QUANTITATIVE:
            raise TransformSchemaMismatch(
                f"transform {index} (windowdelta): {transform.column!r} is {col.role}, not quantitative"
            )
        _check_new_name(schema.names(), transform.output_name, index, "windowdelta")
        new = ColumnDescriptor(transform.output_name, ROLE_QUANTITATIVE, nullable=True)
        return TableSchema(columns=schema.columns + (new,))

    raise UnsupportedTransform(f"unhandled transform {transform!r}")


def output_schema(schema: TableSchema, transforms: list[Transform]) -> TableSchema:
    """Schema after the whole chain; validates every step."""
    current = schema
    for i, t in enumerate(transforms):
        current = propagate_schema(current, t, i)
    return current


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


def _apply_filter(rows: list[Row], t: Filter) -> list[Row]:
    out = []
    if t.range is not None:
        lo, hi = t.range
        for row in rows:
            v = row.get(t.column)
            if v is None:
                continue
            if lo <= v <= hi:  # type: ignore[operator]
                out.append(row)
    else:
        allowed = set(t.values or ())
        for row in rows:
            v = row.get(t.column)
            if v is None:
                continue
            if v in allowed:
                out.append(row)
    return out


def _apply_aggregate(rows: list[Row], t: Aggregate) -> list[Row]:
    # first-seen group order keeps output deterministic
    order: list[tuple] = []
    groups: dict[tuple, list[Row]] = {}
    for row in rows:
        key = tuple(row.get(g) for g in t.group_by)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)

    out: list[Row] = []
    for key in order:
        members = groups[key]
        new_row: Row = {g: key[i] for i, g in enumerate(t.group_by)}
        for m in t.measures:
            if m.fn == "count":
                new_row[m.output_name] = len(members)
                continue
            values = [r.get(m.column) for r in members]
            values = [v for v in values if v is not None]
            if not values:
                new_row[m.output_name] = None
            elif m.fn == "sum":
                new_row[m.output_name] = _numeric_sum(values)
            elif m.fn == "mean":
                new_row[m.output_name] = _numeric_sum(values) / len(values)
            elif m.fn == "min":
                new_row[m.output_name] = min(values)  # type: ignore[type-var]
            elif m.fn == "max":
                new_row[m.output_name] = max(values)  # type: ignore[type-var]
        out.append(new_row)
    return out


def _numeric_sum(values: list) -> int | float:
    # plain left-to-right accumulation; summation order is part of the contract
    total: int | float = 0
    for v in values:
        total += v
    return total


def _time_part(value: Cell, unit: str, granularity: str | None) -> Cell:
    if value is None:
        return None
    if granularity == GRAIN_YEAR:
        return value  # unit=year only; validated upstream
    dt = datetime.datetime.fromtimestamp(value / 1000.0, tz=datetime.timezone.utc)  # type: ignore[operator]
    if unit == "year":
        return dt.year
    if unit == "quarter":
        return (dt.month - 1) // 3 + 1
    return dt.month


def _apply_timeunit(rows: list[Row], t: TimeUnit, granularity: str | None) -> list[Row]:
    out = []
    for row in rows:
        new_row = dict(row)
        new_row[t.output_name] = _time_part(row.get(t.column), t.unit, granularity)
        out.append(new_row)
    return out


def _apply_bin(rows: list[Row], t: Bin) -> list[Row]:
    values = [row.get(t.column) for row in rows]
    present = [v for v in values if v is not None]
    start_name = t.output_name
    end_name = f"{start_name}_end"
    out = []
    if not present:
        for row in rows:
            new_row = dict(row)
            new_row[start_name] = None
            new_row[end_name] = None
            out.append(new_row)
        return out
    lo = min(present)
    hi = max(present)
    if lo == hi:
        for row in rows:
            new_row = dict(row)
            if row.get(t.column) is None:
                new_row[start_name] = None
                new_row[end_name] = None
            else:
                new_row[start_name] = lo
                new_row[end_name] = lo + 1
            out.append(new_row)
        return out
    width = (hi - lo) / t.max_bins
    for row in rows:
        new_row = dict(row)
        v = row.get(t.column)
        if v is None:
            new_row[start_name] = None
            new_row[end_name] = None
        else:
            idx = min(int(math.floor((v - lo) / width)), t.max_bins - 1)
            start = lo + idx * width
            new_row[start_name] = start
            new_row[end_name] = start + width
        out.append(new_row)
    return out


def _apply_sort(rows: list[Row], t: Sort) -> list[Row]:
    present = [r for r in rows if r.get(t.column) is not None]
    absent = [r for r in rows if r.get(t.column) is None]
    ordered = sorted(present, key=lambda r: r[t.column], reverse=(t.direction == "descending"))  # type: ignore[arg-type]
    return ordered + absent


def _apply_windowdelta(rows: list[Row], t: WindowDelta) -> list[Row]:
    out = []
    prev: Cell = None
    for i, row in enumerate(rows):
        new_row = dict(row)
        cur = row.get(t.column)
        if i == 0 or cur is None or prev is None:
            new_row[t.output_name] = None
        elif t.mode == "difference":
            new_row[t.output_name] = cur - prev  # type: ignore[operator]
        else:  # percentChange
            new_row[t.output_name] = None if prev == 0 else (cur - prev) / prev * 100  # type: ignore[operator]
        prev = cur
        out.append(new_row)
    return out


def apply_transforms(table: Table, transforms: list[Transform]) -> Table:
    """Run a transform chain over ``table``, returning a new Table.

    The input table is never mutated. Every step is schema-validated before
    it runs; TransformSchemaMismatch names the offending transform index.
    """
    schema = table.schema
    rows = [dict(r) for r in table.rows]
    for i, t in enumerate(transforms):
        next_schema = propagate_schema(schema, t, i)
        if isinstance(t, Filter):
            rows = _apply_filter(rows, t)
        elif isinstance(t, Aggregate):
            rows = _apply_aggregate(rows, t)
        elif isinstance(t, TimeUnit):
            col = schema.get(t.column)
            rows = _apply_timeunit(rows, t, col.granularity if col else None)
        elif isinstance(t, Bin):
            rows = _apply_bin(rows, t)
        elif isinstance(t, Sort):
            rows = _apply_sort(rows, t)
        elif isinstance(t, TopK):
            rows = rows[: t.k]
        elif isinstance(t, WindowDelta):
            rows = _apply_windowdelta(rows, t)
        schema = next_schema
    # rows may carry stale keys only if a transform dropped columns; aggregate
    # already rebuilds its rows, so a final projection keeps rows honest
    names = schema.names()
    rows = [{n: r.get(n) for n in names} for r in rows]
    return Table(schema=schema, rows=rows)
