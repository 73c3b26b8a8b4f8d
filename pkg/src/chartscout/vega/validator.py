"""Structural validator for the supported Vega-Lite subset.

Single-view specs only, marks line/bar/arc/point, channels
x/y/color/theta/tooltip, and a transform array restricted to the images of
the internal transform vocabulary (filter expressions and oneOf predicates,
aggregate, timeUnit, bin, window over row_number/rank/lag, calculate).

The validator never executes anything. It propagates the column scope
through the transform array, then checks that every referenced field
resolves. Error codes are fixed; messages and JSON paths are advisory.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..catalog.model import TableSchema

CODE_UNSUPPORTED_MARK = "UnsupportedMark"
CODE_UNKNOWN_CHANNEL = "UnknownChannel"
CODE_FIELD_UNRESOLVED = "FieldUnresolved"
CODE_UNSUPPORTED_TRANSFORM = "UnsupportedTransform"
CODE_MALFORMED_DOCUMENT = "MalformedDocument"

ALLOWED_MARKS = {"line", "bar", "arc", "point"}
ALLOWED_CHANNELS = {"x", "y", "color", "theta", "tooltip"}
ALLOWED_FIELD_TYPES = {"quantitative", "nominal", "ordinal", "temporal"}
ALLOWED_AGGREGATES = {"sum", "mean", "count", "min", "max"}
ALLOWED_TIME_UNITS = {"year", "quarter", "month"}
ALLOWED_WINDOW_OPS = {"row_number", "rank", "lag"}

_TOP_LEVEL_KEYS = {
    "$schema", "data", "mark", "encoding", "transform",
    "title", "width", "height", "description", "config", "name",
}
_MULTI_VIEW_KEYS = {"layer", "hconcat", "vconcat", "concat", "facet", "repeat", "spec"}
_CHANNEL_DEF_KEYS = {
    "field", "type", "aggregate", "timeUnit", "bin",
    "title", "sort", "scale", "axis", "legend", "format", "stack",
}

_DATUM_REF_RE = re.compile(r"datum\.([A-Za-z_][A-Za-z0-9_]*)")


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    path: str
    message: str

    def to_json(self) -> dict:
        return {"code": self.code, "path": self.path, "message": self.message}


@dataclass
class ValidationReport:
    errors: list[ValidationIssue] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.errors

    def codes(self) -> list[str]:
        return [e.code for e in self.errors]

    def add(self, code: str, path: str, message: str) -> None:
        self.errors.append(ValidationIssue(code=code, path=path, message=message))

    def to_json(self) -> dict:
        return {"valid": self.valid, "errors": [e.to_json() for e in self.errors]}


def _check_datum_refs(expr: str, scope: set[str], path: str, report: ValidationReport) -> None:
    for name in _DATUM_REF_RE.findall(expr):
        if name not in scope:
            report.add(CODE_FIELD_UNRESOLVED, path, f"datum.{name} does not resolve")


def _walk_filter(entry: dict, scope: set[str], path: str, report: ValidationReport) -> None:
    predicate = entry["filter"]
    if isinstance(predicate, str):
        _check_datum_refs(predicate, scope, path, report)
        return
    if isinstance(predicate, dict):
        if "field" in predicate and "oneOf" in predicate:
            f = predicate["field"]
            if not isinstance(f, str):
                report.add(CODE_MALFORMED_DOCUMENT, path, "filter field must be a string")
            elif f not in scope:
                report.add(CODE_FIELD_UNRESOLVED, path, f"field {f!r} does not resolve")
            if not isinstance(predicate["oneOf"], list):
                report.add(CODE_MALFORMED_DOCUMENT, path, "oneOf must be a list")
            return
        report.add(CODE_UNSUPPORTED_TRANSFORM, path, "unsupported filter predicate form")
        return
    report.add(CODE_MALFORMED_DOCUMENT, path, "filter must be a string or an object")


def _walk_aggregate(entry: dict, scope: set[str], path: str, report: ValidationReport) -> set[str]:
    new_scope: set[str] = set()
    groupby = entry.get("groupby", [])
    if not isinstance(groupby, list):
        report.add(CODE_MALFORMED_DOCUMENT, path, "groupby must be a list")
        groupby = []
    for g in groupby:
        if not isinstance(g, str):
            report.add(CODE_MALFORMED_DOCUMENT, path, "groupby entries must be strings")
        elif g not in scope:
            report.add(CODE_FIELD_UNRESOLVED, path, f"groupby field {g!r} does not resolve")
        else:
            new_scope.add(g)
    measures = entry["aggregate"]
    if not isinstance(measures, list) or not measures:
        report.add(CODE_MALFORMED_DOCUMENT, path, "aggregate must be a non-empty list")
        return new_scope or set(scope)
    for i, m in enumerate(measures):
        mpath = f"{path}.aggregate[{i}]"
        if not isinstance(m, dict) or "op" not in m or "as" not in m:
            report.add(CODE_MALFORMED_DOCUMENT, mpath, "measure needs op and as")
            continue
        op = m["op"]
        if op not in ALLOWED_AGGREGATES:
            report.add(CODE_UNSUPPORTED_TRANSFORM, mpath, f"aggregate op {op!r} not supported")
            continue
        f = m.get("field")
        if op != "count":
            if not isinstance(f, str):
                report.add(CODE_MALFORMED_DOCUMENT, mpath, f"op {op!r} needs a field")
            elif f not in scope:
                report.add(CODE_FIELD_UNRESOLVED, mpath, f"field {f!r} does not resolve")
        if isinstance(m["as"], str) and m["as"]:
            new_scope.add(m["as"])
        else:
            report.add(CODE_MALFORMED_DOCUMENT, mpath, "as must be a non-empty string")
    return new_scope


def _walk_transform_entry(
    entry: object, scope: set[str], path: str, report: ValidationReport
) -> set[str]:
    """Validate one transform entry; returns the scope after it."""
    if not isinstance(entry, dict):
        report.add(CODE_MALFORMED_DOCUMENT, path, "transform entry must be an object")
        return scope

    if "filter" in entry:
        _walk_filter(entry, scope, path, report)
        return scope

    if "aggregate" in entry:
        return _walk_aggregate(entry, scope, path, report)

    if "timeUnit" in entry:
        unit = entry["timeUnit"]
        if unit not in ALLOWED_TIME_UNITS:
            report.add(CODE_UNSUPPORTED_TRANSFORM, path, f"timeUnit {unit!r} not supported")
        f = entry.get("field")
        if not isinstance(f, str):
            report.add(CODE_MALFORMED_DOCUMENT, path, "timeUnit needs a field")
        elif f not in scope:
            report.add(CODE_FIELD_UNRESOLVED, path, f"field {f!r} does not resolve")
        out = entry.get("as")
        if isinstance(out, str) and out:
            return scope | {out}
        report.add(CODE_MALFORMED_DOCUMENT, path, "timeUnit needs a non-empty 'as'")
        return scope

    if "bin" in entry:
        b = entry["bin"]
        ok = b is True or (isinstance(b, dict) and set(b) <= {"maxbins"})
        if ok and isinstance(b, dict):
            maxbins = b.get("maxbins")
            if not isinstance(maxbins, int) or isinstance(maxbins, bool) or not 1 <= maxbins <= 20:
                report.add(CODE_MALFORMED_DOCUMENT, path, "maxbins must be an integer in 1..20")
        elif not ok:
            report.add(CODE_MALFORMED_DOCUMENT, path, "bin must be true or {maxbins}")
        f = entry.get("field")
        if not isinstance(f, str):
            report.add(CODE_MALFORMED_DOCUMENT, path, "bin needs a field")
        elif f not in scope:
            report.add(CODE_FIELD_UNRESOLVED, path, f"field {f!r} does not resolve")
        out = entry.get("as")
        if isinstance(out, str) and out:
            return scope | {out, f"{out}_end"}
        report.add(CODE_MALFORMED_DOCUMENT, path, "bin needs a non-empty 'as'")
        return scope

    if "window" in entry:
        ops = entry["window"]
        new = set(scope)
        if not isinstance(ops, list) or not ops:
            report.add(CODE_MALFORMED_DOCUMENT, path, "window must be a non-empty list")
            return scope
        for i, op_def in enumerate(ops):
            opath = f"{path}.window[{i}]"
            if not isinstance(op_def, dict) or "op" not in op_def or "as" not in op_def:
                report.add(CODE_MALFORMED_DOCUMENT, opath, "window op needs op and as")
                continue
            op = op_def["op"]
            if op not in ALLOWED_WINDOW_OPS:
                report.add(CODE_UNSUPPORTED_TRANSFORM, opath, f"window op {op!r} not supported")
                continue
            f = op_def.get("field")
            if op == "lag":
                if not isinstance(f, str):
                    report.add(CODE_MALFORMED_DOCUMENT, opath, "lag needs a field")
                elif f not in scope:
                    report.add(CODE_FIELD_UNRESOLVED, opath, f"field {f!r} does not resolve")
            if isinstance(op_def["as"], str) and op_def["as"]:
                new.add(op_def["as"])
            else:
                report.add(CODE_MALFORMED_DOCUMENT, opath, "as must be a non-empty string")
        sort = entry.get("sort", [])
        if not isinstance(sort, list):
            report.add(CODE_MALFORMED_DOCUMENT, path, "window sort must be a list")
        else:
            for s in sort:
                if not isinstance(s, dict) or not isinstance(s.get("field"), str):
                    report.add(CODE_MALFORMED_DOCUMENT, path, "window sort entries need a field")
                elif s["field"] not in scope:
                    report.add(CODE_FIELD_UNRESOLVED, path, f"sort field {s['field']!r} does not resolve")
        return new

    if "calculate" in entry:
        expr = entry["calculate"]
        if not isinstance(expr, str):
            report.add(CODE_MALFORMED_DOCUMENT, path, "calculate must be a string expression")
        else:
            _check_datum_refs(expr, scope, path, report)
        out = entry.get("as")
        if isinstance(out, str) and out:
            return scope | {out}
        report.add(CODE_MALFORMED_DOCUMENT, path, "calculate needs a non-empty 'as'")
        return scope

    known = sorted(set(entry) - {"as", "field", "sort", "groupby"})
    report.add(
        CODE_UNSUPPORTED_TRANSFORM,
        path,
        f"transform keys {known} outside the supported set",
    )
    return scope


def _walk_channel_def(
    channel: str, spec: object, scope: set[str], path: str, report: ValidationReport
) -> None:
    if not isinstance(spec, dict):
        report.add(CODE_MALFORMED_DOCUMENT, path, "channel definition must be an object")
        return
    extra = set(spec) - _CHANNEL_DEF_KEYS
    if extra:
        report.add(CODE_MALFORMED_DOCUMENT, path, f"unsupported channel keys {sorted(extra)}")
    ftype = spec.get("type")
    if ftype not in ALLOWED_FIELD_TYPES:
        report.add(CODE_MALFORMED_DOCUMENT, f"{path}.type", f"field type {ftype!r} not supported")
    aggregate = spec.get("aggregate")
    if aggregate is not None and aggregate not in ALLOWED_AGGREGATES:
        report.add(CODE_MALFORMED_DOCUMENT, f"{path}.aggregate", f"aggregate {aggregate!r} not supported")
    time_unit = spec.get("timeUnit")
    if time_unit is not None and time_unit not in ALLOWED_TIME_UNITS:
        report.add(CODE_MALFORMED_DOCUMENT, f"{path}.timeUnit", f"timeUnit {time_unit!r} not supported")
    b = spec.get("bin")
    if b is not None and b is not True and not (isinstance(b, dict) and set(b) <= {"maxbins"}):
        report.add(CODE_MALFORMED_DOCUMENT, f"{path}.bin", "bin must be true or {maxbins}")
    f = spec.get("field")
    if f is None:
        # count is the one aggregate that needs no field
        if aggregate != "count":
            report.add(CODE_MALFORMED_DOCUMENT, path, "channel needs a field")
        return
    if not isinstance(f, str) or not f:
        report.add(CODE_MALFORMED_DOCUMENT, f"{path}.field", "field must be a non-empty string")
        return
    if f not in scope:
        report.add(CODE_FIELD_UNRESOLVED, f"{path}.field", f"field {f!r} does not resolve")


def validate_spec(spec: object, schema: TableSchema) -> ValidationReport:
    """Validate a document against the subset, resolving fields in ``schema``."""
    report = ValidationReport()
    if not isinstance(spec, dict):
        report.add(CODE_MALFORMED_DOCUMENT, "$", f"document must be an object, got {type(spec).__name__}")
        return report

    multi = sorted(set(spec) & _MULTI_VIEW_KEYS)
    if multi:
        report.add(CODE_MALFORMED_DOCUMENT, "$", f"multi-view keys {multi} not supported; single view only")
    unknown = sorted(set(spec) - _TOP_LEVEL_KEYS - _MULTI_VIEW_KEYS)
    if unknown:
        report.add(CODE_MALFORMED_DOCUMENT, "$", f"unsupported top-level keys {unknown}")

    mark = spec.get("mark")
    if mark is None:
        report.add(CODE_MALFORMED_DOCUMENT, "$.mark", "mark is required")
    else:
        mark_type = mark.get("type") if isinstance(mark, dict) else mark
        if mark_type not in ALLOWED_MARKS:
            report.add(
                CODE_UNSUPPORTED_MARK,
                "$.mark",
                f"mark {mark_type!r} not in {sorted(ALLOWED_MARKS)}",
            )

    data = spec.get("data")
    if data is not None:
        ok = isinstance(data, dict) and (
            isinstance(data.get("name"), str) or isinstance(data.get("values"), list)
        )
        if not ok:
            report.add(CODE_MALFORMED_DOCUMENT, "$.data", "data must carry a name or inline values")

    scope = set(schema.names())
    transforms = spec.get("transform")
    if transforms is not None:
        if not isinstance(transforms, list):
            report.add(CODE_MALFORMED_DOCUMENT, "$.transform", "transform must be a list")
        else:
            for i, entry in enumerate(transforms):
                scope = _walk_transform_entry(entry, scope, f"$.transform[{i}]", report)

    encoding = spec.get("encoding")
    if encoding is None:
        report.add(CODE_MALFORMED_DOCUMENT, "$.encoding", "encoding is required")
    elif not isinstance(encoding, dict):
        report.add(CODE_MALFORMED_DOCUMENT, "$.encoding", "encoding must be an object")
    else:
        for channel, channel_spec in encoding.items():
            path = f"$.encoding.{channel}"
            if channel not in ALLOWED_CHANNELS:
                report.add(CODE_UNKNOWN_CHANNEL, path, f"channel {channel!r} not supported")
                continue
            if channel == "tooltip" and isinstance(channel_spec, list):
                for i, item in enumerate(channel_spec):
                    _walk_channel_def(channel, item, scope, f"{path}[{i}]", report)
                continue
            _walk_channel_def(channel, channel_spec, scope, path, report)

    return report


def resolved_scope(spec: dict, schema: TableSchema) -> set[str]:
    """Column scope after the spec's transform array (valid specs only)."""
    scope = set(schema.names())
    report = ValidationReport()
    for i, entry in enumerate(spec.get("transform") or []):
        scope = _walk_transform_entry(entry, scope, f"$.transform[{i}]", report)
    return scope
