"""Structural validator branch coverage.

The 20-document rejection corpus runs in the acceptance suite; here each
rule gets a minimal targeted case against the demo schema
(category, amount, units, year).
"""

import pytest

from chartscout.vega import load_exemplars, resolved_scope, validate_spec
from chartscout.vega.validator import (
    CODE_FIELD_UNRESOLVED,
    CODE_MALFORMED_DOCUMENT,
    CODE_UNKNOWN_CHANNEL,
    CODE_UNSUPPORTED_MARK,
    CODE_UNSUPPORTED_TRANSFORM,
)


def spec(**overrides):
    base = {
        "mark": "line",
        "data": {"name": "demo"},
        "encoding": {
            "x": {"field": "year", "type": "quantitative"},
            "y": {"field": "amount", "type": "quantitative"},
        },
    }
    base.update(overrides)
    return base


def codes(document, schema):
    return validate_spec(document, schema).codes()


def test_exemplars_all_valid(demo_schema):
    exemplars = load_exemplars()
    assert set(exemplars) == {"line", "pie", "bar", "scatter"}
    for name, doc in exemplars.items():
        report = validate_spec(doc, demo_schema)
        assert report.valid, f"{name}: {report.codes()}"


def test_minimal_valid_spec(demo_schema):
    report = validate_spec(spec(), demo_schema)
    assert report.valid
    assert report.to_json() == {"valid": True, "errors": []}


def test_non_object_document(demo_schema):
    for doc in (None, 7, "mark", ["spec"]):
        assert codes(doc, demo_schema) == [CODE_MALFORMED_DOCUMENT]


def test_multi_view_and_unknown_top_level_keys(demo_schema):
    assert CODE_MALFORMED_DOCUMENT in codes(spec(layer=[]), demo_schema)
    assert CODE_MALFORMED_DOCUMENT in codes(spec(projection={}), demo_schema)
    # benign metadata keys stay open
    assert validate_spec(spec(title="t", width=400, description="d"), demo_schema).valid


def test_mark_forms(demo_schema):
    assert validate_spec(spec(mark={"type": "bar"}), demo_schema).valid
    assert codes(spec(mark="area"), demo_schema) == [CODE_UNSUPPORTED_MARK]
    assert codes(spec(mark={"type": "geoshape"}), demo_schema) == [CODE_UNSUPPORTED_MARK]
    assert codes(spec(mark={"fill": "red"}), demo_schema) == [CODE_UNSUPPORTED_MARK]
    no_mark = spec()
    del no_mark["mark"]
    assert codes(no_mark, demo_schema) == [CODE_MALFORMED_DOCUMENT]


def test_data_forms(demo_schema):
    assert validate_spec(spec(data={"values": [{"year": 1}]}), demo_schema).valid
    assert codes(spec(data={"url": "x.csv"}), demo_schema) == [CODE_MALFORMED_DOCUMENT]
    assert codes(spec(data="demo"), demo_schema) == [CODE_MALFORMED_DOCUMENT]
    absent = spec()
    del absent["data"]  # data is optional; the host names the table at render time
    assert validate_spec(absent, demo_schema).valid


def test_encoding_required(demo_schema):
    doc = spec()
    del doc["encoding"]
    assert codes(doc, demo_schema) == [CODE_MALFORMED_DOCUMENT]
    assert codes(spec(encoding=[]), demo_schema) == [CODE_MALFORMED_DOCUMENT]


def test_unknown_channel_skips_field_checks(demo_schema):
    doc = spec()
    doc["encoding"]["size"] = {"field": "ghost", "type": "quantitative"}
    got = codes(doc, demo_schema)
    # the bogus field under the unknown channel is not separately reported
    assert got == [CODE_UNKNOWN_CHANNEL]


def test_channel_def_shapes(demo_schema):
    doc = spec()
    doc["encoding"]["y"] = "amount"
    assert CODE_MALFORMED_DOCUMENT in codes(doc, demo_schema)

    doc = spec()
    doc["encoding"]["y"] = {"field": "amount", "type": "quantitative", "impute": {}}
    assert CODE_MALFORMED_DOCUMENT in codes(doc, demo_schema)

    doc = spec()
    doc["encoding"]["y"] = {"field": "amount", "type": "price"}
    assert codes(doc, demo_schema) == [CODE_MALFORMED_DOCUMENT]

    doc = spec()
    doc["encoding"]["y"] = {"field": "amount", "type": "quantitative", "aggregate": "median"}
    assert CODE_MALFORMED_DOCUMENT in codes(doc, demo_schema)


def test_count_aggregate_needs_no_field(demo_schema):
    doc = spec()
    doc["encoding"]["y"] = {"aggregate": "count", "type": "quantitative"}
    assert validate_spec(doc, demo_schema).valid
    doc["encoding"]["y"] = {"aggregate": "sum", "type": "quantitative"}
    assert codes(doc, demo_schema) == [CODE_MALFORMED_DOCUMENT]


def test_unresolved_encoding_field(demo_schema):
    doc = spec()
    doc["encoding"]["y"] = {"field": "revenue", "type": "quantitative"}
    assert codes(doc, demo_schema) == [CODE_FIELD_UNRESOLVED]


def test_tooltip_list_and_single(demo_schema):
    doc = spec()
    doc["encoding"]["tooltip"] = [
        {"field": "year", "type": "quantitative"},
        {"field": "ghost", "type": "quantitative"},
    ]
    assert codes(doc, demo_schema) == [CODE_FIELD_UNRESOLVED]
    doc["encoding"]["tooltip"] = {"field": "amount", "type": "quantitative"}
    assert validate_spec(doc, demo_schema).valid


# ----- transform scope threading -----


def test_filter_expression_refs(demo_schema):
    ok = spec(transform=[{"filter": "datum.year >= 2015 && datum.amount > 0"}])
    assert validate_spec(ok, demo_schema).valid
    bad = spec(transform=[{"filter": "datum.profit > 0"}])
    assert codes(bad, demo_schema) == [CODE_FIELD_UNRESOLVED]


def test_filter_one_of_predicate(demo_schema):
    ok = spec(transform=[{"filter": {"field": "category", "oneOf": ["a", "b"]}}])
    assert validate_spec(ok, demo_schema).valid
    bad = spec(transform=[{"filter": {"field": "ghost", "oneOf": ["a"]}}])
    assert codes(bad, demo_schema) == [CODE_FIELD_UNRESOLVED]
    other = spec(transform=[{"filter": {"field": "amount", "range": [0, 1]}}])
    assert codes(other, demo_schema) == [CODE_UNSUPPORTED_TRANSFORM]
    scalar = spec(transform=[{"filter": 7}])
    assert codes(scalar, demo_schema) == [CODE_MALFORMED_DOCUMENT]


def test_aggregate_replaces_scope(demo_schema):
    doc = spec(
        transform=[
            {
                "aggregate": [{"op": "sum", "field": "amount", "as": "sum_amount"}],
                "groupby": ["category"],
            }
        ]
    )
    doc["encoding"] = {
        "x": {"field": "category", "type": "nominal"},
        "y": {"field": "sum_amount", "type": "quantitative"},
    }
    assert validate_spec(doc, demo_schema).valid
    assert resolved_scope(doc, demo_schema) == {"category", "sum_amount"}

    # pre-aggregation columns are gone afterwards
    doc["encoding"]["y"] = {"field": "amount", "type": "quantitative"}
    assert codes(doc, demo_schema) == [CODE_FIELD_UNRESOLVED]


def test_aggregate_rejected_op_withholds_name(demo_schema):
    doc = spec(
        transform=[
            {"aggregate": [{"op": "median", "field": "amount", "as": "med"}], "groupby": ["category"]}
        ]
    )
    doc["encoding"] = {
        "x": {"field": "category", "type": "nominal"},
        "y": {"field": "med", "type": "quantitative"},
    }
    assert sorted(codes(doc, demo_schema)) == [CODE_FIELD_UNRESOLVED, CODE_UNSUPPORTED_TRANSFORM]


def test_aggregate_count_entry(demo_schema):
    doc = spec(transform=[{"aggregate": [{"op": "count", "as": "n"}], "groupby": ["category"]}])
    doc["encoding"] = {
        "x": {"field": "category", "type": "nominal"},
        "y": {"field": "n", "type": "quantitative"},
    }
    assert validate_spec(doc, demo_schema).valid


def test_aggregate_malformed_measures(demo_schema):
    doc = spec(transform=[{"aggregate": [], "groupby": ["category"]}])
    assert CODE_MALFORMED_DOCUMENT in codes(doc, demo_schema)
    doc = spec(transform=[{"aggregate": [{"op": "sum", "field": "amount"}], "groupby": []}])
    assert CODE_MALFORMED_DOCUMENT in codes(doc, demo_schema)  # missing as


def test_timeunit_and_bin_extend_scope(demo_schema):
    doc = spec(
        transform=[
            {"timeUnit": "year", "field": "year", "as": "year_year"},
            {"bin": {"maxbins": 10}, "field": "amount", "as": "amount_bin"},
        ]
    )
    doc["encoding"] = {
        "x": {"field": "amount_bin", "type": "quantitative"},
        "y": {"field": "amount_bin_end", "type": "quantitative"},
        "color": {"field": "year_year", "type": "temporal"},
    }
    assert validate_spec(doc, demo_schema).valid
    assert resolved_scope(doc, demo_schema) >= {"year_year", "amount_bin", "amount_bin_end"}


def test_bad_timeunit_unit_flagged_but_name_still_added(demo_schema):
    doc = spec(transform=[{"timeUnit": "dayofyear", "field": "year", "as": "d"}])
    doc["encoding"]["color"] = {"field": "d", "type": "ordinal"}
    assert codes(doc, demo_schema) == [CODE_UNSUPPORTED_TRANSFORM]


def test_bin_maxbins_bounds(demo_schema):
    doc = spec(transform=[{"bin": {"maxbins": 0}, "field": "amount", "as": "b"}])
    assert CODE_MALFORMED_DOCUMENT in codes(doc, demo_schema)
    doc = spec(transform=[{"bin": True, "field": "amount", "as": "b"}])
    assert validate_spec(doc, demo_schema).valid


def test_window_ops(demo_schema):
    doc = spec(
        transform=[
            {
                "window": [{"op": "row_number", "as": "_row"}],
                "sort": [{"field": "amount", "order": "descending"}],
            },
            {"filter": "datum._row <= 5"},
        ]
    )
    assert validate_spec(doc, demo_schema).valid

    lag = spec(transform=[{"window": [{"op": "lag", "field": "amount", "as": "prev"}]}])
    assert validate_spec(lag, demo_schema).valid
    lag_bad = spec(transform=[{"window": [{"op": "lag", "as": "prev"}]}])
    assert CODE_MALFORMED_DOCUMENT in codes(lag_bad, demo_schema)

    unsupported = spec(transform=[{"window": [{"op": "cume_dist", "as": "cd"}]}])
    assert CODE_UNSUPPORTED_TRANSFORM in codes(unsupported, demo_schema)

    bad_sort = spec(
        transform=[{"window": [{"op": "row_number", "as": "r"}], "sort": [{"field": "ghost"}]}]
    )
    assert CODE_FIELD_UNRESOLVED in codes(bad_sort, demo_schema)


def test_calculate(demo_schema):
    doc = spec(transform=[{"calculate": "datum.amount / datum.units", "as": "per_unit"}])
    doc["encoding"]["y"] = {"field": "per_unit", "type": "quantitative"}
    assert validate_spec(doc, demo_schema).valid
    bad = spec(transform=[{"calculate": "datum.nothing * 2", "as": "x2"}])
    assert codes(bad, demo_schema) == [CODE_FIELD_UNRESOLVED]


def test_unknown_transform_entry(demo_schema):
    doc = spec(transform=[{"fold": ["amount", "units"], "as": ["key", "value"]}])
    got = validate_spec(doc, demo_schema)
    assert got.codes() == [CODE_UNSUPPORTED_TRANSFORM]
    assert "fold" in got.errors[0].message

    doc = spec(transform=["filter it"])
    assert codes(doc, demo_schema) == [CODE_MALFORMED_DOCUMENT]
    doc = spec(transform={"filter": "datum.year > 0"})
    assert codes(doc, demo_schema) == [CODE_MALFORMED_DOCUMENT]


def test_error_paths_point_at_location(demo_schema):
    doc = spec(transform=[{"filter": "datum.ghost > 0"}])
    report = validate_spec(doc, demo_schema)
    assert report.errors[0].path == "$.transform[0]"
    doc = spec()
    doc["encoding"]["y"] = {"field": "ghost", "type": "quantitative"}
    report = validate_spec(doc, demo_schema)
    assert report.errors[0].path == "$.encoding.y.field"
