from .loader import load_catalog, load_dataset
from .model import (
    GRAIN_TIMESTAMP,
    GRAIN_YEAR,
    ROLE_NOMINAL,
    ROLE_ORDINAL,
    ROLE_QUANTITATIVE,
    ROLE_TEMPORAL,
    Catalog,
    ColumnDescriptor,
    ColumnStats,
    Dataset,
    Table,
    TableSchema,
)
from .transforms import (
    Aggregate,
    Bin,
    Filter,
    Measure,
    Sort,
    TimeUnit,
    TopK,
    Transform,
    WindowDelta,
    apply_transforms,
    output_schema,
    parse_transform,
    parse_transforms,
    propagate_schema,
    transforms_to_json,
)

__all__ = [
    "Aggregate",
    "Bin",
    "Catalog",
    "ColumnDescriptor",
    "ColumnStats",
    "Dataset",
    "Filter",
    "GRAIN_TIMESTAMP",
    "GRAIN_YEAR",
    "Measure",
    "ROLE_NOMINAL",
    "ROLE_ORDINAL",
    "ROLE_QUANTITATIVE",
    "ROLE_TEMPORAL",
    "Sort",
    "Table",
    "TableSchema",
    "TimeUnit",
    "TopK",
    "Transform",
    "WindowDelta",
    "apply_transforms",
    "load_catalog",
    "load_dataset",
    "output_schema",
    "parse_transform",
    "parse_transforms",
    "propagate_schema",
    "transforms_to_json",
]
