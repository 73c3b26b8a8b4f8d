"""Core data model for loaded datasets.

Tables are kept as plain lists of row dicts. That is deliberate: datasets in
this system are presentation-sized (thousands of rows, not millions), and the
transform engine must be bit-for-bit deterministic so results can be compared
cell by cell against an independent evaluator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# Column roles. "ordinal" is never inferred; it is assigned only through
# explicit loader configuration.
ROLE_QUANTITATIVE = "quantitative"
ROLE_NOMINAL = "nominal"
ROLE_ORDINAL = "ordinal"
ROLE_TEMPORAL = "temporal"

ROLES = (ROLE_QUANTITATIVE, ROLE_NOMINAL, ROLE_ORDINAL, ROLE_TEMPORAL)

# Granularity of temporal columns after normalization.
GRAIN_YEAR = "year"
GRAIN_TIMESTAMP = "timestamp"

Cell = int | float | str | None
Row = dict[str, Cell]


@dataclass(frozen=True)
class ColumnStats:
    """Per-column summary used in prompts and range validation."""

    distinct_count: int
    null_count: int
    min_value: int | float | None = None  # quantitative and temporal only
    max_value: int | float | None = None
    sample_values: tuple[Cell, ...] = ()  # at most 10, first-seen order

    def to_json(self) -> dict:
        out: dict = {
            "distinctCount": self.distinct_count,
            "nullCount": self.null_count,
            "sampleValues": list(self.sample_values),
        }
        if self.min_value is not None:
            out["min"] = self.min_value
        if self.max_value is not None:
            out["max"] = self.max_value
        return out


@dataclass(frozen=True)
class ColumnDescriptor:
    name: str
    role: str  # one of ROLES
    nullable: bool = False
    # set for temporal columns only
    granularity: str | None = None

    def to_json(self) -> dict:
        out: dict = {"name": self.name, "role": self.role, "nullable": self.nullable}
        if self.granularity is not None:
            out["granularity"] = self.granularity
        return out


@dataclass(frozen=True)
class TableSchema:
    columns: tuple[ColumnDescriptor, ...]

    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def get(self, name: str) -> ColumnDescriptor | None:
        for c in self.columns:
            if c.name == name:
                return c
        return None

    def has(self, name: str) -> bool:
        return self.get(name) is not None

    def role_of(self, name: str) -> str | None:
        col = self.get(name)
        return col.role if col else None

    def to_json(self) -> list[dict]:
        return [c.to_json() for c in self.columns]


@dataclass
class Table:
    """Schema plus materialized rows; the unit transforms operate on."""

    schema: TableSchema
    rows: list[Row]

    @property
    def row_count(self) -> int:
        return len(self.rows)


@dataclass
class Dataset:
    dataset_id: str
    name: str
    table: Table
    stats: dict[str, ColumnStats]
    fingerprint: str  # sha256 hex of the source bytes
    source_path: str = ""

    @property
    def schema(self) -> TableSchema:
        return self.table.schema

    @property
    def row_count(self) -> int:
        return self.table.row_count

    def summary_json(self) -> dict:
        return {
            "id": self.dataset_id,
            "name": self.name,
            "rowCount": self.row_count,
            "fingerprint": self.fingerprint,
            "schema": self.schema.to_json(),
            "stats": {name: s.to_json() for name, s in self.stats.items()},
        }


@dataclass
class Catalog:
    """All datasets discovered under one data directory."""

    datasets: dict[str, Dataset] = field(default_factory=dict)

    def get(self, dataset_id: str) -> Dataset | None:
        return self.datasets.get(dataset_id)

    def ids(self) -> list[str]:
        return sorted(self.datasets)

    def fingerprints(self) -> dict[str, str]:
        return {did: ds.fingerprint for did, ds in sorted(self.datasets.items())}
