"""Tabular data model: typed columns, binary-labelled rows, stratified splits.

Everything here is immutable after construction and safe to share across
threads. Cell values are ``int | float | str | None`` with ``None`` meaning
missing.
"""
from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

CellValue = int | float | str | None

COLUMN_KINDS = ("numeric", "categorical", "text")


class DataError(ValueError):
    """Raised for malformed datasets, schemas or split requests."""


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str
    categories: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise DataError("column name must be nonempty")
        if self.kind not in COLUMN_KINDS:
            raise DataError(f"unknown column kind {self.kind!r} for {self.name!r}")
        if self.kind == "categorical" and not self.categories:
            raise DataError(f"categorical column {self.name!r} must list at least one category")


@dataclass(frozen=True)
class Row:
    id: str
    values: Mapping[str, CellValue]
    label: str

    def __post_init__(self) -> None:
        for name, value in self.values.items():
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                if not math.isfinite(value):
                    raise DataError(f"row {self.id!r}: non-finite numeric cell in {name!r}")


@dataclass(frozen=True)
class Dataset:
    name: str
    schema: tuple[ColumnSchema, ...]
    target_name: str
    rows: tuple[Row, ...]
    positive_label: str
    negative_label: str

    def __post_init__(self) -> None:
        names = [c.name for c in self.schema]
        if len(set(names)) != len(names):
            raise DataError("duplicate column names in schema")
        if not self.rows:
            raise DataError("dataset must contain at least one row")
        if self.positive_label == self.negative_label:
            raise DataError("positive and negative labels must be distinct")
        labels = {self.positive_label, self.negative_label}
        ids = set()
        for row in self.rows:
            if row.id in ids:
                raise DataError(f"duplicate row id {row.id!r}")
            ids.add(row.id)
            if row.label not in labels:
                raise DataError(f"row {row.id!r} has label {row.label!r} outside {sorted(labels)}")
            for col in names:
                if col not in row.values:
                    raise DataError(f"row {row.id!r} missing value for column {col!r}")

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.schema)

    def column(self, name: str) -> ColumnSchema:
        for col in self.schema:
            if col.name == name:
                return col
        raise DataError(f"no such column {name!r}")

    def rows_by_id(self) -> dict[str, Row]:
        return {r.id: r for r in self.rows}

    def labels_by_id(self) -> dict[str, str]:
        return {r.id: r.label for r in self.rows}


@dataclass(frozen=True)
class SplitAssignment:
    train: frozenset[str]
    validation: frozenset[str]
    test: frozenset[str]
    seed: int

    def __post_init__(self) -> None:
        if self.train & self.validation or self.train & self.test or self.validation & self.test:
            raise DataError("splits must be pairwise disjoint")
        if not (self.train and self.validation and self.test):
            raise DataError("each split must be nonempty")

    @property
    def all_ids(self) -> frozenset[str]:
        return self.train | self.validation | self.test

    def split_of(self, row_id: str) -> str:
        if row_id in self.train:
            return "train"
        if row_id in self.validation:
            return "validation"
        if row_id in self.test:
            return "test"
        raise DataError(f"row id {row_id!r} not in any split")

    def as_dict(self) -> dict:
        return {
            "train": sorted(self.train),
            "validation": sorted(self.validation),
            "test": sorted(self.test),
            "seed": self.seed,
        }


def split_from_dict(d: Mapping) -> SplitAssignment:
    return SplitAssignment(
        train=frozenset(d["train"]),
        validation=frozenset(d["validation"]),
        test=frozenset(d["test"]),
        seed=int(d.get("seed", 0)),
    )


def _largest_remainder(total: int, ratios: Sequence[float]) -> list[int]:
    """Integer allocation of `total` by `ratios`, off by at most one per bucket."""
    ideal = [total * r for r in ratios]
    counts = [math.floor(x) for x in ideal]
    leftovers = total - sum(counts)
    by_fraction = sorted(range(len(ratios)), key=lambda i: (ideal[i] - counts[i], -i), reverse=True)
    for i in by_fraction[:leftovers]:
        counts[i] += 1
    return counts


def split_dataset(ds: Dataset, ratios: Sequence[float], seed: int) -> SplitAssignment:
    """Deterministic stratified train/validation/test split.

    Per label, the split counts differ from ratio * label-count by at most
    one row (largest-remainder rounding after a seeded shuffle).
    """
    if len(ratios) != 3:
        raise DataError("ratios must have exactly three entries")
    if any(r <= 0 for r in ratios):
        raise DataError("all split ratios must be positive")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"split ratios must sum to 1, got {sum(ratios)}")

    rng = random.Random(seed)
    buckets: dict[str, list[str]] = {}
    for row in ds.rows:
        buckets.setdefault(row.label, []).append(row.id)

    parts: list[set[str]] = [set(), set(), set()]
    for label in sorted(buckets):
        ids = sorted(buckets[label])
        rng.shuffle(ids)
        counts = _largest_remainder(len(ids), ratios)
        start = 0
        for part, count in zip(parts, counts):
            part.update(ids[start:start + count])
            start += count

    if any(not part for part in parts):
        raise DataError(
            f"dataset {ds.name!r} too small for three nonempty splits at ratios {tuple(ratios)}"
        )
    return SplitAssignment(
        train=frozenset(parts[0]),
        validation=frozenset(parts[1]),
        test=frozenset(parts[2]),
        seed=seed,
    )


def format_cell(value: CellValue) -> str:
    """Render one cell: missing -> 'unknown', floats without a spurious .0."""
    if value is None:
        return "unknown"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def render_row(row: Row, schema: Sequence[ColumnSchema]) -> str:
    """One "Name: value" line per schema column, in schema order.

    The target label is never part of the output.
    """
    return "\n".join(f"{col.name}: {format_cell(row.values[col.name])}" for col in schema)


def _parse_numeric(text: str) -> int | float | None:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        return None
    if not math.isfinite(value):
        return None
    return value


def _infer_kind(cells: list[str]) -> str:
    non_missing = [c for c in cells if c != ""]
    if not non_missing:
        return "text"
    numeric = [c for c in non_missing if _parse_numeric(c) is not None]
    if len(numeric) == len(non_missing):
        return "numeric"
    if numeric:
        raise DataError("mixed numeric/text column requires a sidecar schema override")
    return "categorical"


def load_schema_sidecar(path: str | Path) -> dict:
    """Read the optional JSON sidecar: columns, target, positive_label."""
    with open(path, encoding="utf-8") as handle:
        sidecar = json.load(handle)
    if not isinstance(sidecar, dict):
        raise DataError("schema sidecar must be a JSON object")
    return sidecar


def load_dataset(
    path: str | Path,
    *,
    target: str | None = None,
    schema_path: str | Path | None = None,
    positive_label: str | None = None,
    name: str | None = None,
) -> Dataset:
    """Load a UTF-8 CSV (header row) into a Dataset.

    Column kinds are inferred (numeric iff every non-missing cell parses as a
    number) unless a sidecar schema pins them. The target column must hold
    exactly two distinct labels. Row ids come from a column named "id"
    (case-insensitive) when present, else 0-based file order.
    """
    sidecar: dict = {}
    if schema_path is not None:
        sidecar = load_schema_sidecar(schema_path)
    target = target or sidecar.get("target")
    if not target:
        raise DataError("a target column name is required (flag or sidecar schema)")
    positive_label = positive_label or sidecar.get("positive_label")

    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        records = [r for r in reader if r]

    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names in header")
    if target not in header:
        raise DataError(f"{path}: unknown target column {target!r}")
    if not records:
        raise DataError(f"{path}: no data rows")
    for i, record in enumerate(records):
        if len(record) != len(header):
            raise DataError(f"{path}: row {i} has {len(record)} cells, expected {len(header)}")

    id_column = next((h for h in header if h.lower() == "id"), None)
    columns = [h for h in header if h != target and h != id_column]
    index = {h: i for i, h in enumerate(header)}

    overrides: dict[str, ColumnSchema] = {}
    for spec in sidecar.get("columns", []):
        categories = tuple(spec["categories"]) if spec.get("categories") else None
        overrides[spec["name"]] = ColumnSchema(spec["name"], spec["kind"], categories)

    schema: list[ColumnSchema] = []
    for col in columns:
        cells = [record[index[col]] for record in records]
        if col in overrides:
            schema.append(overrides[col])
            continue
        kind = _infer_kind(cells)
        if kind == "categorical":
            cats = tuple(sorted({c for c in cells if c != ""}))
            schema.append(ColumnSchema(col, "categorical", cats))
        else:
            schema.append(ColumnSchema(col, kind))
    schema_by_name = {c.name: c for c in schema}

    labels = sorted({record[index[target]] for record in records})
    if len(labels) != 2:
        raise DataError(
            f"{path}: target {target!r} must be binary, found {len(labels)} distinct values"
        )
    if positive_label is None:
        positive_label = labels[-1]
    if positive_label not in labels:
        raise DataError(f"{path}: positive label {positive_label!r} not present in target column")
    negative_label = labels[0] if labels[1] == positive_label else labels[1]

    rows: list[Row] = []
    seen_ids: set[str] = set()
    for i, record in enumerate(records):
        row_id = record[index[id_column]] if id_column else str(i)
        if row_id in seen_ids:
            raise DataError(f"{path}: duplicate row id {row_id!r}")
        seen_ids.add(row_id)
        values: dict[str, CellValue] = {}
        for col in columns:
            cell = record[index[col]]
            if cell == "":
                values[col] = None
            elif schema_by_name[col].kind == "numeric":
                parsed = _parse_numeric(cell)
                if parsed is None:
                    raise DataError(f"{path}: row {row_id!r}: {cell!r} is not numeric in {col!r}")
                values[col] = parsed
            else:
                values[col] = cell
        rows.append(Row(id=row_id, values=values, label=record[index[target]]))

    return Dataset(
        name=name or Path(path).stem,
        schema=tuple(schema),
        target_name=target,
        rows=tuple(rows),
        positive_label=positive_label,
        negative_label=negative_label,
    )


def save_dataset(ds: Dataset, path: str | Path) -> None:
    """Write a Dataset back to CSV with an explicit id column."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", *ds.column_names, ds.target_name])
        for row in ds.rows:
            cells = [row.id]
            for col in ds.column_names:
                value = row.values[col]
                cells.append("" if value is None else format_cell(value))
            cells.append(row.label)
            writer.writerow(cells)


def save_split(split: SplitAssignment, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(split.as_dict(), handle, indent=2)
        handle.write("\n")


def load_split(path: str | Path) -> SplitAssignment:
    with open(path, encoding="utf-8") as handle:
        return split_from_dict(json.load(handle))


def rows_in(ds: Dataset, ids: Iterable[str]) -> list[Row]:
    """Rows for the given ids in sorted-id order (deterministic everywhere)."""
    by_id = ds.rows_by_id()
    try:
        return [by_id[i] for i in sorted(ids)]
    except KeyError as exc:
        raise DataError(f"unknown row id {exc.args[0]!r}") from None
