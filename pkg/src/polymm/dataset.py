"""Property CSV ingestion, deduplication, sequential merge and the 90/10 split."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from polymm.canon import write_canonical
from polymm.chem import ChemError, parse
from polymm.properties import PROPERTIES

SOURCES: tuple[str, ...] = ("main", "supp1", "supp3", "supp4", "external")
DEDUP_TOLERANCE = 1e-9


class DatasetError(ValueError):
    code = "DatasetError"


class SchemaMismatch(DatasetError):
    code = "SchemaMismatch"


class InvalidRatio(DatasetError):
    code = "InvalidRatio"


@dataclass(frozen=True)
class PolymerRecord:
    """One polymer keyed by its canonical P-SMILES with a sparse property map."""

    canonical_psmiles: str
    properties: Mapping[str, float]
    source: str = "main"

    def __post_init__(self) -> None:
        if not self.properties:
            raise ValueError(f"record {self.canonical_psmiles!r} has no property values")
        unknown = set(self.properties) - set(PROPERTIES)
        if unknown:
            raise ValueError(f"unknown properties {sorted(unknown)}")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        # store in the fixed property order
        object.__setattr__(self, "properties", {p: float(self.properties[p]) for p in PROPERTIES if p in self.properties})

    @property
    def key(self) -> str:
        return self.canonical_psmiles


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping of one input CSV.

    ``properties`` maps property keys to CSV column names.
    """

    properties: Mapping[str, str]
    source: str = "main"
    smiles_column: str = "SMILES"


DEFAULT_SCHEMAS: dict[str, CsvSchema] = {
    "main": CsvSchema({p: p for p in PROPERTIES}, "main"),
    "supp1": CsvSchema({"Tc": "TC_mean"}, "supp1"),
    "supp3": CsvSchema({"Tg": "Tg"}, "supp3"),
    "supp4": CsvSchema({"FFV": "FFV"}, "supp4"),
}


@dataclass(frozen=True)
class ParseFailure:
    """A rejected input row; ``row`` is the 1-based line number in the file."""

    row: int
    smiles: str
    error: str


@dataclass(frozen=True)
class IngestResult:
    records: list[PolymerRecord]
    failures: list[ParseFailure] = field(default_factory=list)
    # rows parsed fine but carrying no property value
    empty_rows: list[int] = field(default_factory=list)
    # rows whose P-SMILES does not have exactly two attachment points (advisory)
    flagged_rows: list[int] = field(default_factory=list)


def _cell_value(text: str) -> float | None:
    text = text.strip()
    if not text or text.lower() in {"nan", "na", "null", "none"}:
        return None
    value = float(text)
    if not math.isfinite(value):
        return None
    return value


def ingest_csv(path: str | os.PathLike, schema: CsvSchema) -> IngestResult:
    """Read one property CSV, canonicalizing every P-SMILES.

    Raises:
        SchemaMismatch: the header lacks the SMILES column or a declared property column.
    """
    for prop in schema.properties:
        if prop not in PROPERTIES:
            raise SchemaMismatch(f"unknown property {prop!r} in schema")
    records: list[PolymerRecord] = []
    failures: list[ParseFailure] = []
    empty: list[int] = []
    flagged: list[int] = []
    cache: dict[str, tuple[str, bool]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in [schema.smiles_column, *schema.properties.values()] if c not in header]
        if missing:
            raise SchemaMismatch(f"{path}: missing column(s) {missing}")
        for row_no, row in enumerate(reader, start=2):
            smiles = (row[schema.smiles_column] or "").strip()
            try:
                values = {}
                for prop, column in schema.properties.items():
                    v = _cell_value(row[column] or "")
                    if v is not None:
                        values[prop] = v
            except ValueError as exc:
                failures.append(ParseFailure(row_no, smiles, f"BadValue: {exc}"))
                continue
            if smiles not in cache:
                try:
                    graph = parse(smiles)
                except ChemError as exc:
                    failures.append(ParseFailure(row_no, smiles, str(exc)))
                    continue
                cache[smiles] = (write_canonical(graph).smiles, graph.polymer_flag is not None)
            canonical, flag = cache[smiles]
            if flag:
                flagged.append(row_no)
            if not values:
                empty.append(row_no)
                continue
            records.append(PolymerRecord(canonical, values, schema.source))
    return IngestResult(records, failures, empty, flagged)


def _same_values(a: Mapping[str, float], b: Mapping[str, float]) -> bool:
    shared = set(a) & set(b)
    return bool(shared) and all(abs(a[p] - b[p]) <= DEDUP_TOLERANCE for p in shared)


def dedup_against(base: Iterable[PolymerRecord], incoming: Sequence[PolymerRecord]) -> list[PolymerRecord]:
    """Drop incoming records that repeat a base polymer with the same values.

    A record is a duplicate when some base record has the same canonical
    P-SMILES, they share at least one property, and every shared property
    agrees within ``DEDUP_TOLERANCE``.
    """
    by_key: dict[str, list[Mapping[str, float]]] = {}
    for r in base:
        by_key.setdefault(r.key, []).append(r.properties)
    return [r for r in incoming if not any(_same_values(r.properties, b) for b in by_key.get(r.key, ()))]


@dataclass(frozen=True)
class PropertyConflict:
    """Two different values of one property for one polymer; the first is kept."""

    key: str
    property: str
    kept: float
    dropped: float
    source: str


@dataclass(frozen=True)
class MergeResult:
    table: list[PolymerRecord]
    conflicts: list[PropertyConflict]
    # records removed by deduplication, per supplement in merge order
    removed: list[int]


def _union(
    table: dict[str, PolymerRecord], records: Iterable[PolymerRecord], conflicts: list[PropertyConflict]
) -> None:
    for r in records:
        current = table.get(r.key)
        if current is None:
            table[r.key] = r
            continue
        merged = dict(current.properties)
        for prop, value in r.properties.items():
            if prop not in merged:
                merged[prop] = value
            elif abs(merged[prop] - value) > DEDUP_TOLERANCE:
                conflicts.append(PropertyConflict(r.key, prop, merged[prop], value, r.source))
        if merged != current.properties:
            table[r.key] = PolymerRecord(r.key, merged, current.source)


def merge_sequential(main: Sequence[PolymerRecord], supplements: Sequence[Sequence[PolymerRecord]]) -> MergeResult:
    """Fold supplements into the main table in order.

    Each supplement is deduplicated against the accumulated table, then
    unioned into it by canonical key.  Conflicting values are reported and
    the first-seen value wins.
    """
    table: dict[str, PolymerRecord] = {}
    conflicts: list[PropertyConflict] = []
    _union(table, main, conflicts)
    removed = []
    for supp in supplements:
        kept = dedup_against(table.values(), supp)
        removed.append(len(supp) - len(kept))
        _union(table, kept, conflicts)
    return MergeResult(list(table.values()), conflicts, removed)


@dataclass(frozen=True)
class MissingStat:
    missing: int
    ratio: float

    @property
    def percent(self) -> float:
        return 100.0 * self.ratio


def missing_stats(table: Sequence[PolymerRecord]) -> dict[str, MissingStat]:
    """Per-property count and share of records lacking a value."""
    n = len(table)
    out = {}
    for prop in PROPERTIES:
        missing = sum(1 for r in table if prop not in r.properties)
        out[prop] = MissingStat(missing, missing / n if n else 0.0)
    return out


def stats_report(table: Sequence[PolymerRecord]) -> dict[str, object]:
    stats = missing_stats(table)
    return {
        "records": len(table),
        "properties": {
            p: {
                "present": len(table) - s.missing,
                "missing": s.missing,
                "missing_percent": round(s.percent, 2),
            }
            for p, s in stats.items()
        },
    }


@dataclass(frozen=True)
class DataSplit:
    train: list[PolymerRecord]
    test: list[PolymerRecord]
    seed: int
    ratio: float = 0.9


def split(table: Sequence[PolymerRecord], ratio: float = 0.9, seed: int = 0) -> DataSplit:
    """Uniform shuffle under ``seed``; the first ceil(ratio * n) records train.

    Raises:
        InvalidRatio: ratio outside (0, 1) or a split leaving either side empty.
    """
    if not 0.0 < ratio < 1.0:
        raise InvalidRatio(f"ratio must lie in (0, 1), got {ratio}")
    keys = [r.key for r in table]
    if len(set(keys)) != len(keys):
        raise DatasetError("table has duplicate canonical keys")
    n = len(table)
    n_train = math.ceil(ratio * n - 1e-9)
    if n_train == n or n_train == 0:
        raise InvalidRatio(f"ratio {ratio} leaves an empty side for {n} records")
    perm = np.random.default_rng(seed).permutation(n)
    shuffled = [table[int(i)] for i in perm]
    return DataSplit(shuffled[:n_train], shuffled[n_train:], seed, ratio)


def apply_split(table: Sequence[PolymerRecord], train_keys: Iterable[str], test_keys: Iterable[str], seed: int,
                ratio: float = 0.9) -> DataSplit:
    """Rebuild a split from a manifest's key lists."""
    by_key = {r.key: r for r in table}
    try:
        return DataSplit([by_key[k] for k in train_keys], [by_key[k] for k in test_keys], seed, ratio)
    except KeyError as exc:
        raise DatasetError(f"split manifest key {exc.args[0]!r} not in table") from exc


# serialization

TABLE_COLUMNS = ("canonical_psmiles", *PROPERTIES, "source")


def _fmt(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def write_table(records: Sequence[PolymerRecord], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for r in records:
            w.writerow([r.key, *(_fmt(r.properties.get(p)) for p in PROPERTIES), r.source])


def read_table(path: str | os.PathLike) -> list[PolymerRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TABLE_COLUMNS:
            raise SchemaMismatch(f"{path}: expected columns {TABLE_COLUMNS}")
        out = []
        for row in reader:
            props = {p: float(row[p]) for p in PROPERTIES if row[p]}
            out.append(PolymerRecord(row["canonical_psmiles"], props, row["source"]))
        return out


def write_failures(failures: Sequence[ParseFailure], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("row", "smiles", "error"))
        for f in failures:
            w.writerow((f.row, f.smiles, f.error))


def write_json(obj: object, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=False) + "\n", encoding="utf-8")


def split_manifest(s: DataSplit) -> dict[str, object]:
    return {
        "seed": s.seed,
        "ratio": s.ratio,
        "n_train": len(s.train),
        "n_test": len(s.test),
        "train": [r.key for r in s.train],
        "test": [r.key for r in s.test],
    }


def read_split_manifest(path: str | os.PathLike) -> dict[str, object]:
    return json.loads(Path(path).read_text(encoding="utf-8"))
