from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import corpus, write_csv
from polymm.canon import canonicalize
from polymm.dataset import (
    DEFAULT_SCHEMAS,
    CsvSchema,
    DatasetError,
    InvalidRatio,
    PolymerRecord,
    SchemaMismatch,
    apply_split,
    dedup_against,
    ingest_csv,
    merge_sequential,
    missing_stats,
    read_table,
    split,
    split_manifest,
    stats_report,
    write_table,
)

POLYMERS = [canonicalize(s) for s in corpus() if s.count("*") == 2][:40]


def rec(i: int, source: str = "main", **props: float) -> PolymerRecord:
    return PolymerRecord(POLYMERS[i], props, source)


class TestIngest:
    def test_partition(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, ["SMILES", "Tg"], [["*CC*", 1.0], ["*C(*", 2.0], ["*CC(*)C", 3.0]])
        result = ingest_csv(path, CsvSchema({"Tg": "Tg"}, "supp3"))
        assert len(result.records) == 2
        assert [(f.row, f.smiles) for f in result.failures] == [(3, "*C(*")]
        assert result.failures[0].error.startswith("UnmatchedParenthesis")
        assert result.records[0].key == canonicalize("*CC*") and result.records[0].source == "supp3"

    def test_empty_cells_are_missing(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, ["SMILES", "Tg", "FFV", "Tc", "Density", "Rg"],
                  [["*CC*", "", 0.35, "", "", ""], ["*CC(*)C", "", "", "", "", ""]])
        result = ingest_csv(path, DEFAULT_SCHEMAS["main"])
        assert [r.properties for r in result.records] == [{"FFV": 0.35}]
        assert result.empty_rows == [3]

    def test_schema_mismatch(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, ["SMILES", "Tg"], [["*CC*", 1.0]])
        with pytest.raises(SchemaMismatch):
            ingest_csv(path, DEFAULT_SCHEMAS["supp1"])

    def test_flagged_not_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, ["SMILES", "Tg"], [["CCO", 1.0], ["*CC*", 2.0]])
        result = ingest_csv(path, DEFAULT_SCHEMAS["supp3"])
        assert len(result.records) == 2 and result.flagged_rows == [2]

    def test_spellings_share_a_key(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, ["SMILES", "Tg"], [["*CC(*)c1ccccc1", 1.0], ["*C(c1ccccc1)C*", 1.0]])
        keys = {r.key for r in ingest_csv(path, DEFAULT_SCHEMAS["supp3"]).records}
        assert len(keys) == 1


class TestDedupMerge:
    def test_identical_removed(self):
        assert dedup_against([rec(0, Tg=10.0)], [rec(0, "supp3", Tg=10.0)]) == []

    def test_different_value_retained(self):
        incoming = [rec(0, "supp3", Tg=11.0)]
        assert dedup_against([rec(0, Tg=10.0)], incoming) == incoming

    def test_tolerance(self):
        assert dedup_against([rec(0, Tg=10.0)], [rec(0, "supp3", Tg=10.0 + 5e-10)]) == []

    def test_disjoint_properties_retained(self):
        incoming = [rec(0, "supp1", Tc=0.2)]
        assert dedup_against([rec(0, Tg=10.0)], incoming) == incoming

    def test_empty_supplements(self):
        main = [rec(0, Tg=1.0), rec(1, FFV=0.3)]
        assert merge_sequential(main, []).table == main
        assert merge_sequential(main, [[], []]).table == main

    def test_union_of_properties(self):
        result = merge_sequential([rec(0, Density=1.1)], [[rec(1, "supp1", Tc=0.2)], [rec(1, "supp3", Tg=50.0)]])
        assert len(result.table) == 2
        assert result.table[1].properties == {"Tg": 50.0, "Tc": 0.2}

    def test_conflict_first_seen_wins(self):
        result = merge_sequential([rec(0, Tg=10.0, FFV=0.3)], [[rec(0, "supp3", Tg=20.0)]])
        assert result.table[0].properties["Tg"] == 10.0
        (c,) = result.conflicts
        assert (c.property, c.kept, c.dropped, c.source) == ("Tg", 10.0, 20.0, "supp3")

    def test_removed_counts(self):
        result = merge_sequential([rec(0, Tc=0.2)], [[rec(0, "supp1", Tc=0.2), rec(1, "supp1", Tc=0.3)]])
        assert result.removed == [1] and len(result.table) == 2

    def test_merge_idempotent(self):
        supp = [rec(2, "supp3", Tg=5.0), rec(0, "supp3", Tg=7.0)]
        first = merge_sequential([rec(0, Tc=0.2), rec(1, FFV=0.3)], [supp])
        again = merge_sequential(first.table, [supp])
        assert again.table == first.table

    def test_no_duplicate_keys(self):
        result = merge_sequential([rec(i % 5, Tg=float(i)) for i in range(10)], [[rec(3, "supp1", Tc=0.1)]])
        keys = [r.key for r in result.table]
        assert len(keys) == len(set(keys))


class TestStats:
    def test_all_present(self):
        table = [rec(0, Tg=1, FFV=0.1, Tc=0.2, Density=1.0, Rg=10)]
        assert all(s.missing == 0 and s.ratio == 0.0 for s in missing_stats(table).values())

    def test_single_record_missing_tg(self):
        stats = missing_stats([rec(0, FFV=0.1, Tc=0.2, Density=1.0, Rg=10)])
        assert (stats["Tg"].missing, stats["Tg"].percent) == (1, 100.0)
        assert all(stats[p].missing == 0 for p in ("FFV", "Tc", "Density", "Rg"))

    def test_report(self):
        report = stats_report([rec(0, Tg=1.0), rec(1, Tg=2.0, FFV=0.3), rec(2, FFV=0.2)])
        assert report["records"] == 3
        assert report["properties"]["Tg"] == {"present": 2, "missing": 1, "missing_percent": 33.33}


class TestSplit:
    def table(self, n: int) -> list[PolymerRecord]:
        return [rec(i, Tg=float(i)) for i in range(n)]

    def test_deterministic(self):
        a, b = split(self.table(10), seed=7), split(self.table(10), seed=7)
        assert [r.key for r in a.train] == [r.key for r in b.train]
        assert len(a.train) == 9 and len(a.test) == 1

    def test_seed_changes_membership(self):
        a, b = split(self.table(40), seed=1), split(self.table(40), seed=2)
        assert {r.key for r in a.test} != {r.key for r in b.test}

    def test_invalid_ratio(self):
        with pytest.raises(InvalidRatio):
            split(self.table(10), ratio=1.0)
        with pytest.raises(InvalidRatio):
            split(self.table(3), ratio=0.9)

    def test_ceil_rule_counts(self):
        assert len(split(self.table(40), 0.9).train) == 36
        assert len(split(self.table(33), 0.9).train) == 30

    def test_manifest_round_trip(self):
        table = self.table(20)
        s = split(table, seed=3)
        m = split_manifest(s)
        again = apply_split(table, m["train"], m["test"], m["seed"], m["ratio"])
        assert again == s
        with pytest.raises(DatasetError):
            apply_split(table[:5], m["train"], m["test"], 3)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=10, max_value=40), st.integers(min_value=0, max_value=10**6))
    def test_partition(self, n, seed):
        table = self.table(n)
        s = split(table, seed=seed)
        train, test = {r.key for r in s.train}, {r.key for r in s.test}
        assert not train & test
        assert train | test == {r.key for r in table}


def test_table_round_trip(tmp_path):
    table = [rec(0, Tg=1.0 / 3, Rg=12.5), rec(1, "supp1", Tc=0.1 + 0.2)]
    write_table(table, tmp_path / "t.csv")
    assert read_table(tmp_path / "t.csv") == table


def test_record_validation():
    with pytest.raises(ValueError):
        PolymerRecord("*CC*", {})
    with pytest.raises(ValueError):
        PolymerRecord("*CC*", {"Mw": 1.0})
    with pytest.raises(ValueError):
        PolymerRecord("*CC*", {"Tg": 1.0}, "kaggle")
    assert list(PolymerRecord("*CC*", {"Rg": 1, "Tg": 2}).properties) == ["Tg", "Rg"]
