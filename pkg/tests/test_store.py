"""Storage engine tests against independent fold and oracle-store references."""

import math
import random

import pytest

from trtdb.codecs import TsCodec, ValCodec
from trtdb.errors import (
    ContractViolation,
    EmptyAggregate,
    SchemaError,
    SeriesExists,
    SeriesNotFound,
)
from trtdb.storage import OracleStore, SeriesSchema, Store, open_store


def make_schema(name="temps", precision="s", **kw):
    kw.setdefault("columns", [("value", "float64"), ("count", "int64")])
    kw.setdefault("q", 8)
    kw.setdefault("a", 0.5)
    return SeriesSchema(name=name, precision=precision, **kw)


def fill(store, name, rows):
    accepted = 0
    for ts, values in rows:
        if store.insert(name, ts, values):
            accepted += 1
    return accepted


def gen_rows(rng, n, max_step=5):
    ts = 1_000_000
    rows = []
    for i in range(n):
        rows.append((ts, (round(rng.uniform(-50, 50), 2), rng.randint(0, 9))))
        ts += rng.randint(0, max_step)
    return rows


class TestBasics:
    def test_create_insert_scan(self, tmp_path):
        with open_store(tmp_path) as store:
            store.create_series(make_schema())
            rows = [(10, (1.5, 1)), (20, (2.5, 2)), (30, (3.5, 3))]
            assert fill(store, "temps", rows) == 3
            assert [(r.ts, r.values) for r in store.full_scan("temps")] == rows

    def test_series_immutability(self, tmp_path):
        with open_store(tmp_path) as store:
            store.create_series(make_schema())
            with pytest.raises(SeriesExists):
                store.create_series(make_schema())

    def test_unknown_series(self, tmp_path):
        with open_store(tmp_path) as store:
            with pytest.raises(SeriesNotFound):
                list(store.full_scan("nope"))

    def test_schema_mismatch(self, tmp_path):
        with open_store(tmp_path) as store:
            store.create_series(make_schema())
            with pytest.raises(SchemaError):
                store.insert("temps", 1, (1.0,))
            with pytest.raises(SchemaError):
                store.insert("temps", 1, ("x", 2))
            with pytest.raises(SchemaError):
                store.insert("temps", 1.5, (1.0, 2))

    def test_late_row_rejected_store_unchanged(self, tmp_path):
        with open_store(tmp_path) as store:
            store.create_series(make_schema(q=4, a=0.5))
            for ts in (10, 20, 30, 40):  # expiry: flush 10,20 -> t_minA=20
                store.insert("temps", ts, (float(ts), 0))
            before = [(r.ts, r.values) for r in store.full_scan("temps")]
            res = store.insert("temps", 15, (0.0, 0))
            assert not res.accepted
            assert "late" in res.message
            assert store.rejected_count("temps") == 1
            assert [(r.ts, r.values) for r in store.full_scan("temps")] == before
            # a duplicate of t_minA itself is still accepted
            assert store.insert("temps", 20, (0.0, 0)).accepted


class TestMemtableAndFlush:
    def test_duplicate_timestamps_legal(self, tmp_path):
        with open_store(tmp_path) as store:
            store.create_series(make_schema())
            rows = [(5, (float(i), i)) for i in range(10)]
            store.memtable_append("temps", rows)
            assert [(r.ts, r.values) for r in store.full_scan("temps")] == rows

    def test_memtable_append_rejects_unsorted(self, tmp_path):
        with open_store(tmp_path) as store:
            store.create_series(make_schema())
            with pytest.raises(ContractViolation):
                store.memtable_append("temps", [(5, (1.0, 1)), (4, (1.0, 1))])

    def test_empty_append_is_noop(self, tmp_path):
        with open_store(tmp_path) as store:
            store.create_series(make_schema())
            store.memtable_append("temps", [])
            assert list(store.full_scan("temps")) == []

    def test_flush_aggregates_single_row(self, tmp_path):
        with open_store(tmp_path) as store:
            store.create_series(make_schema())
            store.memtable_append("temps", [(7, (41.5, 3))])
            entry = store.flush_series("temps")
            assert entry.row_count == 1
            assert (entry.start_ts, entry.end_ts) == (7, 7)
            agg = entry.col_aggs[0]
            assert (agg.min, agg.max, agg.sum) == (41.5, 41.5, 41.5)

    def test_flush_empty_memtable_errors(self, tmp_path):
        with open_store(tmp_path) as store:
            store.create_series(make_schema())
            with pytest.raises(ContractViolation):
                store.flush_series("temps")

    def test_offsets_strictly_increase(self, tmp_path):
        with open_store(tmp_path) as store:
            store.create_series(make_schema())
            store.memtable_append("temps", [(1, (1.0, 1))])
            e1 = store.flush_series("temps")
            store.memtable_append("temps", [(2, (2.0, 2))])
            e2 = store.flush_series("temps")
            assert e2.offset > e1.offset

    def test_index_aggregates_match_fold_oracle(self, tmp_path, rng):
        rows = gen_rows(rng, 500)
        with open_store(tmp_path) as store:
            store.create_series(make_schema(b_size=1024))
            store.memtable_append("temps", rows)
            store.flush_series("temps")
            entries = store.index_entries("temps")
            assert len(entries) > 1
            assert sum(e.row_count for e in entries) == len(rows)
            pos = 0
            for e in entries:
                chunk = rows[pos:pos + e.row_count]
                pos += e.row_count
                vals = [v for _, (v, _) in chunk]
                counts = [c for _, (_, c) in chunk]
                assert e.col_aggs[0].min == min(vals)
                assert e.col_aggs[0].max == max(vals)
                assert e.col_aggs[0].sum == pytest.approx(sum(vals), rel=1e-12)
                assert e.col_aggs[1].min == min(counts)
                assert e.col_aggs[1].max == max(counts)

    def test_block_cap_respected(self, tmp_path, rng):
        b_size = 2048
        rows = gen_rows(rng, 2000)
        with open_store(tmp_path) as store:
            store.create_series(make_schema(b_size=b_size))
            store.memtable_append("temps", rows)
            store.flush_series("temps")
            for e in store.index_entries("temps"):
                assert e.byte_length <= b_size


class TestQueries:
    def _loaded(self, tmp_path, rng, n=3000, **schema_kw):
        store = open_store(tmp_path)
        store.create_series(make_schema(b_size=4096, **schema_kw))
        oracle = OracleStore()
        oracle.create_series("temps")
        for ts, values in gen_rows(rng, n):
            if store.insert("temps", ts, values):
                oracle.insert("temps", ts, values)
        return store, oracle

    def test_full_range_equals_full_scan(self, tmp_path, rng):
        store, oracle = self._loaded(tmp_path, rng)
        full = [(r.ts, r.values) for r in store.full_scan("temps")]
        lo, hi = full[0][0], full[-1][0]
        ranged = [(r.ts, r.values) for r in store.query_range("temps", lo, hi)]
        assert ranged == full == oracle.full_scan("temps")
        store.close()

    def test_random_ranges_match_oracle(self, tmp_path, rng):
        store, oracle = self._loaded(tmp_path, rng)
        lo = 1_000_000 - 10
        hi = lo + 3000 * 5 + 20
        for _ in range(100):
            a, b = sorted((rng.randint(lo, hi), rng.randint(lo, hi)))
            got = [(r.ts, r.values) for r in store.query_range("temps", a, b)]
            assert got == oracle.query_range("temps", a, b)
        store.close()

    def test_range_before_first_timestamp(self, tmp_path, rng):
        store, _ = self._loaded(tmp_path, rng, n=100)
        assert list(store.query_range("temps", 0, 999)) == []
        store.close()

    def test_scan_order_non_decreasing(self, tmp_path, rng):
        store, _ = self._loaded(tmp_path, rng)
        ts = [r.ts for r in store.full_scan("temps")]
        assert all(a <= b for a, b in zip(ts, ts[1:]))
        store.close()

    def test_boundary_blocks_only_decoded(self, tmp_path, rng):
        store, _ = self._loaded(tmp_path, rng)
        entries = store.index_entries("temps")
        assert len(entries) >= 4
        # a range spanning blocks 1..2 must not decode blocks 0 or 3+
        a = entries[1].start_ts
        b = entries[2].end_ts
        store.reset_stats()
        list(store.query_range("temps", a, b))
        assert store.stats["index_consultations"] == 1
        decoded = store.stats["blocks_decoded"]
        touching = sum(1 for e in entries if e.end_ts >= a and e.start_ts <= b)
        assert decoded == touching
        store.close()


class TestAggregates:
    def _fold(self, rows, idx, fn, a, b):
        vals = [v[idx] for ts, v in rows if a <= ts <= b]
        if fn == "count":
            return len(vals)
        if fn == "sum":
            return sum(vals)
        if fn == "avg":
            return sum(vals) / len(vals)
        return min(vals) if fn == "min" else max(vals)

    def test_full_range_avg_matches_fold(self, tmp_path, rng):
        rows = gen_rows(rng, 2500)
        with open_store(tmp_path) as store:
            store.create_series(make_schema(b_size=2048))
            for ts, values in rows:
                store.insert("temps", ts, values)
            lo, hi = rows[0][0], rows[-1][0]
            got = store.aggregate_range("temps", "value", "avg", lo, hi)
            want = self._fold(rows, 0, "avg", lo, hi)
            assert got == pytest.approx(want, rel=1e-9)
            assert store.stats["aggregate_index_blocks"] > 0

    def test_random_ranges_all_fns(self, tmp_path, rng):
        rows = gen_rows(rng, 2500)
        with open_store(tmp_path) as store:
            store.create_series(make_schema(b_size=2048))
            for ts, values in rows:
                store.insert("temps", ts, values)
            lo, hi = rows[0][0], rows[-1][0]
            for _ in range(100):
                a, b = sorted((rng.randint(lo, hi), rng.randint(lo, hi)))
                for fn in ("min", "max", "count"):
                    expected = None
                    vals = [v[0] for ts, v in rows if a <= ts <= b]
                    if fn == "count":
                        expected = len(vals)
                        assert store.aggregate_range("temps", "value", fn, a, b) == expected
                    elif vals:
                        expected = self._fold(rows, 0, fn, a, b)
                        assert store.aggregate_range("temps", "value", fn, a, b) == expected
                vals = [v[0] for ts, v in rows if a <= ts <= b]
                if vals:
                    got = store.aggregate_range("temps", "value", "sum", a, b)
                    assert got == pytest.approx(sum(vals), rel=1e-9, abs=1e-9)

    def test_range_inside_one_block_scan_path(self, tmp_path, rng):
        rows = gen_rows(rng, 600)
        with open_store(tmp_path) as store:
            store.create_series(make_schema(b_size=4096))
            store.memtable_append("temps", rows)
            store.flush_series("temps")
            e = store.index_entries("temps")[0]
            a, b = e.start_ts + 1, e.end_ts - 1
            store.reset_stats()
            got = store.aggregate_range("temps", "value", "min", a, b)
            assert store.stats["aggregate_index_blocks"] == 0
            assert got == self._fold(rows, 0, "min", a, b)

    def test_empty_range_semantics(self, tmp_path):
        with open_store(tmp_path) as store:
            store.create_series(make_schema())
            store.memtable_append("temps", [(100, (1.0, 1))])
            assert store.aggregate_range("temps", "value", "count", 0, 50) == 0
            with pytest.raises(EmptyAggregate):
                store.aggregate_range("temps", "value", "avg", 0, 50)

    def test_non_numeric_column_rejected(self, tmp_path):
        with open_store(tmp_path) as store:
            store.create_series(SeriesSchema(
                name="s", precision="s",
                columns=[("flag", "bool"), ("note", "string")]))
            store.memtable_append("s", [(1, (True, "x"))])
            for col in ("flag", "note"):
                with pytest.raises(SchemaError):
                    store.aggregate_range("s", col, "min", 0, 10)


class TestMixedTypes:
    def test_all_column_types_roundtrip(self, tmp_path, rng):
        schema = SeriesSchema(
            name="mixed", precision="ms",
            columns=[("f", "float64"), ("i", "int64"), ("b", "bool"), ("s", "string")],
            ts_codec=TsCodec.DOD, val_codec=ValCodec.FPC, q=16, a=0.5, b_size=2048)
        rows = []
        ts = 0
        for i in range(800):
            rows.append((ts, (rng.uniform(-1e6, 1e6), rng.randint(-2**40, 2**40),
                              rng.random() < 0.5, f"row-{i}-{rng.randint(0, 99)}")))
            ts += rng.randint(0, 1000)
        with open_store(tmp_path) as store:
            store.create_series(schema)
            for t, v in rows:
                store.insert("mixed", t, v)
            assert [(r.ts, r.values) for r in store.full_scan("mixed")] == rows

    def test_nan_inf_values_survive(self, tmp_path):
        with open_store(tmp_path) as store:
            store.create_series(make_schema())
            rows = [(1, (math.nan, 0)), (2, (math.inf, 1)), (3, (-math.inf, 2)),
                    (4, (-0.0, 3))]
            store.memtable_append("temps", rows)
            got = [r.values[0] for r in store.full_scan("temps")]
            assert math.isnan(got[0])
            assert got[1:] == [math.inf, -math.inf, -0.0]
            assert math.copysign(1.0, got[3]) == -1.0


class TestReorderProperty:
    def test_window_shuffle_zero_rejections_sorted(self, tmp_path):
        rng = random.Random(42)
        q, a = 64, 2 / 3
        window = int((1 - a) * q) - 2
        base = sorted(rng.randint(0, 10**7) for _ in range(5000))
        shuffled = []
        for i in range(0, len(base), window):
            chunk = base[i:i + window]
            rng.shuffle(chunk)
            shuffled.extend(chunk)
        with open_store(tmp_path) as store:
            store.create_series(make_schema(q=q, a=a, columns=[("v", "int64")]))
            for i, ts in enumerate(shuffled):
                assert store.insert("temps", ts, (i,)).accepted
            got = [r.ts for r in store.full_scan("temps")]
            assert got == base
            assert store.rejected_count("temps") == 0
