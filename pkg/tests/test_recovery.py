"""Durability contract: flushed blocks survive, buffered rows do not."""

import os

import pytest

from trtdb.errors import CorruptData
from trtdb.storage import OracleStore, SeriesSchema, Store, open_store
from trtdb.storage.file_format import (
    FOOTER_MAGIC,
    find_last_footer,
    footer_bytes,
    header_bytes,
    locator_bytes,
    parse_header,
)


def schema(**kw):
    kw.setdefault("columns", [("v", "float64")])
    kw.setdefault("q", 8)
    kw.setdefault("a", 0.5)
    kw.setdefault("b_size", 1024)
    return SeriesSchema(name=kw.pop("name", "s"), precision=kw.pop("precision", "s"), **kw)


def rows_upto(n):
    return [(i * 10, (i * 0.7312 + 0.123,)) for i in range(n)]


def test_clean_close_then_reopen_identical(tmp_path, rng):
    rows = [(i + rng.randint(0, 2), (rng.uniform(0, 1),)) for i in range(0, 4000, 2)]
    store = open_store(tmp_path)
    store.create_series(schema())
    oracle = OracleStore()
    oracle.create_series("s")
    for ts, v in rows:
        if store.insert("s", ts, v):
            oracle.insert("s", ts, v)
    store.close()

    reopened = open_store(tmp_path)
    got = [(r.ts, r.values) for r in reopened.full_scan("s")]
    assert got == oracle.full_scan("s")
    assert reopened.schema("s") == schema()
    reopened.close()


def test_header_roundtrip():
    sch = schema(columns=[("a", "float64"), ("b", "int64"), ("c", "bool"), ("d", "string")])
    buf = header_bytes(sch)
    parsed, length = parse_header(buf)
    assert length == len(buf)
    assert parsed == sch


def test_open_empty_directory(tmp_path):
    store = open_store(tmp_path / "fresh")
    assert store.series_names() == []
    store.close()


def test_kill_after_flush_serves_flushed_blocks_only(tmp_path):
    store = open_store(tmp_path)
    store.create_series(schema())
    for ts, v in rows_upto(2000):
        store.insert("s", ts, v)
    durable = sum(e.row_count for e in store.index_entries("s"))
    total_visible = len(list(store.full_scan("s")))
    assert 0 < durable < total_visible
    # simulated kill: no close, no drain; reopen reads only what hit disk
    reopened = open_store(tmp_path)
    recovered = [(r.ts, r.values) for r in reopened.full_scan("s")]
    assert len(recovered) == durable
    assert recovered == [(ts, v) for ts, v in rows_upto(2000)][:durable]
    info = reopened.series_info("s")
    assert info.durable_rows == durable
    assert info.blocks == len(reopened.index_entries("s"))
    reopened.close()


def test_truncated_last_block_earlier_blocks_readable(tmp_path):
    store = open_store(tmp_path)
    store.create_series(schema())
    for ts, v in rows_upto(2500):
        store.insert("s", ts, v)
    entries = store.index_entries("s")
    assert len(entries) >= 2
    store.close()
    path = tmp_path / "s.trt"
    final_entries = Store(tmp_path).index_entries("s")  # after close-drain
    # cut into the middle of the last block: its footer and locator vanish
    last = final_entries[-1]
    cut = last.offset + last.byte_length // 2
    with open(path, "r+b") as f:
        f.truncate(cut)
    reopened = open_store(tmp_path)
    assert "s" in reopened.series_names()
    got = list(reopened.full_scan("s"))
    expect = sum(e.row_count for e in final_entries[:-1])
    assert len(got) == expect
    reopened.close()


def test_corrupt_footer_isolated_per_series(tmp_path):
    store = open_store(tmp_path)
    store.create_series(schema(name="good"))
    store.create_series(schema(name="bad"))
    for name in ("good", "bad"):
        store.memtable_append(name, rows_upto(10))
        store.flush_series(name)
    store.close()

    path = tmp_path / "bad.trt"
    data = bytearray(path.read_bytes())
    # zero every footer magic so no valid footer can be located
    pos = data.find(FOOTER_MAGIC)
    while pos != -1:
        data[pos:pos + 4] = b"\x00\x00\x00\x00"
        pos = data.find(FOOTER_MAGIC, pos + 4)
    path.write_bytes(bytes(data))

    reopened = open_store(tmp_path)
    assert reopened.series_names() == ["good"]
    assert "bad" in reopened.corrupt_series
    with pytest.raises(CorruptData):
        reopened.full_scan("bad")
    assert len(list(reopened.full_scan("good"))) == 10
    reopened.close()


def test_footer_crc_detects_flipped_byte(tmp_path):
    store = open_store(tmp_path)
    store.create_series(schema())
    store.memtable_append("s", rows_upto(5))
    store.flush_series("s")
    store.close()
    path = tmp_path / "s.trt"
    data = bytearray(path.read_bytes())
    sch = schema()
    hdr_len = len(header_bytes(sch))
    footer_off = int.from_bytes(data[-12:-4], "little")
    data[footer_off + 4] ^= 0xFF  # flip a byte inside the only footer's entries
    with pytest.raises(CorruptData):
        find_last_footer(bytes(data), sch, hdr_len)


def test_append_only_layout_space_accounting(tmp_path):
    # file size is exactly header + blocks + every retained footer+locator
    store = open_store(tmp_path)
    sch = schema()
    store.create_series(sch)
    flushes = 0
    for start in range(0, 60, 20):
        store.memtable_append("s", [(i, (float(i),)) for i in range(start, start + 20)])
        store.flush_series("s")
        flushes += 1
    entries = store.index_entries("s")
    store.close()
    size = (tmp_path / "s.trt").stat().st_size
    hdr = len(header_bytes(sch))
    blocks = sum(e.byte_length for e in entries)
    footers = sum(
        len(footer_bytes(entries[:i + 1], sch)) + len(locator_bytes(0))
        for i in range(flushes))
    assert size == hdr + blocks + footers


def test_recovered_store_rejects_pre_durable_rows(tmp_path):
    store = open_store(tmp_path)
    store.create_series(schema())
    store.memtable_append("s", rows_upto(50))
    store.flush_series("s")
    last_durable = store.index_entries("s")[-1].end_ts
    store.close()
    reopened = open_store(tmp_path)
    assert not reopened.insert("s", last_durable - 1, (0.0,)).accepted
    assert reopened.insert("s", last_durable, (0.0,)).accepted
    reopened.close()
