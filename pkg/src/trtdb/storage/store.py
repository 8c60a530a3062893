"""The storage engine: re-ordering buffer, memtable and immutable TrTable files.

One writer per series; the per-series lock covers buffer and memtable
mutations plus the file append during a flush. TrTable files are
immutable, so readers need no coordination: a query takes a point-in-time
snapshot of the block index, memtable rows and buffer contents under the
lock, then decodes blocks lock-free. At every instant an accepted row is
readable from exactly one of buffer, memtable or file.

Durability contract: rows are durable only once their block has been
flushed; a crash loses whatever sat in the buffer or memtable. A clean
close() drains both so a reopened store answers identically.
"""

from __future__ import annotations

import bisect
import math
import os
import threading
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..errors import (
    ContractViolation,
    CorruptData,
    EmptyAggregate,
    FlushError,
    SchemaError,
    SeriesExists,
    SeriesNotFound,
    TrtError,
)
from .blocks import BlockBuilder, decode_block
from .file_format import (
    FOOTER_MAGIC,
    LOCATOR_LEN,
    entry_size,
    footer_bytes,
    header_bytes,
    locator_bytes,
    parse_footer,
    parse_header,
)
from .qrb import QuantumReorderBuffer
from .schema import ColumnType, Row, SeriesSchema

_TS_MIN = -(1 << 63)
_TS_MAX = (1 << 63) - 1

AGGREGATE_FNS = ("avg", "min", "max", "count", "sum")


@dataclass(frozen=True)
class InsertResult:
    accepted: bool
    message: Optional[str] = None

    def __bool__(self):
        return self.accepted


@dataclass
class SeriesInfo:
    name: str
    schema: SeriesSchema
    blocks: int
    durable_rows: int
    file_bytes: int


class _SeriesState:
    __slots__ = ("schema", "lock", "qrb", "builder", "index", "path", "write_f",
                 "read_fd", "header_len", "eof", "cache", "rejected", "warnings")

    CACHE_CAP = 64

    def __init__(self, schema, path):
        self.schema = schema
        self.path = path
        self.lock = threading.Lock()
        self.qrb = QuantumReorderBuffer(schema.q, schema.a)
        self.builder = BlockBuilder(schema)
        self.index = []
        self.write_f = None
        self.read_fd = None
        self.header_len = 0
        self.eof = 0
        self.cache = OrderedDict()
        self.rejected = 0
        self.warnings = []


class Store:
    """A directory of TrTable series files plus their in-memory state."""

    def __init__(self, directory, sync=False):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.sync = sync
        self._series = {}
        self.corrupt_series = {}
        self._closed = False
        self.stats = {
            "blocks_decoded": 0,
            "cache_hits": 0,
            "index_consultations": 0,
            "ranged_scans": 0,
            "aggregate_index_blocks": 0,
        }
        for path in sorted(self.directory.glob("*.trt")):
            try:
                self._recover_series(path)
            except TrtError as exc:
                self.corrupt_series[path.stem] = exc

    # ------------------------------------------------------------ lifecycle

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def reset_stats(self):
        for k in self.stats:
            self.stats[k] = 0

    def series_names(self):
        return sorted(self._series)

    def schema(self, name):
        return self._state(name).schema

    def series_info(self, name):
        st = self._state(name)
        with st.lock:
            return SeriesInfo(name, st.schema, len(st.index),
                              sum(e.row_count for e in st.index), st.eof)

    def index_entries(self, name):
        st = self._state(name)
        with st.lock:
            return list(st.index)

    def late_warnings(self, name):
        st = self._state(name)
        with st.lock:
            return list(st.warnings)

    def rejected_count(self, name):
        return self._state(name).rejected

    def _state(self, name):
        try:
            return self._series[name]
        except KeyError:
            if name in self.corrupt_series:
                raise CorruptData(
                    f"series {name!r} is unreadable: {self.corrupt_series[name]}") from None
            raise SeriesNotFound(f"no series named {name!r}") from None

    def create_series(self, schema):
        if self._closed:
            raise ContractViolation("store is closed")
        path = self.directory / f"{schema.name}.trt"
        if schema.name in self._series or schema.name in self.corrupt_series or path.exists():
            raise SeriesExists(f"series {schema.name!r} already exists")
        st = _SeriesState(schema, path)
        header = header_bytes(schema)
        with open(path, "wb") as f:
            f.write(header)
            f.flush()
            if self.sync:
                os.fsync(f.fileno())
        st.write_f = open(path, "r+b")
        st.write_f.seek(0, os.SEEK_END)
        st.read_fd = os.open(path, os.O_RDONLY)
        st.header_len = len(header)
        st.eof = len(header)
        self._series[schema.name] = st
        return st.schema

    def _recover_series(self, path):
        size = path.stat().st_size
        fd = os.open(path, os.O_RDONLY)
        try:
            head = os.pread(fd, min(size, 1 << 20), 0)
            schema, header_len = parse_header(head)
            if schema.name != path.stem:
                raise CorruptData(
                    f"header names series {schema.name!r} but file is {path.name}")
            entries, valid_end = self._load_footer(fd, size, schema, header_len)
        finally:
            os.close(fd)

        st = _SeriesState(schema, path)
        st.header_len = header_len
        st.index = entries
        if entries:
            st.qrb.t_min_allowed = entries[-1].end_ts
        st.write_f = open(path, "r+b")
        if valid_end != size:
            # drop a torn tail so new appends continue from consistent bytes
            st.write_f.truncate(valid_end)
        st.write_f.seek(0, os.SEEK_END)
        st.read_fd = os.open(path, os.O_RDONLY)
        st.eof = valid_end
        self._series[schema.name] = st

    def _load_footer(self, fd, size, schema, header_len):
        if size == header_len:
            return [], size
        if size < header_len:
            raise CorruptData("file shorter than its header")
        # fast path: intact locator at end of file
        if size >= header_len + LOCATOR_LEN:
            loc = os.pread(fd, LOCATOR_LEN, size - LOCATOR_LEN)
            if loc[8:] == FOOTER_MAGIC:
                fo = int.from_bytes(loc[:8], "little")
                if header_len <= fo < size - LOCATOR_LEN:
                    raw_count = os.pread(fd, 4, fo)
                    count = int.from_bytes(raw_count, "little")
                    flen = 4 + count * entry_size(schema) + 4
                    if fo + flen == size - LOCATOR_LEN:
                        body = os.pread(fd, flen, fo)
                        try:
                            entries, _ = parse_footer(body, 0, schema, fo)
                            return entries, size
                        except CorruptData:
                            pass
        # slow path: scan backwards through the whole file
        from .file_format import find_last_footer

        whole = os.pread(fd, size, 0)
        entries, valid_end = find_last_footer(whole, schema, header_len)
        return entries, valid_end

    def close(self):
        """Drain buffers and memtables to disk, then release file handles."""
        if self._closed:
            return
        for st in self._series.values():
            with st.lock:
                rows = st.qrb.drain_sorted()
                for ts, values in rows:
                    self._memtable_append_locked(st, ts, values)
                if st.builder.row_count:
                    self._flush_locked(st)
                st.write_f.flush()
                if self.sync:
                    os.fsync(st.write_f.fileno())
                st.write_f.close()
                os.close(st.read_fd)
        self._closed = True

    # ------------------------------------------------------------ ingestion

    def insert(self, name, ts, values):
        """Route one row through the re-ordering buffer.

        Rows below the series' minimum allowed timestamp are rejected as
        late and recorded with a warning; everything else is accepted and
        may trigger a buffer expiration into the memtable.
        """
        st = self._state(name)
        if not isinstance(ts, int) or isinstance(ts, bool):
            raise SchemaError(f"timestamp must be an int, got {ts!r}")
        values = st.schema.check_row(values)
        with st.lock:
            if st.qrb.is_late(ts):
                st.rejected += 1
                msg = (f"row at {ts} is below the minimum allowed timestamp "
                       f"{st.qrb.t_min_allowed}; marked late")
                if len(st.warnings) < 1000:
                    st.warnings.append((ts, msg))
                return InsertResult(False, msg)
            st.qrb.append(ts, values)
            flushed = st.qrb.expire_if_due()
            if flushed is not None:
                for row_ts, row_values in flushed:
                    self._memtable_append_locked(st, row_ts, row_values)
        return InsertResult(True)

    def memtable_append(self, name, rows):
        """Append pre-sorted rows directly to the memtable (buffer bypass)."""
        st = self._state(name)
        last = None
        for ts, _ in rows:
            if last is not None and ts < last:
                raise ContractViolation("memtable_append requires sorted rows")
            last = ts
        with st.lock:
            for ts, values in rows:
                self._memtable_append_locked(st, ts, st.schema.check_row(values))

    def _memtable_append_locked(self, st, ts, values):
        b = st.builder
        if b.row_count and b.end_ts is not None and ts < b.end_ts:
            raise ContractViolation(
                f"row at {ts} precedes the open block's last timestamp {b.end_ts}")
        if b.row_count and b.projected_bytes(ts, values) > st.schema.b_size:
            self._flush_locked(st)
            b = st.builder
        b.append(ts, values)

    def flush_series(self, name):
        """Flush the open memtable block to disk; errors when it is empty."""
        st = self._state(name)
        with st.lock:
            if not st.builder.row_count:
                raise ContractViolation("memtable is empty; nothing to flush")
            return self._flush_locked(st)

    def _flush_locked(self, st):
        block, entry = st.builder.build(st.eof)
        footer = footer_bytes(st.index + [entry], st.schema)
        locator = locator_bytes(st.eof + len(block))
        try:
            st.write_f.write(block)
            st.write_f.write(footer)
            st.write_f.write(locator)
            st.write_f.flush()
            if self.sync:
                os.fsync(st.write_f.fileno())
        except OSError as exc:
            # nothing in memory changed; the store stays readable from the
            # pre-flush state and the torn tail is dropped on recovery
            raise FlushError(f"flush of {st.schema.name!r} failed: {exc}") from exc
        st.eof += len(block) + len(footer) + len(locator)
        st.index.append(entry)
        st.builder = BlockBuilder(st.schema)
        return entry

    # -------------------------------------------------------------- queries

    def _snapshot(self, st):
        with st.lock:
            return list(st.index), list(st.builder.rows), st.qrb.snapshot_sorted()

    def _read_block_rows(self, st, entry):
        self.stats["blocks_decoded"] += 1
        cached = st.cache.get(entry.offset)
        if cached is not None:
            self.stats["cache_hits"] += 1
            return cached
        data = os.pread(st.read_fd, entry.byte_length, entry.offset)
        if len(data) != entry.byte_length:
            raise CorruptData(f"short read of block at offset {entry.offset}")
        rows = decode_block(data, st.schema)
        st.cache[entry.offset] = rows
        if len(st.cache) > st.CACHE_CAP:
            st.cache.popitem(last=False)
        return rows

    def _candidate_entries(self, entries, start, end):
        self.stats["index_consultations"] += 1
        starts = [e.start_ts for e in entries]
        hi = bisect.bisect_right(starts, end)
        return [e for e in entries[:hi] if e.end_ts >= start]

    def query_range(self, name, start, end):
        """All rows with start <= ts <= end in non-decreasing timestamp order.

        The snapshot is taken now; iteration decodes blocks lazily. Only
        the two boundary blocks are row-filtered, interior candidates are
        inside the range by construction.
        """
        st = self._state(name)
        if start > end:
            raise ContractViolation(f"range start {start} exceeds end {end}")
        entries, mem_rows, qrb_rows = self._snapshot(st)
        candidates = self._candidate_entries(entries, start, end)
        self.stats["ranged_scans"] += 1

        def rows():
            for i, entry in enumerate(candidates):
                block_rows = self._read_block_rows(st, entry)
                if entry.start_ts >= start and entry.end_ts <= end:
                    yield from block_rows
                else:
                    for row in block_rows:
                        if row.ts > end:
                            break
                        if row.ts >= start:
                            yield row
            for row in mem_rows:
                if row.ts > end:
                    break
                if row.ts >= start:
                    yield row
            for ts, values in qrb_rows:
                if ts > end:
                    break
                if ts >= start:
                    yield Row(ts, values)

        return rows()

    def full_scan(self, name):
        return self.query_range(name, _TS_MIN, _TS_MAX)

    def aggregate_range(self, name, column, fn, start, end):
        """Aggregate one numeric column over [start, end].

        Fully covered blocks contribute their precomputed index aggregates;
        at most the two boundary blocks are decoded and row-scanned, plus
        memtable and buffer rows in range. NaN values never contribute to
        min/max/sum but still count rows.
        """
        if fn not in AGGREGATE_FNS:
            raise ContractViolation(f"unknown aggregate {fn!r}; expected one of {AGGREGATE_FNS}")
        st = self._state(name)
        if start > end:
            raise ContractViolation(f"range start {start} exceeds end {end}")
        idx = st.schema.column_index(column)
        ctype = st.schema.columns[idx].type
        if ctype not in (ColumnType.FLOAT64, ColumnType.INT64):
            raise SchemaError(f"column {column!r} is {ctype.name.lower()}, not numeric")
        entries, mem_rows, qrb_rows = self._snapshot(st)
        candidates = self._candidate_entries(entries, start, end)

        count = 0
        lo = None
        hi = None
        total = 0.0

        def fold_value(v):
            nonlocal count, lo, hi, total
            count += 1
            if isinstance(v, float) and math.isnan(v):
                return
            if lo is None or v < lo:
                lo = v
            if hi is None or v > hi:
                hi = v
            total += v

        for entry in candidates:
            if entry.start_ts >= start and entry.end_ts <= end:
                agg = entry.col_aggs[idx]
                count += entry.row_count
                if agg.min is not None and (lo is None or agg.min < lo):
                    lo = agg.min
                if agg.max is not None and (hi is None or agg.max > hi):
                    hi = agg.max
                total += agg.sum
                self.stats["aggregate_index_blocks"] += 1
            else:
                for row in self._read_block_rows(st, entry):
                    if row.ts > end:
                        break
                    if row.ts >= start:
                        fold_value(row.values[idx])
        for row in mem_rows:
            if start <= row.ts <= end:
                fold_value(row.values[idx])
        for ts, values in qrb_rows:
            if start <= ts <= end:
                fold_value(values[idx])

        if fn == "count":
            return count
        if fn == "sum":
            return total
        if fn == "avg":
            if count == 0:
                raise EmptyAggregate(f"avg over empty range [{start}, {end}]")
            return total / count
        value = lo if fn == "min" else hi
        if value is None:
            raise EmptyAggregate(f"{fn} over empty range [{start}, {end}]")
        return value


def open_store(directory, sync=False):
    """Open (or create) a store directory, recovering every readable series."""
    return Store(directory, sync=sync)
