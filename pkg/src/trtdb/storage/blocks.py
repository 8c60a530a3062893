"""In-memory block building and block (de)serialization.

A memtable owns exactly one open block: per-column incremental encoders,
the plain rows (still queryable until flush) and running aggregates for
the index entry. Compressed size is tracked append by append so a block
never exceeds the series byte cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from ..bitstream import BitReader
from ..codecs import (
    RAW_STRING,
    StringEncoder,
    decode_ts_payload,
    decode_val_payload,
    float_to_word,
    int_to_word,
    make_ts_encoder,
    make_val_encoder,
    word_to_float,
    word_to_int,
)
from ..errors import CorruptData
from .schema import ColumnType, Row

_STREAM_HEADER_BYTES = 5


@dataclass
class ColumnAgg:
    """Per-block min/max/sum for one numeric column.

    NaN values are excluded from all three (min/max are None when every
    row was NaN); the row count in the index entry still counts them.
    """

    min: Optional[float]
    max: Optional[float]
    sum: float


@dataclass
class BlockIndexEntry:
    start_ts: int
    end_ts: int
    offset: int
    byte_length: int
    row_count: int
    col_aggs: tuple  # one ColumnAgg or None per column, schema order


def _fold_agg(agg, value):
    if isinstance(value, float) and math.isnan(value):
        return
    if agg.min is None or value < agg.min:
        agg.min = value
    if agg.max is None or value > agg.max:
        agg.max = value
    agg.sum += value


class BlockBuilder:
    __slots__ = ("schema", "ts_enc", "col_encs", "rows", "aggs", "start_ts", "end_ts")

    def __init__(self, schema):
        self.schema = schema
        self.ts_enc = make_ts_encoder(schema.ts_codec, schema.precision)
        self.col_encs = []
        self.aggs = []
        for col in schema.columns:
            if col.type is ColumnType.STRING:
                self.col_encs.append(StringEncoder())
                self.aggs.append(None)
            else:
                self.col_encs.append(make_val_encoder(schema.val_codec))
                if col.type is ColumnType.BOOL:
                    self.aggs.append(None)
                else:
                    self.aggs.append(ColumnAgg(None, None, 0.0))
        self.rows = []
        self.start_ts = None
        self.end_ts = None

    @property
    def row_count(self):
        return len(self.rows)

    def append(self, ts, values):
        """Append one schema-checked row; rows must arrive in timestamp order."""
        self.ts_enc.append(ts)
        for enc, col, agg, v in zip(self.col_encs, self.schema.columns, self.aggs, values):
            t = col.type
            if t is ColumnType.FLOAT64:
                enc.append(float_to_word(float(v)))
            elif t is ColumnType.INT64:
                enc.append(int_to_word(v))
            elif t is ColumnType.BOOL:
                enc.append(1 if v else 0)
            else:
                enc.append(v)
            if agg is not None:
                _fold_agg(agg, float(v) if t is ColumnType.FLOAT64 else v)
        if self.start_ts is None:
            self.start_ts = ts
        self.end_ts = ts
        self.rows.append(Row(ts, values))

    def encoded_bytes(self):
        """On-disk footprint (length prefix included) if closed right now."""
        total = 4
        for enc in (self.ts_enc, *self.col_encs):
            total += _STREAM_HEADER_BYTES + (enc.encoded_bits() + 7) // 8
        return total

    def projected_bytes(self, ts, values):
        """Conservative upper bound on encoded_bytes after appending the row."""
        extra = self.ts_enc.max_append_bits(ts)
        for enc, v in zip(self.col_encs, values):
            extra += enc.max_append_bits(v)
        # each stream may additionally gain one padding byte
        return self.encoded_bytes() + (extra + 7) // 8 + 1 + len(self.col_encs)

    def build(self, offset):
        """Serialize to block bytes and the matching index entry."""
        streams = [self.ts_enc.finish()] + [enc.finish() for enc in self.col_encs]
        body = b"".join(s.to_bytes() for s in streams)
        block = len(body).to_bytes(4, "little") + body
        entry = BlockIndexEntry(
            start_ts=self.start_ts,
            end_ts=self.end_ts,
            offset=offset,
            byte_length=len(block),
            row_count=len(self.rows),
            col_aggs=tuple(self.aggs),
        )
        return block, entry


def decode_block(buf, schema):
    """Decode one block (length prefix included in buf) back to rows."""
    if len(buf) < 4:
        raise CorruptData("block shorter than its length prefix")
    body_len = int.from_bytes(buf[:4], "little")
    if body_len + 4 != len(buf):
        raise CorruptData(f"block length prefix {body_len} does not match {len(buf) - 4} bytes")
    reader = BitReader(memoryview(buf)[4:])
    tags = [int(schema.ts_codec)]
    for col in schema.columns:
        tags.append(RAW_STRING if col.type is ColumnType.STRING else int(schema.val_codec))

    columns = []
    count = None
    for pos, expected_tag in enumerate(tags):
        tag = reader.read_aligned_bytes(1)[0]
        if tag != expected_tag:
            raise CorruptData(f"stream {pos} has codec tag {tag}, schema says {expected_tag}")
        n = int.from_bytes(reader.read_aligned_bytes(4), "little")
        if count is None:
            count = n
        elif n != count:
            raise CorruptData(f"stream {pos} has {n} elements, timestamp stream has {count}")
        if pos == 0:
            columns.append(decode_ts_payload(reader, n, schema.ts_codec, schema.precision))
        else:
            columns.append(decode_val_payload(reader, n, tags[pos]))
        reader.skip_padding()
    reader.expect_exhausted()

    timestamps = columns[0]
    converted = []
    for col, raw in zip(schema.columns, columns[1:]):
        t = col.type
        if t is ColumnType.FLOAT64:
            converted.append([word_to_float(w) for w in raw])
        elif t is ColumnType.INT64:
            converted.append([word_to_int(w) for w in raw])
        elif t is ColumnType.BOOL:
            converted.append([bool(w) for w in raw])
        else:
            converted.append(raw)
    return [Row(ts, values) for ts, values in zip(timestamps, zip(*converted))] \
        if converted else [Row(ts, ()) for ts in timestamps]
