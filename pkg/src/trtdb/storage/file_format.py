"""On-disk layout of a TrTable file. All multi-byte integers little endian.

    header:  magic "TRTN", version u16, series name, precision tag u8,
             ts codec u8, val codec u8, q u32, a f64, b_size u32,
             column count u16, then per column: name, type u8
    blocks:  each u32 byte length + concatenated encoded streams
    footer:  entry count u32 + BlockIndexEntry array + crc32 u32
    locator: footer offset u64 + magic "TRTF"

Strings are u16 length + UTF-8. Each flush appends a block, a fresh
footer covering every block so far, and a locator; earlier footers stay
in place so a torn tail can always fall back to the previous one.
"""

from __future__ import annotations

import math
import struct
import zlib

from ..codecs import TimestampPrecision, TsCodec, ValCodec
from ..errors import CorruptData
from .blocks import BlockIndexEntry, ColumnAgg
from .schema import Column, ColumnType, SeriesSchema

MAGIC = b"TRTN"
FOOTER_MAGIC = b"TRTF"
VERSION = 1
LOCATOR_LEN = 12

_ENTRY_FIXED = struct.Struct("<qqQLL")
_F64 = struct.Struct("<d")
_I64 = struct.Struct("<q")


def _pack_str(text):
    data = text.encode("utf-8")
    return len(data).to_bytes(2, "little") + data


def header_bytes(schema):
    parts = [
        MAGIC,
        VERSION.to_bytes(2, "little"),
        _pack_str(schema.name),
        bytes([schema.precision.tag, int(schema.ts_codec), int(schema.val_codec)]),
        schema.q.to_bytes(4, "little"),
        _F64.pack(schema.a),
        schema.b_size.to_bytes(4, "little"),
        len(schema.columns).to_bytes(2, "little"),
    ]
    for col in schema.columns:
        parts.append(_pack_str(col.name))
        parts.append(bytes([int(col.type)]))
    return b"".join(parts)


class _Cursor:
    __slots__ = ("buf", "pos")

    def __init__(self, buf, pos=0):
        self.buf = buf
        self.pos = pos

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise CorruptData("file header truncated")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self):
        return self.take(1)[0]

    def u16(self):
        return int.from_bytes(self.take(2), "little")

    def u32(self):
        return int.from_bytes(self.take(4), "little")

    def f64(self):
        return _F64.unpack(self.take(8))[0]

    def string(self):
        n = self.u16()
        try:
            return bytes(self.take(n)).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptData(f"invalid UTF-8 in header: {exc}") from None


def parse_header(buf):
    """Parse a header; returns (schema, header byte length)."""
    cur = _Cursor(buf)
    if bytes(cur.take(4)) != MAGIC:
        raise CorruptData("bad magic; not a TrTable file")
    version = cur.u16()
    if version != VERSION:
        raise CorruptData(f"unsupported format version {version}")
    name = cur.string()
    precision = TimestampPrecision.from_tag(cur.u8())
    try:
        ts_codec = TsCodec(cur.u8())
        val_codec = ValCodec(cur.u8())
    except ValueError as exc:
        raise CorruptData(str(exc)) from None
    q = cur.u32()
    a = cur.f64()
    b_size = cur.u32()
    ncols = cur.u16()
    columns = []
    for _ in range(ncols):
        cname = cur.string()
        try:
            ctype = ColumnType(cur.u8())
        except ValueError as exc:
            raise CorruptData(str(exc)) from None
        columns.append(Column(cname, ctype))
    schema = SeriesSchema(name=name, precision=precision, columns=tuple(columns),
                          ts_codec=ts_codec, val_codec=val_codec, q=q, a=a, b_size=b_size)
    return schema, cur.pos


def _agg_struct_fields(schema):
    # (column index, min/max packer) for each numeric column, schema order
    out = []
    for i in schema.numeric_column_indexes():
        packer = _F64 if schema.columns[i].type is ColumnType.FLOAT64 else _I64
        out.append((i, packer))
    return out


def _pack_minmax(packer, value, is_float):
    if value is None:
        # only float columns can be all-NaN; NaN marks "no values"
        return _F64.pack(math.nan)
    return packer.pack(value)


def entry_bytes(entry, schema):
    parts = [_ENTRY_FIXED.pack(entry.start_ts, entry.end_ts, entry.offset,
                               entry.byte_length, entry.row_count)]
    for i, packer in _agg_struct_fields(schema):
        agg = entry.col_aggs[i]
        is_float = packer is _F64
        parts.append(_pack_minmax(packer, agg.min, is_float))
        parts.append(_pack_minmax(packer, agg.max, is_float))
        parts.append(_F64.pack(agg.sum))
    return b"".join(parts)


def entry_size(schema):
    return _ENTRY_FIXED.size + len(_agg_struct_fields(schema)) * 24


def parse_entry(buf, offset, schema):
    start_ts, end_ts, blk_offset, byte_length, row_count = _ENTRY_FIXED.unpack_from(buf, offset)
    pos = offset + _ENTRY_FIXED.size
    aggs = [None] * len(schema.columns)
    for i, packer in _agg_struct_fields(schema):
        lo = packer.unpack_from(buf, pos)[0]
        hi = packer.unpack_from(buf, pos + 8)[0]
        total = _F64.unpack_from(buf, pos + 16)[0]
        pos += 24
        if packer is _F64:
            lo = None if math.isnan(lo) else lo
            hi = None if math.isnan(hi) else hi
        aggs[i] = ColumnAgg(lo, hi, total)
    return BlockIndexEntry(start_ts, end_ts, blk_offset, byte_length, row_count, tuple(aggs))


def footer_bytes(entries, schema):
    body = len(entries).to_bytes(4, "little") + b"".join(
        entry_bytes(e, schema) for e in entries)
    return body + zlib.crc32(body).to_bytes(4, "little")


def parse_footer(buf, offset, schema, data_end):
    """Parse and validate the footer at `offset`; returns (entries, footer length).

    data_end bounds the region blocks may occupy (usually the footer's own
    offset); entries pointing outside it are rejected.
    """
    if offset + 8 > len(buf):
        raise CorruptData("footer does not fit in file")
    count = int.from_bytes(buf[offset:offset + 4], "little")
    esz = entry_size(schema)
    body_len = 4 + count * esz
    if offset + body_len + 4 > len(buf):
        raise CorruptData("footer truncated")
    body = bytes(buf[offset:offset + body_len])
    crc = int.from_bytes(buf[offset + body_len:offset + body_len + 4], "little")
    if zlib.crc32(body) != crc:
        raise CorruptData("footer checksum mismatch")
    entries = []
    pos = 4
    prev_start = None
    for _ in range(count):
        e = parse_entry(body, pos, schema)
        pos += esz
        if e.offset + e.byte_length > data_end or e.byte_length < 4:
            raise CorruptData("index entry points outside the data region")
        if prev_start is not None and e.start_ts < prev_start:
            raise CorruptData("index entries out of order")
        prev_start = e.start_ts
        entries.append(e)
    return entries, body_len + 4


def locator_bytes(footer_offset):
    return footer_offset.to_bytes(8, "little") + FOOTER_MAGIC


def find_last_footer(buf, schema, header_len):
    """Locate the most recent intact footer, scanning backwards on damage.

    Returns (entries, end offset of the locator). A file holding only a
    header has no footer and yields ([], header_len). Raises CorruptData
    when bytes follow the header but no valid footer exists.
    """
    if len(buf) == header_len:
        return [], header_len
    if len(buf) < header_len:
        raise CorruptData("file shorter than its header")

    def try_at(magic_pos):
        if magic_pos < header_len + 8:
            return None
        footer_offset = int.from_bytes(buf[magic_pos - 8:magic_pos], "little")
        if not header_len <= footer_offset < magic_pos - 8:
            return None
        try:
            entries, footer_len = parse_footer(buf, footer_offset, schema, footer_offset)
        except CorruptData:
            return None
        # the locator must sit directly after its footer
        if footer_offset + footer_len != magic_pos - 8:
            return None
        return entries, magic_pos + 4

    # fast path: intact file ends with a locator
    if len(buf) >= header_len + LOCATOR_LEN and bytes(buf[-4:]) == FOOTER_MAGIC:
        found = try_at(len(buf) - 4)
        if found is not None:
            return found
    pos = len(buf) - 4
    search = bytes(buf)
    while True:
        pos = search.rfind(FOOTER_MAGIC, header_len, pos + 3)
        if pos < 0:
            raise CorruptData("no valid footer found")
        found = try_at(pos)
        if found is not None:
            return found
        pos -= 1
