"""Timestamp stream codecs: delta-of-delta, Delta-RLE-LEB128 and Delta-RLE-Rice.

All three share the same header, the first timestamp raw in 64 bits, and
differ in how the deltas that follow are coded. Inputs must be
non-decreasing; equal consecutive timestamps are legal (dense workloads
carry duplicates). Encoders are incremental so the storage layer can track
the exact compressed size while a block is open.
"""

from ..bitstream import BitReader, BitWriter
from ..errors import ContractViolation, CorruptData
from .base import MASK64, EncodedStream, TsCodec

_U23 = (1 << 23) - 1
_U31 = (1 << 31) - 1

RICE_INIT_K_RUN = 2
RICE_INIT_K_DELTA = 10
RICE_ESCAPE_QUOTIENT = 48


def _check_signed64(ts):
    if not -(1 << 63) <= ts < (1 << 63):
        raise ContractViolation(f"timestamp {ts} outside 64-bit signed range")


class DodTimestampEncoder:
    """Delta-of-delta with 1..4 bit class prefixes.

    Classes: '0' for a zero delta-of-delta, '10'+7 bits for [-63, 64],
    '110'+24 bits, '1110'+32 bits, '1111'+64 bits raw. Signed payloads are
    offset-shifted so the class ranges are exactly those widths.
    """

    __slots__ = ("_w", "_prev_ts", "_prev_delta", "count", "_first_delta_bits")

    codec_id = TsCodec.DOD

    def __init__(self, precision):
        self._w = BitWriter()
        self._prev_ts = 0
        self._prev_delta = 0
        self.count = 0
        self._first_delta_bits = precision.first_delta_bits

    def append(self, ts):
        _check_signed64(ts)
        w = self._w
        if self.count == 0:
            w.write_bits(ts & MASK64, 64)
        else:
            delta = ts - self._prev_ts
            if delta < 0:
                raise ContractViolation(f"decreasing timestamp {ts} after {self._prev_ts}")
            if self.count == 1:
                fdb = self._first_delta_bits
                sentinel = (1 << fdb) - 1
                # A first delta at or above the sentinel escapes to a raw
                # 64-bit field; the precision-derived width assumes blocks
                # span bounded time, which real data can violate.
                if delta >= sentinel:
                    w.write_bits(sentinel, fdb)
                    w.write_bits(delta, 64)
                else:
                    w.write_bits(delta, fdb)
            else:
                dod = delta - self._prev_delta
                if dod == 0:
                    w.write_bits(0, 1)
                elif -63 <= dod <= 64:
                    w.write_bits(0b10, 2)
                    w.write_bits(dod + 63, 7)
                elif -_U23 <= dod <= (1 << 23):
                    w.write_bits(0b110, 3)
                    w.write_bits(dod + _U23, 24)
                elif -_U31 <= dod <= (1 << 31):
                    w.write_bits(0b1110, 4)
                    w.write_bits(dod + _U31, 32)
                else:
                    w.write_bits(0b1111, 4)
                    w.write_bits(dod & MASK64, 64)
            self._prev_delta = delta
        self._prev_ts = ts
        self.count += 1

    def encoded_bits(self):
        return self._w.bit_position

    def max_append_bits(self, ts):
        return 64 + self._first_delta_bits if self.count <= 1 else 68

    def finish(self):
        return EncodedStream(int(self.codec_id), self.count, self._w.finish())


def _decode_dod(reader, count, precision):
    out = []
    if count == 0:
        return out
    ts = reader.read_bits(64)
    if ts >> 63:
        ts -= 1 << 64
    out.append(ts)
    if count == 1:
        return out
    fdb = precision.first_delta_bits
    delta = reader.read_bits(fdb)
    if delta == (1 << fdb) - 1:
        delta = reader.read_bits(64)
    ts += delta
    out.append(ts)
    for _ in range(count - 2):
        prefix = reader.read_unary_capped(4)
        if prefix == 0:
            dod = 0
        elif prefix == 1:
            dod = reader.read_bits(7) - 63
        elif prefix == 2:
            dod = reader.read_bits(24) - _U23
        elif prefix == 3:
            dod = reader.read_bits(32) - _U31
        else:
            dod = reader.read_bits(64)
        delta = (delta + dod) & MASK64
        ts += delta
        out.append(ts)
    return out


def uleb128_bytes(value):
    """Unsigned LEB128: little-endian 7-bit groups, high bit marks continuation."""
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _uleb128_len(value):
    n = 1
    while value > 0x7F:
        value >>= 7
        n += 1
    return n


class _RunLengthEncoder:
    """Common machinery for the two (run length, delta) pair codecs.

    Consecutive equal deltas coalesce into one pair; an open run is closed
    when a different delta arrives or the stream is finished, so runs never
    span block boundaries.
    """

    __slots__ = ("_w", "_prev_ts", "_run_delta", "_run_len", "count")

    def __init__(self):
        self._w = BitWriter()
        self._prev_ts = 0
        self._run_delta = 0
        self._run_len = 0
        self.count = 0

    def append(self, ts):
        _check_signed64(ts)
        if self.count == 0:
            self._w.write_bits(ts & MASK64, 64)
        else:
            delta = ts - self._prev_ts
            if delta < 0:
                raise ContractViolation(f"decreasing timestamp {ts} after {self._prev_ts}")
            if self._run_len and delta == self._run_delta:
                self._run_len += 1
            else:
                if self._run_len:
                    self._emit_pair(self._run_len, self._run_delta)
                self._run_delta = delta
                self._run_len = 1
        self._prev_ts = ts
        self.count += 1

    def encoded_bits(self):
        bits = self._w.bit_position
        if self._run_len:
            bits += self._pair_bits(self._run_len, self._run_delta)
        return bits

    def finish(self):
        if self._run_len:
            self._emit_pair(self._run_len, self._run_delta)
            self._run_len = 0
        return EncodedStream(int(self.codec_id), self.count, self._w.finish())


class LebTimestampEncoder(_RunLengthEncoder):
    """(run length, delta) pairs, both LEB128 coded along byte boundaries."""

    __slots__ = ()

    codec_id = TsCodec.DELTA_RLE_LEB128

    def _emit_pair(self, run_len, delta):
        self._w.write_bytes(uleb128_bytes(run_len))
        self._w.write_bytes(uleb128_bytes(delta))

    def _pair_bits(self, run_len, delta):
        return (_uleb128_len(run_len) + _uleb128_len(delta)) * 8

    def max_append_bits(self, ts):
        return 64 if self.count == 0 else 320


def _rice_cost(u, k):
    """Bit cost and post-adaptation k for one Rice-coded value."""
    q = u >> k
    if q >= RICE_ESCAPE_QUOTIENT:
        return RICE_ESCAPE_QUOTIENT + 64, min(63, k + 8)
    if q == 0:
        new_k = max(0, k - 1)
    elif q == 1:
        new_k = k
    else:
        new_k = min(63, k + q)
    return q + 1 + k, new_k


def _rice_write(writer, u, k):
    q = u >> k
    if q >= RICE_ESCAPE_QUOTIENT:
        # Unbounded unary would let one outlier emit an arbitrarily long
        # run of ones; 48 ones act as an escape prefix for a raw value.
        writer.write_bits((1 << RICE_ESCAPE_QUOTIENT) - 1, RICE_ESCAPE_QUOTIENT)
        writer.write_bits(u, 64)
        return min(63, k + 8)
    writer.write_bits(((1 << q) - 1) << 1, q + 1)
    if k:
        writer.write_bits(u & ((1 << k) - 1), k)
    if q == 0:
        return max(0, k - 1)
    if q == 1:
        return k
    return min(63, k + q)


def _rice_read(reader, k):
    q = reader.read_unary_capped(RICE_ESCAPE_QUOTIENT)
    if q >= RICE_ESCAPE_QUOTIENT:
        return reader.read_bits(64), min(63, k + 8)
    u = (q << k) | (reader.read_bits(k) if k else 0)
    if q == 0:
        new_k = max(0, k - 1)
    elif q == 1:
        new_k = k
    else:
        new_k = min(63, k + q)
    return u, new_k


class RiceTimestampEncoder(_RunLengthEncoder):
    """(run length, delta) pairs, Rice coded with per-component adaptive k.

    k starts at 2 for run lengths and 10 for deltas and is retuned from the
    emitted quotient after every value (q=0 lowers k by one, q=1 keeps it,
    q>1 raises it by q), so the decoder reproduces the k trajectory from
    the stream alone.
    """

    __slots__ = ("k_run", "k_delta")

    codec_id = TsCodec.DELTA_RLE_RICE

    def __init__(self):
        super().__init__()
        self.k_run = RICE_INIT_K_RUN
        self.k_delta = RICE_INIT_K_DELTA

    def _emit_pair(self, run_len, delta):
        self.k_run = _rice_write(self._w, run_len, self.k_run)
        self.k_delta = _rice_write(self._w, delta, self.k_delta)

    def _pair_bits(self, run_len, delta):
        bits_r, _ = _rice_cost(run_len, self.k_run)
        bits_d, _ = _rice_cost(delta, self.k_delta)
        return bits_r + bits_d

    def max_append_bits(self, ts):
        return 64 if self.count == 0 else 2 * (RICE_ESCAPE_QUOTIENT + 64 + 1)


def _decode_run_length(reader, count, read_pair):
    out = []
    if count == 0:
        return out
    ts = reader.read_bits(64)
    if ts >> 63:
        ts -= 1 << 64
    out.append(ts)
    while len(out) < count:
        run_len, delta = read_pair()
        if run_len == 0 or len(out) + run_len > count:
            raise CorruptData(f"run of {run_len} deltas does not fit element count {count}")
        for _ in range(run_len):
            ts += delta
            out.append(ts)
    return out


def _decode_leb(reader, count):
    def read_pair():
        return _read_uleb(reader), _read_uleb(reader)

    return _decode_run_length(reader, count, read_pair)


def _read_uleb(reader):
    value = 0
    shift = 0
    while True:
        byte = reader.read_bits(8)
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value
        shift += 7
        if shift > 63:
            raise CorruptData("LEB128 sequence longer than 64 bits")


def _decode_rice(reader, count):
    state = {"k_run": RICE_INIT_K_RUN, "k_delta": RICE_INIT_K_DELTA}

    def read_pair():
        run_len, state["k_run"] = _rice_read(reader, state["k_run"])
        delta, state["k_delta"] = _rice_read(reader, state["k_delta"])
        return run_len, delta

    return _decode_run_length(reader, count, read_pair)


_ENCODERS = {
    TsCodec.DOD: lambda precision: DodTimestampEncoder(precision),
    TsCodec.DELTA_RLE_LEB128: lambda precision: LebTimestampEncoder(),
    TsCodec.DELTA_RLE_RICE: lambda precision: RiceTimestampEncoder(),
}


def make_ts_encoder(codec, precision):
    try:
        return _ENCODERS[TsCodec(codec)](precision)
    except ValueError:
        raise CorruptData(f"unknown timestamp codec tag {codec}") from None


def encode_timestamps(timestamps, precision, codec):
    """Encode a non-empty, non-decreasing timestamp list under one codec."""
    if not timestamps:
        raise ContractViolation("timestamp list must be non-empty")
    enc = make_ts_encoder(codec, precision)
    for ts in timestamps:
        enc.append(ts)
    return enc.finish()


def encode_ts_dod(timestamps, precision):
    return encode_timestamps(timestamps, precision, TsCodec.DOD)


def encode_ts_delta_rle_leb128(timestamps, precision):
    return encode_timestamps(timestamps, precision, TsCodec.DELTA_RLE_LEB128)


def encode_ts_delta_rle_rice(timestamps, precision):
    return encode_timestamps(timestamps, precision, TsCodec.DELTA_RLE_RICE)


def decode_ts_payload(reader, count, codec, precision):
    """Decode `count` timestamps from a positioned reader (used inside blocks)."""
    codec = TsCodec(codec)
    if codec is TsCodec.DOD:
        return _decode_dod(reader, count, precision)
    if codec is TsCodec.DELTA_RLE_LEB128:
        return _decode_leb(reader, count)
    return _decode_rice(reader, count)


def decode_ts(stream, precision):
    """Decode a standalone stream back to the exact original list."""
    try:
        codec = TsCodec(stream.codec_id)
    except ValueError:
        raise CorruptData(f"unknown timestamp codec tag {stream.codec_id}") from None
    reader = BitReader(stream.payload)
    out = decode_ts_payload(reader, stream.count, codec, precision)
    reader.expect_exhausted()
    return out
