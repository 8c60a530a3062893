"""Shared codec types: precisions, codec tags and the encoded-stream envelope."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

from ..errors import ContractViolation, CorruptData

MASK64 = (1 << 64) - 1


class TsCodec(IntEnum):
    """Stable numeric tags for timestamp codecs; part of the file format."""

    DOD = 0
    DELTA_RLE_LEB128 = 1
    DELTA_RLE_RICE = 2


class ValCodec(IntEnum):
    """Stable numeric tags for value codecs; part of the file format."""

    GORILLA = 0
    FPC = 1
    EXP_MANTISSA_DOD = 2


# Pseudo-codec tag for raw length-prefixed UTF-8 string columns.
RAW_STRING = 16

TS_CODEC_NAMES = {"dod": TsCodec.DOD, "leb": TsCodec.DELTA_RLE_LEB128, "rice": TsCodec.DELTA_RLE_RICE}
VAL_CODEC_NAMES = {"gorilla": ValCodec.GORILLA, "fpc": ValCodec.FPC, "emdod": ValCodec.EXP_MANTISSA_DOD}


class TimestampPrecision:
    """Tick unit of a series; fixed for the life of the series.

    The unit also selects the bit width of the first stored delta in the
    delta-of-delta codec: 14 bits for seconds, 24 for milliseconds and 44
    for nanoseconds.
    """

    __slots__ = ("unit", "ticks_per_second", "first_delta_bits", "tag")

    _BY_UNIT = {}

    def __init__(self, unit, ticks_per_second, first_delta_bits, tag):
        self.unit = unit
        self.ticks_per_second = ticks_per_second
        self.first_delta_bits = first_delta_bits
        self.tag = tag

    def __repr__(self):
        return f"TimestampPrecision({self.unit!r})"

    def __eq__(self, other):
        return isinstance(other, TimestampPrecision) and self.unit == other.unit

    def __hash__(self):
        return hash(self.unit)

    @classmethod
    def from_unit(cls, unit):
        try:
            return cls._BY_UNIT[unit]
        except KeyError:
            raise ContractViolation(f"unknown precision {unit!r}; expected s, ms or ns") from None

    @classmethod
    def from_tag(cls, tag):
        for p in cls._BY_UNIT.values():
            if p.tag == tag:
                return p
        raise CorruptData(f"unknown precision tag {tag}")


SECONDS = TimestampPrecision("s", 1, 14, 0)
MILLIS = TimestampPrecision("ms", 1_000, 24, 1)
NANOS = TimestampPrecision("ns", 1_000_000_000, 44, 2)
TimestampPrecision._BY_UNIT = {"s": SECONDS, "ms": MILLIS, "ns": NANOS}


@dataclass(frozen=True)
class EncodedStream:
    """One encoded column or timestamp stream.

    Wire layout (little endian, bit-exact across platforms):
    codec id u8, element count u32, payload bytes (zero padded to a byte).
    """

    codec_id: int
    count: int
    payload: bytes

    HEADER_LEN = 5

    def to_bytes(self):
        return bytes([self.codec_id]) + self.count.to_bytes(4, "little") + self.payload

    @property
    def byte_length(self):
        return self.HEADER_LEN + len(self.payload)


_PACK_F64 = struct.Struct(">d")


def float_to_word(x):
    """Bit-cast a double to its 64-bit pattern (NaN payloads preserved)."""
    return int.from_bytes(_PACK_F64.pack(x), "big")


def word_to_float(w):
    return _PACK_F64.unpack(w.to_bytes(8, "big"))[0]


def int_to_word(v):
    if not -(1 << 63) <= v < (1 << 63):
        raise ContractViolation(f"integer {v} outside 64-bit signed range")
    return v & MASK64


def word_to_int(w):
    return w - (1 << 64) if w >> 63 else w
