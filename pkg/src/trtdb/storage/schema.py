"""Series schemas: column typing, codec choice and ingestion configuration."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple

from ..codecs import SECONDS, TimestampPrecision, TsCodec, ValCodec
from ..errors import SchemaError

_NAME_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_.-]*$")

DEFAULT_QUANTUM = 2048
DEFAULT_FLUSH_FRACTION = 2 / 3
DEFAULT_BLOCK_SIZE = 65536


class ColumnType(IntEnum):
    FLOAT64 = 0
    INT64 = 1
    BOOL = 2
    STRING = 3


COLUMN_TYPE_NAMES = {
    "float64": ColumnType.FLOAT64,
    "int64": ColumnType.INT64,
    "bool": ColumnType.BOOL,
    "string": ColumnType.STRING,
}


class Column(NamedTuple):
    name: str
    type: ColumnType


class Row(NamedTuple):
    ts: int
    values: tuple


def _column_type(t):
    if isinstance(t, str):
        try:
            return COLUMN_TYPE_NAMES[t]
        except KeyError:
            raise SchemaError(
                f"unknown column type {t!r}; expected one of {sorted(COLUMN_TYPE_NAMES)}") from None
    return ColumnType(t)


def default_ts_codec(precision):
    """Adaptive Rice for second precision, delta-of-delta from milliseconds up."""
    return TsCodec.DELTA_RLE_RICE if precision == SECONDS else TsCodec.DOD


@dataclass
class SeriesSchema:
    """Fixed-for-life description of one series.

    Column arity and codec choice cannot change after creation; the
    ingestion knobs (quantum q, flush fraction a, block byte cap b_size)
    are persisted in the file header so a reopened store behaves the same.
    """

    name: str
    precision: TimestampPrecision
    columns: tuple
    ts_codec: TsCodec = None
    val_codec: ValCodec = ValCodec.GORILLA
    q: int = DEFAULT_QUANTUM
    a: float = DEFAULT_FLUSH_FRACTION
    b_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise SchemaError(f"invalid series name {self.name!r}")
        if isinstance(self.precision, str):
            self.precision = TimestampPrecision.from_unit(self.precision)
        if self.ts_codec is None:
            self.ts_codec = default_ts_codec(self.precision)
        self.ts_codec = TsCodec(self.ts_codec)
        self.val_codec = ValCodec(self.val_codec)
        self.columns = tuple(Column(c[0], _column_type(c[1])) for c in self.columns)
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names")
        for n in names:
            if not _NAME_RE.match(n):
                raise SchemaError(f"invalid column name {n!r}")
        if self.q < 2:
            raise SchemaError("quantum q must be at least 2")
        if not 0 < self.a < 1:
            raise SchemaError("flush fraction a must be in (0, 1)")
        if self.b_size < 64:
            raise SchemaError("block size must be at least 64 bytes")

    @property
    def arity(self):
        return len(self.columns)

    def column_index(self, name):
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise SchemaError(f"series {self.name!r} has no column {name!r}")

    def numeric_column_indexes(self):
        return [i for i, c in enumerate(self.columns)
                if c.type in (ColumnType.FLOAT64, ColumnType.INT64)]

    def check_row(self, values):
        """Validate arity and per-column types; returns the values as a tuple."""
        values = tuple(values)
        if len(values) != self.arity:
            raise SchemaError(
                f"row arity {len(values)} does not match schema arity {self.arity}")
        for v, col in zip(values, self.columns):
            t = col.type
            if t is ColumnType.FLOAT64:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise SchemaError(f"column {col.name!r} expects float64, got {v!r}")
            elif t is ColumnType.INT64:
                if isinstance(v, bool) or not isinstance(v, int):
                    raise SchemaError(f"column {col.name!r} expects int64, got {v!r}")
            elif t is ColumnType.BOOL:
                if not isinstance(v, bool):
                    raise SchemaError(f"column {col.name!r} expects bool, got {v!r}")
            else:
                if not isinstance(v, str):
                    raise SchemaError(f"column {col.name!r} expects string, got {v!r}")
        return values
