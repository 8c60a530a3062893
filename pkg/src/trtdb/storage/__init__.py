from .blocks import BlockBuilder, BlockIndexEntry, ColumnAgg, decode_block
from .oracle import OracleStore
from .qrb import QuantumReorderBuffer
from .schema import (
    COLUMN_TYPE_NAMES,
    Column,
    ColumnType,
    Row,
    SeriesSchema,
    default_ts_codec,
)
from .store import AGGREGATE_FNS, InsertResult, SeriesInfo, Store, open_store

__all__ = [
    "AGGREGATE_FNS",
    "BlockBuilder",
    "BlockIndexEntry",
    "Column",
    "ColumnAgg",
    "ColumnType",
    "COLUMN_TYPE_NAMES",
    "InsertResult",
    "OracleStore",
    "QuantumReorderBuffer",
    "Row",
    "SeriesInfo",
    "SeriesSchema",
    "Store",
    "decode_block",
    "default_ts_codec",
    "open_store",
]
