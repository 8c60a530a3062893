"""Lossless block codecs for timestamp and value streams.

Encoding the same input twice yields identical bytes, and for every codec
decode(encode(x)) == x, bit-exact for floats.
"""

from statistics import median

from ..errors import ContractViolation
from .base import (
    MASK64,
    NANOS,
    MILLIS,
    RAW_STRING,
    SECONDS,
    EncodedStream,
    TimestampPrecision,
    TsCodec,
    ValCodec,
    TS_CODEC_NAMES,
    VAL_CODEC_NAMES,
    float_to_word,
    int_to_word,
    word_to_float,
    word_to_int,
)
from .timestamps import (
    DodTimestampEncoder,
    LebTimestampEncoder,
    RiceTimestampEncoder,
    decode_ts,
    decode_ts_payload,
    encode_timestamps,
    encode_ts_delta_rle_leb128,
    encode_ts_delta_rle_rice,
    encode_ts_dod,
    make_ts_encoder,
    uleb128_bytes,
)
from .values import (
    ExpMantissaEncoder,
    FpcEncoder,
    GorillaEncoder,
    StringEncoder,
    decode_val,
    decode_val_payload,
    encode_strings,
    encode_val_expmantissa_dod,
    encode_val_fpc,
    encode_val_gorilla,
    encode_words,
    make_val_encoder,
)


def mad(deltas):
    """Median absolute deviation: median(|X - median(X)|).

    The median of an even-count list is the mean of the two central
    elements. A zero result classifies a series as approximately evenly
    spaced.
    """
    data = list(deltas)
    if not data:
        raise ContractViolation("MAD of an empty list")
    center = median(data)
    return median(abs(x - center) for x in data)


__all__ = [
    "EncodedStream",
    "TimestampPrecision",
    "SECONDS",
    "MILLIS",
    "NANOS",
    "TsCodec",
    "ValCodec",
    "TS_CODEC_NAMES",
    "VAL_CODEC_NAMES",
    "RAW_STRING",
    "MASK64",
    "float_to_word",
    "word_to_float",
    "int_to_word",
    "word_to_int",
    "encode_timestamps",
    "encode_ts_dod",
    "encode_ts_delta_rle_leb128",
    "encode_ts_delta_rle_rice",
    "decode_ts",
    "decode_ts_payload",
    "make_ts_encoder",
    "uleb128_bytes",
    "DodTimestampEncoder",
    "LebTimestampEncoder",
    "RiceTimestampEncoder",
    "encode_words",
    "encode_val_gorilla",
    "encode_val_fpc",
    "encode_val_expmantissa_dod",
    "encode_strings",
    "decode_val",
    "decode_val_payload",
    "make_val_encoder",
    "GorillaEncoder",
    "FpcEncoder",
    "ExpMantissaEncoder",
    "StringEncoder",
    "mad",
]
