"""Value stream codecs over raw 64-bit words.

Doubles are bit-cast, integers stored two's complement and booleans as
0/1 words, so every codec is bit-exact regardless of numeric meaning: NaN
payloads, infinities and subnormals survive a roundtrip unchanged. String
columns bypass these codecs and use the raw length-prefixed stream at the
end of this module.
"""

from ..bitstream import BitReader, BitWriter
from ..errors import ContractViolation, CorruptData
from .base import MASK64, RAW_STRING, EncodedStream, ValCodec

_MASK52 = (1 << 52) - 1


def _clz64(x):
    return 64 - x.bit_length()


def _ctz64(x):
    return (x & -x).bit_length() - 1


class GorillaEncoder:
    """XOR-with-previous codec.

    A zero XOR costs one bit. Otherwise, if the leading-zero count grew or
    held and the trailing-zero count matches the window set by the last
    full control block, '10' plus the window's meaningful bits are written;
    else '11', a 6-bit leading-zero count, a 6-bit meaningful-bit length
    (64 wraps to 0) and the meaningful bits, which also become the new
    window. Exactly one window survives per stream.
    """

    __slots__ = ("_w", "_prev", "_lead", "_trail", "count")

    codec_id = ValCodec.GORILLA

    def __init__(self):
        self._w = BitWriter()
        self._prev = 0
        self._lead = None
        self._trail = 0
        self.count = 0

    def append(self, word):
        w = self._w
        if self.count == 0:
            w.write_bits(word, 64)
        else:
            x = word ^ self._prev
            if x == 0:
                w.write_bits(0, 1)
            else:
                lead = _clz64(x)
                trail = _ctz64(x)
                if self._lead is not None and lead >= self._lead and trail == self._trail:
                    w.write_bits(0b10, 2)
                    w.write_bits(x >> trail, 64 - self._lead - self._trail)
                else:
                    meaningful = 64 - lead - trail
                    w.write_bits(0b11, 2)
                    w.write_bits(lead, 6)
                    w.write_bits(meaningful & 63, 6)
                    w.write_bits(x >> trail, meaningful)
                    self._lead = lead
                    self._trail = trail
        self._prev = word
        self.count += 1

    def encoded_bits(self):
        return self._w.bit_position

    def max_append_bits(self, word):
        return 78

    def finish(self):
        return EncodedStream(int(self.codec_id), self.count, self._w.finish())


def _decode_gorilla(reader, count):
    out = []
    if count == 0:
        return out
    prev = reader.read_bits(64)
    out.append(prev)
    lead = None
    trail = 0
    for _ in range(count - 1):
        if reader.read_bit():
            if reader.read_bit():
                lead = reader.read_bits(6)
                meaningful = reader.read_bits(6) or 64
                trail = 64 - lead - meaningful
                if trail < 0:
                    raise CorruptData("gorilla control block with impossible widths")
                x = reader.read_bits(meaningful) << trail
            else:
                if lead is None:
                    raise CorruptData("gorilla reuse block before any window was set")
                x = reader.read_bits(64 - lead - trail) << trail
            prev ^= x
        out.append(prev)
    return out


FPC_TABLE_BITS = 16
_FPC_SIZE = 1 << FPC_TABLE_BITS
_FPC_MASK = _FPC_SIZE - 1

# 3-bit code for the count of leading zero bytes. Counts 0-4, 6 and 8 map
# directly; an actual 5 is sent as 4 and 7 as 6, costing one extra byte.
# Code 7 is unused and rejected on decode.
_LZB_TO_CODE = {0: 0, 1: 1, 2: 2, 3: 3, 4: 4, 6: 5, 8: 6}
_CODE_TO_LZB = (0, 1, 2, 3, 4, 6, 8)
_LZB_EFFECTIVE = (0, 1, 2, 3, 4, 4, 6, 6, 8)


class _FpcState:
    """Mirrored predictor state: one fcm and one dfcm hash table.

    Tables hold 2^16 zero-initialised entries; both hashes fold the
    previous hash left by 6 bits with the top 16 bits of the new value
    (the new delta for dfcm).
    """

    __slots__ = ("fcm", "dfcm", "fhash", "dhash", "last")

    def __init__(self):
        self.fcm = [0] * _FPC_SIZE
        self.dfcm = [0] * _FPC_SIZE
        self.fhash = 0
        self.dhash = 0
        self.last = 0

    def predictions(self):
        return self.fcm[self.fhash], (self.dfcm[self.dhash] + self.last) & MASK64

    def update(self, word):
        self.fcm[self.fhash] = word
        self.fhash = ((self.fhash << 6) ^ (word >> 48)) & _FPC_MASK
        delta = (word - self.last) & MASK64
        self.dfcm[self.dhash] = delta
        self.dhash = ((self.dhash << 6) ^ (delta >> 48)) & _FPC_MASK
        self.last = word


class FpcEncoder:
    """Dual fcm/dfcm predictor codec.

    Each value is XORed with the closer prediction (more leading zero
    bytes; fcm wins ties) and sent as one selector bit, a 3-bit
    leading-zero-byte code and the remaining bytes. Tables update on every
    value so the decoder mirrors them without side information.
    """

    __slots__ = ("_w", "_state", "count")

    codec_id = ValCodec.FPC

    def __init__(self):
        self._w = BitWriter()
        self._state = _FpcState()
        self.count = 0

    def append(self, word):
        pred_f, pred_d = self._state.predictions()
        xor_f = word ^ pred_f
        xor_d = word ^ pred_d
        lzb_f = _clz64(xor_f) >> 3 if xor_f else 8
        lzb_d = _clz64(xor_d) >> 3 if xor_d else 8
        if lzb_f >= lzb_d:
            selector, xor, lzb = 0, xor_f, lzb_f
        else:
            selector, xor, lzb = 1, xor_d, lzb_d
        effective = _LZB_EFFECTIVE[lzb]
        w = self._w
        w.write_bits(selector, 1)
        w.write_bits(_LZB_TO_CODE[effective], 3)
        rest = (8 - effective) * 8
        if rest:
            w.write_bits(xor, rest)
        self._state.update(word)
        self.count += 1

    def encoded_bits(self):
        return self._w.bit_position

    def max_append_bits(self, word):
        return 68

    def finish(self):
        return EncodedStream(int(self.codec_id), self.count, self._w.finish())


def _decode_fpc(reader, count):
    state = _FpcState()
    out = []
    for _ in range(count):
        selector = reader.read_bit()
        code = reader.read_bits(3)
        if code == 7:
            raise CorruptData("invalid FPC leading-zero-byte code 7")
        rest = (8 - _CODE_TO_LZB[code]) * 8
        xor = reader.read_bits(rest) if rest else 0
        pred_f, pred_d = state.predictions()
        word = xor ^ (pred_d if selector else pred_f)
        state.update(word)
        out.append(word)
    return out


class ExpMantissaEncoder:
    """Separate delta-of-delta coding of exponent and mantissa bit fields.

    The first value is stored raw. Every later value costs one sign bit,
    then '0' or '1' plus a 12-bit offset exponent code (offset 2^11-1,
    wrapped mod 4096; the 11-bit exponent domain makes the wrap uniquely
    decodable), then one of five mantissa classes: '0', '10'+7, '110'+32,
    '1110'+48 or '1111'+54 bits, each offset by 2^b-1 for its width.
    """

    __slots__ = ("_w", "_prev_exp", "_prev_dexp", "_prev_man", "_prev_dman", "count")

    codec_id = ValCodec.EXP_MANTISSA_DOD

    def __init__(self):
        self._w = BitWriter()
        self._prev_exp = 0
        self._prev_dexp = 0
        self._prev_man = 0
        self._prev_dman = 0
        self.count = 0

    def append(self, word):
        w = self._w
        exp = (word >> 52) & 0x7FF
        man = word & _MASK52
        if self.count == 0:
            w.write_bits(word, 64)
        else:
            w.write_bits(word >> 63, 1)
            dexp = exp - self._prev_exp
            dod = dexp - self._prev_dexp
            if dod == 0:
                w.write_bits(0, 1)
            else:
                w.write_bits(1, 1)
                w.write_bits((dod + 0x7FF) & 0xFFF, 12)
            self._prev_dexp = dexp
            dman = man - self._prev_man
            dodm = dman - self._prev_dman
            if dodm == 0:
                w.write_bits(0, 1)
            elif -63 <= dodm <= 64:
                w.write_bits(0b10, 2)
                w.write_bits(dodm + 63, 7)
            elif -((1 << 31) - 1) <= dodm <= (1 << 31):
                w.write_bits(0b110, 3)
                w.write_bits(dodm + (1 << 31) - 1, 32)
            elif -((1 << 47) - 1) <= dodm <= (1 << 47):
                w.write_bits(0b1110, 4)
                w.write_bits(dodm + (1 << 47) - 1, 48)
            else:
                w.write_bits(0b1111, 4)
                w.write_bits(dodm + (1 << 53) - 1, 54)
            self._prev_dman = dman
        self._prev_exp = exp
        self._prev_man = man
        self.count += 1

    def encoded_bits(self):
        return self._w.bit_position

    def max_append_bits(self, word):
        return 64 if self.count == 0 else 72

    def finish(self):
        return EncodedStream(int(self.codec_id), self.count, self._w.finish())


def _decode_expmantissa(reader, count):
    out = []
    if count == 0:
        return out
    word = reader.read_bits(64)
    out.append(word)
    prev_exp = (word >> 52) & 0x7FF
    prev_dexp = 0
    prev_man = word & _MASK52
    prev_dman = 0
    for _ in range(count - 1):
        sign = reader.read_bit()
        if reader.read_bit():
            e = reader.read_bits(12)
            exp = (prev_exp + prev_dexp + e - 0x7FF) & 0xFFF
            if exp > 0x7FF:
                raise CorruptData("decoded exponent outside 11-bit range")
        else:
            exp = (prev_exp + prev_dexp) & 0xFFF
            if exp > 0x7FF:
                raise CorruptData("decoded exponent outside 11-bit range")
        prev_dexp = exp - prev_exp
        prev_exp = exp
        prefix = reader.read_unary_capped(4)
        if prefix == 0:
            dodm = 0
        elif prefix == 1:
            dodm = reader.read_bits(7) - 63
        elif prefix == 2:
            dodm = reader.read_bits(32) - ((1 << 31) - 1)
        elif prefix == 3:
            dodm = reader.read_bits(48) - ((1 << 47) - 1)
        else:
            dodm = reader.read_bits(54) - ((1 << 53) - 1)
        man = prev_man + prev_dman + dodm
        if not 0 <= man <= _MASK52:
            raise CorruptData("decoded mantissa outside 52-bit range")
        prev_dman = man - prev_man
        prev_man = man
        word = (sign << 63) | (exp << 52) | man
        out.append(word)
    return out


class StringEncoder:
    """Length-prefixed UTF-8, outside the three word codecs."""

    __slots__ = ("_w", "count")

    codec_id = RAW_STRING

    def __init__(self):
        self._w = BitWriter()
        self.count = 0

    def append(self, text):
        data = text.encode("utf-8")
        if len(data) > 0xFFFFFFFF:
            raise ContractViolation("string longer than 2^32-1 bytes")
        self._w.write_bits(len(data), 32)
        self._w.write_bytes(data)
        self.count += 1

    def encoded_bits(self):
        return self._w.bit_position

    def max_append_bits(self, text):
        return 32 + len(text.encode("utf-8")) * 8

    def finish(self):
        return EncodedStream(RAW_STRING, self.count, self._w.finish())


def _decode_strings(reader, count):
    out = []
    for _ in range(count):
        n = reader.read_bits(32)
        try:
            out.append(reader.read_aligned_bytes(n).decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise CorruptData(f"invalid UTF-8 in string column: {exc}") from None
    return out


_VAL_ENCODERS = {
    ValCodec.GORILLA: GorillaEncoder,
    ValCodec.FPC: FpcEncoder,
    ValCodec.EXP_MANTISSA_DOD: ExpMantissaEncoder,
}


def make_val_encoder(codec):
    try:
        return _VAL_ENCODERS[ValCodec(codec)]()
    except ValueError:
        raise CorruptData(f"unknown value codec tag {codec}") from None


def encode_words(words, codec):
    enc = make_val_encoder(codec)
    for word in words:
        if not 0 <= word <= MASK64:
            raise ContractViolation(f"word {word} outside unsigned 64-bit range")
        enc.append(word)
    return enc.finish()


def encode_val_gorilla(words):
    return encode_words(words, ValCodec.GORILLA)


def encode_val_fpc(words):
    return encode_words(words, ValCodec.FPC)


def encode_val_expmantissa_dod(words):
    return encode_words(words, ValCodec.EXP_MANTISSA_DOD)


def encode_strings(texts):
    enc = StringEncoder()
    for text in texts:
        enc.append(text)
    return enc.finish()


def decode_val_payload(reader, count, codec):
    """Decode `count` values from a positioned reader (used inside blocks)."""
    if codec == RAW_STRING:
        return _decode_strings(reader, count)
    codec = ValCodec(codec)
    if codec is ValCodec.GORILLA:
        return _decode_gorilla(reader, count)
    if codec is ValCodec.FPC:
        return _decode_fpc(reader, count)
    return _decode_expmantissa(reader, count)


def decode_val(stream, codec=None):
    """Decode a standalone value stream to the original word (or string) list.

    `codec` overrides the stream's own tag when given; a mismatched codec
    fails with a corruption or stream error rather than returning garbage,
    enforced by the zero-padding tail check.
    """
    tag = stream.codec_id if codec is None else int(codec)
    if tag != RAW_STRING:
        try:
            ValCodec(tag)
        except ValueError:
            raise CorruptData(f"unknown value codec tag {tag}") from None
    reader = BitReader(stream.payload)
    out = decode_val_payload(reader, stream.count, tag)
    reader.expect_exhausted()
    return out
