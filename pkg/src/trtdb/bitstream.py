"""Bit-granular writer and reader over byte buffers.

Bits are packed most-significant-bit first within each byte, so unary
prefix codes read naturally left to right. Both classes are single
threaded; instances must not be shared between threads while in use.
"""

from .errors import ContractViolation, CorruptData, EndOfStream

_MASKS = [(1 << n) - 1 for n in range(65)]


class BitWriter:
    """Append-only bit sink backed by a growable bytearray."""

    __slots__ = ("_buf", "_acc", "_nacc", "_done")

    def __init__(self):
        self._buf = bytearray()
        self._acc = 0  # pending bits, always < 8 of them
        self._nacc = 0
        self._done = None

    @property
    def bit_position(self):
        """Total bits appended since creation."""
        return len(self._buf) * 8 + self._nacc

    def write_bits(self, value, n):
        """Append the n low-order bits of value, MSB first. 0 <= n <= 64."""
        if self._done is not None:
            raise ContractViolation("writer already finished")
        if n < 0 or n > 64:
            raise ContractViolation(f"bit count {n} outside 0..64")
        if value < 0 or value >> n:
            raise ContractViolation(f"value {value} does not fit in {n} bits")
        if n == 0:
            return
        acc = (self._acc << n) | value
        nacc = self._nacc + n
        buf = self._buf
        while nacc >= 8:
            nacc -= 8
            buf.append((acc >> nacc) & 0xFF)
        self._acc = acc & _MASKS[nacc]
        self._nacc = nacc

    def write_bit(self, bit):
        self.write_bits(bit, 1)

    def write_bytes(self, data):
        """Append whole bytes; the cursor must be byte aligned."""
        if self._done is not None:
            raise ContractViolation("writer already finished")
        if self._nacc:
            raise ContractViolation("write_bytes requires byte alignment")
        self._buf.extend(data)

    def finish(self):
        """Pad to a byte boundary with zero bits and return the buffer.

        Idempotent: repeated calls return the same bytes object.
        """
        if self._done is None:
            if self._nacc:
                self._buf.append((self._acc << (8 - self._nacc)) & 0xFF)
                self._acc = 0
                self._nacc = 0
            self._done = bytes(self._buf)
        return self._done


class BitReader:
    """Sequential reader over bytes produced by BitWriter."""

    __slots__ = ("_buf", "_pos", "_nbits")

    def __init__(self, data, bit_length=None):
        self._buf = data
        self._pos = 0
        self._nbits = len(data) * 8 if bit_length is None else bit_length

    @property
    def cursor(self):
        return self._pos

    @property
    def remaining_bits(self):
        return self._nbits - self._pos

    def read_bits(self, n):
        """Read n bits (0..64) and return them as an unsigned int."""
        if n < 0 or n > 64:
            raise ContractViolation(f"bit count {n} outside 0..64")
        if n == 0:
            return 0
        pos = self._pos
        end = pos + n
        if end > self._nbits:
            raise EndOfStream(f"read of {n} bits at {pos} overruns {self._nbits}-bit stream")
        first = pos >> 3
        last = (end + 7) >> 3
        chunk = int.from_bytes(self._buf[first:last], "big")
        self._pos = end
        return (chunk >> ((last << 3) - end)) & _MASKS[n]

    def read_bit(self):
        pos = self._pos
        if pos >= self._nbits:
            raise EndOfStream(f"read of 1 bit at {pos} overruns {self._nbits}-bit stream")
        self._pos = pos + 1
        return (self._buf[pos >> 3] >> (7 - (pos & 7))) & 1

    def read_unary_capped(self, cap):
        """Count consecutive 1 bits, consuming the terminating 0.

        Stops after `cap` ones without consuming a terminator, so a run of
        exactly `cap` ones can act as an escape marker.
        """
        count = 0
        while count < cap:
            if self.read_bit() == 0:
                return count
            count += 1
        return count

    def read_aligned_bytes(self, n):
        """Read n whole bytes; the cursor must be byte aligned."""
        pos = self._pos
        if pos & 7:
            raise ContractViolation("read_aligned_bytes requires byte alignment")
        end = pos + n * 8
        if end > self._nbits:
            raise EndOfStream("byte read overruns stream")
        start = pos >> 3
        self._pos = end
        return bytes(self._buf[start:start + n])

    def skip_padding(self):
        """Consume up to 7 zero bits to reach the next byte boundary.

        Raises CorruptData if any padding bit is set: trailing garbage means
        the stream was not produced by the matching encoder.
        """
        pad = (-self._pos) & 7
        if pad and self.read_bits(pad):
            raise CorruptData("nonzero padding bits at end of stream")

    def expect_exhausted(self):
        """Verify only zero padding remains; used after decoding `count` elements."""
        if self.remaining_bits >= 8:
            raise CorruptData(f"{self.remaining_bits} unread bits after final element")
        if self.remaining_bits and self.read_bits(self.remaining_bits):
            raise CorruptData("nonzero padding bits at end of stream")
