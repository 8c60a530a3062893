import pytest
from hypothesis import given
from hypothesis import strategies as st

from trtdb.bitstream import BitReader, BitWriter
from trtdb.errors import ContractViolation, EndOfStream


def test_msb_first_packing():
    w = BitWriter()
    w.write_bits(0b101, 3)
    assert w.finish() == bytes([0b10100000])


def test_zero_width_write_is_noop():
    w = BitWriter()
    w.write_bits(0, 0)
    assert w.bit_position == 0


def test_byte_boundary_crossing():
    w = BitWriter()
    for _ in range(9):
        w.write_bits(1, 1)
    assert w.finish() == bytes([0xFF, 0x80])


def test_write_contract_violations():
    w = BitWriter()
    with pytest.raises(ContractViolation):
        w.write_bits(0, 65)
    with pytest.raises(ContractViolation):
        w.write_bits(8, 3)
    with pytest.raises(ContractViolation):
        w.write_bits(-1, 4)


def test_finish_is_idempotent_and_freezes():
    w = BitWriter()
    w.write_bits(0x2A, 7)
    first = w.finish()
    assert w.finish() is first
    with pytest.raises(ContractViolation):
        w.write_bits(1, 1)


def test_read_zero_bits():
    r = BitReader(b"\xff")
    assert r.read_bits(0) == 0
    assert r.cursor == 0


def test_fixed_sequence_roundtrip():
    w = BitWriter()
    w.write_bits(5, 3)
    w.write_bits(3602, 24)
    r = BitReader(w.finish())
    assert r.read_bits(3) == 5
    assert r.read_bits(24) == 3602


def test_overrun_raises():
    w = BitWriter()
    w.write_bits(3, 2)
    r = BitReader(w.finish())
    r.read_bits(2)
    # padding remains readable, but going past the final byte errors
    with pytest.raises(EndOfStream):
        r.read_bits(9)
    r2 = BitReader(b"")
    with pytest.raises(EndOfStream):
        r2.read_bit()


def test_unary_capped():
    w = BitWriter()
    w.write_bits(0b1110, 4)      # 3 ones then terminator
    w.write_bits(0b11111, 5)     # exactly the cap, no terminator
    w.write_bits(0, 1)
    r = BitReader(w.finish())
    assert r.read_unary_capped(10) == 3
    assert r.read_unary_capped(5) == 5
    assert r.read_bit() == 0


@given(
    st.lists(
        st.integers(min_value=0, max_value=64).flatmap(
            lambda n: st.tuples(st.integers(min_value=0, max_value=(1 << n) - 1), st.just(n))
        ),
        max_size=200,
    )
)
def test_roundtrip_property(pairs):
    w = BitWriter()
    for value, n in pairs:
        w.write_bits(value, n)
    total = w.bit_position
    data = w.finish()
    assert len(data) == (total + 7) // 8
    r = BitReader(data)
    for value, n in pairs:
        assert r.read_bits(n) == value
    # no phantom bits: remaining padding is zero
    r.expect_exhausted()
