"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`. Criterion 12 is a
reported, non-blocking performance smoke check.
"""

import itertools
import math
import random
import time

import pytest

from trtdb.analytics import SmaSeries, sma
from trtdb.bitstream import BitReader, BitWriter
from trtdb.bench import run_bsize_sweep
from trtdb.codecs import (
    MILLIS,
    NANOS,
    SECONDS,
    RiceTimestampEncoder,
    TsCodec,
    ValCodec,
    decode_ts,
    decode_val,
    encode_timestamps,
    encode_ts_delta_rle_leb128,
    encode_ts_delta_rle_rice,
    encode_ts_dod,
    encode_words,
    float_to_word,
    uleb128_bytes,
)
from trtdb.codecs.timestamps import _rice_write
from trtdb.gen import DatasetSpec, generate, shuffle_within_windows
from trtdb.query import execute, map_load, match, parse_query
from trtdb.storage import OracleStore, SeriesSchema, open_store

from test_analytics import sma_integral_oracle
from test_graph_match import brute_force_match, match_envs
from test_query_integration import (
    MODEL as FIG8_MODEL,
    RAIN,
    SNOW,
    WEATHER_QUERY,
    WIND,
    hand_computed_stations,
    weather_plan,
)


def _report(n, text):
    print(f"ACCEPTANCE {n:02d} PASS - {text}")


# ---------------------------------------------------------------------- 1


def test_criterion_01_codec_losslessness():
    started = time.perf_counter()
    rng = random.Random(11)

    n = 100_000
    ts_adversarial = [0]
    for step in itertools.chain([0] * 500, [1] * 500, [3600] * 500,
                                (rng.choice([0, 0, 1, 2, 3600, 2**34]) for _ in range(2000))):
        ts_adversarial.append(ts_adversarial[-1] + step)
    ts_random = [1_500_000_000_000]
    for _ in range(n - 1):
        ts_random.append(ts_random[-1] + rng.randint(0, 10**10))
    for codec in (TsCodec.DOD, TsCodec.DELTA_RLE_LEB128, TsCodec.DELTA_RLE_RICE):
        for series, precision in ((ts_random, NANOS), (ts_adversarial, SECONDS)):
            stream = encode_timestamps(series, precision, codec)
            assert decode_ts(stream, precision) == series

    words_random = [rng.getrandbits(64) for _ in range(n)]
    nan_words = [0x7FF8000000000001 + i for i in range(500)]
    subnormals = [i for i in range(1, 500)]  # smallest positive subnormals
    words_adversarial = (
        [float_to_word(42.0)] * 1000
        + [float_to_word(v) for v in (math.inf, -math.inf, 0.0, -0.0)] * 100
        + nan_words + subnormals
        + [0, (1 << 64) - 1] * 200
    )
    for codec in (ValCodec.GORILLA, ValCodec.FPC, ValCodec.EXP_MANTISSA_DOD):
        for words in (words_random, words_adversarial):
            stream = encode_words(words, codec)
            assert decode_val(stream) == words

    elapsed = time.perf_counter() - started
    assert elapsed < 30, f"losslessness suite took {elapsed:.1f} s (budget 30 s)"
    _report(1, f"decode(encode(x)) == x for all 6 codecs on 10^5 random + "
               f"adversarial elements in {elapsed:.1f} s")


# ---------------------------------------------------------------------- 2


def test_criterion_02_paper_worked_examples():
    # delta-of-delta: deltas 3602, 3600, 3600 -> dods -2 then 0 in 10 bits
    t0 = 1_496_334_000_000
    series = [t0, t0 + 3602, t0 + 7202, t0 + 10802]
    stream = encode_ts_dod(series, MILLIS)
    r = BitReader(stream.payload)
    assert r.read_bits(64) == t0
    assert r.read_bits(24) == 3602
    tail_start = r.cursor
    assert r.read_bits(2) == 0b10 and r.read_bits(7) == -2 + 63 and r.read_bit() == 0
    assert r.cursor - tail_start == 10
    assert decode_ts(stream, MILLIS) == series

    # LEB128: the two payload groups of 3602 reconstruct 3602
    data = uleb128_bytes(3602)
    assert ((data[1] & 0x7F) << 7) | (data[0] & 0x7F) == 3602

    # Rice: u=3602 with k=10 -> quotient '1110', remainder 530 in 10 bits
    w = BitWriter()
    _rice_write(w, 3602, 10)
    r = BitReader(w.finish())
    assert r.read_bits(4) == 0b1110
    assert r.read_bits(10) == 530

    # adaptive k moves from (2, 10) to (1, 13) on the worked sequence
    enc = RiceTimestampEncoder()
    assert (enc.k_run, enc.k_delta) == (2, 10)
    for ts in series:
        enc.append(ts)
    assert (enc.k_run, enc.k_delta) == (1, 13)
    assert decode_ts(enc.finish(), MILLIS) == series
    _report(2, "dod 10-bit tail, LEB128 3602, Rice 3602@k=10 -> '1110'+530, "
               "k adapts 2->1 and 10->13")


# ---------------------------------------------------------------------- 3


def test_criterion_03_compression_effectiveness():
    srbench = generate(DatasetSpec("srbench-like", 10_000, 42))
    ts = [t for t, _ in srbench.rows]
    rice = encode_ts_delta_rle_rice(ts, SECONDS).byte_length
    dod = encode_ts_dod(ts, SECONDS).byte_length
    raw = 8 * len(ts)
    assert rice < 0.10 * raw, f"rice {rice} not under 10% of raw {raw}"
    assert rice <= dod

    shelburne = generate(DatasetSpec("shelburne-like", 10_000, 42))
    ts_ns = [t for t, _ in shelburne.rows]
    dod_ns = encode_ts_dod(ts_ns, NANOS).byte_length
    leb_ns = encode_ts_delta_rle_leb128(ts_ns, NANOS).byte_length
    assert dod_ns <= leb_ns
    _report(3, f"rice {rice}B = {rice / raw:.2%} of raw and <= dod {dod}B on "
               f"periodic seconds; dod {dod_ns}B <= leb {leb_ns}B on nanosecond")


# ---------------------------------------------------------------------- 4


def test_criterion_04_reorder_tolerance(tmp_path):
    q, a = 2048, 2 / 3
    window = int((1 - a) * q) - 50
    base = []
    ts = 1_000_000
    rng = random.Random(4)
    for i in range(100_000):
        base.append((ts, (i,)))
        ts += rng.randint(0, 3)
    shuffled = shuffle_within_windows(base, window, seed=4)

    store = open_store(tmp_path)
    store.create_series(SeriesSchema(name="s", precision="s",
                                     columns=[("seq", "int64")], q=q, a=a))
    for t, v in shuffled:
        assert store.insert("s", t, v).accepted
    assert store.rejected_count("s") == 0
    got = [(r.ts, r.values) for r in store.full_scan("s")]
    # fully sorted; ties keep arrival order (stable)
    assert got == sorted(shuffled, key=lambda r: r[0])

    floor = store._state("s").qrb.t_min_allowed
    assert floor > -math.inf
    res = store.insert("s", int(floor) - 1, (0,))
    assert not res.accepted and "late" in res.message
    store.close()
    _report(4, f"10^5 rows shuffled within {window}-row windows: 0 rejections, "
               f"fully sorted; below-floor row rejected late")


# ---------------------------------------------------------------------- 5


def test_criterion_05_oracle_equivalence(tmp_path):
    started = time.perf_counter()
    for preset, rows in (("srbench-like", 8000), ("shelburne-like", 8000),
                         ("taxi-like", 8000)):
        ds = generate(DatasetSpec(preset, rows, 42))
        store = open_store(tmp_path / preset)
        store.create_series(SeriesSchema(
            name="data", precision=ds.precision, columns=ds.columns, b_size=16384))
        oracle = OracleStore()
        oracle.create_series("data")
        for t, v in ds.rows:
            if store.insert("data", t, v):
                oracle.insert("data", t, v)
        assert [(r.ts, r.values) for r in store.full_scan("data")] == \
            oracle.full_scan("data")
        rng = random.Random(7)
        lo, hi = ds.rows[0][0], ds.rows[-1][0]
        for _ in range(100):
            a, b = sorted((rng.randint(lo, hi), rng.randint(lo, hi)))
            got = [(r.ts, r.values) for r in store.query_range("data", a, b)]
            assert got == oracle.query_range("data", a, b)
        store.close()
    elapsed = time.perf_counter() - started
    assert elapsed < 60, f"oracle equivalence took {elapsed:.1f} s (budget 60 s)"
    _report(5, f"100 seeded ranges + full scans match the oracle store on all "
               f"3 presets in {elapsed:.1f} s")


# ---------------------------------------------------------------------- 6


def test_criterion_06_aggregate_fast_path(tmp_path):
    ds = generate(DatasetSpec("srbench-like", 6000, 42))
    store = open_store(tmp_path)
    store.create_series(SeriesSchema(
        name="data", precision=ds.precision, columns=ds.columns, b_size=8192))
    rows = []
    for t, v in ds.rows:
        store.insert("data", t, v)
        rows.append((t, v))
    col = 0  # temperature

    def fold(a, b):
        vals = [v[col] for t, v in rows if a <= t <= b]
        return vals

    rng = random.Random(66)
    lo, hi = rows[0][0], rows[-1][0]
    store.reset_stats()
    for i in range(100):
        a, b = sorted((rng.randint(lo, hi), rng.randint(lo, hi)))
        vals = fold(a, b)
        assert store.aggregate_range("data", "temperature", "count", a, b) == len(vals)
        if vals:
            assert store.aggregate_range("data", "temperature", "min", a, b) == min(vals)
            assert store.aggregate_range("data", "temperature", "max", a, b) == max(vals)
            got_sum = store.aggregate_range("data", "temperature", "sum", a, b)
            assert got_sum == pytest.approx(sum(vals), rel=1e-9, abs=1e-12)
            got_avg = store.aggregate_range("data", "temperature", "avg", a, b)
            assert got_avg == pytest.approx(sum(vals) / len(vals), rel=1e-9)
    assert store.stats["aggregate_index_blocks"] > 0, "index path never used"
    store.close()
    _report(6, "index-backed aggregates equal full-scan folds over 100 ranges "
               "(min/max/count exact, sum/avg at 1e-9)")


# ---------------------------------------------------------------------- 7


def test_criterion_07_bsize_sweep(tmp_path):
    points = run_bsize_sweep(tmp_path, DatasetSpec("shelburne-like", 20_000, 42))
    assert [p.x for p in points] == list(range(2, 9))
    sizes = [p.block_bytes for p in points]
    for smaller, larger in zip(sizes, sizes[1:]):
        # size must not grow as b_size shrinks, with 2% noise headroom
        assert larger >= smaller * 0.98, f"inversion beyond 2%: {sizes}"
    assert sizes[0] < sizes[-1], "no size reduction at small blocks at all"
    _report(7, f"database size non-increasing as b_size decreases: "
               f"{sizes[0]:,}B @x=2 .. {sizes[-1]:,}B @x=8")


# ---------------------------------------------------------------------- 8


def test_criterion_08_match_correctness():
    rng = random.Random(888)
    caps = {1: 50, 2: 50, 3: 39, 4: 15, 5: 9}
    for case in range(200):
        n_patterns = rng.randint(1, 5)
        n_triples = rng.randint(1, caps[n_patterns])
        terms = [f"n{i}" for i in range(rng.randint(2, 10))]
        preds = [f"p{i}" for i in range(rng.randint(1, 5))]
        lines = [f"{rng.choice(terms)} {rng.choice(preds)} {rng.choice(terms)}"
                 for _ in range(n_triples)]
        mapping = map_load("\n".join(lines))
        variables = [f"?v{i}" for i in range(rng.randint(1, 4))]
        bgp = []
        for _ in range(n_patterns):
            base = rng.choice(mapping.triples)
            pattern = []
            for pos, term in enumerate(base):
                roll = rng.random()
                if roll < 0.45:
                    pattern.append(rng.choice(variables))
                elif roll < 0.55:
                    pattern.append(rng.choice(preds if pos == 1 else terms))
                else:
                    pattern.append(term)
            bgp.append(tuple(pattern))
        assert match_envs(bgp, mapping) == brute_force_match(bgp, mapping), \
            f"case {case}: {bgp} over {lines}"
    _report(8, "matcher equals brute-force homomorphism enumeration on 200 "
               "random model/pattern cases")


# ---------------------------------------------------------------------- 9


def test_criterion_09_weather_plan(tmp_path):
    store = open_store(tmp_path)
    store.create_series(SeriesSchema(name="windTs", precision="s",
                                     columns=[("speed", "float64")]))
    store.create_series(SeriesSchema(name="rainTs", precision="s",
                                     columns=[("amount", "float64")]))
    store.create_series(SeriesSchema(name="snowTs", precision="s",
                                     columns=[("falling", "bool")]))
    store.memtable_append("windTs", [(ts, (v,)) for ts, v in WIND])
    store.memtable_append("rainTs", [(ts, (v,)) for ts, v in RAIN])
    store.memtable_append("snowTs", [(ts, (v,)) for ts, v in SNOW])
    mapping = map_load(FIG8_MODEL, store)

    hand_tree = weather_plan()
    hand_result = execute(hand_tree, store, mapping)
    assert [r[0] for r in hand_result.rows] == hand_computed_stations()

    parsed = parse_query(WEATHER_QUERY)
    parsed_result = execute(parsed, store, mapping)
    assert parsed_result.rows == hand_result.rows
    assert parsed_result.columns == hand_result.columns
    store.close()
    _report(9, "three-branch union/filter/project plan equals hand-computed "
               "set algebra; parsed form agrees")


# --------------------------------------------------------------------- 10


def test_criterion_10_sma():
    rng = random.Random(10)
    t = 0
    times, values = [], []
    for _ in range(10_000):
        t += rng.randint(1, 40)
        times.append(t)
        # bounded away from zero: relative error is ill-defined where the
        # average crosses zero
        values.append(rng.uniform(1.0, 1000.0))
    tau = 137
    got = sma(SmaSeries(tuple(times), tuple(values), tau))
    want = sma_integral_oracle(times, values, tau)
    worst = 0.0
    for (_, g), w in zip(got, want):
        err = abs(g - w) / abs(w)
        worst = max(worst, err)
    assert worst <= 1e-12, f"max relative error {worst:.2e}"

    # sign-crossing series: same bound scaled to the value range
    signed = [rng.uniform(-1000.0, 1000.0) for _ in times]
    got_s = sma(SmaSeries(tuple(times), tuple(signed), tau))
    want_s = sma_integral_oracle(times, signed, tau)
    worst_scaled = max(abs(g - w) for (_, g), w in zip(got_s, want_s)) / 1000.0
    assert worst_scaled <= 1e-12

    const = sma(SmaSeries(tuple(times[:100]), (5.25,) * 100, tau))
    assert all(v == 5.25 for _, v in const)
    _report(10, f"incremental SMA equals the direct integral (max rel err "
                f"{worst:.1e}; {worst_scaled:.1e} of scale on sign-crossing "
                f"series); constant series exact")


# --------------------------------------------------------------------- 11


def test_criterion_11_crash_durability(tmp_path):
    ds = generate(DatasetSpec("taxi-like", 5000, 42))
    store = open_store(tmp_path)
    store.create_series(SeriesSchema(
        name="data", precision=ds.precision, columns=ds.columns,
        q=64, a=0.5, b_size=4096))
    for t, v in ds.rows:
        store.insert("data", t, v)
    store.flush_series("data")  # kill happens right after this flush
    durable = sum(e.row_count for e in store.index_entries("data"))
    visible = len(list(store.full_scan("data")))
    assert 0 < durable < visible
    # simulated kill: the store object is abandoned without close()

    reopened = open_store(tmp_path)
    info = reopened.series_info("data")
    assert info.durable_rows == durable
    recovered = [(r.ts, r.values) for r in reopened.full_scan("data")]
    assert len(recovered) == durable
    assert recovered == sorted(ds.rows, key=lambda r: r[0])[:durable]
    missing = len(ds.rows) - info.durable_rows
    assert missing == visible - durable
    reopened.close()
    _report(11, f"reopen after kill serves all {durable} flushed rows; "
                f"{missing} buffered rows absent and reported")


# --------------------------------------------------------------------- 12


def test_criterion_12_performance_smoke(tmp_path):
    ds = generate(DatasetSpec("shelburne-like", 30_000, 42))
    store = open_store(tmp_path)
    store.create_series(SeriesSchema(
        name="data", precision=ds.precision, columns=ds.columns))
    insert = store.insert
    started = time.perf_counter()
    for t, v in ds.rows:
        insert("data", t, v)
    elapsed = time.perf_counter() - started
    store.close()
    rate = len(ds.rows) / elapsed
    verdict = "meets" if rate >= 50_000 else "below"
    # reported, not asserted: the original single-writer server figure for
    # this workload class was 173.59k rows/s
    _report(12, f"single-writer ingestion {rate:,.0f} rows/s ({verdict} the "
                f"50k rows/s desk target; server context figure 173.59k rows/s)")
