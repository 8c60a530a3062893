"""Benchmark harness: ingestion rate, scan and range-query timings averaged
over seeded pseudo-random ranges, aggregate timings, per-codec compressed
sizes and the block-size sweep. Optionally cross-checks every query result
against the naive in-memory store."""

from __future__ import annotations

import json
import shutil
import statistics
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .codecs import (
    TimestampPrecision,
    TsCodec,
    ValCodec,
    encode_timestamps,
    encode_words,
    float_to_word,
)
from .errors import TrtError
from .gen import Dataset, DatasetSpec, generate
from .query import parse_query
from .storage import ColumnType, OracleStore, SeriesSchema, Store, open_store

SERIES = "data"
DEFAULT_RANGE_QUERIES = 100
SWEEP_EXPONENTS = tuple(range(2, 9))


class VerificationError(TrtError):
    """A benchmark result disagreed with the oracle store."""


@dataclass
class SweepPoint:
    x: int
    b_size: int
    blocks: int
    block_bytes: int
    file_bytes: int
    ingest_s: float


@dataclass
class BenchReport:
    preset: str
    rows: int
    seed: int
    precision: str
    ingest_s: float = 0.0
    rows_per_s: float = 0.0
    rejected: int = 0
    full_scan_s: float = 0.0
    full_scan_rows: int = 0
    range_query_count: int = 0
    range_query_mean_s: float = 0.0
    range_query_rows: int = 0
    aggregate_mean_s: float = 0.0
    parse_plan_mean_ms: float = 0.0
    file_bytes: int = 0
    block_bytes: int = 0
    blocks: int = 0
    ts_codec_bytes: dict = field(default_factory=dict)
    val_codec_bytes: dict = field(default_factory=dict)
    raw_ts_bytes: int = 0
    raw_val_bytes: int = 0
    bsize_sweep: list = field(default_factory=list)
    verified: bool = None
    reader_threads: int = 0
    reader_scans: int = 0

    def to_json(self):
        return json.dumps(asdict(self), indent=2)

    def lines(self):
        out = [
            f"dataset          {self.preset} rows={self.rows} seed={self.seed} precision={self.precision}",
            f"ingestion        {self.rows_per_s:,.0f} rows/s ({self.ingest_s:.3f} s, {self.rejected} rejected)",
            f"full scan        {self.full_scan_s:.4f} s ({self.full_scan_rows} rows)",
            f"range queries    {self.range_query_count} queries, mean {self.range_query_mean_s * 1e3:.3f} ms",
            f"aggregates       mean {self.aggregate_mean_s * 1e3:.3f} ms",
            f"parse+plan       mean {self.parse_plan_mean_ms:.3f} ms",
            f"database size    {self.file_bytes:,} B file / {self.block_bytes:,} B in {self.blocks} blocks",
        ]
        if self.ts_codec_bytes:
            sizes = " ".join(f"{k}={v:,}" for k, v in self.ts_codec_bytes.items())
            out.append(f"timestamp codecs {sizes} raw={self.raw_ts_bytes:,}")
        if self.val_codec_bytes:
            sizes = " ".join(f"{k}={v:,}" for k, v in self.val_codec_bytes.items())
            out.append(f"value codecs     {sizes} raw={self.raw_val_bytes:,}")
        for p in self.bsize_sweep:
            out.append(
                f"sweep x={p.x}        b_size={p.b_size:,} -> {p.block_bytes:,} B "
                f"in {p.blocks} blocks ({p.ingest_s:.3f} s)")
        if self.verified is not None:
            out.append(f"verified         {'ok' if self.verified else 'FAILED'}")
        if self.reader_threads:
            out.append(
                f"readers          {self.reader_threads} threads, {self.reader_scans} scans")
        return out


def _dataset_schema(dataset, ts_codec=None, val_codec=None, b_size=65536, q=2048, a=2 / 3):
    return SeriesSchema(
        name=SERIES,
        precision=dataset.precision,
        columns=dataset.columns,
        ts_codec=ts_codec,
        val_codec=ValCodec.GORILLA if val_codec is None else val_codec,
        q=q,
        a=a,
        b_size=b_size,
    )


def _ingest(directory, dataset, schema, readers=0):
    if Path(directory).exists():
        shutil.rmtree(directory)
    store = open_store(directory)
    store.create_series(schema)
    stop = threading.Event()
    scan_counts = [0]

    def reader_loop():
        while not stop.is_set():
            n = 0
            for _ in store.full_scan(SERIES):
                n += 1
            scan_counts[0] += 1

    threads = [threading.Thread(target=reader_loop, daemon=True) for _ in range(readers)]
    for t in threads:
        t.start()
    started = time.perf_counter()
    insert = store.insert
    rejected = 0
    for ts, values in dataset.rows:
        if not insert(SERIES, ts, values):
            rejected += 1
    elapsed = time.perf_counter() - started
    stop.set()
    for t in threads:
        t.join()
    return store, elapsed, rejected, scan_counts[0]


def _seeded_ranges(rows, count, seed):
    import random

    rng = random.Random(seed)
    lo = rows[0][0]
    hi = rows[-1][0]
    out = []
    for _ in range(count):
        a, b = rng.randint(lo, hi), rng.randint(lo, hi)
        out.append((min(a, b), max(a, b)))
    return out


def _codec_sizes(dataset):
    precision = TimestampPrecision.from_unit(dataset.precision)
    ts = [t for t, _ in dataset.rows]
    ts_sizes = {}
    for name, codec in (("dod", TsCodec.DOD), ("leb", TsCodec.DELTA_RLE_LEB128),
                        ("rice", TsCodec.DELTA_RLE_RICE)):
        ts_sizes[name] = encode_timestamps(ts, precision, codec).byte_length
    float_cols = [i for i, (name, t) in enumerate(dataset.columns) if t == "float64"]
    val_sizes = {}
    raw_val = 0
    if float_cols:
        words_by_col = [[float_to_word(v[i]) for _, v in dataset.rows] for i in float_cols]
        raw_val = sum(len(w) * 8 for w in words_by_col)
        for name, codec in (("gorilla", ValCodec.GORILLA), ("fpc", ValCodec.FPC),
                            ("emdod", ValCodec.EXP_MANTISSA_DOD)):
            val_sizes[name] = sum(encode_words(w, codec).byte_length for w in words_by_col)
    return ts_sizes, len(ts) * 8, val_sizes, raw_val


def _storage_footprint(store, directory):
    entries = store.index_entries(SERIES)
    block_bytes = sum(e.byte_length for e in entries)
    file_bytes = (Path(directory) / f"{SERIES}.trt").stat().st_size
    return len(entries), block_bytes, file_bytes


_SAMPLE_QUERY = """
SELECT (AVG(?v) AS ?mean) WHERE {
  ?sensor isA sensor ; has ?obs .
  ?obs hasValue ?v ; hasTime ?t .
  FILTER(?t > 1000 && ?t < 2000)
} GROUP BY hours(?t)
"""


def _parse_plan_overhead_ms(repeats=25):
    started = time.perf_counter()
    for _ in range(repeats):
        parse_query(_SAMPLE_QUERY)
    return (time.perf_counter() - started) / repeats * 1e3


def run_bench(directory, spec, ts_codec=None, val_codec=None, b_size=65536,
              q=2048, a=2 / 3, range_queries=DEFAULT_RANGE_QUERIES,
              range_seed=7, sweep=False, verify=False, readers=0,
              codec_table=True):
    """Run the full measurement pass for one dataset spec.

    With verify=True every range query and the full scan are checked
    against the oracle store; a mismatch raises VerificationError.
    """
    dataset = generate(spec)
    report = BenchReport(preset=spec.preset, rows=spec.rows, seed=spec.seed,
                         precision=dataset.precision)
    if not dataset.rows:
        return report

    directory = Path(directory)
    schema = _dataset_schema(dataset, ts_codec, val_codec, b_size, q, a)
    store, elapsed, rejected, reader_scans = _ingest(
        directory / "main", dataset, schema, readers=readers)
    report.ingest_s = elapsed
    report.rows_per_s = len(dataset.rows) / elapsed if elapsed else 0.0
    report.rejected = rejected
    report.reader_threads = readers
    report.reader_scans = reader_scans

    oracle = None
    if verify:
        oracle = OracleStore()
        oracle.create_series(SERIES)
        for ts, values in dataset.rows:
            oracle.insert(SERIES, ts, values)

    started = time.perf_counter()
    scanned = [(r.ts, r.values) for r in store.full_scan(SERIES)]
    report.full_scan_s = time.perf_counter() - started
    report.full_scan_rows = len(scanned)
    if oracle is not None and scanned != oracle.full_scan(SERIES):
        raise VerificationError("full scan disagrees with the oracle store")

    ranges = _seeded_ranges(dataset.rows, range_queries, range_seed)
    timings = []
    total_rows = 0
    for lo, hi in ranges:
        started = time.perf_counter()
        rows = [(r.ts, r.values) for r in store.query_range(SERIES, lo, hi)]
        timings.append(time.perf_counter() - started)
        total_rows += len(rows)
        if oracle is not None and rows != oracle.query_range(SERIES, lo, hi):
            raise VerificationError(f"range query [{lo}, {hi}] disagrees with the oracle")
    report.range_query_count = len(ranges)
    report.range_query_mean_s = statistics.fmean(timings) if timings else 0.0
    report.range_query_rows = total_rows

    numeric = [c.name for c in schema.columns
               if c.type in (ColumnType.FLOAT64, ColumnType.INT64)]
    if numeric:
        col = numeric[0]
        agg_timings = []
        for lo, hi in ranges:
            started = time.perf_counter()
            got = store.aggregate_range(SERIES, col, "count", lo, hi)
            agg_timings.append(time.perf_counter() - started)
            if oracle is not None:
                want = oracle.aggregate_range(SERIES, schema.column_index(col),
                                              "count", lo, hi)
                if got != want:
                    raise VerificationError(
                        f"aggregate count over [{lo}, {hi}]: {got} != oracle {want}")
        report.aggregate_mean_s = statistics.fmean(agg_timings)

    report.parse_plan_mean_ms = _parse_plan_overhead_ms()
    store.close()
    # sizes are measured after the close-drain so buffered rows are on disk
    reopened = open_store(directory / "main")
    report.blocks, report.block_bytes, report.file_bytes = _storage_footprint(
        reopened, directory / "main")
    reopened.close()

    if codec_table:
        (report.ts_codec_bytes, report.raw_ts_bytes,
         report.val_codec_bytes, report.raw_val_bytes) = _codec_sizes(dataset)

    if sweep:
        report.bsize_sweep = run_bsize_sweep(directory / "sweep", dataset,
                                             ts_codec=ts_codec, val_codec=val_codec)
    if verify:
        report.verified = True
    return report


def run_bsize_sweep(directory, dataset_or_spec, ts_codec=None, val_codec=None,
                    exponents=SWEEP_EXPONENTS):
    """Ingest the dataset at b_size = 2^12 * 2^x for each x; report sizes."""
    dataset = dataset_or_spec if isinstance(dataset_or_spec, Dataset) \
        else generate(dataset_or_spec)
    points = []
    directory = Path(directory)
    for x in exponents:
        b_size = (1 << 12) * (1 << x)
        schema = _dataset_schema(dataset, ts_codec, val_codec, b_size)
        target = directory / f"x{x}"
        store, elapsed, _, _ = _ingest(target, dataset, schema)
        store.close()
        reopened = open_store(target)
        blocks, block_bytes, file_bytes = _storage_footprint(reopened, target)
        reopened.close()
        points.append(SweepPoint(x=x, b_size=b_size, blocks=blocks,
                                 block_bytes=block_bytes, file_bytes=file_bytes,
                                 ingest_s=elapsed))
    return points
