"""Command-line surface: import CSV datasets, run queries, inspect stores,
generate synthetic data and run the benchmark harness.

Exit codes: 0 success, 1 usage error, 2 data error, 3 corruption.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from .bench import DEFAULT_RANGE_QUERIES, VerificationError, run_bench
from .codecs import TS_CODEC_NAMES, VAL_CODEC_NAMES, TimestampPrecision
from .errors import (
    ContractViolation,
    CorruptData,
    MappingError,
    QuerySyntaxError,
    SchemaError,
    TrtError,
    UnsupportedFeature,
)
from .gen import PRESETS, DatasetSpec, generate, write_csv
from .query import execute, load_mappings, parse_query
from .storage import COLUMN_TYPE_NAMES, ColumnType, SeriesSchema, open_store

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CORRUPT = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    p = _Parser(prog="trtdb", description=__doc__)
    p.add_argument("--store", default="./trtdb-store", help="store directory")
    sub = p.add_subparsers(dest="command", required=True)

    imp = sub.add_parser("import", help="ingest a CSV file into a new series")
    imp.add_argument("csv", help="CSV file with a header row")
    imp.add_argument("--series", required=True)
    imp.add_argument("--ts-column", default="ts")
    imp.add_argument("--precision", default="s", choices=("s", "ms", "ns"))
    imp.add_argument("--ts-codec", choices=sorted(TS_CODEC_NAMES), default=None)
    imp.add_argument("--val-codec", choices=sorted(VAL_CODEC_NAMES), default="gorilla")
    imp.add_argument("--types", default="",
                     help="comma list of col:type (float64,int64,bool,string); "
                          "unlisted columns default to float64")
    imp.add_argument("--q", type=int, default=2048, help="re-ordering buffer quantum")
    imp.add_argument("--a", type=float, default=2 / 3, help="buffer flush fraction")
    imp.add_argument("--bsize", type=int, default=65536, help="block byte cap")
    imp.add_argument("--strict", action="store_true",
                     help="abort on the first unparseable row instead of skipping")

    q = sub.add_parser("query", help="run a query and print rows")
    q.add_argument("query", nargs="?", help="query text (or use --file)")
    q.add_argument("--file", help="read the query from a file")
    q.add_argument("--mapping", help="model mapping file "
                                     "(default: <store>/mappings.trm when present)")
    q.add_argument("--format", choices=("csv", "tsv"), default="csv")
    q.add_argument("--no-pushdown", action="store_true",
                   help="disable timestamp pushdown (debugging)")

    ins = sub.add_parser("inspect", help="dump schema, blocks and index aggregates")
    ins.add_argument("--series", help="series name (default: all)")

    g = sub.add_parser("gen", help="write a deterministic synthetic dataset as CSV")
    g.add_argument("--preset", required=True, choices=PRESETS)
    g.add_argument("--rows", type=int, required=True)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("-o", "--output", required=True)

    b = sub.add_parser("bench", help="measure ingestion, scans, range queries and sizes")
    b.add_argument("--preset", required=True, choices=PRESETS)
    b.add_argument("--rows", type=int, default=20000)
    b.add_argument("--seed", type=int, default=42)
    b.add_argument("--ts-codec", choices=sorted(TS_CODEC_NAMES), default=None)
    b.add_argument("--val-codec", choices=sorted(VAL_CODEC_NAMES), default="gorilla")
    b.add_argument("--bsize", type=int, default=65536)
    b.add_argument("--q", type=int, default=2048)
    b.add_argument("--a", type=float, default=2 / 3)
    b.add_argument("--ranges", type=int, default=DEFAULT_RANGE_QUERIES,
                   help="number of seeded pseudo-random range queries")
    b.add_argument("--range-seed", type=int, default=7)
    b.add_argument("--bsize-sweep", action="store_true",
                   help="also ingest at b_size = 2^12 * 2^x for x in 2..8")
    b.add_argument("--verify", action="store_true",
                   help="check every answer against the naive oracle store")
    b.add_argument("--readers", type=int, default=0,
                   help="concurrent reader threads during ingestion")
    b.add_argument("--json", help="also write the machine-readable report here")
    return p


def _parse_timestamp(text, tps):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    iso = text.replace("Z", "+00:00").replace("z", "+00:00")
    dt = datetime.fromisoformat(iso)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    span = dt - datetime(1970, 1, 1, tzinfo=timezone.utc)
    return (span.days * 86400 + span.seconds) * tps + span.microseconds * tps // 1_000_000


_TRUE = {"true", "t", "1", "yes"}
_FALSE = {"false", "f", "0", "no"}


def _parse_value(text, ctype):
    if ctype is ColumnType.FLOAT64:
        return float(text)
    if ctype is ColumnType.INT64:
        return int(text)
    if ctype is ColumnType.BOOL:
        lowered = text.strip().lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ValueError(f"not a boolean: {text!r}")
    return text


def cmd_import(args):
    type_overrides = {}
    if args.types:
        for part in args.types.split(","):
            name, _, tname = part.partition(":")
            if tname not in COLUMN_TYPE_NAMES:
                raise _UsageError(f"unknown column type {tname!r} for {name!r}")
            type_overrides[name.strip()] = COLUMN_TYPE_NAMES[tname]

    with open(args.csv, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            print("error: CSV file is empty", file=sys.stderr)
            return EXIT_DATA
        if args.ts_column not in header:
            raise _UsageError(f"timestamp column {args.ts_column!r} not in header {header}")
        ts_idx = header.index(args.ts_column)
        value_cols = [(i, name) for i, name in enumerate(header) if i != ts_idx]
        columns = [(name, type_overrides.get(name, ColumnType.FLOAT64))
                   for _, name in value_cols]
        unknown = set(type_overrides) - {name for _, name in value_cols}
        if unknown:
            raise _UsageError(f"--types names absent columns: {sorted(unknown)}")

        schema = SeriesSchema(
            name=args.series,
            precision=args.precision,
            columns=columns,
            ts_codec=None if args.ts_codec is None else TS_CODEC_NAMES[args.ts_codec],
            val_codec=VAL_CODEC_NAMES[args.val_codec],
            q=args.q, a=args.a, b_size=args.bsize)
        store = open_store(args.store)
        try:
            store.create_series(schema)
            tps = schema.precision.ticks_per_second
            accepted = rejected = skipped = 0
            started = time.perf_counter()
            for lineno, row in enumerate(reader, start=2):
                try:
                    ts = _parse_timestamp(row[ts_idx], tps)
                    values = tuple(_parse_value(row[i], ctype)
                                   for (i, _), (_, ctype) in zip(value_cols, schema.columns))
                except (ValueError, IndexError) as exc:
                    if args.strict:
                        print(f"error: line {lineno}: {exc}", file=sys.stderr)
                        return EXIT_DATA
                    skipped += 1
                    continue
                if store.insert(args.series, ts, values):
                    accepted += 1
                else:
                    rejected += 1
            elapsed = time.perf_counter() - started
        finally:
            store.close()
    rate = accepted / elapsed if elapsed > 0 else 0.0
    print(f"imported {accepted} rows into {args.series!r} in {elapsed:.3f} s "
          f"({rate:,.0f} rows/s); {rejected} rejected late, {skipped} skipped")
    return EXIT_OK


def _format_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_query(args):
    if bool(args.query) == bool(args.file):
        raise _UsageError("provide exactly one of QUERY or --file")
    text = args.query if args.query else Path(args.file).read_text()
    mapping_path = Path(args.mapping) if args.mapping else Path(args.store) / "mappings.trm"
    store = open_store(args.store)
    try:
        if mapping_path.exists():
            mappings = load_mappings(mapping_path.read_text(), store)
        elif args.mapping:
            print(f"error: mapping file {mapping_path} not found", file=sys.stderr)
            return EXIT_DATA
        else:
            mappings = load_mappings("", store)
        tree = parse_query(text)
        table = execute(tree, store, mappings, pushdown=not args.no_pushdown)
    finally:
        store.close()
    delim = "," if args.format == "csv" else "\t"
    writer = csv.writer(sys.stdout, delimiter=delim, lineterminator="\n")
    writer.writerow([c.lstrip("?") for c in table.visible_columns])
    skip_time = 1 if table.has_time else 0
    for row in table.rows:
        writer.writerow([_format_cell(v) for v in row[skip_time:]])
    return EXIT_OK


def cmd_inspect(args):
    store = open_store(args.store)
    try:
        names = [args.series] if args.series else store.series_names()
        if args.series and args.series not in store.series_names():
            # surfaces SeriesNotFound/CorruptData with the right exit code
            store.schema(args.series)
        for name in names:
            schema = store.schema(name)
            info = store.series_info(name)
            cols = ", ".join(f"{c.name}:{c.type.name.lower()}" for c in schema.columns)
            print(f"series {name}")
            print(f"  precision={schema.precision.unit} ts_codec={schema.ts_codec.name} "
                  f"val_codec={schema.val_codec.name} q={schema.q} a={schema.a:.4f} "
                  f"b_size={schema.b_size}")
            print(f"  columns: {cols}")
            print(f"  blocks={info.blocks} durable_rows={info.durable_rows} "
                  f"file_bytes={info.file_bytes} (footer checksum ok)")
            for i, e in enumerate(store.index_entries(name)):
                aggs = []
                for col, agg in zip(schema.columns, e.col_aggs):
                    if agg is not None:
                        aggs.append(f"{col.name}[min={_format_cell(agg.min)} "
                                    f"max={_format_cell(agg.max)} sum={agg.sum!r}]")
                print(f"  block {i}: ts=[{e.start_ts}, {e.end_ts}] offset={e.offset} "
                      f"bytes={e.byte_length} rows={e.row_count}")
                for line in aggs:
                    print(f"    {line}")
        if store.corrupt_series:
            for name, err in store.corrupt_series.items():
                print(f"series {name}: CORRUPT ({err})")
            return EXIT_CORRUPT
    finally:
        store.close()
    return EXIT_OK


def cmd_gen(args):
    dataset = generate(DatasetSpec(preset=args.preset, rows=args.rows, seed=args.seed))
    write_csv(dataset, args.output)
    print(f"wrote {len(dataset.rows)} rows ({args.preset}, seed {args.seed}) "
          f"to {args.output}")
    return EXIT_OK


def cmd_bench(args):
    report = run_bench(
        Path(args.store) / "bench",
        DatasetSpec(preset=args.preset, rows=args.rows, seed=args.seed),
        ts_codec=None if args.ts_codec is None else TS_CODEC_NAMES[args.ts_codec],
        val_codec=VAL_CODEC_NAMES[args.val_codec],
        b_size=args.bsize, q=args.q, a=args.a,
        range_queries=args.ranges, range_seed=args.range_seed,
        sweep=args.bsize_sweep, verify=args.verify, readers=args.readers)
    for line in report.lines():
        print(line)
    if args.json:
        Path(args.json).write_text(report.to_json())
        print(f"json report written to {args.json}")
    return EXIT_OK


_COMMANDS = {
    "import": cmd_import,
    "query": cmd_query,
    "inspect": cmd_inspect,
    "gen": cmd_gen,
    "bench": cmd_bench,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuerySyntaxError, UnsupportedFeature, MappingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CorruptData as exc:
        print(f"corruption: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except (SchemaError, ContractViolation, TrtError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
