#!/usr/bin/env python3
"""Sweep the block byte cap over b_size = 2^12 * 2^x for x in 2..8 and
print database size per point, reproducing the size-versus-block-size
trend at desk scale."""

import argparse
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from trtdb.bench import run_bsize_sweep  # noqa: E402
from trtdb.gen import DatasetSpec  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="shelburne-like")
    ap.add_argument("--rows", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--dir", default=None)
    args = ap.parse_args()

    workdir = args.dir or tempfile.mkdtemp(prefix="trtdb-sweep-")
    points = run_bsize_sweep(workdir, DatasetSpec(args.preset, args.rows, args.seed))
    print(f"{'x':>2} {'b_size':>9} {'blocks':>6} {'block_bytes':>12} {'file_bytes':>11} {'ingest_s':>9}")
    for p in points:
        print(f"{p.x:>2} {p.b_size:>9} {p.blocks:>6} {p.block_bytes:>12} "
              f"{p.file_bytes:>11} {p.ingest_s:>9.3f}")


if __name__ == "__main__":
    main()
