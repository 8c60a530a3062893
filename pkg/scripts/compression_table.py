#!/usr/bin/env python3
"""Print the per-codec compressed-size table for each synthetic preset:
three timestamp codecs and three value codecs against raw 8-byte words."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from trtdb.bench import _codec_sizes  # noqa: E402
from trtdb.gen import PRESETS, DatasetSpec, generate  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    print(f"{'preset':16} {'ts:dod':>9} {'ts:leb':>9} {'ts:rice':>9} {'ts:raw':>9} "
          f"{'val:gor':>10} {'val:fpc':>10} {'val:emdod':>10} {'val:raw':>10}")
    for preset in PRESETS:
        ds = generate(DatasetSpec(preset, args.rows, args.seed))
        ts_sizes, raw_ts, val_sizes, raw_val = _codec_sizes(ds)
        print(f"{preset:16} {ts_sizes['dod']:>9} {ts_sizes['leb']:>9} "
              f"{ts_sizes['rice']:>9} {raw_ts:>9} "
              f"{val_sizes['gorilla']:>10} {val_sizes['fpc']:>10} "
              f"{val_sizes['emdod']:>10} {raw_val:>10}")


if __name__ == "__main__":
    main()
