"""Seeded synthetic dataset generators.

Three presets mimic the shapes seen in public sensor corpora: a periodic
seconds-precision weather network, a nanosecond-precision agriculture
aggregator with jittered 10 s intervals and high-precision floats, and a
dense uneven seconds-precision trip feed with duplicate timestamps and
mixed column types. All are deterministic for a given seed.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field

from .errors import ContractViolation

PRESETS = ("srbench-like", "shelburne-like", "taxi-like")


@dataclass(frozen=True)
class DatasetSpec:
    preset: str
    rows: int
    seed: int = 42

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ContractViolation(
                f"unknown preset {self.preset!r}; expected one of {PRESETS}")
        if self.rows < 0:
            raise ContractViolation("row count must be non-negative")


@dataclass(frozen=True)
class Dataset:
    spec: DatasetSpec
    precision: str
    columns: tuple          # (name, type) pairs
    rows: list              # (ts, values) pairs, ingestion order


def _quantize(v, frac_bits=8):
    # sensor-style ADC quantization to binary fractions so value deltas
    # share trailing mantissa structure
    scale = 1 << frac_bits
    return round(v * scale) / scale


def _srbench_like(rows, rng):
    """Periodic weather observations: 60 s period, rare multi-period gaps,
    six low-decimal float fields with occasional wind spikes."""
    ts = 1_049_155_200  # 2003-04-01T00:00:00Z
    names = ("temperature", "dew_point", "wind_speed", "wind_dir", "humidity", "pressure")
    state = [10.0, 4.0, 18.0, 180.0, 60.0, 1013.0]
    out = []
    for _ in range(rows):
        for i in range(6):
            state[i] += rng.uniform(-0.5, 0.5)
        wind = state[2] + (rng.uniform(90, 120) if rng.random() < 0.01 else 0.0)
        values = (round(state[0], 1), round(state[1], 1), round(abs(wind), 1),
                  round(state[3] % 360, 1), round(min(max(state[4], 0.0), 100.0), 1),
                  round(state[5], 1))
        out.append((ts, values))
        ts += 60 if rng.random() > 0.005 else 60 * rng.randint(2, 12)
    return Dataset(None, "s", tuple((n, "float64") for n in names), out)


def _shelburne_like(rows, rng):
    """Nanosecond-precision aggregator: 10 s nominal period, many exact
    intervals plus heavy-tailed jitter, six ADC-quantized float fields.

    Values live on a 1/256 grid inside one binade [256, 512), creep by a
    few odd grid steps and occasionally level-shift, the regime where
    XOR-with-previous compression rewards small partitioned blocks.
    """
    ts = 1_270_000_000 * 10**9
    period = 10 * 10**9
    names = ("solar_radiation", "soil_moisture", "leaf_wetness",
             "temperature", "humidity", "battery_v")
    lo, hi = 256 * 256 + 1, 512 * 256 - 1  # value grid bounds, in quanta
    state = [rng.randrange(lo + 2000, hi - 2000) | 1 for _ in range(6)]
    out = []
    for _ in range(rows):
        values = []
        for i in range(6):
            dq = rng.choice((-3, -1, 1, 3))
            if rng.random() < 0.003:
                dq += 2 * rng.randint(640, 6400) * rng.choice((-1, 1))
            k = state[i] + dq
            if k < lo or k > hi:
                k = state[i] - dq
            state[i] = k
            values.append(k / 256.0)
        out.append((ts, tuple(values)))
        # just over half the intervals are exact (delta MAD of zero) and the
        # rest carry one-sided transmission delay, pushing the upper
        # quartile into the jittered tail (nonzero IQR)
        if rng.random() < 0.52:
            ts += period
        else:
            ts += period + rng.randint(1, 800_000)
    return Dataset(None, "ns", tuple((n, "float64") for n in names), out)


def _taxi_like(rows, rng):
    """Dense uneven trip records: deltas of 0..4 s with many duplicates,
    one boolean flag, float fares and coordinates, several int fields."""
    ts = 1_451_606_400  # 2016-01-01T00:00:00Z
    columns = (
        ("store_fwd", "bool"),
        ("vendor_id", "int64"),
        ("rate_code", "int64"),
        ("passenger_count", "int64"),
        ("fare", "float64"),
        ("tip", "float64"),
        ("pickup_lat", "float64"),
        ("pickup_lon", "float64"),
        ("dropoff_ts", "int64"),
    )
    out = []
    for _ in range(rows):
        fare = round(rng.uniform(3.0, 70.0), 2)
        values = (
            rng.random() < 0.02,
            rng.randint(1, 2),
            rng.randint(1, 6),
            rng.randint(1, 6),
            fare,
            round(fare * rng.uniform(0.0, 0.3), 2),
            40.7 + rng.uniform(-0.12, 0.12),
            -73.95 + rng.uniform(-0.12, 0.12),
            ts + rng.randint(120, 3600),
        )
        out.append((ts, values))
        ts += rng.choices((0, 1, 2, 3, 4), weights=(25, 30, 20, 15, 10))[0]
    return Dataset(None, "s", columns, out)


_GENERATORS = {
    "srbench-like": _srbench_like,
    "shelburne-like": _shelburne_like,
    "taxi-like": _taxi_like,
}


def generate(spec):
    """Materialize a dataset; identical spec, identical bytes."""
    rng = random.Random(spec.seed)
    ds = _GENERATORS[spec.preset](spec.rows, rng)
    return Dataset(spec, ds.precision, ds.columns, ds.rows)


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(dataset, path, ts_column="ts"):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([ts_column] + [name for name, _ in dataset.columns])
        for ts, values in dataset.rows:
            w.writerow([ts] + [_format_value(v) for v in values])


def shuffle_within_windows(rows, window, seed):
    """Displace each row by less than `window` positions; exercises the
    re-ordering buffer without triggering late rejections."""
    rng = random.Random(seed)
    out = list(rows)
    for i in range(0, len(out), window):
        chunk = out[i:i + window]
        rng.shuffle(chunk)
        out[i:i + window] = chunk
    return out
